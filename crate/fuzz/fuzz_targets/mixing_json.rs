#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    dppa_cli::fuzzing::mixing_json(data);
});
