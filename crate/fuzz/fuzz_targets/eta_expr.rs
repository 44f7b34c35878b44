#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    dppa_cli::fuzzing::eta_expr(data);
});
