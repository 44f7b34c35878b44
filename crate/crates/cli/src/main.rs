fn main() {
    std::process::exit(dppa_cli::main_with_args(std::env::args_os()));
}
