fn main() {
    std::process::exit(extpulse::cli::main_with_args(std::env::args_os()));
}
