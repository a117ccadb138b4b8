fn main() {
    std::process::exit(nlms_cli::main_with_args(std::env::args_os()));
}
