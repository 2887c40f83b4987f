fn main() {
    std::process::exit(qkflow::cli::main_with_args(std::env::args_os()));
}
