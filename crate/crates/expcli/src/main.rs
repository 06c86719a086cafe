fn main() {
    std::process::exit(embezzle_cli::cli::main_with_args(std::env::args_os()));
}
