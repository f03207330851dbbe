fn main() {
    std::process::exit(isotower::cli::main_with_args(std::env::args_os()));
}
