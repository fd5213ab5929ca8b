fn main() {
    std::process::exit(trapstab::cli::main_with_args(std::env::args_os()));
}
