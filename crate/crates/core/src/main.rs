fn main() {
    std::process::exit(netnl::cli::main_with_args(std::env::args_os()));
}
