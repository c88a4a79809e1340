fn main() {
    std::process::exit(ncp::cli::main_from_args(std::env::args_os()));
}
