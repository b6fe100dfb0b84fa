fn main() {
    std::process::exit(cbf::cli::main_with_args(std::env::args_os()));
}
