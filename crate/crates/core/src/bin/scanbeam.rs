fn main() {
    std::process::exit(scanbeam::cli::main_with_args(std::env::args_os()));
}
