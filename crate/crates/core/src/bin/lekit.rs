fn main() {
    std::process::exit(lekit::cli::main_with_args(std::env::args_os()));
}
