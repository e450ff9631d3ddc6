fn main() {
    std::process::exit(cachenet::cli::main_with_args(std::env::args_os()));
}
