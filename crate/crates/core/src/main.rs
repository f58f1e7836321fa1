fn main() {
    std::process::exit(reqmatch::cli::main_with_args(std::env::args_os()));
}
