fn main() {
    std::process::exit(flipmon::cli::run(std::env::args_os()));
}
