fn main() {
    std::process::exit(harmonist::cli::run(std::env::args_os()));
}
