fn main() {
    std::process::exit(gamker::cli::run(std::env::args_os()));
}
