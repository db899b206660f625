fn main() {
    std::process::exit(marss::cli::run(std::env::args_os()));
}
