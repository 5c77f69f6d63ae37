fn main() {
    std::process::exit(coredpp::cli::run(std::env::args_os()));
}
