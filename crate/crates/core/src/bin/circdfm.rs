fn main() {
    std::process::exit(circdfm::cli::run(std::env::args_os()));
}
