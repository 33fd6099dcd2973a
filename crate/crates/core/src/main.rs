fn main() {
    std::process::exit(mmbin::cli::run(std::env::args_os()));
}
