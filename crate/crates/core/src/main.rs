fn main() {
    std::process::exit(heisenrep::cli::run(std::env::args_os()));
}
