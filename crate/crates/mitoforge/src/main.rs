fn main() {
    std::process::exit(mitoforge::cli::run(std::env::args_os()));
}
