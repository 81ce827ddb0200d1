fn main() {
    std::process::exit(sqkd::cli::run(std::env::args_os()));
}
