fn main() {
    std::process::exit(kinwave::cli::run(std::env::args_os()));
}
