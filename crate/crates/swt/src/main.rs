fn main() {
    std::process::exit(swt::cli::run(std::env::args_os()));
}
