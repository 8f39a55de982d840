fn main() {
    std::process::exit(rabox::cli::run(std::env::args_os()));
}
