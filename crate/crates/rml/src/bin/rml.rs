fn main() {
    std::process::exit(rml::cli::run(std::env::args_os()));
}
