fn main() {
    std::process::exit(scatterkit_cli::run(std::env::args_os()));
}
