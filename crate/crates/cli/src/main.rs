fn main() {
    std::process::exit(percolab_cli::execute(std::env::args_os()));
}
