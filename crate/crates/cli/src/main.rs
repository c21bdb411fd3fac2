fn main() {
    std::process::exit(engdec_cli::run(std::env::args_os()));
}
