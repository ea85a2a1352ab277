fn main() {
    std::process::exit(cvtf_cli::run(std::env::args_os()));
}
