fn main() {
    std::process::exit(wfc_cli::run(std::env::args_os()));
}
