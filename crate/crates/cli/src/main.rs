fn main() {
    std::process::exit(choquard_cli::main_with(std::env::args_os()));
}
