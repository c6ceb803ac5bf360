fn main() {
    std::process::exit(fhd_cli::main_with_args(std::env::args_os()));
}
