fn main() {
    let code = photothermal_core::io::cli::cli_main(std::env::args_os());
    std::process::exit(code);
}
