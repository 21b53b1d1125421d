fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(nlrl_core::io::cli::main_with_args(&args));
}
