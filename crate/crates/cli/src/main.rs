fn main() {
    let (code, _) = g2hitchin_cli::run(std::env::args_os());
    std::process::exit(code);
}
