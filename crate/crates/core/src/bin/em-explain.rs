fn main() {
    let code = em_explain::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
