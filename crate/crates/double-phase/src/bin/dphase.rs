//! Thin process wrapper around the library CLI.

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let code = double_phase::cli::run(&args, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
