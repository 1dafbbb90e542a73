use std::io::{stderr, stdout};

/// Deeply nested programs recurse deeply in both engines.
const STACK_SIZE: usize = 256 * 1024 * 1024;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = std::thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(move || depcore_cli::run(&argv, &mut stdout().lock(), &mut stderr().lock()))
        .expect("spawn analysis thread")
        .join()
        .unwrap_or(1);
    std::process::exit(code);
}
