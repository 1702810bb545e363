use std::process::ExitCode;

fn main() -> ExitCode {
    let code = cfrac::cli::main_entry(std::env::args());
    ExitCode::from(code as u8)
}
