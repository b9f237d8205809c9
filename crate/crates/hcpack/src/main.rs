use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(hcpack::cli::run(std::env::args_os()) as u8)
}
