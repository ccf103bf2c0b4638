use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(numit::harness::cli::dispatch(std::env::args_os()) as u8)
}
