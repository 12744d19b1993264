use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(trajcluster_cli::run(std::env::args()) as u8)
}
