use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(vpsteady::cli::run())
}
