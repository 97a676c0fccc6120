use std::process::ExitCode;

fn main() -> ExitCode {
    interference_cli::run(std::env::args_os())
}
