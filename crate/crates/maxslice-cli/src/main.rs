use std::process::ExitCode;

fn main() -> ExitCode {
    maxslice::cli::run(std::env::args().skip(1))
}
