use std::process::ExitCode;

fn main() -> ExitCode {
    quasimean::cli::main_entry()
}
