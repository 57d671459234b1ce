use std::process::ExitCode;

fn main() -> ExitCode {
    mallflow::cli::main()
}
