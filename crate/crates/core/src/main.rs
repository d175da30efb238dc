use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::init();
    tsirelson_lab::cli::main()
}
