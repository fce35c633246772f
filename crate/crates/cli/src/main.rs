use std::process::ExitCode;

fn main() -> ExitCode {
    elm_metalearn_cli::run(std::env::args_os())
}
