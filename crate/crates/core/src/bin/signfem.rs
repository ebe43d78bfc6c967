use std::process::ExitCode;

use signfem::cli::{main_with_args, OUTPUT_DIR_ENV};

fn main() -> ExitCode {
    let env_dir = std::env::var(OUTPUT_DIR_ENV).ok().filter(|s| !s.is_empty());
    let code = main_with_args(std::env::args_os(), env_dir);
    ExitCode::from(code as u8)
}
