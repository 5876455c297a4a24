mod cli;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let parsed = match cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { cli::EXIT_USAGE } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli::run(&parsed).and_then(|out| {
        cli::emit(&out, parsed.global.out.as_deref(), &parsed.command)?;
        Ok(out.code)
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            cli::failure_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
