use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use level_forge_cli::commands::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(output) => {
            let text = output.render(format);
            if !text.is_empty() {
                let mut out = std::io::stdout().lock();
                let _ = writeln!(out, "{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
