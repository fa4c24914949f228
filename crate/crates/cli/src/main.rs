use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use pcyl::args::Cli;
use pcyl::commands;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let config = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let artifact = match commands::run(&config) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = artifact.write(config.output.format, config.output.path.as_deref()) {
        eprintln!("error: cannot write artifact: {e}");
        return ExitCode::from(1);
    }
    if artifact.failures() > 0 {
        eprintln!("{}: {}", artifact.name, artifact.summary());
    }
    ExitCode::from(artifact.exit_code() as u8)
}
