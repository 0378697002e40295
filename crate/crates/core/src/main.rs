use clap::{Parser, ValueEnum};
use hsfwi::cli::{error_report, exit_code, run, Command};
use hsfwi::config::Scenario;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Forward,
    Invert,
    Weights,
    Probe,
}

#[derive(Debug, Parser)]
#[command(version, about = "Wavespeed reconstruction from band-limited boundary data")]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cmd = match args.command {
        Cmd::Forward => Command::Forward,
        Cmd::Invert => Command::Invert,
        Cmd::Weights => Command::Weights,
        Cmd::Probe => Command::Probe,
    };
    let result = Scenario::load(&args.config).and_then(|mut s| {
        if let Some(seed) = args.seed {
            s.seed = seed;
        }
        run(cmd, &s, &args.out)
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let report = error_report(&err);
            let text = serde_json::to_string_pretty(&report).unwrap_or_default();
            if std::fs::create_dir_all(&args.out).is_ok() {
                let _ = std::fs::write(args.out.join("error.json"), &text);
            }
            eprintln!("{text}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
