use std::process::ExitCode;

use clap::Parser;
use dowsim_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let summary = serde_json::to_string_pretty(&report.summary).unwrap_or_default();
            println!("{summary}");
            eprintln!("wrote {} files to {}", report.written.len(), report.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dowsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
