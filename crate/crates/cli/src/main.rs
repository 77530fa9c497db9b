use std::process::ExitCode;

use clap::Parser;
use spdsim_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            println!("{} files written, manifest {}", m.files.len(), m.manifest_hash);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spdsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
