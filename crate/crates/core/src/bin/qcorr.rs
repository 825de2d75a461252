use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qcorr::cli::{exit_code, run, thread_count, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_count(std::env::var("QCORR_THREADS").ok().as_deref()).and_then(|threads| {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| qcorr::QcorrError::Config(format!("cannot size thread pool: {e}")))?;
        }
        run(&cli.command)
    });
    match result {
        Ok((text, code)) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("qcorr: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
