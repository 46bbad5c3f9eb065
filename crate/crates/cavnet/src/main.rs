use cavnet::cli::{self, Cli};
use clap::Parser;

fn main() {
    let parsed = Cli::parse();
    let config = match parsed.into_run_config() {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    };
    cli::configure_jobs(config.jobs);
    match cli::run(&config) {
        Ok(report) => {
            print!("{}", report.summary_text);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
