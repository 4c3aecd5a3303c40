use clap::Parser;

use anthro_layout::cli::{error_block, exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("{}", error_block(&e));
        std::process::exit(exit_code(&e));
    }
}
