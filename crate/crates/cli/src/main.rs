use clap::Parser;
use cyclegzsl_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(e) = run(Cli::parse()) {
        log::error!("{e}");
        std::process::exit(e.exit_code());
    }
}
