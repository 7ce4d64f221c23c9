use clap::Parser;
use psychoprobe_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
    if let Err(e) = run(cli) {
        eprintln!("psychoprobe: {e}");
        std::process::exit(e.exit_code());
    }
}
