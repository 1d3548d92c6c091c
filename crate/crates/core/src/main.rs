use tracing_subscriber::EnvFilter;

fn main() {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            EnvFilter::try_from_env("BREACHSCAN_LOG").unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .init();
    std::process::exit(breachscan::cli::run_cli(std::env::args_os()));
}
