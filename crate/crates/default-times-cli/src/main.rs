use clap::Parser;

fn main() {
    let cli = default_times_cli::Cli::parse();
    if let Err(err) = default_times_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(default_times_cli::exit_code(&err));
    }
}
