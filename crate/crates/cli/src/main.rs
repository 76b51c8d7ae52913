use clap::Parser;

fn main() {
    let cli = firm_cli::Cli::parse();
    if let Err(e) = firm_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
