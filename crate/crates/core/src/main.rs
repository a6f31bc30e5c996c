use clap::Parser;

use ffmlp::cli::{run, Cli};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Err(e) = run(cli, args) {
        eprintln!("error [{}]: {e}", e.provenance());
        std::process::exit(e.exit_code());
    }
}
