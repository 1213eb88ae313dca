use clap::Parser;
use degeneracy_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("degen: {e}");
        std::process::exit(e.exit_code());
    }
}
