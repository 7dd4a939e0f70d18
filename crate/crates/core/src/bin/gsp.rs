use clap::Parser;
use spectral_mesh::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("gsp: {e}");
        std::process::exit(e.exit_code());
    }
}
