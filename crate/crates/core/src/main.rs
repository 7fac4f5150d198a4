use clap::Parser;

use phcbi::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&cli).code());
}
