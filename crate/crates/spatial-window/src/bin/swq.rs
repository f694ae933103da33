use clap::Parser;
use spatial_window::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
