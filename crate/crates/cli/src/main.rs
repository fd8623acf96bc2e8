use clap::Parser;
use mas_classify_cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
