use basemerge::io::cli::{main_with_exit, Cli};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    std::process::exit(main_with_exit(cli));
}
