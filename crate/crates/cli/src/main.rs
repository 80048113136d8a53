use clap::Parser;

fn main() {
    std::process::exit(jumpdiff_cli::run(jumpdiff_cli::Cli::parse()));
}
