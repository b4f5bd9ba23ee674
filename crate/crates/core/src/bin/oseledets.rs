use clap::Parser;

fn main() {
    std::process::exit(oseledets::cli::main_with(oseledets::cli::Cli::parse()));
}
