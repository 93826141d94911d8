use clap::Parser;

fn main() {
    std::process::exit(toridimer::cli::run(toridimer::cli::Cli::parse()));
}
