use clap::Parser;

fn main() {
    std::process::exit(sesi::cli::run(sesi::cli::Cli::parse()));
}
