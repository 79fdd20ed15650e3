use clap::Parser;

fn main() {
    let cli = ashlab::Cli::parse();
    std::process::exit(ashlab::run(cli));
}
