use clap::Parser;

fn main() {
    let cli = bigjump_cli::Cli::parse();
    std::process::exit(bigjump_cli::run(cli));
}
