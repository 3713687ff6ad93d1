use clap::Parser;

fn main() {
    let cli = copula_impute_cli::Cli::parse();
    std::process::exit(copula_impute_cli::run(&cli));
}
