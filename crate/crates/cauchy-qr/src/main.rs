use clap::Parser;

use cauchy_qr::cli::Cli;

fn main() {
    // clap already exits 2 on grammar errors and 0 on --help/--version.
    let cli = Cli::parse();
    if let Err(failure) = cli.execute() {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.code());
    }
}
