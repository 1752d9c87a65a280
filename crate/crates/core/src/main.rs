use clap::Parser;

fn main() {
    let cli = biphoton::cli::Cli::parse();
    if let Err(err) = biphoton::cli::execute(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
