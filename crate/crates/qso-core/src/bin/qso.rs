use clap::Parser;

fn main() {
    let cli = qso_core::cli::Cli::parse();
    match qso_core::cli::execute(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
