use clap::Parser;
use varapps_cli::commands::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match execute(cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}
