use camo_cli::Cli;
use clap::Parser;

fn main() {
    // Map clap's own exit conventions onto ours: help/version exit 0,
    // anything unparsable is a usage error (1).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = camo_cli::run(cli) {
        eprintln!("error: {}", e);
        std::process::exit(e.code());
    }
}
