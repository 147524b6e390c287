use std::io::{stderr, stdout};

use clap::Parser;

fn main() {
    let verbosity = nmo::cli::Cli::try_parse()
        .ok()
        .map(|cli| match cli.command {
            nmo::cli::Command::Run(args) => args.verbose,
        })
        .unwrap_or(0);
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = nmo::cli::main_with_args(std::env::args_os(), &mut stdout(), &mut stderr());
    std::process::exit(code);
}
