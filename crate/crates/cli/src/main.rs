use clap::Parser;

fn main() {
    let cli = arbor_cli::Cli::parse();
    let code = match arbor_cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("arbor: {e}");
            arbor_cli::EXIT_FAILURE
        }
    };
    std::process::exit(code);
}
