use std::process::ExitCode;

use concavia::cli;

fn main() -> ExitCode {
    if let Err(e) = cli::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(cli::EXIT_CONFIG as u8);
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = cli::run(args, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
