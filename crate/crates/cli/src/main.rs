use std::process::ExitCode;

fn main() -> ExitCode {
    let result = probelens_cli::parse_args(std::env::args_os()).and_then(|parsed| match parsed {
        Ok(cli) => probelens_cli::run(&cli),
        Err(help) => {
            print!("{help}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
