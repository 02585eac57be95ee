use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = egorov::cli::run(std::env::args_os(), std::env::var("EGOROV_BOUND").ok());
    if !out.stdout.is_empty() {
        let mut stdout = std::io::stdout().lock();
        let _ = writeln!(stdout, "{}", out.stdout.trim_end());
    }
    if !out.stderr.is_empty() {
        eprintln!("{}", out.stderr);
    }
    ExitCode::from(out.code as u8)
}
