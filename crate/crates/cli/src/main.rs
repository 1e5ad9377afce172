use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = hmppify_cli::run(std::env::args_os(), &mut hmppify_cli::Io { out: &mut out, err: &mut err });
    ExitCode::from(code as u8)
}
