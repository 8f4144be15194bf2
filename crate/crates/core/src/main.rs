use std::io;

fn main() {
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let code = mepnim::cli::dispatch(std::env::args_os(), &mut input, &mut out, &mut err);
    std::process::exit(code);
}
