use std::io::Write;

fn main() {
    let out = twistcb::cli::run_from(std::env::args_os());
    print!("{}", out.stdout);
    if !out.stderr.is_empty() {
        eprintln!("{}", out.stderr.trim_end());
    }
    let _ = std::io::stdout().flush();
    std::process::exit(out.code);
}
