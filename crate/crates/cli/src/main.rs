use std::io::Write;

use stably_distinct_cli::{run_args, EXIT_USAGE};

fn main() {
    let out = run_args(std::env::args_os());
    let _ = if out.code == EXIT_USAGE {
        std::io::stderr().write_all(out.report.as_bytes())
    } else {
        std::io::stdout().write_all(out.report.as_bytes())
    };
    let _ = std::io::stdout().flush();
    std::process::exit(out.code);
}
