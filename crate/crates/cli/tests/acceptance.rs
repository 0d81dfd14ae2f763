//! Acceptance suite: every primary criterion at full tolerance, one at a time
//! (several carry wall-clock budgets), one `PASS`/`FAIL` line each.
//!
//! Positional arguments select criteria by substring, e.g.
//! `cargo test --test acceptance -- limits phase`.

use std::process::ExitCode;

use scatterkit_cli::accept::{self, PRIMARY};

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = PRIMARY
        .iter()
        .filter(|c| filters.is_empty() || filters.iter().any(|f| c.name.contains(f.as_str())))
        .collect();
    // `cargo test -- --list` and friends expect no work.
    if std::env::args().any(|a| a == "--list") {
        for c in &selected {
            println!("{}: test", c.name);
        }
        return ExitCode::SUCCESS;
    }
    println!("\nrunning {} acceptance criteria", selected.len());
    let mut failed = Vec::new();
    for c in &selected {
        let o = accept::run_criterion(c);
        println!("{} {}: {} ({:.1} s)", o.status(), o.name, o.detail, o.seconds);
        if !o.pass {
            failed.push(o.name);
        }
    }
    println!(
        "\nacceptance: {} passed; {} failed{}",
        selected.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
