use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use fracback::acceptance::run_all;
use fracback::cli::{default_config_path, strip_timestamp};

const BIN: &str = env!("CARGO_BIN_EXE_fracback");

fn run_cli(config: &Path, mode: Option<&str>, out: &Path) -> std::io::Result<std::process::Output> {
    let mut cmd = Command::new(BIN);
    cmd.arg("--config").arg(config).arg("--out").arg(out);
    if let Some(m) = mode {
        cmd.args(["--mode", m]);
    }
    cmd.output()
}

/// Verify mode on the shipped config exits 0, and a seeded stability run
/// repeated into the same directory reproduces its report byte for byte.
fn cli_reproducibility() -> (bool, String) {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (false, format!("no temp dir: {e}")),
    };
    let config = default_config_path();
    let verify = match run_cli(config, None, &dir.path().join("verify")) {
        Ok(o) => o,
        Err(e) => return (false, format!("could not start {BIN}: {e}")),
    };
    let verify_code = verify.status.code();

    let out = dir.path().join("stability");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let ok = run_cli(config, Some("stability"), &out).map(|o| o.status.success()).unwrap_or(false);
        let text = std::fs::read_to_string(out.join("stability.json")).unwrap_or_default();
        reports.push((ok, strip_timestamp(&text)));
    }
    let identical = reports[0].0 && reports[1].0 && !reports[0].1.is_empty() && reports[0].1 == reports[1].1;
    (
        verify_code == Some(0) && identical,
        format!("verify exit code {verify_code:?} (need 0), seeded stability reports identical: {identical}"),
    )
}

fn main() -> ExitCode {
    let outcomes = run_all(|o| println!("{}", o.line()));
    let start = Instant::now();
    let (cli_ok, summary) = cli_reproducibility();
    println!(
        "{} criterion 10 {:<24} {summary} ({:.1}s)",
        if cli_ok { "PASS" } else { "FAIL" },
        "cli reproducibility",
        start.elapsed().as_secs_f64()
    );
    let failed = outcomes.iter().filter(|o| !o.passed).count() + usize::from(!cli_ok);
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
