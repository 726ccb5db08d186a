//! Scenario runner for measurement error-disturbance analysis.
//!
//! ```text
//! edrlab run <scenario> [--config FILE] [--seed N] [--jobs N] [--out DIR] [--key value]...
//! edrlab list
//! edrlab plot <report.json> [--out FILE]
//! ```
//!
//! `run` writes `<out>/<scenario>.json` and `<out>/<scenario>.csv` and exits
//! nonzero if any asserted check fails. Unrecognized `--key value` pairs
//! override configuration entries (highest precedence). The output
//! directory defaults to `$EDRLAB_OUT` or `reports`.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};

use config::Config;
use output::plot_csv_from_json;
use scenarios::{find, SCENARIOS};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match dispatch(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn dispatch(args: &[String]) -> Result<i32> {
    match args.first().map(String::as_str) {
        Some("list") => {
            for s in SCENARIOS {
                println!("{:<20} {}", s.name, s.summary);
            }
            Ok(0)
        }
        Some("run") => run_command(&args[1..]),
        Some("plot") => plot_command(&args[1..]),
        Some(other) => bail!("unknown command `{other}`; expected `run`, `list` or `plot`"),
        None => {
            eprintln!("usage: edrlab <run|list|plot> ...");
            Ok(2)
        }
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("EDRLAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("reports"))
}

fn run_command(args: &[String]) -> Result<i32> {
    let name = args.first().ok_or_else(|| anyhow!("`run` needs a scenario name"))?;
    let scenario = find(name).ok_or_else(|| {
        let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
        anyhow!("unknown scenario `{name}`; available: {}", names.join(", "))
    })?;

    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = default_out_dir();
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut i = 1;
    while i < args.len() {
        let flag = &args[i];
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| anyhow!("unexpected argument `{flag}`; flags look like --key value"))?;
        let value = args
            .get(i + 1)
            .ok_or_else(|| anyhow!("flag --{key} needs a value"))?
            .clone();
        match key {
            "config" => config_path = Some(PathBuf::from(value)),
            "out" => out_dir = PathBuf::from(value),
            _ => overrides.push((key.to_string(), value)),
        }
        i += 2;
    }

    let mut cfg = Config::new();
    if let Some(path) = &config_path {
        cfg.load_file(path)?;
    }
    for (key, value) in &overrides {
        cfg.set(key, value);
    }

    let report = (scenario.run)(&cfg)?;
    for check in &report.checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] {}: {} {} {}",
            check.name,
            output::fmt_float(check.lhs),
            check.kind,
            output::fmt_float(check.rhs)
        );
    }
    report.write_files(&out_dir)?;
    println!(
        "{}: {} checks, {} -> {}",
        report.scenario,
        report.checks.len(),
        if report.passed() { "all passed" } else { "FAILURES" },
        out_dir.join(format!("{}.json", report.scenario)).display()
    );
    Ok(if report.passed() { 0 } else { 1 })
}

fn plot_command(args: &[String]) -> Result<i32> {
    let path = args.first().map(PathBuf::from).ok_or_else(|| anyhow!("`plot` needs a report path"))?;
    let mut out: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--out" => {
                out = Some(PathBuf::from(
                    args.get(i + 1).ok_or_else(|| anyhow!("--out needs a value"))?,
                ));
                i += 2;
            }
            other => bail!("unexpected argument `{other}`"),
        }
    }
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading report {}", path.display()))?;
    let csv = plot_csv_from_json(&text)?;
    let out = out.unwrap_or_else(|| path.with_extension("plot.csv"));
    std::fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(0)
}
