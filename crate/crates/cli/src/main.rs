mod args;
mod commands;
mod output;
mod source;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::output::{CliError, CliResult};

const SUBCOMMANDS: [&str; 5] = ["analyze", "criterion", "example-scan", "solve", "verify"];

/// Flags from a `key = value` config file.
fn config_flags(path: &Path) -> CliResult<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        if key.is_empty() || key.contains(char::is_whitespace) || key == "config" || key == "out" {
            return Err(CliError::Config(format!(
                "{}:{}: expected `key = value` with a command flag as key, got {raw:?}",
                path.display(),
                no + 1
            )));
        }
        flags.push(format!("--{}", key.replace('_', "-")).into());
        if let Some(v) = value {
            flags.push(v.into());
        }
    }
    Ok(flags)
}

/// Splice the flags of `--config FILE` in right after the subcommand, so
/// that flags given on the command line come later and take precedence.
fn expand_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path: Option<PathBuf> = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy().into_owned();
        if text == "--config" {
            let value = iter
                .next()
                .ok_or_else(|| CliError::Config("--config needs a file path".into()))?;
            path = Some(value.into());
        } else if let Some(value) = text.strip_prefix("--config=") {
            path = Some(value.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let flags = config_flags(&path)?;
    let at = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .ok_or_else(|| CliError::Config("--config needs a subcommand".into()))?;
    rest.splice(at + 1..at + 1, flags);
    Ok(rest)
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            e.report(Path::new("."));
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = Cli::parse_from(argv);
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(&cli.out, a),
        Command::Criterion(a) => commands::criterion(&cli.out, a),
        Command::ExampleScan(a) => commands::example_scan(&cli.out, a),
        Command::Solve(a) => commands::solve_cmd(&cli.out, a),
        Command::Verify(a) => commands::verify(&cli.out, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report(&cli.out);
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_go_after_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# solver run\nn = 16\nt_end = 0.5  # short\nbalance\n\n").unwrap();
        let argv = os(&["nsbesov", "--out", "x", "solve", "--config", path.to_str().unwrap(), "--n", "32"]);
        let got = expand_config(argv).unwrap();
        assert_eq!(
            got,
            os(&["nsbesov", "--out", "x", "solve", "--n", "16", "--t-end", "0.5", "--balance", "--n", "32"])
        );
        let cli = Cli::parse_from(got);
        match cli.command {
            Command::Solve(a) => {
                assert_eq!(a.lattice.n, 32);
                assert_eq!(a.t_end, 0.5);
                assert!(a.balance);
            }
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn malformed_config_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "two words = 1\n").unwrap();
        let argv = os(&["nsbesov", "solve", "--config", path.to_str().unwrap()]);
        assert!(matches!(expand_config(argv), Err(CliError::Config(_))));
        assert!(expand_config(os(&["nsbesov", "solve", "--config"])).is_err());
    }
}
