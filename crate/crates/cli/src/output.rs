use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

/// A failed command. `Config` covers anything the caller could fix by
/// changing the inputs; `Failure` is a run that went wrong or a check that
/// did not pass.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    fn record(&self) -> serde_json::Value {
        match self {
            CliError::Config(m) => json!({"error": "invalid_config", "constraint": m}),
            CliError::Failure(m) => json!({"error": "failure", "message": m}),
        }
    }

    /// Print the machine-readable record to stderr and, when possible,
    /// leave a copy in the output directory.
    pub fn report(&self, dir: &Path) {
        let record = self.record();
        eprintln!("{record}");
        if fs::create_dir_all(dir).is_ok() {
            let _ = fs::write(dir.join("error.json"), format!("{:#}\n", record));
        }
    }
}

impl From<nsbesov::Error> for CliError {
    fn from(e: nsbesov::Error) -> Self {
        use nsbesov::Error as E;
        match e {
            E::Io(_) | E::QuadratureNonConvergence { .. } | E::InsufficientData(_) => CliError::Failure(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("io: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Output directory of one run. Every file it writes carries the hash of
/// the run's configuration.
pub struct Output {
    dir: PathBuf,
    hash: String,
}

pub fn config_hash<C: Serialize>(command: &str, config: &C) -> String {
    let canonical = serde_json::to_string(&json!({"command": command, "config": config})).expect("serializable config");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Output {
    pub fn create<C: Serialize>(dir: &Path, command: &str, config: &C) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        let hash = config_hash(command, config);
        let out = Self {
            dir: dir.to_path_buf(),
            hash,
        };
        let header = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "config_hash": out.hash,
        });
        fs::write(out.dir.join("run.json"), format!("{:#}\n", header))?;
        Ok(out)
    }

    pub fn csv(&self, name: &str, body: &str) -> CliResult<()> {
        fs::write(self.dir.join(name), format!("# config_hash={}\n{body}", self.hash))?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let doc = json!({"config_hash": self.hash, "result": value});
        fs::write(self.dir.join(name), format!("{:#}\n", doc))?;
        Ok(())
    }
}

/// Run `f` over `items` on up to `jobs` threads; results keep input order.
pub fn fan_out<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Exponent as text, `inf` for ∞ (JSON has no infinity).
pub fn exponent_text(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}
