//! Named field generators and file input.

use std::fs::File;
use std::io::BufReader;

use nsbesov::io::{read_fields, read_velocity};
use nsbesov::littlewood_paley::DyadicPartition;
use nsbesov::random::{random_divergence_free, random_scalar, RandomFieldConfig};
use nsbesov::{FrequencyLattice, ScalarField, VelocityField};

use crate::output::{CliError, CliResult};

pub enum Source {
    Zero,
    Random,
    Mode([i64; 3]),
    Shear,
    File(String),
    Example1,
    Example2,
}

pub fn parse_source(spec: &str) -> CliResult<Source> {
    if let Some(path) = spec.strip_prefix("file:") {
        return Ok(Source::File(path.to_string()));
    }
    if let Some(list) = spec.strip_prefix("mode:") {
        let parts: Vec<i64> = list
            .split(',')
            .map(|s| s.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("mode must be three integers K1,K2,K3, got {list:?}")))?;
        let m: [i64; 3] = parts
            .try_into()
            .map_err(|_| CliError::Config(format!("mode must be three integers K1,K2,K3, got {list:?}")))?;
        return Ok(Source::Mode(m));
    }
    match spec {
        "zero" => Ok(Source::Zero),
        "random" => Ok(Source::Random),
        "shear" => Ok(Source::Shear),
        "example1" => Ok(Source::Example1),
        "example2" => Ok(Source::Example2),
        _ => Err(CliError::Config(format!(
            "unknown field source {spec:?}; expected zero, random, shear, mode:K1,K2,K3, example1, example2 or file:PATH"
        ))),
    }
}

pub fn lattice(n: usize, length: f64) -> CliResult<FrequencyLattice> {
    Ok(FrequencyLattice::cubic(n, length)?)
}

fn random_config(partition: &DyadicPartition, max_block: Option<i32>) -> CliResult<RandomFieldConfig> {
    let mut cfg = RandomFieldConfig::default();
    if let Some(b) = max_block {
        if b < partition.j_min() {
            return Err(CliError::Config(format!(
                "max_block = {b} is below the lowest usable block {}",
                partition.j_min()
            )));
        }
        cfg.blocks = Some((partition.j_min(), b));
    }
    Ok(cfg)
}

fn check_amplitude(a: f64) -> CliResult<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(CliError::Config(format!("amplitude must be finite and >= 0, got {a}")));
    }
    Ok(())
}

fn open(path: &str) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Config(format!("cannot open field file {path:?}: {e}")))
}

fn scale_to(f: &ScalarField, amplitude: f64) -> ScalarField {
    let m = f.max_abs();
    if m > 0.0 {
        f.scaled(amplitude / m)
    } else {
        f.clone()
    }
}

pub struct Generator {
    pub seed: u64,
    pub amplitude: f64,
    pub max_block: Option<i32>,
}

pub fn scalar(source: &Source, lat: &FrequencyLattice, g: &Generator, component: usize) -> CliResult<ScalarField> {
    check_amplitude(g.amplitude)?;
    let partition = DyadicPartition::new(lat);
    match source {
        Source::Zero => Ok(ScalarField::zeros(lat)),
        Source::Random => {
            let (f, _) = random_scalar(&partition, g.seed, &random_config(&partition, g.max_block)?);
            Ok(scale_to(&f, g.amplitude))
        }
        Source::Mode(m) => {
            let l = lat.lengths();
            let k = [0, 1, 2].map(|a| std::f64::consts::TAU * m[a] as f64 / l[a]);
            Ok(ScalarField::from_fn(lat, |x| g.amplitude * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos()))
        }
        Source::File(path) => {
            let mut fields = read_fields(open(path)?)?;
            let count = fields.len();
            if component >= count {
                return Err(CliError::Config(format!("component {component} requested, file has {count}")));
            }
            Ok(fields.swap_remove(component))
        }
        Source::Shear | Source::Example1 | Source::Example2 => {
            Err(CliError::Config("this source produces a velocity field, not a scalar".into()))
        }
    }
}

pub fn velocity(source: &Source, lat: &FrequencyLattice, g: &Generator) -> CliResult<VelocityField> {
    check_amplitude(g.amplitude)?;
    let partition = DyadicPartition::new(lat);
    match source {
        Source::Zero => Ok(VelocityField::zeros(lat)),
        Source::Random => {
            let u = random_divergence_free(&partition, g.seed, &random_config(&partition, g.max_block)?);
            let m = u.max_abs();
            Ok(if m > 0.0 { u.scaled(g.amplitude / m) } else { u })
        }
        Source::Shear => {
            let k = std::f64::consts::TAU / lat.lengths()[1];
            Ok(VelocityField::new([
                ScalarField::from_fn(lat, |x| g.amplitude * (k * x[1]).sin()),
                ScalarField::zeros(lat),
                ScalarField::zeros(lat),
            ])?)
        }
        Source::File(path) => Ok(read_velocity(open(path)?)?),
        Source::Mode(_) => Err(CliError::Config("mode:K1,K2,K3 is a scalar source".into())),
        Source::Example1 | Source::Example2 => {
            Err(CliError::Config("example fields are only available to the criterion command".into()))
        }
    }
}
