use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nsbesov::criterion::{
    criterion_lhs, example1_data, example1_lattice, example1_sweep, example2_data, example2_lattice, example2_sweep,
    example2_symbol_norm, scaling_fit, sweep_to_csv, CriterionInput, CriterionOptions, Example1Params, Frame,
    LogFactor, ScalingSeries, SweepRow,
};
use nsbesov::heat::{caloric_norm, CaloricIndex};
use nsbesov::io::write_velocity;
use nsbesov::littlewood_paley::{BesovIndex, DyadicPartition, DyadicSpectrum};
use nsbesov::solver::{apriori_balance, solve, SolveConfig, SolveStatus};
use nsbesov::verify::{run_suite, Suite, SuiteConfig};
use serde::Serialize;
use serde_json::json;

use crate::args::{AnalyzeArgs, CriterionArgs, FrameArg, ScanArgs, SolveArgs, VerifyArgs};
use crate::output::{exponent_text, fan_out, CliError, CliResult, Output};
use crate::source::{self, parse_source, Generator, Source};

fn parse_exponent(name: &str, text: &str) -> CliResult<f64> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>()
        .map_err(|_| CliError::Config(format!("{name} = {t:?} is not a number or `inf`")))
}

/// `s,p,r` with `inf` allowed for `p` and `r`.
pub fn parse_index(text: &str) -> CliResult<BesovIndex> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!("Besov index {text:?} must have the form s,p,r")));
    }
    let s = parse_exponent("s", parts[0])?;
    let p = parse_exponent("p", parts[1])?;
    let r = parse_exponent("r", parts[2])?;
    Ok(BesovIndex::new(s, p, r)?)
}

/// `A..B` for `2^-A, …, 2^-B`, or an explicit comma list.
pub fn parse_eps(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Config(format!("eps list {text:?} must be `A..B` or comma-separated numbers"));
    let values: Vec<f64> = if let Some((a, b)) = text.split_once("..") {
        let a: i32 = a.trim().parse().map_err(|_| bad())?;
        let b: i32 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(CliError::Config(format!("eps range {a}..{b} is empty")));
        }
        (a..=b).map(|k| 2f64.powi(-k)).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?
    };
    if values.is_empty() {
        return Err(bad());
    }
    if let Some(e) = values.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Config(format!("eps = {e} must lie in (0, 1)")));
    }
    Ok(values)
}

fn check_jobs(jobs: usize) -> CliResult<()> {
    if jobs == 0 {
        return Err(CliError::Config("jobs must be at least 1".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct NormRecord {
    s: f64,
    p: String,
    r: String,
    value: f64,
}

pub fn analyze(dir: &Path, args: &AnalyzeArgs) -> CliResult<()> {
    let indices = args.indices.iter().map(|t| parse_index(t)).collect::<CliResult<Vec<_>>>()?;
    let source = parse_source(&args.source.field)?;
    let lat = source::lattice(args.lattice.n, args.lattice.length)?;
    let gen = Generator {
        seed: args.source.seed,
        amplitude: args.source.amplitude,
        max_block: args.source.max_block,
    };
    let f = source::scalar(&source, &lat, &gen, args.source.component)?;
    let out = Output::create(dir, "analyze", args)?;
    let partition = DyadicPartition::new(f.lattice());

    let mut csv = String::from("p,j,block_norm\n");
    let mut norms = Vec::new();
    let mut warning = None;
    let ps: BTreeSet<u64> = indices.iter().map(|i| i.p.to_bits()).collect();
    for bits in ps {
        let p = f64::from_bits(bits);
        let spectrum = DyadicSpectrum::compute(&f, p, &partition)?;
        for &(j, n) in &spectrum.entries {
            let _ = writeln!(csv, "{},{j},{n:.17e}", exponent_text(p));
        }
        warning = warning.or(spectrum.truncation_warning());
        for idx in indices.iter().filter(|i| i.p.to_bits() == bits) {
            norms.push(NormRecord {
                s: idx.s,
                p: exponent_text(idx.p),
                r: exponent_text(idx.r),
                value: spectrum.besov(idx.s, idx.r),
            });
        }
    }
    // keep the order the indices were given in
    let mut ordered = Vec::with_capacity(norms.len());
    for idx in &indices {
        let pos = norms
            .iter()
            .position(|n| n.s == idx.s && n.p == exponent_text(idx.p) && n.r == exponent_text(idx.r))
            .expect("every index was evaluated");
        ordered.push(norms.swap_remove(pos));
    }

    let caloric = if args.caloric {
        let mut c = serde_json::Map::new();
        for (name, r) in [("r1", CaloricIndex::One), ("r2", CaloricIndex::Two), ("rinf", CaloricIndex::Infinity)] {
            c.insert(name.into(), json!(caloric_norm(&f, r, &partition)?));
        }
        Some(c)
    } else {
        None
    };

    out.csv("spectrum.csv", &csv)?;
    out.json(
        "norms.json",
        &json!({
            "shape": f.lattice().shape(),
            "lengths": f.lattice().lengths(),
            "besov": ordered,
            "caloric": caloric,
            "truncation_warning": warning,
        }),
    )
}

pub fn criterion(dir: &Path, args: &CriterionArgs) -> CliResult<()> {
    let source = parse_source(&args.field)?;
    let (u0, frame) = match source {
        Source::Example1 => {
            let params = Example1Params::new(args.eps, args.alpha, args.p)?;
            let lat = example1_lattice(&params)?;
            (example1_data(&params, &lat)?, Frame::Standard)
        }
        Source::Example2 => {
            let lat = example2_lattice(args.eps)?;
            (example2_data(args.eps, &lat)?, Frame::Diagonal)
        }
        other => {
            let lat = source::lattice(args.lattice.n, args.lattice.length)?;
            let gen = Generator {
                seed: args.seed,
                amplitude: args.amplitude,
                max_block: args.max_block,
            };
            let frame = match args.frame {
                FrameArg::Standard => Frame::Standard,
                FrameArg::Diagonal => Frame::Diagonal,
            };
            (source::velocity(&other, &lat, &gen)?, frame)
        }
    };
    let input = CriterionInput::new(u0, args.p)?
        .with_frame(frame)
        .with_constants(args.c_const, args.delta)?;
    let out = Output::create(dir, "criterion", args)?;
    let report = criterion_lhs(&input)?;
    out.json(
        "criterion.json",
        &json!({
            "shape": input.u0.lattice().shape(),
            "lengths": input.u0.lattice().lengths(),
            "frame": frame,
            "report": report,
        }),
    )
}

#[derive(Serialize)]
struct FitRecord {
    quantity: &'static str,
    log_correction: LogFactor,
    expected_slope: f64,
    tolerance: f64,
    slope: Option<f64>,
    intercept: Option<f64>,
    r2: Option<f64>,
    within_tolerance: Option<bool>,
    note: Option<String>,
}

fn fit_record(
    quantity: &'static str,
    eps: &[f64],
    observations: Vec<f64>,
    log_correction: LogFactor,
    expected_slope: f64,
    tolerance: f64,
) -> CliResult<FitRecord> {
    let series = ScalingSeries {
        eps_values: eps.to_vec(),
        observations,
        log_correction,
    };
    let mut rec = FitRecord {
        quantity,
        log_correction,
        expected_slope,
        tolerance,
        slope: None,
        intercept: None,
        r2: None,
        within_tolerance: None,
        note: None,
    };
    match scaling_fit(&series) {
        Ok(fit) => {
            rec.slope = Some(fit.slope);
            rec.intercept = Some(fit.intercept);
            rec.r2 = Some(fit.r2);
            rec.within_tolerance = Some((fit.slope - expected_slope).abs() <= tolerance);
        }
        Err(nsbesov::Error::InsufficientData(msg)) => rec.note = Some(msg),
        Err(e) => return Err(e.into()),
    }
    Ok(rec)
}

fn strictly(values: &[f64], decreasing: bool) -> bool {
    values
        .windows(2)
        .all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] })
}

pub fn example_scan(dir: &Path, args: &ScanArgs) -> CliResult<()> {
    check_jobs(args.jobs)?;
    let eps = parse_eps(&args.eps)?;
    let opts = CriterionOptions {
        caloric_largeness: !args.no_caloric_largeness,
    };
    let p = match (args.example, args.p) {
        (1 | 2, Some(p)) => p,
        (1, None) => 5.0,
        (2, None) => 4.0,
        (k, _) => return Err(CliError::Config(format!("example must be 1 or 2, got {k}"))),
    };
    // validate every parameter before the expensive part starts
    for &e in &eps {
        if args.example == 1 {
            Example1Params::new(e, args.alpha, p)?;
        } else {
            example2_lattice(e)?;
        }
    }
    let out = Output::create(dir, "example-scan", args)?;

    let runs = fan_out(&eps, args.jobs, |&e| -> nsbesov::Result<(Vec<SweepRow>, Option<f64>)> {
        if args.example == 1 {
            Ok((example1_sweep(&[e], args.alpha, p, &opts)?, None))
        } else {
            let rows = example2_sweep(&[e], p, &opts)?;
            let symbol = example2_symbol_norm(e, p / (p - 1.0), &example2_lattice(e)?)?;
            Ok((rows, Some(symbol)))
        }
    });
    let mut rows = Vec::with_capacity(eps.len());
    let mut symbols = Vec::new();
    for run in runs {
        let (r, s) = run?;
        rows.extend(r);
        symbols.extend(s);
    }
    out.csv("scan.csv", &sweep_to_csv(&rows))?;

    let lhs: Vec<f64> = rows.iter().map(|r| r.report.lhs).collect();
    let largeness: Vec<f64> = rows.iter().map(|r| r.report.largeness).collect();
    let fit = if args.example == 1 {
        let a = args.alpha;
        let observations = rows.iter().map(|r| r.report.lhs / r.report.exp_factor).collect();
        let lhs_fit = fit_record(
            "lhs/exp_factor",
            &eps,
            observations,
            LogFactor::Log(2.0 / p),
            a - 6.0 / p + 2.0 * a / p,
            0.15,
        )?;
        let band: Vec<f64> = rows
            .iter()
            .map(|r| r.report.largeness / (1.0 / r.eps).ln().powf(1.0 / p))
            .collect();
        let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = band.iter().copied().fold(0.0, f64::max);
        json!({
            "example": 1,
            "p": p,
            "alpha": a,
            "eps": eps,
            "fits": [lhs_fit],
            "largeness_over_log": band,
            "largeness_band_ratio": if lo > 0.0 { hi / lo } else { f64::INFINITY },
        })
    } else {
        let symbol_fit = fit_record(
            "symbol_norm",
            &eps,
            symbols.clone(),
            LogFactor::LogLog(0.5),
            -1.0 / p,
            0.1,
        )?;
        json!({
            "example": 2,
            "p": p,
            "eps": eps,
            "fits": [symbol_fit],
            "symbol_norm": symbols,
            "lhs_strictly_decreasing": strictly(&lhs, true),
            "largeness_strictly_increasing": strictly(&largeness, false),
        })
    };
    out.json("fit.json", &fit)
}

pub fn solve_cmd(dir: &Path, args: &SolveArgs) -> CliResult<()> {
    let cfg = SolveConfig {
        dt: args.dt,
        t_end: args.t_end,
        p: args.p,
        eta: args.eta,
        output_every: args.output_every,
        balance: args.balance,
    };
    cfg.validate()?;
    let source = parse_source(&args.field)?;
    let lat = source::lattice(args.lattice.n, args.lattice.length)?;
    let gen = Generator {
        seed: args.seed,
        amplitude: args.amplitude,
        max_block: args.max_block,
    };
    let u0 = source::velocity(&source, &lat, &gen)?;
    let out = Output::create(dir, "solve", args)?;
    let outcome = solve(&u0, &cfg)?;
    let trace = &outcome.trace;
    out.csv("trace.csv", &trace.to_csv())?;

    let balance = if args.balance {
        let report = apriori_balance(trace)?;
        let mut csv = String::from("t,lhs,i1,i2,i3,gronwall,ratio,degenerate\n");
        for r in &report.rows {
            let _ = writeln!(
                csv,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                r.t, r.lhs, r.i1, r.i2, r.i3, r.gronwall, r.ratio, r.degenerate
            );
        }
        out.csv("balance.csv", &csv)?;
        Some(report.max_ratio)
    } else {
        None
    };
    if let Some(path) = &args.save_v {
        write_velocity(BufWriter::new(File::create(path)?), &outcome.v)?;
    }
    out.json(
        "solve.json",
        &json!({
            "status": trace.status,
            "gamma_hit": trace.gamma_hit,
            "t_reached": trace.times.last(),
            "max_monitor_inf": trace.max_monitor(),
            "final_monitor_l1": trace.monitor_l1.last(),
            "initial_energy": trace.energy.first(),
            "final_energy": trace.energy.last(),
            "max_div_residual": trace.div_residual.iter().copied().fold(0.0, f64::max),
            "balance_max_ratio": balance,
        }),
    )?;
    match trace.status {
        SolveStatus::Completed | SolveStatus::BootstrapExceeded => Ok(()),
        SolveStatus::BlowupSuspect => Err(CliError::Failure("non-finite values appeared; run marked suspect".into())),
        SolveStatus::CflViolated => Err(CliError::Failure("velocity grew past the CFL bound for this dt".into())),
    }
}

pub fn verify(dir: &Path, args: &VerifyArgs) -> CliResult<()> {
    check_jobs(args.jobs)?;
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        args.suite
            .split(',')
            .map(|s| Suite::from_name(s.trim()))
            .collect::<nsbesov::Result<_>>()?
    };
    let cfg = SuiteConfig {
        n: args.n,
        n_fine: args.n_fine,
        samples: args.samples,
        seed: args.seed,
    };
    source::lattice(cfg.n, std::f64::consts::TAU)?;
    source::lattice(cfg.n_fine, std::f64::consts::TAU)?;
    if cfg.samples == 0 {
        return Err(CliError::Config("samples must be at least 1".into()));
    }
    let out = Output::create(dir, "verify", args)?;
    let outcomes = fan_out(&suites, args.jobs, |&s| run_suite(s, &cfg))
        .into_iter()
        .collect::<nsbesov::Result<Vec<_>>>()?;
    let passed = outcomes.iter().all(|o| o.passed);

    let mut csv = String::from("suite,passed,metric,tolerance\n");
    for o in &outcomes {
        let _ = writeln!(csv, "{},{},{:.17e},{:.17e}", o.suite, o.passed, o.metric, o.tolerance);
    }
    out.csv("verify.csv", &csv)?;
    out.json("verify.json", &json!({"passed": passed, "suites": outcomes}))?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.suite.as_str()).collect();
        Err(CliError::Failure(format!("suites failed: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_parsing() {
        let i = parse_index("0,inf,1").unwrap();
        assert_eq!((i.s, i.p, i.r), (0.0, f64::INFINITY, 1.0));
        assert!(matches!(parse_index("0,2"), Err(CliError::Config(_))));
        assert!(matches!(parse_index("0,2,0"), Err(CliError::Config(_))));
    }

    #[test]
    fn eps_parsing() {
        assert_eq!(parse_eps("3..5").unwrap(), vec![0.125, 0.0625, 0.03125]);
        assert_eq!(parse_eps("0.5, 0.25").unwrap(), vec![0.5, 0.25]);
        assert!(parse_eps("5..3").is_err());
        assert!(parse_eps("2").is_err());
    }
}
