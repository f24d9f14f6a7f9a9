//! The `cw` command-line tool.
//!
//! Exit codes: 0 success, 1 output failure, 2 usage error, 3 malformed or
//! unreadable data, 4 numeric precondition violation (for example a
//! statistic outside `[κ, N²]` or a set containing the true coupling).

pub mod args;
pub mod io;

use std::ffi::OsString;
use std::fmt;
use std::path::Path;

use clap::Parser;
use curie_weiss::ldp::{CouplingInterval, RateContext, TailEvent};
use curie_weiss::voting::estimated_weight_report;
use curie_weiss::{
    abs_moment, brute_force_moments, moment_s2, multi_group_estimate, optimal_weights,
    sample_configurations, statistic_t, tail_bound, var_s2, Error, EstimateReport, GroupSpec,
    OracleMoments, SufficientSummary,
};
use serde::Serialize;

pub use args::RunConfig;
use args::{
    BoundKind, BoundsArgs, Command, EstimateArgs, Format, ModelArgs, MomentsArgs, OracleArgs,
    SampleArgs, WeightsArgs,
};
use io::Envelope;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CW_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Io = 1,
    Usage = 2,
    Data = 3,
    Numeric = 4,
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Usage, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Data, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Io, message)
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }

    /// Library error raised while interpreting input data.
    fn from_data(e: Error) -> Self {
        match e.root() {
            Error::OutOfRange { .. } | Error::Precondition(_) => Self::from(e),
            _ => Self::data(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e.root() {
            Error::MalformedData { .. } | Error::Shape(_) => ExitKind::Data,
            Error::OutOfRange { .. } | Error::Precondition(_) | Error::InvalidSet(_) => {
                ExitKind::Numeric
            }
            _ => ExitKind::Usage,
        };
        Self::new(kind, e.to_string())
    }
}

fn model_from(args: &ModelArgs) -> Result<Vec<GroupSpec>, CliError> {
    let betas: Vec<f64> = match args.beta.len() {
        1 => vec![args.beta[0]; args.sizes.len()],
        k if k == args.sizes.len() => args.beta.clone(),
        k => {
            return Err(CliError::usage(format!(
                "{} sizes but {k} couplings",
                args.sizes.len()
            )))
        }
    };
    args.sizes
        .iter()
        .zip(betas)
        .enumerate()
        .map(|(i, (&n, b))| GroupSpec::new(n, b).map_err(|e| CliError::from(e.in_group(i))))
        .collect()
}

fn emit_json<T: Serialize>(out: Option<&Path>, envelope: &Envelope<T>) -> Result<(), CliError> {
    io::emit(out, &io::to_json(envelope))
}

fn sample(a: &SampleArgs) -> Result<(), CliError> {
    let model = model_from(&a.model)?;
    if a.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let batch = sample_configurations(&model, a.n, a.seed)?;
    let sizes = batch.sizes();
    let rows = batch
        .configurations
        .as_deref()
        .expect("configurations requested");
    io::write_atomic(&a.out, &io::write_configurations(rows, &sizes))?;
    let mut envelope = Envelope::new("sample", Some(a.seed), batch.summary()?);
    envelope.model = Some(model);
    io::write_atomic(&io::sidecar_path(&a.out), &io::to_json(&envelope))
}

fn load_summary(a: &EstimateArgs) -> Result<SufficientSummary, CliError> {
    if let Some(path) = &a.input {
        let conf = io::read_configurations(path)?;
        let sizes = match (&a.sizes, conf.declared_sizes) {
            (Some(flag), Some(header)) if *flag != header => {
                return Err(CliError::data(format!(
                    "--sizes {flag:?} disagrees with the file header {header:?}"
                )))
            }
            (Some(flag), _) => flag.clone(),
            (None, Some(header)) => header,
            (None, None) => {
                return Err(CliError::usage(
                    "group sizes needed: pass --sizes or add a `# sizes=` header",
                ))
            }
        };
        return statistic_t(&conf.rows, &sizes).map_err(CliError::from_data);
    }
    if let Some(path) = &a.summary {
        let record: io::SummaryRecord = io::read_json(path)?;
        let summary = record.into_summary().map_err(CliError::from_data)?;
        if let Some(sizes) = &a.sizes {
            if *sizes != summary.sizes() {
                return Err(CliError::data(format!(
                    "--sizes {sizes:?} disagrees with the summary {:?}",
                    summary.sizes()
                )));
            }
        }
        return Ok(summary);
    }
    let ts = a.t.as_ref().expect("clap enforces a source");
    let sizes = a.sizes.as_ref().expect("clap requires --sizes with --t");
    if ts.len() != sizes.len() {
        return Err(CliError::usage(format!(
            "{} sizes but {} statistics",
            sizes.len(),
            ts.len()
        )));
    }
    let n = a.n.expect("clap requires --n with --t");
    Ok(SufficientSummary::new(
        n,
        sizes.iter().copied().zip(ts.iter().copied()).collect(),
    )?)
}

fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let summary = load_summary(a)?;
    let report = multi_group_estimate(&summary, a.level)?;
    emit_json(a.out.as_deref(), &Envelope::new("estimate", None, report))
}

fn weights(a: &WeightsArgs) -> Result<(), CliError> {
    let report = match &a.from_report {
        Some(path) => {
            let estimate: EstimateReport = io::read_json(path)?;
            estimated_weight_report(&estimate).map_err(CliError::from_data)?
        }
        None => {
            let model = model_from(&ModelArgs {
                sizes: a.sizes.clone().unwrap_or_default(),
                beta: a.beta.clone().unwrap_or_default(),
            })?;
            optimal_weights(&model)?
        }
    };
    emit_json(a.out.as_deref(), &Envelope::new("weights", None, report))
}

fn parse_set(spec: &str) -> Result<Vec<CouplingInterval>, CliError> {
    spec.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<CouplingInterval>()
                .map_err(|e| CliError::usage(format!("--set {spec:?}: {e}")))
        })
        .collect()
}

fn bounds(a: &BoundsArgs) -> Result<(), CliError> {
    let model = model_from(&a.model)?;
    let contexts = model
        .iter()
        .map(RateContext::from_spec)
        .collect::<Result<Vec<_>, _>>()?;
    if a.kind != BoundKind::ClosedSet && !a.set.is_empty() {
        return Err(CliError::usage("--set only applies to closed-set"));
    }
    let event = match a.kind {
        BoundKind::AtypicalT => {
            if model.len() != 1 {
                return Err(CliError::usage("atypical-T takes exactly one group"));
            }
            TailEvent::AtypicalT
        }
        BoundKind::AtypicalBetaHat => TailEvent::AtypicalBetaHat,
        BoundKind::ClosedSet => {
            if a.set.len() != model.len() {
                return Err(CliError::usage(format!(
                    "closed-set needs one --set per group: {} groups, {} sets",
                    model.len(),
                    a.set.len()
                )));
            }
            TailEvent::ClosedSet(
                a.set
                    .iter()
                    .map(|s| parse_set(s))
                    .collect::<Result<_, _>>()?,
            )
        }
    };
    let bound = tail_bound(&contexts, a.n, &event)?;
    let mut envelope = Envelope::new("bounds", None, bound);
    envelope.model = Some(model);
    emit_json(a.out.as_deref(), &envelope)
}

/// Points of `start:stop:step`; `stop` is included when reached within `1e-12`.
pub fn parse_beta_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("--beta-grid {spec:?}: expected start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(CliError::usage(format!(
            "--beta-grid {spec:?}: need finite start <= stop and step > 0"
        )));
    }
    let tol = 1e-12 * stop.abs().max(1.0);
    let count = ((stop - start) / step + 1e-9).floor() as usize + 2;
    if count > 10_000_000 {
        return Err(CliError::usage(format!(
            "--beta-grid {spec:?}: too many points"
        )));
    }
    let mut grid: Vec<f64> = (0..count)
        .map(|k| start + k as f64 * step)
        .take_while(|&b| b <= stop + tol)
        .collect();
    if let Some(last) = grid.last_mut() {
        if (*last - stop).abs() <= tol {
            *last = stop;
        }
    }
    Ok(grid)
}

#[derive(Debug, Serialize)]
struct MomentRow {
    #[serde(rename = "N")]
    n_voters: usize,
    beta: f64,
    theta: f64,
    var_s2: f64,
    abs_s: f64,
}

fn moments(a: &MomentsArgs) -> Result<(), CliError> {
    let grid = parse_beta_grid(&a.beta_grid)?;
    let mut rows = Vec::with_capacity(grid.len() * a.sizes.len());
    for &n in &a.sizes {
        for &beta in &grid {
            rows.push(MomentRow {
                n_voters: n,
                beta,
                theta: moment_s2(n, beta)?,
                var_s2: var_s2(n, beta)?,
                abs_s: abs_moment(n, beta, 1)?,
            });
        }
    }
    let bytes = match a.format {
        Format::Json => io::to_json(&Envelope::new("moments", None, rows)),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row).expect("write to memory");
            }
            w.into_inner().expect("flush to memory")
        }
    };
    io::emit(a.out.as_deref(), &bytes)
}

#[derive(Debug, Serialize)]
struct OracleRow {
    #[serde(rename = "N")]
    n_voters: usize,
    beta: f64,
    #[serde(flatten)]
    moments: OracleMoments,
}

fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    let model = model_from(&a.model)?;
    let rows = model
        .iter()
        .map(|g| {
            Ok(OracleRow {
                n_voters: g.n_voters,
                beta: g.beta,
                moments: brute_force_moments(g.n_voters, g.beta)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    emit_json(a.out.as_deref(), &Envelope::new("oracle", None, rows))
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    match &config.command {
        Command::Sample(a) => sample(a),
        Command::Estimate(a) => estimate(a),
        Command::Weights(a) => weights(a),
        Command::Bounds(a) => bounds(a),
        Command::Moments(a) => moments(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            CliError::usage(format!(
                "{THREADS_ENV}={value:?}: expected a positive integer"
            ))
        })?;
    // a pool already set up by an embedding program is left alone
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitKind::Usage as i32
            } else {
                0
            };
        }
    };
    match configure_threads().and_then(|()| run(&config)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cw: {e}");
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let g = parse_beta_grid("-2:2:0.1").unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!((g[0], g[40]), (-2.0, 2.0));
        assert_eq!(parse_beta_grid("0:1:0.3").unwrap().len(), 4);
        assert_eq!(parse_beta_grid("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_beta_grid("1:0:0.5").is_err());
        assert!(parse_beta_grid("0:1:0").is_err());
        assert!(parse_beta_grid("0:1").is_err());
    }

    #[test]
    fn error_codes() {
        let e: CliError = Error::OutOfRange {
            value: 1.0,
            lo: 2.0,
            hi: 3.0,
        }
        .into();
        assert_eq!(e.code(), 4);
        let e: CliError = Error::MalformedData {
            row: 1,
            col: 2,
            found: "0".into(),
        }
        .into();
        assert_eq!(e.code(), 3);
        let e: CliError = Error::InvalidPopulation(1).into();
        assert_eq!(e.code(), 2);
    }

    #[test]
    fn coupling_count_must_match() {
        let a = ModelArgs {
            sizes: vec![5, 7],
            beta: vec![0.1, 0.2, 0.3],
        };
        assert_eq!(model_from(&a).unwrap_err().code(), 2);
        let a = ModelArgs {
            sizes: vec![5, 7],
            beta: vec![0.4],
        };
        assert_eq!(model_from(&a).unwrap().len(), 2);
    }
}
