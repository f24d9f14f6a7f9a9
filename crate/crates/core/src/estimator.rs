//! Maximum-likelihood estimation of the group couplings.
//!
//! The likelihood of `n` observed configurations depends on the data only
//! through the per-group mean of `S²`, so [`SufficientSummary`] is the whole
//! data interface. Each group is estimated on its own by inverting `θ_N`;
//! samples whose statistic lands on `κ` or `N²` produce `∓∞`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{self, check_population, kappa, ExtendedCoupling, GroupSpec};

/// Slack allowed when admitting a statistic read from rounded decimal input.
pub const STATISTIC_TOLERANCE: f64 = 1e-9;

/// Realized statistic for one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStatistic {
    pub n_voters: usize,
    /// Sample mean of `S²`.
    pub t: f64,
    /// Whether `n·T` lies on the lattice of sums of `n` achievable squares.
    pub achievable: bool,
}

/// Per-group `T` together with the sample size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SummaryRecord", into = "SummaryRecord")]
pub struct SufficientSummary {
    groups: Vec<GroupStatistic>,
    n: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SummaryRecord {
    n: u64,
    groups: Vec<GroupRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupRecord {
    #[serde(rename = "N")]
    n_voters: usize,
    #[serde(rename = "T")]
    t: f64,
}

impl TryFrom<SummaryRecord> for SufficientSummary {
    type Error = Error;

    fn try_from(r: SummaryRecord) -> Result<Self> {
        SufficientSummary::new(r.n, r.groups.iter().map(|g| (g.n_voters, g.t)).collect())
    }
}

impl From<SufficientSummary> for SummaryRecord {
    fn from(s: SufficientSummary) -> Self {
        SummaryRecord {
            n: s.n,
            groups: s
                .groups
                .iter()
                .map(|g| GroupRecord {
                    n_voters: g.n_voters,
                    t: g.t,
                })
                .collect(),
        }
    }
}

/// Checks `T` against `[κ, N²]` with [`STATISTIC_TOLERANCE`] slack (scaled
/// by `max(1, N²)`) and clamps it into the interval.
pub fn admit_statistic(n_voters: usize, t: f64) -> Result<f64> {
    check_population(n_voters)?;
    let lo = kappa(n_voters) as f64;
    let hi = (n_voters * n_voters) as f64;
    let slack = STATISTIC_TOLERANCE * hi;
    if !t.is_finite() || t < lo - slack || t > hi + slack {
        return Err(Error::OutOfRange { value: t, lo, hi });
    }
    Ok(t.clamp(lo, hi))
}

/// `n·T` must be an integer combination of `n` squares from
/// `{κ², (κ+2)², …, N²}`: all such squares are `≡ 0 (mod 4)` for even `N`
/// and `≡ 1 (mod 8)` for odd `N`.
fn on_lattice(n_voters: usize, t: f64, n: u64) -> bool {
    let total = t * n as f64;
    let nearest = total.round();
    if (total - nearest).abs() > STATISTIC_TOLERANCE * total.abs().max(1.0) {
        return false;
    }
    let total = nearest as u128;
    if n_voters.is_multiple_of(2) {
        total.is_multiple_of(4)
    } else {
        total % 8 == u128::from(n) % 8
    }
}

impl SufficientSummary {
    /// Validates each `(N, T)` pair; `T` is clamped into `[κ, N²]` when it
    /// falls outside by no more than the admission tolerance.
    pub fn new(n: u64, groups: Vec<(usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("sample size must be at least 1".into()));
        }
        if groups.is_empty() {
            return Err(Error::Shape("summary has no groups".into()));
        }
        let groups = groups
            .into_iter()
            .enumerate()
            .map(|(i, (n_voters, t))| {
                let t = admit_statistic(n_voters, t).map_err(|e| e.in_group(i))?;
                Ok(GroupStatistic {
                    n_voters,
                    t,
                    achievable: on_lattice(n_voters, t, n),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { groups, n })
    }

    /// Builds the summary from observed margins, `margins[λ][t]`.
    pub fn from_margins(sizes: &[usize], margins: &[Vec<i64>]) -> Result<Self> {
        if sizes.len() != margins.len() {
            return Err(Error::Shape(format!(
                "{} group sizes but {} margin columns",
                sizes.len(),
                margins.len()
            )));
        }
        let n = margins.first().map_or(0, Vec::len);
        if margins.iter().any(|m| m.len() != n) {
            return Err(Error::Shape("groups have different sample counts".into()));
        }
        let groups = sizes
            .iter()
            .zip(margins)
            .map(|(&size, m)| {
                let total: u128 = m.iter().map(|&s| (s * s) as u128).sum();
                (size, total as f64 / n as f64)
            })
            .collect();
        Self::new(n as u64, groups)
    }

    pub fn groups(&self) -> &[GroupStatistic] {
        &self.groups
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.n_voters).collect()
    }
}

/// Computes `T_λ = (1/n) Σ_t S_λ^(t)²` from raw ±1 votes, one observation per
/// row with groups laid out contiguously in `sizes` order.
pub fn statistic_t<R: AsRef<[i8]>>(rows: &[R], sizes: &[usize]) -> Result<SufficientSummary> {
    if rows.is_empty() {
        return Err(Error::Shape("no observations".into()));
    }
    if sizes.is_empty() {
        return Err(Error::Shape("no groups declared".into()));
    }
    let width: usize = sizes.iter().sum();
    let mut sums = vec![0u128; sizes.len()];
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != width {
            return Err(Error::Shape(format!(
                "row {} has {} columns, expected {width}",
                r + 1,
                row.len()
            )));
        }
        let mut col = 0;
        for (g, &size) in sizes.iter().enumerate() {
            let mut s: i64 = 0;
            for &v in &row[col..col + size] {
                col += 1;
                match v {
                    1 => s += 1,
                    -1 => s -= 1,
                    other => {
                        return Err(Error::MalformedData {
                            row: r + 1,
                            col,
                            found: other.to_string(),
                        })
                    }
                }
            }
            sums[g] += (s * s) as u128;
        }
    }
    let n = rows.len();
    SufficientSummary::new(
        n as u64,
        sizes
            .iter()
            .zip(&sums)
            .map(|(&size, &total)| (size, total as f64 / n as f64))
            .collect(),
    )
}

fn check_shapes(model: &[GroupSpec], summary: &SufficientSummary) -> Result<()> {
    if model.len() != summary.groups.len() {
        return Err(Error::Shape(format!(
            "model has {} groups, summary has {}",
            model.len(),
            summary.groups.len()
        )));
    }
    for (i, (m, g)) in model.iter().zip(&summary.groups).enumerate() {
        if m.n_voters != g.n_voters {
            return Err(Error::Shape(format!(
                "group {i}: model N = {}, summary N = {}",
                m.n_voters, g.n_voters
            )));
        }
    }
    Ok(())
}

/// `−n Σ ln Z_{β_λ,N_λ} + (n/2) Σ (β_λ/N_λ) T_λ`.
pub fn log_likelihood(model: &[GroupSpec], summary: &SufficientSummary) -> Result<f64> {
    check_shapes(model, summary)?;
    let n = summary.n as f64;
    let mut acc = 0.0;
    for (spec, g) in model.iter().zip(&summary.groups) {
        acc += -n * model::log_partition(spec.n_voters, spec.beta)?
            + 0.5 * n * spec.beta / spec.n_voters as f64 * g.t;
    }
    Ok(acc)
}

/// Where a statistic falls relative to the landmarks `κ < N < N²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    NegInfinite,
    NegativeFinite,
    NonNegativeFinite,
    PosInfinite,
}

impl Classification {
    pub fn of(n_voters: usize, t: f64) -> Self {
        let n = n_voters as f64;
        if t <= kappa(n_voters) as f64 {
            Classification::NegInfinite
        } else if t < n {
            Classification::NegativeFinite
        } else if t < n * n {
            Classification::NonNegativeFinite
        } else {
            Classification::PosInfinite
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEstimate {
    #[serde(rename = "N")]
    pub n_voters: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub beta_hat: ExtendedCoupling,
    pub classification: Classification,
    pub std_error: Option<f64>,
    pub ci: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub n: u64,
    pub level: f64,
    pub groups: Vec<GroupEstimate>,
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    Ok(())
}

/// Two-sided standard normal critical value `z_{(1+level)/2}`.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    check_level(level)?;
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(std.inverse_cdf(0.5 * (1.0 + level)))
}

/// `Σ = 4N² / 𝕍_{β,N} S²`, the asymptotic variance of `√n (β̂ − β)`.
pub fn asymptotic_variance(n_voters: usize, beta: f64) -> Result<f64> {
    let n = n_voters as f64;
    Ok(4.0 * n * n / model::var_s2(n_voters, beta)?)
}

/// Solves `θ_N(β̂) = T` and attaches a Wald interval for finite `β̂`.
///
/// The interval uses the plug-in variance `Σ(β̂)`.
pub fn mle_estimate(n_voters: usize, t: f64, n: u64, level: f64) -> Result<GroupEstimate> {
    check_level(level)?;
    if n == 0 {
        return Err(Error::Shape("sample size must be at least 1".into()));
    }
    let t = admit_statistic(n_voters, t)?;
    let classification = Classification::of(n_voters, t);
    let beta_hat = match classification {
        Classification::NegInfinite => ExtendedCoupling::NegInfinity,
        Classification::PosInfinite => ExtendedCoupling::PosInfinity,
        _ => model::theta_inverse(n_voters, t)?,
    };
    let (std_error, ci) = match beta_hat.finite() {
        Some(b) => {
            let se = (asymptotic_variance(n_voters, b)? / n as f64).sqrt();
            let z = normal_critical_value(level)?;
            (Some(se), Some([b - z * se, b + z * se]))
        }
        None => (None, None),
    };
    Ok(GroupEstimate {
        n_voters,
        t,
        beta_hat,
        classification,
        std_error,
        ci,
    })
}

/// Group-wise [`mle_estimate`], order-preserving.
pub fn multi_group_estimate(summary: &SufficientSummary, level: f64) -> Result<EstimateReport> {
    if summary.groups.is_empty() {
        return Err(Error::Shape("summary has no groups".into()));
    }
    check_level(level)?;
    let groups = summary
        .groups
        .par_iter()
        .enumerate()
        .map(|(i, g)| mle_estimate(g.n_voters, g.t, summary.n, level).map_err(|e| e.in_group(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport {
        n: summary.n,
        level,
        groups,
    })
}
