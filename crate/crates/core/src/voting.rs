//! Council votes, the democracy deficit and optimal council weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimateReport;
use crate::ldp::{rate_j, RateContext};
use crate::model::{self, ExtendedCoupling, GroupSpec, Levels, MagnetizationPmf};
use crate::numeric::NeumaierSum;
use crate::solve;

/// `χ = +1` if the margin is positive, `−1` otherwise (ties included).
pub fn council_votes(margins: &[i64]) -> Vec<i8> {
    margins
        .iter()
        .map(|&s| if s > 0 { 1 } else { -1 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightSource {
    Exact,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    #[serde(rename = "N")]
    pub n_voters: usize,
    pub beta: ExtendedCoupling,
    pub w: f64,
    pub source: WeightSource,
    /// Delta-method variance `υ²` of `√n (ŵ − w)`, when the coupling is finite.
    pub upsilon_sq: Option<f64>,
    /// `√(υ²/n)` for estimated weights.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub groups: Vec<WeightEntry>,
    pub deficit: f64,
}

impl WeightReport {
    pub fn weights(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.w).collect()
    }
}

/// What the deficit needs from one group: `E S²`, `E|S|`, `P(S = 0)`.
struct GroupLaw {
    second: f64,
    abs_first: f64,
    p_zero: f64,
}

impl GroupLaw {
    fn of(pmf: &MagnetizationPmf) -> Self {
        Self {
            second: pmf.second_moment(),
            abs_first: pmf.abs_moment(1).expect("order 1"),
            p_zero: pmf.prob_zero(),
        }
    }
}

fn deficit_from_laws(laws: &[GroupLaw], weights: &[f64]) -> f64 {
    let mut diag = NeumaierSum::default();
    let mut tie = NeumaierSum::default();
    let mut tie_sq = NeumaierSum::default();
    for (law, &w) in laws.iter().zip(weights) {
        diag.add(law.second);
        diag.add(-2.0 * w * law.abs_first);
        diag.add(w * w);
        let a = w * law.p_zero;
        tie.add(a);
        tie_sq.add(a * a);
    }
    // Σ_{λ≠μ} w_λ w_μ P(S_λ=0) P(S_μ=0) = (Σ a)² − Σ a²
    let t = tie.value();
    diag.value() + (t * t - tie_sq.value())
}

fn check_weights(groups: usize, weights: &[f64]) -> Result<()> {
    if groups == 0 {
        return Err(Error::Shape("model has no groups".into()));
    }
    if weights.len() != groups {
        return Err(Error::Shape(format!(
            "{groups} groups but {} weights",
            weights.len()
        )));
    }
    Ok(())
}

/// `E[S̄ − Σ_λ w_λ χ_λ]²`, exact from the per-group laws.
pub fn democracy_deficit(model: &[GroupSpec], weights: &[f64]) -> Result<f64> {
    check_weights(model.len(), weights)?;
    let laws = model
        .iter()
        .enumerate()
        .map(|(i, g)| {
            model::magnetization_pmf(g.n_voters, g.beta)
                .map(|p| GroupLaw::of(&p))
                .map_err(|e| e.in_group(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(deficit_from_laws(&laws, weights))
}

/// [`democracy_deficit`] at extended couplings, as needed for plug-in reports.
pub fn democracy_deficit_extended(
    groups: &[(usize, ExtendedCoupling)],
    weights: &[f64],
) -> Result<f64> {
    check_weights(groups.len(), weights)?;
    let laws = groups
        .iter()
        .enumerate()
        .map(|(i, &(n, b))| {
            Levels::new(n)
                .and_then(|l| l.pmf_extended(b))
                .map(|p| GroupLaw::of(&p))
                .map_err(|e| e.in_group(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(deficit_from_laws(&laws, weights))
}

/// `w_λ = E_{β_λ,N_λ}|S_λ|` for nonnegative couplings.
pub fn optimal_weights(model: &[GroupSpec]) -> Result<WeightReport> {
    if model.is_empty() {
        return Err(Error::Shape("model has no groups".into()));
    }
    let groups = model
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if g.beta < 0.0 {
                return Err(Error::Precondition(format!(
                    "optimal weights need β ≥ 0, got {}",
                    g.beta
                ))
                .in_group(i));
            }
            let entry = || -> Result<WeightEntry> {
                Ok(WeightEntry {
                    n_voters: g.n_voters,
                    beta: ExtendedCoupling::Finite(g.beta),
                    w: model::abs_moment(g.n_voters, g.beta, 1)?,
                    source: WeightSource::Exact,
                    upsilon_sq: Some(weight_variance(g.n_voters, g.beta)?),
                    std_error: None,
                })
            };
            entry().map_err(|e| e.in_group(i))
        })
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = groups.iter().map(|g| g.w).collect();
    let deficit = democracy_deficit(model, &weights)?;
    Ok(WeightReport { groups, deficit })
}

/// `υ² = (E|S|³ − E|S| E S²)² / 𝕍 S²`.
pub fn weight_variance(n_voters: usize, beta: f64) -> Result<f64> {
    let pmf = model::magnetization_pmf(n_voters, beta)?;
    let a1 = pmf.abs_moment(1)?;
    let a3 = pmf.abs_moment(3)?;
    let num = a3 - a1 * pmf.second_moment();
    Ok(num * num / pmf.variance_s2())
}

/// Plug-in weight `ŵ = E_{β̂,N}|S|` from `n` observations.
pub fn estimate_weights(
    n_voters: usize,
    beta_hat: ExtendedCoupling,
    n: u64,
) -> Result<WeightEntry> {
    if n == 0 {
        return Err(Error::Shape("sample size must be at least 1".into()));
    }
    let w = model::abs_moment(n_voters, beta_hat, 1)?;
    let upsilon_sq = beta_hat
        .finite()
        .map(|b| weight_variance(n_voters, b))
        .transpose()?;
    Ok(WeightEntry {
        n_voters,
        beta: beta_hat,
        w,
        source: WeightSource::Estimated,
        upsilon_sq,
        std_error: upsilon_sq.map(|v| (v / n as f64).sqrt()),
    })
}

/// Plug-in weights for every group of an estimate, with the deficit at the
/// estimated couplings.
pub fn estimated_weight_report(report: &EstimateReport) -> Result<WeightReport> {
    let groups = report
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| estimate_weights(g.n_voters, g.beta_hat, report.n).map_err(|e| e.in_group(i)))
        .collect::<Result<Vec<_>>>()?;
    let couplings: Vec<_> = groups.iter().map(|g| (g.n_voters, g.beta)).collect();
    let weights: Vec<f64> = groups.iter().map(|g| g.w).collect();
    let deficit = democracy_deficit_extended(&couplings, &weights)?;
    Ok(WeightReport { groups, deficit })
}

/// `N − E|S|`, accumulated from nonnegative terms.
fn abs_gap(pmf: &MagnetizationPmf) -> f64 {
    let n = pmf.n_voters() as f64;
    pmf.support()
        .zip(pmf.probs())
        .map(|(s, p)| (n - s.unsigned_abs() as f64) * p)
        .collect::<NeumaierSum>()
        .value()
}

/// The extended coupling `b` with `E_{b,N}|S| = y`; `None` outside `[κ, N]`.
pub fn abs_moment_inverse(n_voters: usize, y: f64) -> Result<Option<ExtendedCoupling>> {
    let levels = Levels::new(n_voters)?;
    let n = n_voters as f64;
    let lo = model::kappa(n_voters) as f64;
    if y.is_nan() || y < lo || y > n {
        return Ok(None);
    }
    if y == lo {
        return Ok(Some(ExtendedCoupling::NegInfinity));
    }
    if y == n {
        return Ok(Some(ExtendedCoupling::PosInfinity));
    }
    let pmf = |b: f64| levels.pmf(b).expect("bisection stays finite");
    let beta = if y >= 0.5 * n {
        let target = n - y;
        solve::increasing_zero(|b| target - abs_gap(&pmf(b)), 0.0)
    } else {
        solve::increasing_zero(|b| pmf(b).abs_moment(1).expect("order 1") - y, 0.0)
    };
    Ok(Some(ExtendedCoupling::Finite(beta)))
}

/// `H(y) = J(b)` where `E_{b,N}|S| = y`; `+∞` for unattainable `y`.
pub fn rate_h(ctx: &RateContext, y: f64) -> f64 {
    match abs_moment_inverse(ctx.n_voters(), y).expect("context holds a valid group") {
        Some(b) => rate_j(ctx, b),
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_deficit;

    fn spec(n: usize, beta: f64) -> GroupSpec {
        GroupSpec::new(n, beta).unwrap()
    }

    #[test]
    fn council_vote_examples() {
        assert_eq!(council_votes(&[3, -1]), vec![1, -1]);
        assert_eq!(council_votes(&[0]), vec![-1]);
        assert_eq!(council_votes(&[-5, 5, 0]), vec![-1, 1, -1]);
    }

    #[test]
    fn optimal_weight_examples() {
        let r = optimal_weights(&[spec(2, 0.0)]).unwrap();
        assert!((r.groups[0].w - 1.0).abs() < 1e-15);
        assert_eq!(r.groups[0].source, WeightSource::Exact);
        let r = optimal_weights(&[spec(6, 0.3), spec(6, 0.9)]).unwrap();
        assert!(r.groups[0].w < r.groups[1].w);
        let r = optimal_weights(&[spec(9, 100.0)]).unwrap();
        assert!((r.groups[0].w - 9.0).abs() < 1e-6);
        assert!(matches!(
            optimal_weights(&[spec(3, 0.2), spec(3, -0.1)]),
            Err(Error::Group { index: 1, .. })
        ));
    }

    #[test]
    fn deficit_examples() {
        let model = [spec(4, 0.5), spec(7, 1.1)];
        let want = model::moment_s2(4, 0.5).unwrap() + model::moment_s2(7, 1.1).unwrap();
        assert!((democracy_deficit(&model, &[0.0, 0.0]).unwrap() - want).abs() < 1e-12);
        let d = democracy_deficit(&[spec(3, 0.0)], &[1.5]).unwrap();
        assert!((d - 0.75).abs() < 1e-14);
        assert!(democracy_deficit(&model, &[1.0]).is_err());
    }

    #[test]
    fn deficit_matches_enumeration_with_ties() {
        let (sizes, betas, weights) = ([4, 6], [0.7, -0.4], [1.3, 2.2]);
        let model = [spec(4, 0.7), spec(6, -0.4)];
        let exact = democracy_deficit(&model, &weights).unwrap();
        let brute = brute_force_deficit(sizes, betas, weights).unwrap();
        assert!((exact - brute).abs() < 1e-12 * brute.max(1.0));
    }

    #[test]
    fn grid_minimiser_is_mean_abs_margin() {
        let g = spec(5, 0.6);
        let w_star = model::abs_moment(5, 0.6, 1).unwrap();
        let step = 1e-4;
        let best = (0..=50_000)
            .map(|i| i as f64 * step)
            .min_by(|a, b| {
                let da = democracy_deficit(&[g], &[*a]).unwrap();
                let db = democracy_deficit(&[g], &[*b]).unwrap();
                da.total_cmp(&db)
            })
            .unwrap();
        assert!((best - w_star).abs() <= step);
    }

    #[test]
    fn estimated_weight_examples() {
        let e = estimate_weights(7, ExtendedCoupling::PosInfinity, 100).unwrap();
        assert_eq!(e.w, 7.0);
        assert_eq!(e.upsilon_sq, None);
        let e = estimate_weights(2, ExtendedCoupling::Finite(0.0), 100).unwrap();
        assert!((e.w - 1.0).abs() < 1e-15);
        assert!((e.upsilon_sq.unwrap() - 1.0).abs() < 1e-14);
        assert!((e.std_error.unwrap() - 0.1).abs() < 1e-15);
        let e = estimate_weights(4, ExtendedCoupling::NegInfinity, 100).unwrap();
        assert_eq!(e.w, 0.0);
    }

    #[test]
    fn weight_variance_examples() {
        assert!((weight_variance(2, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((weight_variance(3, 0.0).unwrap() - 0.75).abs() < 1e-14);
        for n in 2..12 {
            for beta in [-3.0, 0.0, 0.5, 4.0] {
                assert!(weight_variance(n, beta).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn rate_h_examples() {
        let ctx = RateContext::new(5, 0.8).unwrap();
        let w = model::abs_moment(5, 0.8, 1).unwrap();
        assert!(rate_h(&ctx, w).abs() < 1e-9);
        assert_eq!(
            rate_h(&ctx, 5.0),
            rate_j(&ctx, ExtendedCoupling::PosInfinity)
        );
        assert_eq!(rate_h(&ctx, 6.0), f64::INFINITY);
        assert_eq!(rate_h(&ctx, 0.5), f64::INFINITY);
        assert!(rate_h(&ctx, w + 0.5) > 0.0);
    }

    #[test]
    fn abs_moment_inverse_round_trips() {
        for n in [2usize, 5, 10, 31] {
            for beta in [-4.0, -1.0, 0.0, 0.7, 3.0, 8.0] {
                let y = model::abs_moment(n, beta, 1).unwrap();
                let b = abs_moment_inverse(n, y).unwrap().unwrap().finite().unwrap();
                assert!(
                    (b - beta).abs() < 1e-6 * beta.abs().max(1.0),
                    "N={n} β={beta}: {b}"
                );
            }
        }
    }
}
