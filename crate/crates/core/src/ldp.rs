//! Cumulant generating function of `S²`, its Legendre transform, and the
//! exponential tail bounds built from them.
//!
//! All laws are taken under the true coupling held by a [`RateContext`]. The
//! entropy function `Λ*` is finite on `[κ², N²]`; at the two ends it equals
//! `−ln P(S² = end)`, the limit of `x·t − Λ(t)` as `t → ∓∞`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, check_finite, ExtendedCoupling, GroupSpec, Levels, MagnetizationPmf};
use crate::numeric::{log_sum_exp, NeumaierSum};
use crate::solve;

/// Stopping tolerance on `|Λ'(t) − x|` in the Legendre maximiser.
pub const LEGENDRE_TOLERANCE: f64 = 1e-10;

/// Law of `S²` under a fixed `(N, β)`, cached for repeated rate evaluations.
#[derive(Debug, Clone)]
pub struct RateContext {
    n_voters: usize,
    beta: f64,
    pmf: MagnetizationPmf,
    square_values: Vec<f64>,
    square_log_probs: Vec<f64>,
}

impl RateContext {
    pub fn new(n_voters: usize, beta: f64) -> Result<Self> {
        check_finite(beta)?;
        let pmf = Levels::new(n_voters)?.pmf(beta)?;
        let (square_values, square_log_probs) = pmf.square_law().into_iter().unzip();
        Ok(Self {
            n_voters,
            beta,
            pmf,
            square_values,
            square_log_probs,
        })
    }

    pub fn from_spec(spec: &GroupSpec) -> Result<Self> {
        Self::new(spec.n_voters, spec.beta)
    }

    pub fn n_voters(&self) -> usize {
        self.n_voters
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn pmf(&self) -> &MagnetizationPmf {
        &self.pmf
    }

    /// `E S²` under the context's coupling.
    pub fn mean_s2(&self) -> f64 {
        self.pmf.second_moment()
    }

    fn lowest(&self) -> (f64, f64) {
        (self.square_values[0], self.square_log_probs[0])
    }

    fn highest(&self) -> (f64, f64) {
        let last = self.square_values.len() - 1;
        (self.square_values[last], self.square_log_probs[last])
    }

    /// `ln E exp(t (S² − x))`.
    fn shifted_cgf(&self, t: f64, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .square_values
            .iter()
            .zip(&self.square_log_probs)
            .map(|(y, lp)| lp + t * (y - x))
            .collect();
        log_sum_exp(&terms)
    }

    /// `Λ'(t) − x`: mean of `S² − x` under the law tilted by `exp(t S²)`.
    fn tilted_excess(&self, t: f64, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .square_values
            .iter()
            .zip(&self.square_log_probs)
            .map(|(y, lp)| lp + t * (y - x))
            .collect();
        let norm = log_sum_exp(&terms);
        self.square_values
            .iter()
            .zip(&terms)
            .map(|(y, w)| (y - x) * (w - norm).exp())
            .collect::<NeumaierSum>()
            .value()
    }
}

/// `Λ_{S²}(t) = ln E exp(t S²)`.
pub fn cgf_s2(ctx: &RateContext, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    ctx.shifted_cgf(t, 0.0)
}

/// `Λ'_{S²}(t)`, the mean of the exponentially tilted law.
pub fn cgf_s2_derivative(ctx: &RateContext, t: f64) -> f64 {
    ctx.tilted_excess(t, 0.0)
}

/// `Λ*_{S²}(x) = sup_t {x t − Λ(t)}`; `+∞` outside `[κ², N²]`.
pub fn entropy_s2(ctx: &RateContext, x: f64) -> f64 {
    let (lo, lp_lo) = ctx.lowest();
    let (hi, lp_hi) = ctx.highest();
    if x.is_nan() || x < lo || x > hi {
        return f64::INFINITY;
    }
    if x == lo {
        return -lp_lo;
    }
    if x == hi {
        return -lp_hi;
    }
    let t = solve::increasing_zero(|t| ctx.tilted_excess(t, x), LEGENDRE_TOLERANCE);
    // x t − Λ(t) = −ln E exp(t (S² − x)); the sup is never below its t = 0 value
    (-ctx.shifted_cgf(t, x)).max(0.0)
}

/// `δ = min{Λ*(N), Λ*(N²)}`, the exponential rate of `P{T ∉ [N, N²)}`.
pub fn delta_atypical(ctx: &RateContext) -> Result<f64> {
    if ctx.beta <= 0.0 {
        return Err(Error::Precondition(format!(
            "atypicality rate needs β > 0, got {}",
            ctx.beta
        )));
    }
    let n = ctx.n_voters as f64;
    Ok(entropy_s2(ctx, n).min(entropy_s2(ctx, n * n)))
}

/// `δ̄ = Σ_λ δ_λ`.
pub fn delta_bar(model: &[GroupSpec]) -> Result<f64> {
    if model.is_empty() {
        return Err(Error::Shape("model has no groups".into()));
    }
    model
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            RateContext::from_spec(spec)
                .and_then(|ctx| delta_atypical(&ctx))
                .map_err(|e| e.in_group(i))
        })
        .sum()
}

/// `J(y) = Λ*(θ_N(y))`, the rate function of `β̂`.
pub fn rate_j(ctx: &RateContext, y: ExtendedCoupling) -> f64 {
    match y {
        ExtendedCoupling::NegInfinity => -ctx.lowest().1,
        ExtendedCoupling::PosInfinity => -ctx.highest().1,
        ExtendedCoupling::Finite(b) => {
            let theta = ctx.pmf_at(b).second_moment();
            entropy_s2(ctx, theta)
        }
    }
}

impl RateContext {
    fn pmf_at(&self, beta: f64) -> MagnetizationPmf {
        if beta == self.beta {
            return self.pmf.clone();
        }
        model::magnetization_pmf(self.n_voters, beta).expect("finite coupling on a valid group")
    }
}

/// `𝐉(y) = Σ_λ J_λ(y_λ)`.
pub fn rate_j_multi(contexts: &[RateContext], ys: &[ExtendedCoupling]) -> Result<f64> {
    if contexts.len() != ys.len() {
        return Err(Error::Shape(format!(
            "{} groups but {} couplings",
            contexts.len(),
            ys.len()
        )));
    }
    Ok(contexts.iter().zip(ys).map(|(c, &y)| rate_j(c, y)).sum())
}

/// Closed interval `[lo, hi]` of extended couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingInterval {
    pub lo: ExtendedCoupling,
    pub hi: ExtendedCoupling,
}

impl CouplingInterval {
    pub fn new(lo: ExtendedCoupling, hi: ExtendedCoupling) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidSet(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    fn contains(&self, b: f64) -> bool {
        let b = ExtendedCoupling::Finite(b);
        self.lo <= b && b <= self.hi
    }
}

impl std::str::FromStr for CouplingInterval {
    type Err = Error;

    /// Parses `lo:hi`, e.g. `1.5:inf`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSet(format!("expected lo:hi, got {s:?}")))?;
        let lo = lo.parse().map_err(Error::InvalidSet)?;
        let hi = hi.parse().map_err(Error::InvalidSet)?;
        CouplingInterval::new(lo, hi)
    }
}

/// `inf_{y ∈ K} J(y)` for a finite union of closed intervals avoiding `β`.
///
/// `J` decreases up to `β` and increases after it, so each interval
/// contributes its endpoint nearest to `β`.
pub fn inf_rate_j(ctx: &RateContext, set: &[CouplingInterval]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidSet("empty set".into()));
    }
    let beta = ExtendedCoupling::Finite(ctx.beta);
    let mut best = f64::INFINITY;
    for iv in set {
        if iv.contains(ctx.beta) {
            return Err(Error::InvalidSet(format!(
                "[{}, {}] contains the true coupling {}",
                iv.lo, iv.hi, ctx.beta
            )));
        }
        let nearest = if iv.hi < beta { iv.hi } else { iv.lo };
        best = best.min(rate_j(ctx, nearest));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailKind {
    /// `P{T ∉ [N, N²)} ≤ 2 exp(−δ n)`, single group.
    AtypicalT,
    /// `P{β̂ ∉ [0, ∞)^M} ≤ 2^M exp(−δ̄ n)`.
    AtypicalBetaHat,
    /// `P{β̂ ∈ K₁ × … × K_M} ≤ 2^M exp(−n Σ inf_{K_λ} J_λ)`.
    ClosedSetK,
}

/// The event whose probability is bounded.
#[derive(Debug, Clone, PartialEq)]
pub enum TailEvent {
    AtypicalT,
    AtypicalBetaHat,
    /// One union of intervals per group.
    ClosedSet(Vec<Vec<CouplingInterval>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub kind: TailKind,
    pub delta: f64,
    pub n: u64,
    pub groups: usize,
    pub bound: f64,
    pub ln_bound: f64,
}

impl TailBound {
    fn new(kind: TailKind, delta: f64, n: u64, groups: usize) -> Self {
        let ln_bound = groups as f64 * std::f64::consts::LN_2 - delta * n as f64;
        Self {
            kind,
            delta,
            n,
            groups,
            bound: ln_bound.exp(),
            ln_bound,
        }
    }
}

pub fn tail_bound(model: &[RateContext], n: u64, event: &TailEvent) -> Result<TailBound> {
    if model.is_empty() {
        return Err(Error::Shape("model has no groups".into()));
    }
    let m = model.len();
    match event {
        TailEvent::AtypicalT => {
            if m != 1 {
                return Err(Error::Shape(format!(
                    "atypical-T bound is per group, got {m} groups"
                )));
            }
            let delta = delta_atypical(&model[0])?;
            Ok(TailBound::new(TailKind::AtypicalT, delta, n, 1))
        }
        TailEvent::AtypicalBetaHat => {
            let delta = model
                .iter()
                .enumerate()
                .map(|(i, ctx)| delta_atypical(ctx).map_err(|e| e.in_group(i)))
                .sum::<Result<f64>>()?;
            Ok(TailBound::new(TailKind::AtypicalBetaHat, delta, n, m))
        }
        TailEvent::ClosedSet(sets) => {
            if sets.len() != m {
                return Err(Error::Shape(format!(
                    "{m} groups but {} interval sets",
                    sets.len()
                )));
            }
            let delta = model
                .iter()
                .zip(sets)
                .enumerate()
                .map(|(i, (ctx, set))| inf_rate_j(ctx, set).map_err(|e| e.in_group(i)))
                .sum::<Result<f64>>()?;
            Ok(TailBound::new(TailKind::ClosedSetK, delta, n, m))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn ctx(n: usize, beta: f64) -> RateContext {
        RateContext::new(n, beta).unwrap()
    }

    #[test]
    fn cgf_examples() {
        let c = ctx(2, 0.0);
        assert_eq!(cgf_s2(&c, 0.0), 0.0);
        for t in [-1.5f64, -0.1, 0.3, 2.0] {
            let want = (0.5 + 0.5 * (4.0 * t).exp()).ln();
            assert!((cgf_s2(&c, t) - want).abs() < 1e-14 * want.abs().max(1.0));
        }
        let c = ctx(7, 0.6);
        let h = 1e-6;
        let fd = (cgf_s2(&c, h) - cgf_s2(&c, -h)) / (2.0 * h);
        assert!((fd - c.mean_s2()).abs() < 1e-6 * c.mean_s2());
        assert!((cgf_s2_derivative(&c, 0.0) - c.mean_s2()).abs() < 1e-12 * c.mean_s2());
    }

    #[test]
    fn entropy_examples() {
        let c = ctx(5, 0.7);
        assert!(entropy_s2(&c, c.mean_s2()).abs() < 1e-9);
        assert!((entropy_s2(&ctx(2, 0.0), 4.0) - LN_2).abs() < 1e-15);
        assert!((entropy_s2(&ctx(2, 0.0), 0.0) - LN_2).abs() < 1e-15);
        assert_eq!(entropy_s2(&ctx(3, 1.0), 10.0), f64::INFINITY);
        assert_eq!(entropy_s2(&ctx(3, 1.0), 0.5), f64::INFINITY);
        // mpmath reference, 40 digits
        assert!((entropy_s2(&ctx(6, 0.4), 10.0) - 0.008_447_591_993_386_271).abs() < 1e-12);
    }

    #[test]
    fn delta_examples() {
        // mpmath reference values
        let d = delta_atypical(&ctx(2, 1.0)).unwrap();
        assert!((d - 0.120_114_506_958_277_52).abs() < 1e-11);
        let d = delta_atypical(&ctx(3, 0.5)).unwrap();
        assert!((d - 0.045_968_674_501_700_96).abs() < 1e-11);
        for beta in [0.25, 0.5, 1.0, 2.0] {
            assert!(delta_atypical(&ctx(6, beta)).unwrap() > 0.0);
        }
        assert!(matches!(
            delta_atypical(&ctx(6, 0.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn delta_bar_sums_groups() {
        let a = GroupSpec::new(4, 0.8).unwrap();
        let b = GroupSpec::new(7, 1.3).unwrap();
        let da = delta_atypical(&RateContext::from_spec(&a).unwrap()).unwrap();
        let db = delta_atypical(&RateContext::from_spec(&b).unwrap()).unwrap();
        assert_eq!(delta_bar(&[a]).unwrap(), da);
        assert!((delta_bar(&[a, a]).unwrap() - 2.0 * da).abs() < 1e-15);
        assert!((delta_bar(&[a, b]).unwrap() - (da + db)).abs() < 1e-12);
        let neg = GroupSpec::new(4, -0.1).unwrap();
        assert!(matches!(
            delta_bar(&[a, neg]),
            Err(Error::Group { index: 1, .. })
        ));
    }

    #[test]
    fn rate_j_examples() {
        let c = ctx(3, 1.0);
        assert!(rate_j(&c, ExtendedCoupling::Finite(1.0)).abs() < 1e-9);
        let top = rate_j(&c, ExtendedCoupling::PosInfinity);
        assert!((top + c.pmf().prob(3).mul_add(2.0, 0.0).ln()).abs() < 1e-14);
        let (y1, y2) = (
            ExtendedCoupling::Finite(-0.5),
            ExtendedCoupling::Finite(0.4),
        );
        let (j1, j2) = (rate_j(&c, y1), rate_j(&c, y2));
        assert!(j1 > j2 && j2 > 0.0);
        let j = rate_j(&c, ExtendedCoupling::Finite(1.5));
        assert!((j - 0.049_394_428_633_731_86).abs() < 1e-11);
    }

    #[test]
    fn tail_bound_examples() {
        let b = tail_bound(&[ctx(5, 0.8)], 0, &TailEvent::AtypicalT).unwrap();
        assert_eq!(b.bound, 2.0);
        let b = tail_bound(&[ctx(5, 0.8), ctx(6, 1.1)], 0, &TailEvent::AtypicalBetaHat).unwrap();
        assert_eq!(b.bound, 4.0);
        let set = vec![vec![CouplingInterval::new(
            ExtendedCoupling::Finite(1.5),
            ExtendedCoupling::PosInfinity,
        )
        .unwrap()]];
        let b = tail_bound(&[ctx(3, 1.0)], 50, &TailEvent::ClosedSet(set)).unwrap();
        assert!((b.bound - 0.169_216_849_890_573_5).abs() < 1e-10);

        let bad = vec![vec!["0.5:2".parse::<CouplingInterval>().unwrap()]];
        assert!(matches!(
            tail_bound(&[ctx(3, 1.0)], 10, &TailEvent::ClosedSet(bad)),
            Err(Error::Group { index: 0, .. })
        ));
        assert!(matches!(
            tail_bound(&[ctx(3, 1.0), ctx(3, 1.0)], 10, &TailEvent::AtypicalT),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn set_nearest_endpoint() {
        let c = ctx(4, 0.9);
        let left: CouplingInterval = "-inf:0.2".parse().unwrap();
        let right: CouplingInterval = "1.4:3".parse().unwrap();
        let inf = inf_rate_j(&c, &[left, right]).unwrap();
        let want = rate_j(&c, ExtendedCoupling::Finite(0.2))
            .min(rate_j(&c, ExtendedCoupling::Finite(1.4)));
        assert_eq!(inf, want);
        assert!("3:1".parse::<CouplingInterval>().is_err());
    }

    #[test]
    fn bound_decreases_in_n() {
        let c = [ctx(6, 1.0)];
        let mut prev = f64::INFINITY;
        for n in [0, 1, 5, 20, 100] {
            let b = tail_bound(&c, n, &TailEvent::AtypicalT).unwrap().bound;
            assert!(b < prev && b > 0.0 && b <= 2.0);
            prev = b;
        }
    }
}
