//! Exact single-group Curie-Weiss quantities.
//!
//! A group of `N` voters casts votes `x_i ∈ {−1, +1}` with probability
//! proportional to `exp(β S² / (2N))`, where `S = Σ x_i` is the voting margin.
//! Every quantity here depends on a configuration only through `S`, so all
//! sums run over the `N + 1` magnetization levels `s_k = 2k − N` weighted by
//! `C(N, k)` instead of over the `2^N` configurations.
//!
//! For moderate `N`, `θ_N(β) = E S²` sits within a few ulps of `N²` once `β`
//! exceeds roughly 40; [`saturation_gap`] gives `N² − E S²` with full relative
//! precision for callers that need to resolve that regime.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, NeumaierSum};
use crate::solve;

/// One group's population size and coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    #[serde(rename = "N")]
    pub n_voters: usize,
    pub beta: f64,
}

impl GroupSpec {
    pub fn new(n_voters: usize, beta: f64) -> Result<Self> {
        check_population(n_voters)?;
        check_finite(beta)?;
        Ok(Self { n_voters, beta })
    }
}

/// A coupling on the compactified line `[−∞, ∞]`.
///
/// Variant order gives the total order `NegInfinity < Finite(_) < PosInfinity`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedCoupling {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedCoupling {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedCoupling::Finite(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedCoupling::Finite(_))
    }

    /// The coupling as an `f64`, with the infinities mapped to `±f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedCoupling::NegInfinity => f64::NEG_INFINITY,
            ExtendedCoupling::Finite(b) => b,
            ExtendedCoupling::PosInfinity => f64::INFINITY,
        }
    }

    /// Total order; panics only if a finite value is NaN.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other)
            .expect("NaN is not a valid coupling")
    }
}

impl From<f64> for ExtendedCoupling {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtendedCoupling::PosInfinity
        } else if x == f64::NEG_INFINITY {
            ExtendedCoupling::NegInfinity
        } else {
            ExtendedCoupling::Finite(x)
        }
    }
}

impl fmt::Display for ExtendedCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedCoupling::NegInfinity => f.write_str("-inf"),
            ExtendedCoupling::Finite(b) => write!(f, "{b}"),
            ExtendedCoupling::PosInfinity => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for ExtendedCoupling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtendedCoupling::PosInfinity),
            "-inf" | "-infinity" => Ok(ExtendedCoupling::NegInfinity),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|b| b.is_finite())
                .map(ExtendedCoupling::Finite)
                .ok_or_else(|| format!("not a coupling: {s:?}")),
        }
    }
}

// JSON has no infinities: finite values are numbers, the two ends are the
// strings "-inf" and "inf".
impl Serialize for ExtendedCoupling {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedCoupling::Finite(b) => serializer.serialize_f64(*b),
            ExtendedCoupling::NegInfinity => serializer.serialize_str("-inf"),
            ExtendedCoupling::PosInfinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedCoupling {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CouplingVisitor;

        impl Visitor<'_> for CouplingVisitor {
            type Value = ExtendedCoupling;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a finite number, \"inf\" or \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Ok(ExtendedCoupling::from(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(ExtendedCoupling::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(ExtendedCoupling::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(CouplingVisitor)
    }
}

/// Minimum achievable `|S|` and the number of configurations attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaInfo {
    pub kappa: u32,
    /// `None` when the count does not fit in a `u128`.
    pub upsilon_cardinality: Option<u128>,
    pub ln_upsilon_cardinality: f64,
}

pub(crate) fn check_population(n_voters: usize) -> Result<()> {
    if n_voters < 2 {
        return Err(Error::InvalidPopulation(n_voters));
    }
    Ok(())
}

pub(crate) fn check_finite(beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::NonFiniteCoupling(beta));
    }
    Ok(())
}

/// `κ` as an integer: 0 for even `N`, 1 for odd.
pub fn kappa(n_voters: usize) -> u32 {
    (n_voters % 2) as u32
}

pub fn kappa_info(n_voters: usize) -> Result<KappaInfo> {
    check_population(n_voters)?;
    let k = kappa(n_voters);
    let positives = (n_voters + k as usize) / 2;
    Ok(KappaInfo {
        kappa: k,
        upsilon_cardinality: binomial_u128(n_voters, positives),
        ln_upsilon_cardinality: ln_binomial(n_voters, positives),
    })
}

fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        // acc * (n - j) / (j + 1) stays integral at every step.
        acc = acc.checked_mul((n - j) as u128)? / (j as u128 + 1);
    }
    Some(acc)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial log-weights for the `N + 1` magnetization levels of one group size.
///
/// Offsets from the central coefficient are accumulated outward with `ln_1p`
/// of the successive ratios, which keeps the bulk of the distribution accurate
/// to a few ulps even for `N` in the tens of thousands; only the additive
/// anchor `ln C(N, ⌊N/2⌋)` goes through log-gamma.
#[derive(Debug, Clone)]
pub struct Levels {
    n_voters: usize,
    ln_binom_anchor: f64,
    ln_binom_offset: Vec<f64>,
}

impl Levels {
    pub fn new(n_voters: usize) -> Result<Self> {
        check_population(n_voters)?;
        let n = n_voters;
        let mid = n / 2;
        let mut offset = vec![0.0; n + 1];
        // C(n, k+1) / C(n, k) = (n - k) / (k + 1)
        for k in mid..n {
            let ratio_m1 = (n as f64 - 2.0 * k as f64 - 1.0) / (k as f64 + 1.0);
            offset[k + 1] = offset[k] + ratio_m1.ln_1p();
        }
        for k in 0..=mid {
            offset[k] = offset[n - k];
        }
        Ok(Self {
            n_voters,
            ln_binom_anchor: ln_binomial(n, mid),
            ln_binom_offset: offset,
        })
    }

    pub fn n_voters(&self) -> usize {
        self.n_voters
    }

    fn magnetization(&self, k: usize) -> f64 {
        2.0 * k as f64 - self.n_voters as f64
    }

    fn log_weights(&self, beta: f64) -> Vec<f64> {
        let scale = beta / (2.0 * self.n_voters as f64);
        self.ln_binom_offset
            .iter()
            .enumerate()
            .map(|(k, &lb)| {
                let s = self.magnetization(k);
                lb + scale * s * s
            })
            .collect()
    }

    pub fn log_partition(&self, beta: f64) -> Result<f64> {
        check_finite(beta)?;
        Ok(self.ln_binom_anchor + log_sum_exp(&self.log_weights(beta)))
    }

    pub fn pmf(&self, beta: f64) -> Result<MagnetizationPmf> {
        check_finite(beta)?;
        let lw = self.log_weights(beta);
        let norm = log_sum_exp(&lw);
        let log_probs: Vec<f64> = lw.iter().map(|w| w - norm).collect();
        Ok(MagnetizationPmf::from_log_probs(self.n_voters, log_probs))
    }

    pub fn pmf_extended(&self, beta: ExtendedCoupling) -> Result<MagnetizationPmf> {
        let n = self.n_voters;
        let half = -std::f64::consts::LN_2;
        match beta {
            ExtendedCoupling::Finite(b) => self.pmf(b),
            // unanimity: S = ±N with equal probability
            ExtendedCoupling::PosInfinity => {
                let mut lp = vec![f64::NEG_INFINITY; n + 1];
                lp[0] = half;
                lp[n] = half;
                Ok(MagnetizationPmf::from_log_probs(n, lp))
            }
            // uniform over the configurations with |S| = κ
            ExtendedCoupling::NegInfinity => {
                let mut lp = vec![f64::NEG_INFINITY; n + 1];
                if n.is_multiple_of(2) {
                    lp[n / 2] = 0.0;
                } else {
                    lp[(n - 1) / 2] = half;
                    lp[n.div_ceil(2)] = half;
                }
                Ok(MagnetizationPmf::from_log_probs(n, lp))
            }
        }
    }
}

/// Exact law of the margin `S` over its `N + 1` achievable values.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationPmf {
    n_voters: usize,
    log_probs: Vec<f64>,
    probs: Vec<f64>,
}

impl MagnetizationPmf {
    fn from_log_probs(n_voters: usize, log_probs: Vec<f64>) -> Self {
        let probs = log_probs.iter().map(|lp| lp.exp()).collect();
        Self {
            n_voters,
            log_probs,
            probs,
        }
    }

    pub fn n_voters(&self) -> usize {
        self.n_voters
    }

    /// Support points `2k − N`, `k = 0..=N`.
    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n_voters as i64;
        (0..=n).map(move |k| 2 * k - n)
    }

    /// Probabilities aligned with [`support`](Self::support).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `P(S = s)`; zero off the support.
    pub fn prob(&self, s: i64) -> f64 {
        let n = self.n_voters as i64;
        if s.abs() > n || (s + n) % 2 != 0 {
            return 0.0;
        }
        self.probs[((s + n) / 2) as usize]
    }

    pub fn prob_zero(&self) -> f64 {
        self.prob(0)
    }

    fn squares(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support()
            .zip(self.probs.iter().copied())
            .map(|(s, p)| ((s * s) as f64, p))
    }

    fn direct_second_moment(&self) -> f64 {
        self.squares()
            .map(|(sq, p)| sq * p)
            .collect::<NeumaierSum>()
            .value()
    }

    /// `N² − E S²`, accumulated from nonnegative terms.
    pub fn saturation_gap(&self) -> f64 {
        let n2 = (self.n_voters * self.n_voters) as f64;
        self.squares()
            .map(|(sq, p)| (n2 - sq) * p)
            .collect::<NeumaierSum>()
            .value()
    }

    /// `E S²`.
    pub fn second_moment(&self) -> f64 {
        let n2 = (self.n_voters * self.n_voters) as f64;
        let gap = self.saturation_gap();
        if gap < 0.5 * n2 {
            n2 - gap
        } else {
            self.direct_second_moment()
        }
    }

    /// `𝕍 S² = E S⁴ − (E S²)²`, evaluated as a centred sum.
    pub fn variance_s2(&self) -> f64 {
        let n2 = (self.n_voters * self.n_voters) as f64;
        let gap = self.saturation_gap();
        let acc: NeumaierSum = if gap < 0.5 * n2 {
            // centre measured from the top to keep the small deviations exact
            self.squares()
                .map(|(sq, p)| {
                    let d = gap - (n2 - sq);
                    p * d * d
                })
                .collect()
        } else {
            let mean = self.direct_second_moment();
            self.squares()
                .map(|(sq, p)| {
                    let d = sq - mean;
                    p * d * d
                })
                .collect()
        };
        acc.value()
    }

    /// `E|S|^order` for `order ∈ {1, 3}`.
    pub fn abs_moment(&self, order: u32) -> Result<f64> {
        if order != 1 && order != 3 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(self
            .support()
            .zip(self.probs.iter().copied())
            .map(|(s, p)| (s.unsigned_abs() as f64).powi(order as i32) * p)
            .collect::<NeumaierSum>()
            .value())
    }

    /// Distinct values of `S²` in ascending order with their log-probabilities.
    pub fn square_law(&self) -> Vec<(f64, f64)> {
        let n = self.n_voters;
        let k0 = n.div_ceil(2);
        (k0..=n)
            .map(|k| {
                let s = (2 * k - n) as f64;
                let lp = if 2 * k == n {
                    self.log_probs[k]
                } else {
                    // P(S = s) + P(S = −s), equal by symmetry in exact arithmetic
                    log_sum_exp(&[self.log_probs[k], self.log_probs[n - k]])
                };
                (s * s, lp)
            })
            .collect()
    }
}

pub fn log_partition(n_voters: usize, beta: f64) -> Result<f64> {
    Levels::new(n_voters)?.log_partition(beta)
}

pub fn magnetization_pmf(n_voters: usize, beta: f64) -> Result<MagnetizationPmf> {
    Levels::new(n_voters)?.pmf(beta)
}

/// `θ_N(β) = E_{β,N} S²`, with `θ_N(−∞) = κ` and `θ_N(∞) = N²`.
pub fn moment_s2(n_voters: usize, beta: impl Into<ExtendedCoupling>) -> Result<f64> {
    Ok(Levels::new(n_voters)?
        .pmf_extended(beta.into())?
        .second_moment())
}

/// `N² − θ_N(β)`.
pub fn saturation_gap(n_voters: usize, beta: impl Into<ExtendedCoupling>) -> Result<f64> {
    Ok(Levels::new(n_voters)?
        .pmf_extended(beta.into())?
        .saturation_gap())
}

/// `𝕍_{β,N} S²`; equals `2N θ_N'(β)`.
pub fn var_s2(n_voters: usize, beta: f64) -> Result<f64> {
    Ok(magnetization_pmf(n_voters, beta)?.variance_s2())
}

/// `E_{β,N} |S|^order` for `order ∈ {1, 3}`, with the limits `N^order` at `+∞`
/// and `κ^order` at `−∞`.
pub fn abs_moment(n_voters: usize, beta: impl Into<ExtendedCoupling>, order: u32) -> Result<f64> {
    if order != 1 && order != 3 {
        return Err(Error::UnsupportedOrder(order));
    }
    Levels::new(n_voters)?
        .pmf_extended(beta.into())?
        .abs_moment(order)
}

/// The unique extended coupling `b` with `θ_N(b) = t`.
///
/// Bisection on the strictly increasing `θ_N`; above `N²/2` the search runs
/// on [`saturation_gap`] against the exactly representable `N² − t`.
pub fn theta_inverse(n_voters: usize, t: f64) -> Result<ExtendedCoupling> {
    let levels = Levels::new(n_voters)?;
    let lo = kappa(n_voters) as f64;
    let n2 = (n_voters * n_voters) as f64;
    if !(lo..=n2).contains(&t) {
        return Err(Error::OutOfRange {
            value: t,
            lo,
            hi: n2,
        });
    }
    if t == lo {
        return Ok(ExtendedCoupling::NegInfinity);
    }
    if t == n2 {
        return Ok(ExtendedCoupling::PosInfinity);
    }
    if t == n_voters as f64 {
        return Ok(ExtendedCoupling::Finite(0.0));
    }
    let pmf = |b: f64| levels.pmf(b).expect("bisection stays finite");
    let beta = if t >= 0.5 * n2 {
        let target_gap = n2 - t;
        solve::increasing_zero(|b| target_gap - pmf(b).saturation_gap(), 0.0)
    } else {
        solve::increasing_zero(|b| pmf(b).second_moment() - t, 0.0)
    };
    Ok(ExtendedCoupling::Finite(beta))
}
