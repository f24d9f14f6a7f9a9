//! Brute-force reference values by enumerating every configuration.
//!
//! Nothing here shares code with the level-aggregated routines in
//! [`model`](crate::model): each sign vector is visited, its margin is taken
//! from a popcount and its Gibbs weight accumulated with compensated
//! summation in a fixed order. Never used on an estimation path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Largest group size the oracle will enumerate (`2^16` configurations).
pub const ORACLE_CAP: usize = 16;

/// Exact sums over all `2^N` configurations of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleMoments {
    pub log_z: f64,
    pub es2: f64,
    pub es4: f64,
    pub eabs_s: f64,
    pub eabs_s3: f64,
}

impl OracleMoments {
    pub fn var_s2(&self) -> f64 {
        self.es4 - self.es2 * self.es2
    }
}

fn check_cap(n_voters: usize) -> Result<()> {
    if n_voters < 2 {
        return Err(Error::InvalidPopulation(n_voters));
    }
    if n_voters > ORACLE_CAP {
        return Err(Error::OracleCap {
            requested: n_voters,
            cap: ORACLE_CAP,
        });
    }
    Ok(())
}

/// Margin of the configuration encoded by the bits of `x` (bit set = +1).
fn margin(x: u64, n_voters: usize) -> i64 {
    2 * i64::from(x.count_ones()) - n_voters as i64
}

pub fn brute_force_moments(n_voters: usize, beta: f64) -> Result<OracleMoments> {
    check_cap(n_voters)?;
    if !beta.is_finite() {
        return Err(Error::NonFiniteCoupling(beta));
    }
    let n = n_voters as f64;
    // largest exponent over all configurations, subtracted before exp
    let shift = (beta * n / 2.0).max(0.0);

    let mut z = NeumaierSum::default();
    let mut s2 = NeumaierSum::default();
    let mut s4 = NeumaierSum::default();
    let mut a1 = NeumaierSum::default();
    let mut a3 = NeumaierSum::default();
    for x in 0..(1u64 << n_voters) {
        let s = margin(x, n_voters) as f64;
        let w = (beta * s * s / (2.0 * n) - shift).exp();
        z.add(w);
        s2.add(w * s * s);
        s4.add(w * s * s * s * s);
        a1.add(w * s.abs());
        a3.add(w * s.abs().powi(3));
    }
    let z = z.value();
    Ok(OracleMoments {
        log_z: shift + z.ln(),
        es2: s2.value() / z,
        es4: s4.value() / z,
        eabs_s: a1.value() / z,
        eabs_s3: a3.value() / z,
    })
}

/// Democracy deficit `E[S̄ − Σ w_λ χ_λ]²` by enumerating the joint
/// configuration space of two groups.
pub fn brute_force_deficit(sizes: [usize; 2], betas: [f64; 2], weights: [f64; 2]) -> Result<f64> {
    check_cap(sizes[0])?;
    check_cap(sizes[1])?;
    let total = sizes[0] + sizes[1];
    if total > 2 * ORACLE_CAP {
        return Err(Error::OracleCap {
            requested: total,
            cap: 2 * ORACLE_CAP,
        });
    }
    let mask0 = (1u64 << sizes[0]) - 1;
    let shift: f64 = (0..2)
        .map(|g| (betas[g] * sizes[g] as f64 / 2.0).max(0.0))
        .sum();
    let mut z = NeumaierSum::default();
    let mut acc = NeumaierSum::default();
    for x in 0..(1u64 << total) {
        let s = [margin(x & mask0, sizes[0]), margin(x >> sizes[0], sizes[1])];
        let mut energy = -shift;
        let mut gap = 0.0;
        for g in 0..2 {
            let sg = s[g] as f64;
            energy += betas[g] * sg * sg / (2.0 * sizes[g] as f64);
            let council = if s[g] > 0 { 1.0 } else { -1.0 };
            gap += sg - weights[g] * council;
        }
        let w = energy.exp();
        z.add(w);
        acc.add(w * gap * gap);
    }
    Ok(acc.value() / z.value())
}
