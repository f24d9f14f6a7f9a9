//! Exact two-stage sampling: draw the margin `S` from its law, then place
//! `(N + S)/2` positive votes uniformly at random.
//!
//! # Streams
//!
//! Every (group, observation) pair owns a [`ChaCha8Rng`] seeded with
//! `mix(group_key, t)`, where
//!
//! ```text
//! group_key = mix(mix(mix(seed, N), β.to_bits()), ordinal)
//! ```
//!
//! and `ordinal` counts earlier groups in the model with the same `(N, β)`.
//! A group's draws therefore depend on its own parameters and the seed, not on
//! where it sits in the model, and outputs are independent of thread
//! scheduling. [`mix`] is the SplitMix64 finaliser applied to `a ⊕ splitmix(b)`.
//! Any change to this scheme bumps [`SAMPLER_VERSION`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SufficientSummary;
use crate::model::{GroupSpec, Levels};

pub const SAMPLER_VERSION: u32 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit mixing of two words into a substream key.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Inverse-CDF table for the margin of one group.
#[derive(Debug, Clone)]
pub struct CdfTable {
    n_voters: usize,
    cdf: Vec<f64>,
}

impl CdfTable {
    pub fn new(n_voters: usize, beta: f64) -> Result<Self> {
        let pmf = Levels::new(n_voters)?.pmf(beta)?;
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().expect("at least three levels") = 1.0;
        Ok(Self { n_voters, cdf })
    }

    pub fn n_voters(&self) -> usize {
        self.n_voters
    }

    /// Margin for a uniform `u ∈ [0, 1)`: the smallest level whose CDF exceeds `u`.
    pub fn margin_at(&self, u: f64) -> i64 {
        let k = self.cdf.partition_point(|&c| c <= u).min(self.n_voters);
        2 * k as i64 - self.n_voters as i64
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.margin_at(rng.random::<f64>())
    }
}

/// `n` i.i.d. margins of one group from a caller-owned stream.
pub fn sample_magnetizations<R: Rng + ?Sized>(
    n_voters: usize,
    beta: f64,
    n: usize,
    stream: &mut R,
) -> Result<Vec<i64>> {
    if n == 0 {
        return Err(Error::Shape("sample size must be at least 1".into()));
    }
    let table = CdfTable::new(n_voters, beta)?;
    Ok((0..n).map(|_| table.draw(stream)).collect())
}

/// Writes `N` votes with exactly `(N + s)/2` entries equal to `+1`, positions
/// chosen by a partial Fisher-Yates shuffle.
fn place_votes<R: Rng + ?Sized>(s: i64, out: &mut [i8], rng: &mut R) {
    let n = out.len();
    let positives = ((n as i64 + s) / 2) as usize;
    let mut slots: Vec<usize> = (0..n).collect();
    out.fill(-1);
    for i in 0..positives {
        let j = rng.random_range(i..n);
        slots.swap(i, j);
        out[slots[i]] = 1;
    }
}

fn group_keys(model: &[GroupSpec], seed: u64) -> Vec<u64> {
    model
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let ordinal = model[..i].iter().filter(|h| *h == g).count() as u64;
            mix(mix(mix(seed, g.n_voters as u64), g.beta.to_bits()), ordinal)
        })
        .collect()
}

fn observation_rng(group_key: u64, t: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(group_key, t as u64))
}

/// Sampled observations. `magnetizations[t][λ]` is group `λ`'s margin in
/// observation `t`; `configurations[t]` lists all votes group-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub model: Vec<GroupSpec>,
    pub n: usize,
    pub seed: u64,
    pub version: u32,
    pub magnetizations: Vec<Vec<i64>>,
    pub configurations: Option<Vec<Vec<i8>>>,
}

impl SampleBatch {
    pub fn sizes(&self) -> Vec<usize> {
        self.model.iter().map(|g| g.n_voters).collect()
    }

    /// Margins regrouped as `[λ][t]`.
    pub fn margins_by_group(&self) -> Vec<Vec<i64>> {
        (0..self.model.len())
            .map(|g| self.magnetizations.iter().map(|row| row[g]).collect())
            .collect()
    }

    pub fn summary(&self) -> Result<SufficientSummary> {
        SufficientSummary::from_margins(&self.sizes(), &self.margins_by_group())
    }
}

fn check_model(model: &[GroupSpec], n: usize) -> Result<Vec<CdfTable>> {
    if model.is_empty() {
        return Err(Error::Shape("model has no groups".into()));
    }
    if n == 0 {
        return Err(Error::Shape("sample size must be at least 1".into()));
    }
    model
        .iter()
        .enumerate()
        .map(|(i, g)| CdfTable::new(g.n_voters, g.beta).map_err(|e| e.in_group(i)))
        .collect()
}

fn sample(model: &[GroupSpec], n: usize, seed: u64, with_votes: bool) -> Result<SampleBatch> {
    let tables = check_model(model, n)?;
    let keys = group_keys(model, seed);
    let width: usize = model.iter().map(|g| g.n_voters).sum();
    let rows: Vec<(Vec<i64>, Vec<i8>)> = (0..n)
        .into_par_iter()
        .map(|t| {
            let mut margins = Vec::with_capacity(model.len());
            let mut votes = if with_votes {
                vec![0i8; width]
            } else {
                Vec::new()
            };
            let mut col = 0;
            for (table, &key) in tables.iter().zip(&keys) {
                let mut rng = observation_rng(key, t);
                let s = table.draw(&mut rng);
                if with_votes {
                    let size = table.n_voters();
                    place_votes(s, &mut votes[col..col + size], &mut rng);
                    col += size;
                }
                margins.push(s);
            }
            (margins, votes)
        })
        .collect();
    let (magnetizations, votes): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(SampleBatch {
        model: model.to_vec(),
        n,
        seed,
        version: SAMPLER_VERSION,
        magnetizations,
        configurations: with_votes.then_some(votes),
    })
}

/// Full voting configurations for every group and observation.
pub fn sample_configurations(model: &[GroupSpec], n: usize, seed: u64) -> Result<SampleBatch> {
    sample(model, n, seed, true)
}

/// Margins only; identical to the margins of [`sample_configurations`] for
/// the same arguments.
pub fn sample_margins(model: &[GroupSpec], n: usize, seed: u64) -> Result<SampleBatch> {
    sample(model, n, seed, false)
}
