//! End-to-end simulation of the instantaneous rate/harvested-power pair over
//! joint wall/PH/fading realizations, plus the empirical estimators that
//! cross-validate the analytical route: the minimum-loss CDF, conditional
//! interference CDFs, and the joint rate-energy CCDF.
//!
//! Replications are independent given distinct random streams: each one runs
//! on its own ChaCha stream derived from (seed, index), so the parallel and
//! sequential batch runners produce bit-identical output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{path_loss, sample_fading, sample_mimo_gain};
use crate::error::{Error, Result};
use crate::geometry::{
    realize_phs, sample_phs, sample_walls, PhRealization, SystemParams, WallRealization,
};

/// One complete network draw with its link-level outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Replication {
    pub walls: WallRealization,
    pub phs: PhRealization,
    /// Index of the minimum-path-loss head; `None` on a coverage void.
    pub serving_index: Option<usize>,
    /// Serving attenuation; +infinity on a coverage void.
    pub l0: f64,
    /// Serving beamforming gain.
    pub g0: f64,
    /// Normalized multi-user interference, sum of h/l over non-serving heads.
    pub i_mu: f64,
    /// Instantaneous information rate in bits/s.
    pub rate: f64,
    /// Harvested power in watts.
    pub q_harv: f64,
}

/// Rate and harvested power from the link-level quantities:
///
///   R = B_c log2(1 + (P g0/l0) / (P i_mu + sigma_n^2 + sigma_c^2/(1-rho))),
///   Q = rho xi P (g0/l0 + i_mu).
pub fn rate_and_power(params: &SystemParams, g0: f64, l0: f64, i_mu: f64) -> (f64, f64) {
    let p = params.p_tx;
    let sinr = (p * g0 / l0) / (p * i_mu + params.sigma_star2());
    let rate = params.b_c * (1.0 + sinr).log2();
    let q_harv = params.rho * params.xi * p * (g0 / l0 + i_mu);
    (rate, q_harv)
}

/// SplitMix64 finalizer; decorrelates per-replication stream seeds.
fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw one network realization and evaluate the receiver at the origin.
///
/// Samples walls and heads, associates with the minimum-path-loss head
/// (ties broken by lowest index), draws the MIMO gain for the serving link
/// and a scalar unit-exponential gain per interferer, and evaluates the
/// rate/power pair. A draw with no heads is a coverage void: R = Q = 0.
pub fn run_replication<R: Rng + ?Sized>(
    params: &SystemParams,
    rng: &mut R,
) -> Result<Replication> {
    let walls = sample_walls(params, 0.0, rng);
    let heads = sample_phs(params, rng);
    let phs = realize_phs(&walls, &heads);
    if phs.points.is_empty() {
        return Ok(Replication {
            walls,
            phs,
            serving_index: None,
            l0: f64::INFINITY,
            g0: 0.0,
            i_mu: 0.0,
            rate: 0.0,
            q_harv: 0.0,
        });
    }
    let losses: Vec<f64> = phs
        .points
        .iter()
        .map(|&(r, _, n)| path_loss(params, r, n))
        .collect::<Result<_>>()?;
    let mut serving = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[serving] {
            serving = i;
        }
    }
    let l0 = losses[serving];
    let g0 = sample_mimo_gain(params.n_t, params.n_r, rng);
    let mut i_mu = 0.0;
    for (i, &l) in losses.iter().enumerate() {
        if i == serving {
            continue;
        }
        let h = sample_fading(rng);
        if l > l0 {
            i_mu += h / l;
        }
    }
    let (rate, q_harv) = rate_and_power(params, g0, l0, i_mu);
    Ok(Replication {
        walls,
        phs,
        serving_index: Some(serving),
        l0,
        g0,
        i_mu,
        rate,
        q_harv,
    })
}

fn replication_at(params: &SystemParams, seed: u64, index: usize) -> Result<Replication> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, index as u64));
    run_replication(params, &mut rng)
}

/// Sequential batch runner; the reference aggregation order.
pub fn run_batch_sequential(
    params: &SystemParams,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<Replication>> {
    params.validate()?;
    (0..n_reps).map(|i| replication_at(params, seed, i)).collect()
}

/// Batch runner; data-parallel over replications when the `parallel`
/// feature is enabled, and bit-identical to [`run_batch_sequential`]
/// either way because every replication owns its stream.
pub fn run_batch(params: &SystemParams, n_reps: usize, seed: u64) -> Result<Vec<Replication>> {
    params.validate()?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_reps)
            .into_par_iter()
            .map(|i| replication_at(params, seed, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_reps).map(|i| replication_at(params, seed, i)).collect()
    }
}

/// Estimate the joint CCDF Pr{R >= r_star, Q >= q_star} over `n_reps`
/// replications. Returns the point estimate and the normal-approximation
/// 95% half-width sqrt(p(1-p)/n) * 1.96.
pub fn estimate_jccdf(
    params: &SystemParams,
    r_star: f64,
    q_star: f64,
    n_reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_reps < 100 {
        return Err(Error::InsufficientSamples {
            got: n_reps,
            need: 100,
        });
    }
    let hits = run_batch(params, n_reps, seed)?
        .iter()
        .filter(|rep| rep.rate >= r_star && rep.q_harv >= q_star)
        .count();
    let p = hits as f64 / n_reps as f64;
    let half_width = 1.96 * (p * (1.0 - p) / n_reps as f64).sqrt();
    Ok((p, half_width))
}

/// Sorted step function (x_i, F(x_i)); non-finite draws count in the
/// denominator but produce no grid point, so the last step stays below 1
/// when voids occur.
fn ecdf(mut xs: Vec<f64>, denom: usize) -> Vec<(f64, f64)> {
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x, (i + 1) as f64 / denom as f64))
        .collect()
}

/// Evaluate an [`ecdf`] step function at x.
pub fn step_cdf(grid: &[(f64, f64)], x: f64) -> f64 {
    let k = grid.partition_point(|&(xi, _)| xi <= x);
    if k == 0 {
        0.0
    } else {
        grid[k - 1].1
    }
}

/// Empirical CDF of the serving attenuation over `n_reps` replications;
/// coverage voids contribute l0 = +infinity.
pub fn empirical_min_loss_cdf(
    params: &SystemParams,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if n_reps < 100 {
        return Err(Error::InsufficientSamples {
            got: n_reps,
            need: 100,
        });
    }
    let l0s: Vec<f64> = run_batch(params, n_reps, seed)?
        .iter()
        .map(|rep| rep.l0)
        .collect();
    Ok(ecdf(l0s, n_reps))
}

/// Empirical CDF of the normalized interference conditioned on the serving
/// attenuation falling in `l0_bin = (low, high)`. Fails unless at least 500
/// replications land in the bin; widen the bin or raise `n_reps` otherwise.
pub fn stratified_interference_cdf(
    params: &SystemParams,
    l0_bin: (f64, f64),
    n_reps: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let (low, high) = l0_bin;
    if !(low < high) {
        return Err(Error::Param(format!(
            "l0_bin must satisfy low < high, got ({low}, {high})"
        )));
    }
    let in_bin: Vec<f64> = run_batch(params, n_reps, seed)?
        .iter()
        .filter(|rep| rep.l0 >= low && rep.l0 < high)
        .map(|rep| rep.i_mu)
        .collect();
    if in_bin.len() < 500 {
        return Err(Error::InsufficientSamples {
            got: in_bin.len(),
            need: 500,
        });
    }
    let denom = in_bin.len();
    Ok(ecdf(in_bin, denom))
}

/// Serialize replications as JSON lines, one record per line.
pub fn to_jsonl(reps: &[Replication]) -> String {
    let mut out = String::new();
    for rep in reps {
        out.push_str(&serde_json::to_string(rep).expect("replication serializes"));
        out.push('\n');
    }
    out
}
