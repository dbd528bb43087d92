//! MPLP wall sampling, PPP power-head sampling over the disk of radius
//! `r_d`, wall-crossing counts, and the blockage-thinned intensities.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// All physical and network constants of the scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    /// Power heads per square meter.
    pub lambda_ph: f64,
    /// Walls per meter, per axis.
    pub lambda_w: f64,
    /// Disk radius in meters.
    pub r_d: f64,
    /// Path-loss exponent.
    pub beta: f64,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Linear per-wall penetration gain; -10 dB per wall is 0.1.
    pub k_pen: f64,
    /// Transmit power in watts.
    pub p_tx: f64,
    /// Signal bandwidth in Hz.
    pub b_c: f64,
    /// Thermal noise variance in watts.
    pub sigma_n2: f64,
    /// RF-to-baseband conversion noise variance in watts.
    pub sigma_c2: f64,
    /// Power splitting ratio, fraction routed to the harvester.
    pub rho: f64,
    /// Harvesting efficiency.
    pub xi: f64,
    /// Transmit antennas.
    pub n_t: u32,
    /// Receive antennas.
    pub n_r: u32,
}

impl SystemParams {
    /// Default profile: 1 W heads at half-spacing 5 m over a 60 m disk,
    /// 200 kHz at 2.1 GHz, 10 dB noise figure, -70 dBm conversion noise,
    /// -10 dB per-wall penetration, rho = 0.5, xi = 0.8, 4x2 MIMO.
    pub fn defaults() -> Self {
        let b_c: f64 = 200e3;
        // -174 dBm/Hz thermal floor + 10 dB noise figure, in watts.
        let sigma_n2 = 1e-3 * 10f64.powf((-174.0 + 10.0 * b_c.log10() + 10.0) / 10.0);
        SystemParams {
            lambda_ph: 1.0 / (std::f64::consts::PI * 5.0 * 5.0),
            lambda_w: 0.05,
            r_d: 60.0,
            beta: 2.5,
            f_c: 2.1e9,
            k_pen: 0.1,
            p_tx: 1.0,
            b_c,
            sigma_n2,
            sigma_c2: 1e-3 * 10f64.powf(-70.0 / 10.0),
            rho: 0.5,
            xi: 0.8,
            n_t: 4,
            n_r: 2,
        }
    }

    /// Set the head density via the half-spacing d_ph: lambda_ph = 1/(pi d^2).
    pub fn with_d_ph(mut self, d_ph: f64) -> Self {
        self.lambda_ph = 1.0 / (std::f64::consts::PI * d_ph * d_ph);
        self
    }

    /// Path-loss constant kappa = (4 pi f_c / c0)^2.
    pub fn kappa(&self) -> f64 {
        let k = 4.0 * std::f64::consts::PI * self.f_c / SPEED_OF_LIGHT;
        k * k
    }

    /// Effective noise at the information decoder: sigma_n^2 + sigma_c^2/(1-rho).
    pub fn sigma_star2(&self) -> f64 {
        self.sigma_n2 + self.sigma_c2 / (1.0 - self.rho)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Param(what.to_string()))
            }
        };
        check(self.lambda_ph > 0.0, "lambda_ph must be > 0")?;
        check(self.lambda_w >= 0.0, "lambda_w must be >= 0")?;
        check(self.r_d > 0.0, "r_d must be > 0")?;
        check(self.beta > 2.0, "beta must be > 2")?;
        check(self.f_c > 0.0, "f_c must be > 0")?;
        check(self.k_pen > 0.0 && self.k_pen < 1.0, "k_pen must be in (0,1)")?;
        check(self.p_tx > 0.0, "p_tx must be > 0")?;
        check(self.b_c > 0.0, "b_c must be > 0")?;
        check(self.sigma_n2 > 0.0, "sigma_n2 must be > 0")?;
        check(self.sigma_c2 > 0.0, "sigma_c2 must be > 0")?;
        check(self.rho > 0.0 && self.rho < 1.0, "rho must be strictly inside (0,1)")?;
        check(self.xi > 0.0 && self.xi <= 1.0, "xi must be in (0,1]")?;
        check(self.n_t >= 1, "n_t must be >= 1")?;
        check(self.n_r >= 1, "n_r must be >= 1")?;
        Ok(())
    }
}

/// One sampled Manhattan grid: wall coordinates on each axis, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallRealization {
    pub x_walls: Vec<f64>,
    pub y_walls: Vec<f64>,
}

/// One sampled power-head set with per-head crossing counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhRealization {
    /// (radius, angle, walls crossed to the origin) per head.
    pub points: Vec<(f64, f64, u32)>,
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Sample the MPLP wall grid on [-r_d - margin, r_d + margin] per axis.
///
/// Each axis gets a Poisson(lambda_w * 2(r_d + margin)) number of wall
/// coordinates, uniform over the interval, independently of the other axis.
pub fn sample_walls<R: Rng + ?Sized>(
    params: &SystemParams,
    margin: f64,
    rng: &mut R,
) -> WallRealization {
    let half = params.r_d + margin;
    let axis = |rng: &mut R| {
        let n = poisson_count(params.lambda_w * 2.0 * half, rng);
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(-half..half)).collect();
        w.sort_by(f64::total_cmp);
        w
    };
    let x_walls = axis(rng);
    let y_walls = axis(rng);
    WallRealization { x_walls, y_walls }
}

/// Sample the PPP of power heads: Poisson(lambda_ph pi r_d^2) points,
/// uniform on the disk (radius by inverse-CDF sqrt scaling).
pub fn sample_phs<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Vec<(f64, f64)> {
    let mean = params.lambda_ph * std::f64::consts::PI * params.r_d * params.r_d;
    let n = poisson_count(mean, rng);
    (0..n)
        .map(|_| {
            let r = params.r_d * rng.gen::<f64>().sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            (r, theta)
        })
        .collect()
}

fn crossings(walls: &[f64], coord: f64) -> u32 {
    // Walls strictly between 0 and coord; binary search on the sorted list.
    let (lo, hi) = if coord >= 0.0 { (0.0, coord) } else { (coord, 0.0) };
    let a = walls.partition_point(|&w| w <= lo);
    let b = walls.partition_point(|&w| w < hi);
    (b - a) as u32
}

/// Number of walls separating the point (x, y) from the origin.
pub fn wall_count(walls: &WallRealization, x: f64, y: f64) -> u32 {
    crossings(&walls.x_walls, x) + crossings(&walls.y_walls, y)
}

/// Attach crossing counts to a sampled head set.
pub fn realize_phs(walls: &WallRealization, phs: &[(f64, f64)]) -> PhRealization {
    PhRealization {
        points: phs
            .iter()
            .map(|&(r, th)| {
                let (x, y) = (r * th.cos(), r * th.sin());
                (r, th, wall_count(walls, x, y))
            })
            .collect(),
    }
}

/// P_N(r, theta): probability that a head at (r, theta) is blocked by
/// exactly `n` walls; Poisson with mean lambda_w r (|cos| + |sin|).
pub fn blockage_prob(params: &SystemParams, n: u32, r: f64, theta: f64) -> f64 {
    let mu = params.lambda_w * r * (theta.cos().abs() + theta.sin().abs());
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    // mu^n e^{-mu} / n! in log space to dodge overflow for large n.
    let ln_p = n as f64 * mu.ln() - mu - crate::specfun::ln_gamma(n as f64 + 1.0);
    ln_p.exp()
}

/// lambda_N(r, theta) = lambda_PH P_N(r, theta).
pub fn thinned_intensity(params: &SystemParams, n: u32, r: f64, theta: f64) -> f64 {
    params.lambda_ph * blockage_prob(params, n, r, theta)
}
