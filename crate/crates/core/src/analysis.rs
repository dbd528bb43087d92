//! Analytic engine: blockage-thinned path-loss intensities, the conditional
//! interference characteristic function, Gil-Pelaez inversion, and the joint
//! rate-energy CCDF.
//!
//! Everything here is deterministic; the Monte Carlo counterpart lives in
//! [`crate::montecarlo`]. The wall-count populations are indexed by `n`
//! starting at zero (line-of-sight) and truncated at a Poisson tail bound.

use std::f64::consts::PI;

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::channel::{gain_pdf_coeffs, GainPdfCoefficients};
use crate::error::{Error, Result};
use crate::geometry::SystemParams;
use crate::quad::{self, QuadControl};
use crate::specfun::{hyp2f1_chi, hyp2f1_interference, ln_gamma, SeriesControl};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Survival probability below which the loss support is considered exhausted.
const SUPPORT_TAIL: f64 = 1e-8;

/// chi_eta(lambda_w) = lambda_w^eta * chi_factor(eta); the bracket is the
/// angular moment of |cos| + |sin| over the quadrant and does not depend on
/// the wall density.
pub fn chi_factor(eta: u32) -> Result<f64> {
    let e = eta as f64;
    let even = (0.5 * e * 2f64.ln() + 0.5 * PI.ln() + ln_gamma((e + 1.0) / 2.0)
        - ln_gamma((e + 2.0) / 2.0))
    .exp();
    let f = hyp2f1_chi(eta)?;
    Ok(even - std::f64::consts::SQRT_2 * f / (e + 1.0))
}

/// chi_eta(lambda_w), the eta-th wall-crossing moment of the MPLP.
pub fn chi(eta: u32, lambda_w: f64) -> Result<f64> {
    if lambda_w < 0.0 {
        return Err(Error::Domain(format!("lambda_w = {lambda_w} must be >= 0")));
    }
    Ok(lambda_w.powi(eta as i32) * chi_factor(eta)?)
}

/// Smallest n such that a Poisson(mu) variable exceeds n with probability
/// below `tol`.
fn poisson_n_max(mu: f64, tol: f64) -> u32 {
    if mu <= 0.0 {
        return 0;
    }
    let mut pmf = (-mu).exp();
    let mut cdf = pmf;
    let mut n = 0u32;
    while 1.0 - cdf > tol && n < 500 {
        n += 1;
        pmf *= mu / n as f64;
        cdf += pmf;
    }
    n
}

/// Truncation and integration controls shared by the analytic operations.
#[derive(Debug, Clone)]
pub struct TruncationPolicy {
    /// Largest wall-count population kept in sums and products.
    pub n_max: u32,
    /// Relative size under which three consecutive eta-series terms stop the
    /// series.
    pub eta_tol: f64,
    /// Hard cap on eta-series length before a truncation error.
    pub eta_cap: usize,
    /// Controls for the hypergeometric series.
    pub series: SeriesControl,
    /// Controls for adaptive quadrature panels.
    pub quad: QuadControl,
    /// Frequency cap for half-line inversion integrals.
    pub omega_max: f64,
    /// |CF| level regarded as fully decayed.
    pub cf_tol: f64,
}

impl TruncationPolicy {
    /// Derive the population truncation from the worst-case crossing mean
    /// 2 lambda_w r_d, keeping the Poisson tail below 1e-8.
    pub fn for_params(params: &SystemParams) -> Self {
        TruncationPolicy {
            n_max: poisson_n_max(2.0 * params.lambda_w * params.r_d, 1e-8),
            eta_tol: 1e-10,
            eta_cap: 400,
            series: SeriesControl::default(),
            quad: QuadControl {
                abs_tol: 1e-10,
                rel_tol: 1e-8,
                max_panels: 1 << 14,
            },
            omega_max: 1e9,
            cf_tol: 1e-8,
        }
    }
}

/// Quantities derived from a (rate, harvested power) demand pair.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioDerived {
    /// Demanded rate in bits/s.
    pub r_star: f64,
    /// Demanded harvested power in watts.
    pub q_star: f64,
    /// Demand normalized by the harvester chain, q_star / (rho xi).
    pub q_norm: f64,
    /// Inverse SINR demand, 1 / (2^{r_star/b_c} - 1).
    pub gamma: f64,
    /// Decoder-side noise, sigma_n^2 + sigma_c^2 / (1 - rho).
    pub sigma_star2: f64,
    /// Threshold power (q_norm + sigma_star2) / (gamma + 1).
    pub t_star: f64,
}

impl ScenarioDerived {
    pub fn new(params: &SystemParams, r_star: f64, q_star: f64) -> Result<Self> {
        if !(r_star > 0.0) || !r_star.is_finite() {
            return Err(Error::Domain(format!("r_star = {r_star} must be > 0")));
        }
        if !(q_star > 0.0) || !q_star.is_finite() {
            return Err(Error::Domain(format!("q_star = {q_star} must be > 0")));
        }
        let gamma = 1.0 / ((r_star / params.b_c).exp2() - 1.0);
        let q_norm = q_star / (params.rho * params.xi);
        let sigma_star2 = params.sigma_star2();
        Ok(ScenarioDerived {
            r_star,
            q_star,
            q_norm,
            gamma,
            sigma_star2,
            t_star: (q_norm + sigma_star2) / (gamma + 1.0),
        })
    }
}

/// Cached per-eta piece of the scaled Delta evaluation. Both variants depend
/// on (omega, l0) only through j omega / l0, shared by every population.
#[derive(Clone, Copy)]
enum F1 {
    /// 1 - 2F1(1, -v; 1-v; j omega / l0), usable directly (|z| < 2).
    Direct(Complex64),
    /// 1 + v sum_{m>=1} (l0 / (j omega))^m / (v + m); the unbounded leading
    /// term of the 1/z transformation is folded into the scaled form by the
    /// caller (|z| >= 2).
    TailS(Complex64),
}

/// Precomputed analytic model for one parameter set.
///
/// Construction freezes the chi moments, the per-population eta-series
/// coefficients (normalized by r_d^{eta+2} so running terms stay O(1)), the
/// loss thresholds, the serving-gain density expansion, and the effective
/// upper end of the minimum-loss support.
pub struct Model {
    params: SystemParams,
    policy: TruncationPolicy,
    kappa: f64,
    /// k_pen^n per population.
    k_pow: Vec<f64>,
    /// alpha_th[n] = r_d^beta kappa / k_pen^n, the largest loss population n
    /// can produce inside the disk.
    alpha_th: Vec<f64>,
    /// c_r[n][i]: coefficient of the (eta = n + i)-th term of the intensity
    /// series, premultiplied by r_d^{eta+2}.
    c_r: Vec<Vec<f64>>,
    /// mass[n] = Lambda_n([0, inf)), the mean head count of population n.
    mass: Vec<f64>,
    total_mass: f64,
    eta_span: usize,
    gain: GainPdfCoefficients,
    y_max: f64,
}

impl Model {
    pub fn new(params: SystemParams, mut policy: TruncationPolicy) -> Result<Self> {
        params.validate()?;
        policy.series = policy.series.validated()?;
        let kappa = params.kappa();
        let n_count = policy.n_max as usize + 1;

        let mut bracket: Vec<f64> = Vec::new();
        let ensure = |bracket: &mut Vec<f64>, eta: usize| -> Result<()> {
            while bracket.len() <= eta {
                bracket.push(chi_factor(bracket.len() as u32)?);
            }
            Ok(())
        };

        let lw_r = params.lambda_w * params.r_d;
        let mut c_r = Vec::with_capacity(n_count);
        let mut mass = Vec::with_capacity(n_count);
        let mut pref = 4.0 * params.lambda_ph * params.r_d * params.r_d;
        for n in 0..n_count {
            if n > 0 {
                pref *= lw_r / n as f64;
            }
            ensure(&mut bracket, n)?;
            let mut terms = vec![pref * bracket[n] / (n as f64 + 2.0)];
            let mut partial = terms[0];
            let mut small = 0usize;
            let mut converged_at: Option<usize> = None;
            let mut i = 0usize;
            loop {
                if let Some(c) = converged_at {
                    // A few guard terms past the stopping point cover the
                    // omega-dependent reweighting in the CF series.
                    if i >= c + 8 {
                        break;
                    }
                }
                i += 1;
                if i > policy.eta_cap {
                    return Err(Error::Truncation {
                        context: "intensity eta series",
                        max_terms: policy.eta_cap,
                    });
                }
                let eta = n + i;
                ensure(&mut bracket, eta)?;
                let t = -terms[i - 1] * lw_r * (bracket[eta] / bracket[eta - 1])
                    * (eta as f64 + 1.0)
                    / ((eta as f64 + 2.0) * i as f64);
                terms.push(t);
                partial += t;
                let scale = partial.abs().max(terms[0].abs()).max(1e-300);
                if t.abs() <= policy.eta_tol * scale {
                    small += 1;
                    if small >= 3 && converged_at.is_none() {
                        converged_at = Some(i);
                    }
                } else {
                    small = 0;
                }
            }
            mass.push(partial.max(0.0));
            c_r.push(terms);
        }

        let k_pow: Vec<f64> = (0..n_count).map(|n| params.k_pen.powi(n as i32)).collect();
        let alpha_th: Vec<f64> = k_pow
            .iter()
            .map(|kp| params.r_d.powf(params.beta) * kappa / kp)
            .collect();
        let total_mass: f64 = mass.iter().sum();
        let eta_span = c_r.iter().enumerate().map(|(n, t)| n + t.len()).max().unwrap() + 1;

        let gain = gain_pdf_coeffs(params.n_t, params.n_r)?;
        let mut model = Model {
            params,
            policy,
            kappa,
            k_pow,
            alpha_th,
            c_r,
            mass,
            total_mass,
            eta_span,
            gain,
            y_max: f64::NAN,
        };
        model.y_max = model.solve_support_upper()?;
        Ok(model)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn n_max(&self) -> u32 {
        self.c_r.len() as u32 - 1
    }

    /// Mean number of heads in the disk, sum of all population masses.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Loss value beyond which the minimum-loss survival drops under 1e-8.
    pub fn support_upper(&self) -> f64 {
        self.y_max
    }

    pub fn gain_coefficients(&self) -> &GainPdfCoefficients {
        &self.gain
    }

    fn solve_support_upper(&self) -> Result<f64> {
        let target = -SUPPORT_TAIL.ln();
        let top = *self.alpha_th.last().unwrap();
        if self.total_mass <= target {
            return Ok(top);
        }
        let mut lo = 1e-9f64.ln();
        let mut hi = top.ln();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.total_intensity(mid.exp())? > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi.exp())
    }

    fn check_population(&self, n: u32) -> Result<usize> {
        let nu = n as usize;
        if nu >= self.c_r.len() {
            return Err(Error::Domain(format!(
                "population {n} exceeds the truncation n_max = {}",
                self.n_max()
            )));
        }
        Ok(nu)
    }

    /// Lambda_n([0, alpha]): mean number of population-n heads whose wall
    /// adjusted loss falls at or below alpha.
    pub fn intensity(&self, n: u32, alpha: f64) -> Result<f64> {
        let nu = self.check_population(n)?;
        if !alpha.is_finite() && alpha > 0.0 {
            return Ok(self.mass[nu]);
        }
        if alpha <= 0.0 {
            return Ok(0.0);
        }
        let rho = if alpha >= self.alpha_th[nu] {
            1.0
        } else {
            (alpha * self.k_pow[nu] / self.kappa).powf(1.0 / self.params.beta) / self.params.r_d
        };
        let mut p = rho.powi(nu as i32 + 2);
        let mut sum = 0.0;
        for &t in &self.c_r[nu] {
            sum += t * p;
            p *= rho;
        }
        Ok(sum.max(0.0))
    }

    /// d/d alpha of the population-n intensity; zero past the threshold.
    pub fn intensity_derivative(&self, n: u32, alpha: f64) -> Result<f64> {
        let nu = self.check_population(n)?;
        if alpha <= 0.0 || alpha >= self.alpha_th[nu] {
            return Ok(0.0);
        }
        let rho = (alpha * self.k_pow[nu] / self.kappa).powf(1.0 / self.params.beta)
            / self.params.r_d;
        let mut p = rho.powi(nu as i32 + 2);
        let mut sum = 0.0;
        for (i, &t) in self.c_r[nu].iter().enumerate() {
            sum += t * (nu as f64 + i as f64 + 2.0) * p;
            p *= rho;
        }
        Ok((sum / (self.params.beta * alpha)).max(0.0))
    }

    pub fn total_intensity(&self, alpha: f64) -> Result<f64> {
        let mut sum = 0.0;
        for n in 0..self.c_r.len() {
            sum += self.intensity(n as u32, alpha)?;
        }
        Ok(sum)
    }

    pub fn total_intensity_derivative(&self, alpha: f64) -> Result<f64> {
        let mut sum = 0.0;
        for n in 0..self.c_r.len() {
            sum += self.intensity_derivative(n as u32, alpha)?;
        }
        Ok(sum)
    }

    /// CDF of the minimum wall-adjusted path loss over all populations.
    pub fn min_loss_cdf(&self, alpha: f64) -> Result<f64> {
        Ok((1.0 - (-self.total_intensity(alpha)?).exp()).clamp(0.0, 1.0))
    }

    /// Density of the minimum loss: Lambda'(y) exp(-Lambda(y)).
    pub fn min_loss_density(&self, alpha: f64) -> Result<f64> {
        Ok(self.total_intensity_derivative(alpha)? * (-self.total_intensity(alpha)?).exp())
    }

    fn new_cache(&self) -> Vec<Option<F1>> {
        vec![None; self.eta_span]
    }

    /// Delta_{eta,n}(omega; l0), the eta-series kernel of the conditional
    /// interference CF exponent.
    pub fn delta(&self, eta: u32, n: u32, omega: f64, l0: f64) -> Result<Complex64> {
        let nu = self.check_population(n)?;
        if eta < n {
            return Err(Error::Domain(format!("eta = {eta} must be >= n = {n}")));
        }
        if !(l0 > 0.0 && l0 < self.alpha_th[nu]) {
            return Err(Error::Domain(format!(
                "l0 = {l0} outside (0, {}) for population {n}",
                self.alpha_th[nu]
            )));
        }
        if !omega.is_finite() {
            return Err(Error::Domain(format!("omega = {omega} must be finite")));
        }
        if omega == 0.0 {
            return Ok(ZERO);
        }
        let mut cache = self.new_cache();
        let scaled = if omega > 0.0 {
            self.delta_scaled(nu, (eta - n) as usize, omega, l0, &mut cache)?
        } else {
            self.delta_scaled(nu, (eta - n) as usize, -omega, l0, &mut cache)?.conj()
        };
        Ok(scaled * self.params.r_d.powi(eta as i32 + 2))
    }

    /// Delta_{n+i,n} divided by r_d^{n+i+2}; every factor stays O(1), which
    /// keeps the alternating CF series free of overflow for any population.
    fn delta_scaled(
        &self,
        n: usize,
        i: usize,
        omega: f64,
        l0: f64,
        cache: &mut Vec<Option<F1>>,
    ) -> Result<Complex64> {
        let eta = n + i;
        let v = (eta as f64 + 2.0) / self.params.beta;
        let ath = self.alpha_th[n];
        let near = (v - v.round()).abs();
        if near < 1e-9 && v.round() >= 1.0 {
            return Ok(delta_scaled_integer(v.round() as u32, omega, l0, ath));
        }
        if near < 1e-3 {
            // Hypergeometric forms degenerate near integer v; integrate the
            // oscillation-free kernel directly.
            return self.delta_scaled_quadrature(v, eta, n, omega, l0);
        }
        let f2 = hyp2f1_interference(v, Complex64::new(0.0, omega / ath), &self.policy.series)?;
        let rho_l =
            (l0 * self.k_pow[n] / self.kappa).powf(1.0 / self.params.beta) / self.params.r_d;
        let p = rho_l.powi(eta as i32 + 2);
        if cache[eta].is_none() {
            cache[eta] = Some(self.f1_entry(v, Complex64::new(0.0, omega / l0))?);
        }
        let part1 = match cache[eta].unwrap() {
            F1::Direct(a) => p * a,
            F1::TailS(s) => {
                // p * (-z1)^v collapses to (-j omega / alpha_th)^v, bounded
                // whenever omega stays under the population threshold.
                let cv = PI * v / (PI * v).sin();
                p * s - cv * Complex64::new(0.0, -omega / ath).powf(v)
            }
        };
        Ok(part1 - (ONE - f2))
    }

    fn f1_entry(&self, v: f64, z1: Complex64) -> Result<F1> {
        if z1.norm() < 2.0 {
            return Ok(F1::Direct(ONE - hyp2f1_interference(v, z1, &self.policy.series)?));
        }
        // Tail of the 1/z transformation, computed without the (-z)^v lead
        // so no intermediate can overflow for extreme |z|.
        let w = z1.inv();
        let mut sum = ZERO;
        let mut wm = ONE;
        for m in 1..=self.policy.series.max_terms {
            wm *= w;
            let term = wm / (v + m as f64);
            sum += term;
            if term.norm() < self.policy.series.rel_tol * (sum.norm() + 1.0) {
                return Ok(F1::TailS(ONE + v * sum));
            }
        }
        Err(Error::Truncation {
            context: "delta 1/z tail series",
            max_terms: self.policy.series.max_terms,
        })
    }

    /// Scaled Delta by direct quadrature of v int jw/(a - jw) rho(a)^{eta+2}
    /// da / a over the support, in log coordinates.
    fn delta_scaled_quadrature(
        &self,
        v: f64,
        eta: usize,
        n: usize,
        omega: f64,
        l0: f64,
    ) -> Result<Complex64> {
        let ath = self.alpha_th[n];
        let c = (n as f64 * self.params.k_pen.ln() - self.kappa.ln()) / self.params.beta
            - self.params.r_d.ln();
        let e2 = eta as f64 + 2.0;
        let jw = Complex64::new(0.0, omega);
        let ctl = QuadControl {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_panels: 1 << 13,
        };
        let val = quad::adaptive(
            |s: f64| {
                let rho_pow = (e2 * (s / self.params.beta + c)).exp();
                jw / (Complex64::new(s.exp(), 0.0) - jw) * rho_pow
            },
            l0.ln(),
            ath.ln(),
            &ctl,
            "delta quadrature fallback",
        )?;
        Ok(v * val)
    }

    /// CF exponent of one population: sum_i c_r[n][i] * scaled Delta.
    fn phi_exponent_n(
        &self,
        n: usize,
        omega: f64,
        l0: f64,
        cache: &mut Vec<Option<F1>>,
    ) -> Result<Complex64> {
        if l0 >= self.alpha_th[n] || self.mass[n] < 1e-14 {
            return Ok(ZERO);
        }
        let mut acc = ZERO;
        let mut small = 0usize;
        for (i, &c) in self.c_r[n].iter().enumerate() {
            if c == 0.0 {
                break;
            }
            let term = c * self.delta_scaled(n, i, omega, l0, cache)?;
            acc += term;
            let scale = acc.norm().max(self.mass[n]).max(1e-300);
            if term.norm() <= self.policy.eta_tol * scale {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        Ok(acc)
    }

    /// Conditional interference CF of population n given the serving loss.
    pub fn cf_phi_n(&self, n: u32, omega: f64, l0: f64) -> Result<Complex64> {
        let nu = self.check_population(n)?;
        if l0 <= 0.0 {
            return Err(Error::Domain(format!("l0 = {l0} must be > 0")));
        }
        if omega == 0.0 {
            return Ok(ONE);
        }
        if omega < 0.0 {
            return Ok(self.cf_phi_n(n, -omega, l0)?.conj());
        }
        let mut cache = self.new_cache();
        Ok(self.phi_exponent_n(nu, omega, l0, &mut cache)?.exp())
    }

    /// Conditional CF of the total interference; product over populations.
    pub fn cf_phi(&self, omega: f64, l0: f64) -> Result<Complex64> {
        if l0 <= 0.0 {
            return Err(Error::Domain(format!("l0 = {l0} must be > 0")));
        }
        if omega == 0.0 {
            return Ok(ONE);
        }
        if omega < 0.0 {
            return Ok(self.cf_phi(-omega, l0)?.conj());
        }
        let mut cache = self.new_cache();
        let mut expo = ZERO;
        for n in 0..self.c_r.len() {
            expo += self.phi_exponent_n(n, omega, l0, &mut cache)?;
        }
        Ok(expo.exp())
    }

    /// Conditional CDF of the multi-user interference given the serving loss,
    /// by Gil-Pelaez inversion of the product CF.
    pub fn interference_cdf(&self, z: f64, l0: f64) -> Result<f64> {
        if l0 <= 0.0 {
            return Err(Error::Domain(format!("l0 = {l0} must be > 0")));
        }
        if z < 0.0 {
            return Ok(0.0);
        }
        gil_pelaez_cdf(|w| self.cf_phi(w, l0), z, &self.policy)
    }

    /// Joint CCDF Pr{rate >= r_star, harvested power >= q_star}, with the
    /// rate in bits/s and the harvest demand in watts.
    pub fn jccdf(&self, r_star: f64, q_star: f64) -> Result<f64> {
        let sc = ScenarioDerived::new(&self.params, r_star, q_star)?;
        self.jccdf_derived(&sc)
    }

    /// Joint CCDF for an already-derived demand pair.
    pub fn jccdf_derived(&self, sc: &ScenarioDerived) -> Result<f64> {
        let p = self.params.p_tx;
        let beta = self.params.beta;
        // Panel width bounded by half the period of the fastest explicit
        // oscillation of the two inner kernels.
        let w_osc = (sc.q_norm + sc.sigma_star2 + sc.t_star * (1.0 + sc.gamma)) / p;
        let h_w = (PI / w_osc).min(self.policy.omega_max / 8.0);
        let inner_ctl = QuadControl {
            abs_tol: 1e-9,
            rel_tol: 1e-6,
            max_panels: 1 << 12,
        };
        // Substitution u = y^{2/beta} flattens the y -> 0 singularity of the
        // loss density and makes the outer integrand smooth at the origin.
        let u_max = self.y_max.powf(2.0 / beta);
        let outer = |u: f64| -> Result<f64> {
            if u <= 0.0 {
                return Ok(0.0);
            }
            let y = u.powf(beta / 2.0);
            let dydu = beta / 2.0 * u.powf(beta / 2.0 - 1.0);
            let weight = self.min_loss_density(y)? * dydu;
            if weight.abs() < 1e-16 {
                return Ok(0.0);
            }
            // Inner accuracy only needs to hold at the scale of this node's
            // contribution to the outer integral; nodes deep in the loss
            // tail get a loose tolerance and exit after a few panels.
            let eps = (2e-5 * (1.0 + 1.0 / (weight.abs() * u_max))).clamp(3e-6, 0.05);
            Ok(weight * self.jccdf_inner(sc, y, h_w, &inner_ctl, eps)?)
        };
        let outer_ctl = QuadControl {
            abs_tol: 3e-4,
            rel_tol: 1e-3,
            max_panels: 256,
        };
        let val = adaptive_result(&outer, 0.0, u_max, &outer_ctl, "jccdf outer")?;
        Ok(val.clamp(0.0, 1.0))
    }

    /// Frequency integral of the joint CCDF conditioned on the serving loss.
    fn jccdf_inner(
        &self,
        sc: &ScenarioDerived,
        y: f64,
        h_w: f64,
        ctl: &QuadControl,
        eps: f64,
    ) -> Result<f64> {
        // The integrand's support starts at the scale w ~ s y (and y/gamma on
        // the second kernel); panels start there and grow geometrically up to
        // the oscillation cap so the feature cannot slip between nodes.
        let w_feat = y * sc.gamma.recip().min(1.0);
        let mut h = (0.25 * w_feat).min(h_w);
        let mut acc = 0.0;
        let mut lo = 0.0f64;
        let mut small = 0usize;
        let mut panels = 0usize;
        // Past the feature the panels span half-periods of the explicit
        // oscillation and alternate in sign, so the partial sums straddle
        // the limit; the midpoint of consecutive partial sums converges a
        // full order faster in both the alternating and the smoothly
        // decaying regime, and its increments drive the stopping rule.
        let mut avg = 0.0f64;
        let mut prev_delta = f64::INFINITY;
        let mut last_delta = f64::INFINITY;
        while lo < self.policy.omega_max {
            let hi = (lo + h).min(self.policy.omega_max);
            let mut caught: Option<Error> = None;
            let panel = quad::adaptive(
                |w| match self.jccdf_integrand(sc, y, w) {
                    Ok(v) => v,
                    Err(e) => {
                        if caught.is_none() {
                            caught = Some(e);
                        }
                        0.0
                    }
                },
                lo,
                hi,
                ctl,
                "jccdf inner panel",
            );
            if let Some(e) = caught {
                return Err(e);
            }
            let panel = panel?;
            acc += panel;
            lo = hi;
            h = (2.0 * h).min(h_w);
            panels += 1;
            let next_avg = acc - 0.5 * panel;
            prev_delta = last_delta;
            last_delta = (next_avg - avg).abs();
            avg = next_avg;
            if panels >= 4 && last_delta <= 0.5 * eps * acc.abs().max(1.0) {
                small += 1;
                if small >= 3 {
                    return Ok(avg);
                }
            } else {
                small = 0;
            }
        }
        // The kernels only guarantee polynomial decay in w, so the frequency
        // cap can arrive before the strict smallness rule fires. Accept the
        // truncation when a geometric tail bound sits inside the outer
        // tolerance; otherwise report the undecayed inversion.
        let scale = acc.abs().max(1.0);
        if last_delta.max(prev_delta) <= eps.max(3e-5) * scale {
            return Ok(avg);
        }
        if last_delta < prev_delta {
            let r = (last_delta / prev_delta).min(0.95);
            if last_delta * r / (1.0 - r) <= 5e-4 * scale {
                return Ok(avg);
            }
        }
        Err(Error::Inversion {
            omega_max: self.policy.omega_max,
            cf_modulus: acc.abs(),
        })
    }

    fn jccdf_integrand(&self, sc: &ScenarioDerived, y: f64, w: f64) -> Result<f64> {
        let p = self.params.p_tx;
        let phi = self.cf_phi(w, y)?;
        let e1 = Complex64::new(0.0, -w * sc.q_norm / p).exp();
        let e2 = Complex64::new(0.0, w * sc.sigma_star2 / p).exp();
        let mut sum = ZERO;
        for &(s, t, a) in &self.gain.terms {
            let sf = s as f64;
            let b1 = Complex64::new(sf, -w / y).powu(t + 1).inv();
            let g1 = crate::specfun::upper_gamma_int(
                t + 1,
                Complex64::new(sf * y, -w) * (sc.t_star / p),
            )?;
            let b2 = Complex64::new(sf, w * sc.gamma / y).powu(t + 1).inv();
            let g2 = crate::specfun::upper_gamma_int(
                t + 1,
                Complex64::new(sf * y, w * sc.gamma) * (sc.t_star / p),
            )?;
            sum += a * (e1 * b1 * g1 - e2 * b2 * g2);
        }
        Ok((phi * sum).im * self.gain.norm / (PI * w))
    }
}

/// Exact scaled Delta for integer v: polynomial division of the kernel plus
/// a logarithmic tail, all factors bounded by construction.
fn delta_scaled_integer(v: u32, omega: f64, l0: f64, ath: f64) -> Complex64 {
    let wt = Complex64::new(0.0, omega / ath);
    let lt = l0 / ath;
    let mut sum = ZERO;
    let mut wpow = wt;
    for idx in 0..v.saturating_sub(1) {
        let e = (v - 1 - idx) as i32;
        sum += wpow * ((1.0 - lt.powi(e)) / e as f64);
        wpow *= wt;
    }
    let logs = Complex64::new(ath, -omega).ln() - Complex64::new(l0, -omega).ln();
    (sum + wpow * logs) * v as f64
}

/// Gil-Pelaez inversion: F(z) = 1/2 - int_0^inf Im{e^{-jwz} cf(w)} / (pi w) dw.
///
/// Panels are capped at half the oscillation period pi/z; integration stops
/// once three consecutive panel contributions fall under the absolute
/// tolerance, and fails with [`Error::Inversion`] if the cap is reached first.
pub fn gil_pelaez_cdf<F: FnMut(f64) -> Result<Complex64>>(
    mut cf: F,
    z: f64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("gil_pelaez_cdf requires z >= 0, got {z}")));
    }
    // Probe the half-decay scale of |cf| to size the panels.
    let mut w_half = 1e-9;
    while w_half < policy.omega_max {
        if cf(w_half)?.norm() <= 0.5 {
            break;
        }
        w_half *= 2.0;
    }
    let mut h = 8.0 * w_half;
    if z > 0.0 {
        h = h.min(PI / z);
    }
    h = h.min(policy.omega_max / 4.0);
    let tol = policy.quad.abs_tol.max(1e-12);
    let mut acc = 0.0;
    let mut lo = 0.0f64;
    let mut small = 0usize;
    while lo < policy.omega_max {
        let hi = (lo + h).min(policy.omega_max);
        let mut caught: Option<Error> = None;
        let panel = quad::adaptive(
            |w| match cf(w) {
                Ok(phi) => (Complex64::new(0.0, -w * z).exp() * phi).im / (PI * w),
                Err(e) => {
                    if caught.is_none() {
                        caught = Some(e);
                    }
                    0.0
                }
            },
            lo,
            hi,
            &policy.quad,
            "gil-pelaez panel",
        );
        if let Some(e) = caught {
            return Err(e);
        }
        let panel = panel?;
        acc += panel;
        lo = hi;
        if panel.abs() <= tol {
            small += 1;
            if small >= 3 {
                return Ok((0.5 - acc).clamp(0.0, 1.0));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Inversion {
        omega_max: policy.omega_max,
        cf_modulus: cf(policy.omega_max)?.norm(),
    })
}

/// Adaptive QK15 over [a, b] for fallible integrands; with the `parallel`
/// feature the 15 nodes of each panel are evaluated concurrently, which pays
/// off when a node costs a full inner inversion integral.
fn adaptive_result<F: Fn(f64) -> Result<f64> + Sync>(
    f: &F,
    a: f64,
    b: f64,
    ctl: &QuadControl,
    context: &'static str,
) -> Result<f64> {
    let eval_panel = |lo: f64, hi: f64| -> Result<(f64, f64)> {
        let nodes = quad::qk15_nodes(lo, hi);
        #[cfg(feature = "parallel")]
        let vals: Vec<f64> = nodes[..].par_iter().map(|&(x, _, _)| f(x)).collect::<Result<_>>()?;
        #[cfg(not(feature = "parallel"))]
        let vals: Vec<f64> = nodes[..].iter().map(|&(x, _, _)| f(x)).collect::<Result<_>>()?;
        let arr: [f64; 15] = vals.try_into().expect("fifteen nodes");
        Ok(quad::qk15_combine(&nodes, &arr))
    };
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = eval_panel(a, b)?;
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(e, a, b, v)];
    loop {
        let total: f64 = panels.iter().map(|p| p.3).sum();
        let err: f64 = panels.iter().map(|p| p.0).sum();
        if err <= ctl.abs_tol.max(ctl.rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= ctl.max_panels {
            return Err(Error::Quadrature {
                context,
                panels: panels.len(),
                residual: err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, _)| i)
            .unwrap();
        let (_, lo, hi, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let (v, _) = eval_panel(lo, hi)?;
            panels.push((0.0, lo, hi, v));
            continue;
        }
        let (v1, e1) = eval_panel(lo, mid)?;
        let (v2, e2) = eval_panel(mid, hi)?;
        panels.push((e1, lo, mid, v1));
        panels.push((e2, mid, hi, v2));
    }
}
