//! Link-level model: path loss, Rayleigh fading, and the MRT/MRC serving
//! gain g0 - both its Monte Carlo sampler (largest eigenvalue of the channel
//! Gram matrix) and its analytical density
//!
//!   f(zeta) = norm * sum_{s,t} a_{s,t} zeta^t e^{-s zeta},
//!
//! whose coefficients are generated by exact integer expansion of the
//! largest-eigenvalue CDF determinant of the uncorrelated central complex
//! Wishart matrix.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SystemParams;

/// Expansion of the serving-gain density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainPdfCoefficients {
    /// min(n_t, n_r)
    pub m: u32,
    /// max(n_t, n_r)
    pub n: u32,
    /// Normalizing factor multiplying the sum.
    pub norm: f64,
    /// (s, t, a_{s,t}) triples; s in [1, m], t in [n-m, (n+m-2s)s].
    pub terms: Vec<(u32, u32, f64)>,
}

/// kappa r^beta / K^{n_walls}; dimensionless attenuation, > 1 in practice.
pub fn path_loss(params: &SystemParams, r: f64, n_walls: u32) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain(format!(
            "path_loss undefined at r = {r}; the origin hosts the receiver"
        )));
    }
    Ok(params.kappa() * r.powf(params.beta) / params.k_pen.powi(n_walls as i32))
}

/// Unit-mean exponential fading gain.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

fn sample_cn01<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // Circularly symmetric complex Gaussian, unit variance per entry.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    (re * s, im * s)
}

/// Draw g0 = largest eigenvalue of H H^H for an n_r x n_t matrix of
/// independent CN(0, 1) entries (the MRT/MRC beamforming gain).
pub fn sample_mimo_gain<R: Rng + ?Sized>(n_t: u32, n_r: u32, rng: &mut R) -> f64 {
    let (m, n) = (n_t.min(n_r) as usize, n_t.max(n_r) as usize);
    // H as m x n (the Gram of the transposed matrix has the same spectrum).
    let mut h_re = vec![vec![0.0; n]; m];
    let mut h_im = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..n {
            let (re, im) = sample_cn01(rng);
            h_re[i][j] = re;
            h_im[i][j] = im;
        }
    }
    // A = H H^H, m x m Hermitian positive semidefinite.
    let mut a_re = vec![vec![0.0; m]; m];
    let mut a_im = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..n {
                // H[i][k] * conj(H[j][k])
                re += h_re[i][k] * h_re[j][k] + h_im[i][k] * h_im[j][k];
                im += h_im[i][k] * h_re[j][k] - h_re[i][k] * h_im[j][k];
            }
            a_re[i][j] = re;
            a_im[i][j] = im;
        }
    }
    match m {
        1 => a_re[0][0],
        2 => {
            // Closed form from trace and determinant.
            let tr = a_re[0][0] + a_re[1][1];
            let det = a_re[0][0] * a_re[1][1]
                - (a_re[0][1] * a_re[0][1] + a_im[0][1] * a_im[0][1]);
            0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt())
        }
        _ => hermitian_max_eigenvalue(&a_re, &a_im),
    }
}

/// Largest eigenvalue of an m x m Hermitian matrix A = X + iY via cyclic
/// Jacobi on the real symmetric embedding [[X, -Y], [Y, X]] (eigenvalues of
/// the embedding are those of A, doubled in multiplicity).
fn hermitian_max_eigenvalue(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let m = x.len();
    let d = 2 * m;
    let mut a = vec![vec![0.0; d]; d];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = x[i][j];
            a[i][j + m] = -y[i][j];
            a[i + m][j] = y[i][j];
            a[i + m][j + m] = x[i][j];
        }
    }
    let norm: f64 = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-12 * norm.max(1e-300);
    for _sweep in 0..64 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off < tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..d).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// Coefficient generation
// ---------------------------------------------------------------------------

/// Bivariate polynomial in (zeta, E) with integer coefficients, stored as
/// poly[s] = coefficients of E^s as a dense polynomial in zeta.
type Poly2 = Vec<Vec<BigInt>>;

fn poly_mul_zeta(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add_assign(a: &mut Vec<BigInt>, b: &[BigInt]) {
    if a.len() < b.len() {
        a.resize(b.len(), BigInt::zero());
    }
    for (ai, bi) in a.iter_mut().zip(b) {
        *ai += bi;
    }
}

/// Multiply a Poly2 by an entry of the form (const - E * g(zeta)).
fn poly2_mul_entry(p: &Poly2, konst: &BigInt, g: &[BigInt], negate: bool) -> Poly2 {
    let mut out: Poly2 = vec![vec![]; p.len() + 1];
    for (s, ps) in p.iter().enumerate() {
        if ps.is_empty() {
            continue;
        }
        let scaled: Vec<BigInt> = ps.iter().map(|c| c * konst).collect();
        poly_add_assign(&mut out[s], &scaled);
        let shifted = poly_mul_zeta(ps, g);
        let shifted: Vec<BigInt> = shifted.iter().map(|c| -c).collect();
        poly_add_assign(&mut out[s + 1], &shifted);
    }
    if negate {
        for row in &mut out {
            for c in row.iter_mut() {
                *c = -c.clone();
            }
        }
    }
    out
}

fn big_factorial(k: u64) -> BigInt {
    (1..=k).map(BigInt::from).fold(BigInt::one(), |a, b| a * b)
}

/// Coefficients of the largest-eigenvalue density of the m x n complex
/// Wishart matrix (m = min, n = max of the antenna counts).
///
/// The CDF is proportional to det[gamma(n - m + i + j - 1, zeta)]_{i,j=1..m}.
/// Substituting gamma(k, zeta) = (k-1)! - e^{-zeta} sum_{u<k} (k-1)!/u! zeta^u
/// (integer coefficients throughout) and expanding the determinant with a
/// subset-DP over columns yields the CDF as sum_s P_s(zeta) e^{-s zeta};
/// differentiating term by term gives the density, and the normalizer is
/// fixed exactly by the unit-integral constraint.
pub fn gain_pdf_coeffs(n_t: u32, n_r: u32) -> Result<GainPdfCoefficients> {
    if n_t < 1 || n_r < 1 {
        return Err(Error::Domain("antenna counts must be >= 1".into()));
    }
    let m = n_t.min(n_r) as usize;
    let n = n_t.max(n_r) as usize;
    if m > 8 || n > 12 {
        return Err(Error::Range {
            context: "gain_pdf_coeffs",
            detail: format!("m = {m}, n = {n} beyond the exact-expansion budget"),
        });
    }

    // Entry (i, j): gamma(a, zeta) with a = n - m + i + j + 1 for 0-based i, j.
    // Stored as the pair (const (a-1)!, g_a(zeta) with g_a[u] = (a-1)!/u!).
    let entry = |i: usize, j: usize| -> (BigInt, Vec<BigInt>) {
        let a = (n - m + i + j + 1) as u64;
        let fact = big_factorial(a - 1);
        let g: Vec<BigInt> = (0..a).map(|u| &fact / big_factorial(u)).collect();
        (fact, g)
    };

    // det over column subsets: f(S) = det of the top |S| rows on columns S.
    let full = (1usize << m) - 1;
    let mut dp: Vec<Option<Poly2>> = vec![None; 1 << m];
    dp[0] = Some(vec![vec![BigInt::one()]]);
    for mask in 1..=full {
        let row = (mask as u32).count_ones() as usize - 1;
        let mut acc: Poly2 = vec![];
        // Laplace expansion along row `row`: sign (-1)^{row + idx(j in S)}.
        let mut parity = row % 2 == 1;
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let sub = dp[mask ^ (1 << j)].as_ref().unwrap();
            let (konst, g) = entry(row, j);
            let contrib = poly2_mul_entry(sub, &konst, &g, parity);
            if acc.len() < contrib.len() {
                acc.resize(contrib.len(), vec![]);
            }
            for (s, row_poly) in contrib.iter().enumerate() {
                poly_add_assign(&mut acc[s], row_poly);
            }
            parity = !parity;
        }
        dp[mask] = Some(acc);
    }
    let cdf = dp[full].take().unwrap();

    // Density: d/dzeta sum_s P_s(zeta) e^{-s zeta}
    //        = sum_{s>=1} e^{-s zeta} (P_s'(zeta) - s P_s(zeta)).
    let mut raw: Vec<(u32, u32, BigInt)> = Vec::new();
    for (s, p_s) in cdf.iter().enumerate().skip(1) {
        let mut q = vec![BigInt::zero(); p_s.len()];
        for (t, c) in p_s.iter().enumerate() {
            q[t] -= BigInt::from(s) * c;
            if t >= 1 {
                q[t - 1] += BigInt::from(t) * c;
            }
        }
        for (t, c) in q.into_iter().enumerate() {
            if !c.is_zero() {
                raw.push((s as u32, t as u32, c));
            }
        }
    }

    // Unit integral: integral zeta^t e^{-s zeta} = t!/s^{t+1}, exactly.
    let mut integral = BigRational::zero();
    for (s, t, c) in &raw {
        let w = BigRational::new(
            big_factorial(*t as u64),
            BigInt::from(*s).pow(*t + 1),
        );
        integral += BigRational::from(c.clone()) * w;
    }
    if integral.is_zero() || integral.is_negative() {
        return Err(Error::Range {
            context: "gain_pdf_coeffs",
            detail: "degenerate determinant expansion".into(),
        });
    }
    let norm = BigRational::one() / integral;
    let norm_f = norm.to_f64().ok_or(Error::Range {
        context: "gain_pdf_coeffs",
        detail: "normalizer not representable".into(),
    })?;

    let terms: Vec<(u32, u32, f64)> = raw
        .iter()
        .map(|(s, t, c)| {
            (*s, *t, c.to_f64().expect("coefficient representable"))
        })
        .collect();
    if terms.iter().any(|(_, _, a)| !a.is_finite()) || !norm_f.is_finite() {
        return Err(Error::Range {
            context: "gain_pdf_coeffs",
            detail: "coefficient overflow in f64 conversion".into(),
        });
    }
    Ok(GainPdfCoefficients {
        m: m as u32,
        n: n as u32,
        norm: norm_f,
        terms,
    })
}

/// Evaluate the gain density at zeta.
pub fn gain_pdf(coeffs: &GainPdfCoefficients, zeta: f64) -> f64 {
    if zeta < 0.0 {
        return 0.0;
    }
    let v: f64 = coeffs
        .terms
        .iter()
        .map(|&(s, t, a)| a * zeta.powi(t as i32) * (-(s as f64) * zeta).exp())
        .sum();
    coeffs.norm * v
}

/// Closed-form mean of the density: norm * sum a_{s,t} (t+1)!/s^{t+2}.
pub fn gain_pdf_mean(coeffs: &GainPdfCoefficients) -> f64 {
    let v: f64 = coeffs
        .terms
        .iter()
        .map(|&(s, t, a)| {
            let tf: f64 = (1..=(t as u64 + 1)).map(|k| k as f64).product();
            a * tf / (s as f64).powi(t as i32 + 2)
        })
        .sum();
    coeffs.norm * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_loss_examples() {
        let p = SystemParams::defaults();
        assert_relative_eq!(path_loss(&p, 1.0, 0).unwrap(), p.kappa(), max_relative = 1e-14);
        assert_relative_eq!(
            path_loss(&p, 1.0, 2).unwrap(),
            100.0 * p.kappa(),
            max_relative = 1e-12
        );
        assert!(matches!(path_loss(&p, 0.0, 0), Err(Error::Domain(_))));
        // kappa regression constant at f_c = 2.1 GHz.
        assert_relative_eq!(p.kappa(), 7748.487052053933, max_relative = 1e-12);
    }

    #[test]
    fn path_loss_monotone() {
        let p = SystemParams::defaults();
        let l1 = path_loss(&p, 5.0, 1).unwrap();
        assert!(path_loss(&p, 6.0, 1).unwrap() > l1);
        assert!(path_loss(&p, 5.0, 2).unwrap() > l1);
    }

    #[test]
    fn fading_is_unit_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut above_median = 0usize;
        for _ in 0..n {
            let h = sample_fading(&mut rng);
            sum += h;
            if h > std::f64::consts::LN_2 {
                above_median += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean = {mean}");
        let frac = above_median as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.002, "median frac = {frac}");
    }

    #[test]
    fn fading_deterministic_per_seed() {
        let a = sample_fading(&mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_fading(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn siso_gain_is_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sample_mimo_gain(1, 1, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn miso_two_antennas_is_gamma2() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sample_mimo_gain(2, 1, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean = {mean}");
    }

    #[test]
    fn jacobi_agrees_with_closed_form_2x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..200 {
            // Random 2x2 Hermitian from a Gram construction.
            let (a, b, c, d) = (
                sample_cn01(&mut rng),
                sample_cn01(&mut rng),
                sample_cn01(&mut rng),
                sample_cn01(&mut rng),
            );
            let h_re = [[a.0, b.0], [c.0, d.0]];
            let h_im = [[a.1, b.1], [c.1, d.1]];
            let mut g_re = [[0.0; 2]; 2];
            let mut g_im = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        g_re[i][j] += h_re[i][k] * h_re[j][k] + h_im[i][k] * h_im[j][k];
                        g_im[i][j] += h_im[i][k] * h_re[j][k] - h_re[i][k] * h_im[j][k];
                    }
                }
            }
            let tr = g_re[0][0] + g_re[1][1];
            let det =
                g_re[0][0] * g_re[1][1] - (g_re[0][1] * g_re[0][1] + g_im[0][1] * g_im[0][1]);
            let closed = 0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt());
            let jac = hermitian_max_eigenvalue(
                &[g_re[0].to_vec(), g_re[1].to_vec()],
                &[g_im[0].to_vec(), g_im[1].to_vec()],
            );
            assert!((closed - jac).abs() < 1e-9 * closed.max(1.0));
        }
    }

    #[test]
    fn coeffs_1x1_single_exponential() {
        let c = gain_pdf_coeffs(1, 1).unwrap();
        assert_eq!((c.m, c.n), (1, 1));
        assert_eq!(c.terms.len(), 1);
        let (s, t, a) = c.terms[0];
        assert_eq!((s, t), (1, 0));
        assert_relative_eq!(c.norm * a, 1.0, max_relative = 1e-14);
        assert_relative_eq!(gain_pdf(&c, 0.0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn coeffs_2x1_is_gamma() {
        // m = 1, n = 2: density zeta e^{-zeta}, t collapses to n - 1 = 1.
        let c = gain_pdf_coeffs(2, 1).unwrap();
        let nz: Vec<_> = c.terms.iter().filter(|(_, _, a)| *a != 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!((nz[0].0, nz[0].1), (1, 1));
        for &z in &[0.1, 0.5, 1.0, 3.0, 7.0] {
            assert_relative_eq!(gain_pdf(&c, z), z * (-z as f64).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn coeffs_symmetric_in_antennas() {
        let a = gain_pdf_coeffs(4, 2).unwrap();
        let b = gain_pdf_coeffs(2, 4).unwrap();
        assert_eq!((a.m, a.n), (b.m, b.n));
        assert_eq!(a.terms, b.terms);
        assert_eq!(a.norm, b.norm);
    }

    #[test]
    fn coeffs_t_bounds_match_expansion() {
        for &(nt, nr) in &[(2u32, 2u32), (4, 2), (8, 2), (4, 4)] {
            let c = gain_pdf_coeffs(nt, nr).unwrap();
            let (m, n) = (c.m as i64, c.n as i64);
            for &(s, t, a) in &c.terms {
                if a == 0.0 {
                    continue;
                }
                let (s, t) = (s as i64, t as i64);
                assert!(s >= 1 && s <= m);
                assert!(
                    t >= n - m && t <= (n + m - 2 * s) * s,
                    "({nt},{nr}): s={s} t={t} outside [{}, {}]",
                    n - m,
                    (n + m - 2 * s) * s
                );
            }
        }
    }

    #[test]
    fn density_integrates_to_one_and_is_nonnegative() {
        for &(nt, nr) in &[(1u32, 1u32), (2, 1), (2, 2), (4, 2), (8, 2), (4, 4)] {
            let c = gain_pdf_coeffs(nt, nr).unwrap();
            let integral: f64 = c
                .terms
                .iter()
                .map(|&(s, t, a)| {
                    let tf: f64 = (1..=t as u64).map(|k| k as f64).product();
                    a * tf / (s as f64).powi(t as i32 + 1)
                })
                .sum::<f64>()
                * c.norm;
            assert!((integral - 1.0).abs() < 1e-10, "({nt},{nr}): {integral}");
            let mut z = 0.0;
            while z <= 50.0 {
                assert!(gain_pdf(&c, z) >= -1e-12, "({nt},{nr}) at {z}");
                z += 0.05;
            }
        }
    }

    #[test]
    fn mean_matches_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for &(nt, nr) in &[(1u32, 1u32), (2, 1), (2, 2), (4, 2), (8, 2)] {
            let c = gain_pdf_coeffs(nt, nr).unwrap();
            let model = gain_pdf_mean(&c);
            let n = 100_000;
            let samples: Vec<f64> = (0..n).map(|_| sample_mimo_gain(nt, nr, &mut rng)).collect();
            let mean = samples.iter().sum::<f64>() / n as f64;
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let sigma = (var / n as f64).sqrt();
            assert!(
                (mean - model).abs() < 3.0 * sigma + 1e-9,
                "({nt},{nr}): sample {mean} vs model {model} (3sig {})",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn larger_array_stochastically_dominates() {
        let c42 = gain_pdf_coeffs(4, 2).unwrap();
        let c22 = gain_pdf_coeffs(2, 2).unwrap();
        let cdf = |c: &GainPdfCoefficients, z: f64| {
            crate::quad::adaptive(
                |x| gain_pdf(c, x),
                0.0,
                z,
                &crate::quad::QuadControl::default(),
                "cdf",
            )
            .unwrap()
        };
        let mut z = 0.5;
        while z <= 30.0 {
            assert!(cdf(&c42, z) <= cdf(&c22, z) + 1e-9, "z = {z}");
            z += 0.5;
        }
    }

    #[test]
    fn coefficients_export_as_json() {
        let c = gain_pdf_coeffs(4, 2).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: GainPdfCoefficients = serde_json::from_str(&json).unwrap();
        assert_eq!(back.terms, c.terms);
        assert_eq!(back.norm, c.norm);
    }

    #[test]
    fn oversized_request_is_range_error() {
        assert!(matches!(
            gain_pdf_coeffs(16, 9),
            Err(Error::Range { .. })
        ));
    }
}
