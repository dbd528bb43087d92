//! Complex-capable special functions: integer-order upper incomplete gamma,
//! the Gauss hypergeometric family 2F1(1, -v; 1-v; z) needed by the
//! interference characteristic function, the real family
//! 2F1(1/2, (eta+1)/2; (eta+3)/2; 1/2), and log-gamma.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{self, QuadControl};

/// Truncation controls for the hypergeometric series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-12,
            max_terms: 500,
        }
    }
}

impl SeriesControl {
    pub fn validated(self) -> Result<Self> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Param(format!("rel_tol {} not in (0,1)", self.rel_tol)));
        }
        if self.max_terms < 8 {
            return Err(Error::Param(format!("max_terms {} < 8", self.max_terms)));
        }
        Ok(self)
    }
}

// Lanczos approximation, g = 7, 9 coefficients.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection; only reached for x in (0, 0.5).
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Gamma function for x > 0.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Upper incomplete gamma of positive integer order,
/// Gamma(n, z) = (n-1)! e^{-z} sum_{k=0}^{n-1} z^k / k!.
///
/// Exact finite formula, valid for any finite complex z.
pub fn upper_gamma_int(n: u32, z: Complex64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Domain("upper_gamma_int requires n >= 1".into()));
    }
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..n {
        term *= z / k as f64;
        sum += term;
    }
    let value = factorial(n as usize - 1) * (-z).exp() * sum;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Range {
            context: "upper_gamma_int",
            detail: format!("n = {n}, z = {z}"),
        });
    }
    Ok(value)
}

/// 2F1(1, -v; 1-v; z) for v > 0, any finite complex z off the cut [1, inf).
///
/// Equal to v * sum_{k>=0} z^k / (v - k); three evaluation regimes stitched
/// together seamlessly:
/// - |z| <= 0.7: the defining Gauss series,
/// - 0.7 < |z| < 2: an integral representation (analytic continuation),
/// - |z| >= 2: the z -> 1/z linear transformation.
pub fn hyp2f1_interference(v: f64, z: Complex64, ctl: &SeriesControl) -> Result<Complex64> {
    if v <= 0.0 {
        return Err(Error::Domain(format!("hyp2f1_interference requires v > 0, got {v}")));
    }
    if (v - v.round()).abs() < 1e-3 {
        return Err(Error::Domain(format!(
            "v = {v} too close to an integer; use the quadrature fallback"
        )));
    }
    if z.im == 0.0 && z.re >= 1.0 {
        return Err(Error::BranchCut { z });
    }
    let r = z.norm();
    if r <= 0.7 {
        hyp2f1_series(v, z, ctl)
    } else if r < 2.0 {
        hyp2f1_integral(v, z)
    } else {
        hyp2f1_inverse_z(v, z, ctl)
    }
}

/// Defining Gauss series; converges for |z| < 1.
fn hyp2f1_series(v: f64, z: Complex64, ctl: &SeriesControl) -> Result<Complex64> {
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        term *= z * ((kf - v) / (kf + 1.0 - v));
        sum += term;
        if term.norm() < ctl.rel_tol * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::Truncation {
        context: "hyp2f1 series",
        max_terms: ctl.max_terms,
    })
}

/// Analytic continuation by splitting off the first K = floor(v)+1 series
/// terms and closing the tail into a real integral:
///
///   f(z) = v [ sum_{k<K} z^k/(v-k) - z^K (1/p) int_0^1 du / (1 - z u^{1/p}) ]
///
/// with p = K - v in (0, 1). Valid for all z off [1, inf).
fn hyp2f1_integral(v: f64, z: Complex64) -> Result<Complex64> {
    let kk = v.floor() as i64 + 1;
    let p = kk as f64 - v;
    let mut head = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(1.0, 0.0);
    for k in 0..kk {
        head += zk / (v - k as f64);
        zk *= z;
    }
    let inv_p = 1.0 / p;
    let ctl = QuadControl {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_panels: 8192,
    };
    let tail = quad::adaptive(
        |u: f64| (Complex64::new(1.0, 0.0) - z * u.powf(inv_p)).inv(),
        0.0,
        1.0,
        &ctl,
        "hyp2f1 continuation",
    )?;
    Ok(v * (head - zk * tail * inv_p))
}

/// z -> 1/z linear transformation:
///
///   f(z) = pi v / sin(pi v) * (-z)^v - v sum_{m>=1} z^{-m} / (v + m)
///
/// Converges for |z| > 1; used for |z| >= 2.
fn hyp2f1_inverse_z(v: f64, z: Complex64, ctl: &SeriesControl) -> Result<Complex64> {
    let lead = std::f64::consts::PI * v / (std::f64::consts::PI * v).sin() * (-z).powf(v);
    let w = z.inv();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut wm = Complex64::new(1.0, 0.0);
    for m in 1..=ctl.max_terms {
        wm *= w;
        let term = wm / (v + m as f64);
        sum += term;
        if term.norm() < ctl.rel_tol * (sum.norm() + lead.norm()) {
            return Ok(lead - v * sum);
        }
    }
    Err(Error::Truncation {
        context: "hyp2f1 1/z transformation",
        max_terms: ctl.max_terms,
    })
}

/// 2F1(1/2, (eta+1)/2; (eta+3)/2; 1/2) by direct series summation.
pub fn hyp2f1_chi(eta: u32) -> Result<f64> {
    let a = 0.5;
    let b = (eta as f64 + 1.0) / 2.0;
    let c = (eta as f64 + 3.0) / 2.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..500 {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * 0.5;
        sum += term;
        if term < 1e-15 * sum {
            return Ok(sum);
        }
    }
    Err(Error::Truncation {
        context: "hyp2f1_chi series",
        max_terms: 500,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent oracle: Gamma(n, z) = int_0^inf (z+s)^{n-1} e^{-(z+s)} ds
    /// along the horizontal ray from z.
    fn upper_gamma_quad(n: u32, z: Complex64) -> Complex64 {
        quad::adaptive(
            |s: f64| (z + s).powu(n - 1) * (-(z + s)).exp(),
            0.0,
            80.0,
            &QuadControl::default(),
            "gamma oracle",
        )
        .unwrap()
    }

    #[test]
    fn gamma_one_is_exponential() {
        let v = upper_gamma_int(1, c(2.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, (-2.0f64).exp(), max_relative = 1e-14);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn gamma_at_zero_is_factorial() {
        let v = upper_gamma_int(3, c(0.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gamma_complex_vs_quadrature() {
        let z = c(1.0, 1.0);
        let v = upper_gamma_int(2, z).unwrap();
        let exact = (-z).exp() * (z + 1.0); // Gamma(2, z) = e^{-z}(z+1)
        assert!((v - exact).norm() / exact.norm() < 1e-12);
        let oracle = upper_gamma_quad(2, z);
        assert!((v - oracle).norm() / oracle.norm() < 1e-10);
    }

    #[test]
    fn gamma_real_argument_bounds() {
        for n in 1..6u32 {
            for &x in &[0.0, 0.5, 2.0, 10.0] {
                let v = upper_gamma_int(n, c(x, 0.0)).unwrap();
                assert_eq!(v.im, 0.0);
                assert!(v.re > 0.0 && v.re <= factorial(n as usize - 1) + 1e-12);
            }
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_relative_eq!(gamma(0.5), std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-12);
        assert_relative_eq!(ln_gamma(10.0), factorial(9).ln(), max_relative = 1e-12);
    }

    #[test]
    fn hyp2f1_at_zero_is_one() {
        let f = hyp2f1_interference(0.8, c(0.0, 0.0), &SeriesControl::default()).unwrap();
        assert_relative_eq!(f.re, 1.0, max_relative = 1e-14);
        assert_eq!(f.im, 0.0);
    }

    /// Direct summation of the defining Gauss series with explicit
    /// Pochhammer ratios; independent of the implementation path.
    fn gauss_series_oracle(v: f64, z: Complex64) -> Complex64 {
        let mut sum = c(0.0, 0.0);
        let mut zk = c(1.0, 0.0);
        for k in 0..400 {
            sum += -v / (k as f64 - v) * zk;
            zk *= z;
        }
        sum
    }

    #[test]
    fn hyp2f1_inside_disk_vs_series_oracle() {
        let f = hyp2f1_interference(0.8, c(0.3, 0.0), &SeriesControl::default()).unwrap();
        let oracle = gauss_series_oracle(0.8, c(0.3, 0.0));
        assert!((f - oracle).norm() / oracle.norm() < 1e-10);
    }

    /// The integral representation must reproduce the series inside the disk
    /// before it is trusted as the continuation (and as the large-|z| oracle).
    #[test]
    fn integral_representation_validated_against_series() {
        for &v in &[0.8, 1.6, 2.3, 4.88] {
            for &z in &[c(0.3, 0.1), c(-0.5, 0.2), c(0.0, 0.6), c(0.4, -0.4)] {
                let series = gauss_series_oracle(v, z);
                let integral = hyp2f1_integral(v, z).unwrap();
                assert!(
                    (integral - series).norm() / series.norm() < 1e-10,
                    "v={v} z={z}"
                );
            }
        }
    }

    #[test]
    fn hyp2f1_large_z_vs_integral_oracle() {
        let v = 1.6;
        let z = c(0.0, 5.0);
        let f = hyp2f1_interference(v, z, &SeriesControl::default()).unwrap();
        let oracle = hyp2f1_integral(v, z).unwrap();
        assert!((f - oracle).norm() / oracle.norm() < 1e-10);
    }

    #[test]
    fn continuity_at_switchover_rings() {
        let ctl = SeriesControl::default();
        for &v in &[0.8, 1.2, 3.7] {
            for i in 0..12 {
                let th = (0.05 + i as f64) * std::f64::consts::PI / 6.0;
                // series vs integral at |z| = 0.7
                let z = Complex64::from_polar(0.7, th);
                if z.im != 0.0 || z.re < 1.0 {
                    let a = hyp2f1_series(v, z, &ctl).unwrap();
                    let b = hyp2f1_integral(v, z).unwrap();
                    assert!((a - b).norm() / b.norm() < 1e-8, "ring 0.7 v={v} th={th}");
                }
                // integral vs 1/z transform at |z| = 2
                let z = Complex64::from_polar(2.0, th);
                if z.im != 0.0 || z.re < 1.0 {
                    let a = hyp2f1_integral(v, z).unwrap();
                    let b = hyp2f1_inverse_z(v, z, &ctl).unwrap();
                    assert!((a - b).norm() / b.norm() < 1e-8, "ring 2.0 v={v} th={th}");
                }
            }
        }
    }

    #[test]
    fn branch_cut_rejected() {
        let e = hyp2f1_interference(0.8, c(1.5, 0.0), &SeriesControl::default()).unwrap_err();
        assert!(matches!(e, Error::BranchCut { .. }));
    }

    #[test]
    fn near_integer_v_rejected() {
        let e = hyp2f1_interference(2.0001, c(0.3, 0.0), &SeriesControl::default()).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn chi_family_known_values() {
        // 2F1(1/2, 1/2; 3/2; z) = arcsin(sqrt z)/sqrt z at z = 1/2.
        let f0 = hyp2f1_chi(0).unwrap();
        let exact0 = (0.5f64.sqrt()).asin() / 0.5f64.sqrt();
        assert_relative_eq!(f0, exact0, max_relative = 1e-12);
        assert_relative_eq!(f0, std::f64::consts::FRAC_PI_4 * 2.0f64.sqrt(), max_relative = 1e-12);
        // 2F1(1/2, 1; 2; 1/2) = 2(1 - sqrt(1-z))/z at z = 1/2.
        let f1 = hyp2f1_chi(1).unwrap();
        assert_relative_eq!(f1, 4.0 * (1.0 - 0.5f64.sqrt()), max_relative = 1e-12);
        assert_relative_eq!(f1, 1.17157, max_relative = 1e-5);
    }

    #[test]
    fn chi_family_increases_toward_sqrt2() {
        // 2F1(1/2, b; b+1; 1/2) -> (1 - 1/2)^{-1/2} as b grows, so the family
        // climbs from 1.1107 toward sqrt 2 while staying positive.
        let mut prev = hyp2f1_chi(0).unwrap();
        for eta in 1..=8 {
            let v = hyp2f1_chi(eta).unwrap();
            assert!(v > prev && v < 2.0f64.sqrt(), "eta={eta}");
            prev = v;
        }
    }

    proptest! {
        /// Gamma(n, z) = (n-1) Gamma(n-1, z) + z^{n-1} e^{-z}.
        #[test]
        fn incomplete_gamma_recurrence(
            n in 2u32..10,
            re in -20.0f64..20.0,
            im in -20.0f64..20.0,
        ) {
            let z = c(re, im);
            if z.norm() <= 20.0 {
                let lhs = upper_gamma_int(n, z).unwrap()
                    - (n - 1) as f64 * upper_gamma_int(n - 1, z).unwrap();
                let rhs = z.powu(n - 1) * (-z).exp();
                let scale = upper_gamma_int(n, z).unwrap().norm().max(rhs.norm()).max(1e-30);
                prop_assert!((lhs - rhs).norm() / scale < 1e-10);
            }
        }

        /// Schwarz reflection: f(conj z) = conj(f(z)).
        #[test]
        fn schwarz_reflection(
            v in 0.21f64..5.0,
            r in 0.0f64..50.0,
            th in 0.02f64..3.12,
        ) {
            prop_assume!((v - v.round()).abs() >= 1e-3);
            let z = Complex64::from_polar(r, th);
            let ctl = SeriesControl::default();
            let f = hyp2f1_interference(v, z, &ctl).unwrap();
            let fbar = hyp2f1_interference(v, z.conj(), &ctl).unwrap();
            let scale = f.norm().max(1e-30);
            prop_assert!((fbar - f.conj()).norm() / scale < 1e-8);
        }
    }
}
