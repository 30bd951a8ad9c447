//! Gaussian distribution on the Siegel disk, in the reduced eigenvalue chart
//! `u = cosh 2λ` on `(1, ∞)` with weight `exp(−acosh²(u)/8σ²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::Measure;
use crate::linalg::{propagate_error, SquareMatrix};
use crate::oracle::{chamber_integral, ChamberOptions};
use crate::quadrature::{integrate, integrate_chart, Estimate, QuadOptions, SemiInfiniteScheme, Span};
use crate::spaces::ln_sinh;
use crate::zbeta::{stabilized_basis, EvalResult, StabilizedBasis};

/// σ range over which moments and `Z` are computed reliably for small N.
pub const SIGMA_RANGE: (f64, f64) = (1e-3, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiegelGaussian {
    pub n: usize,
    pub sigma: f64,
}

impl SiegelGaussian {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix size N must be at least 1".into()));
        }
        check_sigma(sigma)?;
        Ok(Self { n, sigma })
    }

    pub fn measure(&self) -> Result<Measure> {
        siegel_measure(self.sigma)
    }

    pub fn z(&self, opts: &QuadOptions) -> Result<EvalResult> {
        siegel_z(self.n, self.sigma, opts)
    }
}

fn check_sigma(sigma: f64) -> Result<f64> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")))
    }
}

/// `μ_σ(du) = exp(−acosh²(u)/8σ²) du` on `(1, ∞)`.
pub fn siegel_measure(sigma: f64) -> Result<Measure> {
    let s = check_sigma(sigma)?;
    let c = 1.0 / (8.0 * s * s);
    Ok(Measure::cosh2(0.0, 1.0, move |u: f64| {
        let a = u.max(1.0).acosh();
        -c * a * a
    })?
    .with_length_scale(s)
    .with_label(format!("siegel:sigma={sigma}")))
}

/// `m_j(σ) = ∫₁^∞ exp(−acosh²(u)/8σ²) u^j du`, integrated in `λ` with
/// `u = cosh 2λ`: `∫₀^∞ exp(−λ²/2σ²) cosh^j(2λ) 2 sinh(2λ) dλ`.
pub fn siegel_moment(j: u32, sigma: f64, opts: &QuadOptions) -> Result<Estimate<f64>> {
    let s = check_sigma(sigma)?;
    let c = 0.5 / (s * s);
    let jf = j as f64;
    integrate_chart(
        |l: f64| {
            let two_l = 2.0 * l;
            // ln cosh x = ln sinh x + ln coth x
            let ln_cosh = if two_l > 20.0 {
                two_l - std::f64::consts::LN_2 + (-2.0 * two_l).exp().ln_1p()
            } else {
                two_l.cosh().ln()
            };
            if l == 0.0 {
                return 0.0;
            }
            (-c * l * l + jf * ln_cosh + std::f64::consts::LN_2 + ln_sinh(two_l)).exp()
        },
        Span::SemiInfinite { a: 0.0, scale: s },
        opts,
    )
}

/// The same moment integrated directly in `u` over doubling segments.
pub fn siegel_moment_u_chart(j: u32, sigma: f64, opts: &QuadOptions) -> Result<Estimate<f64>> {
    let s = check_sigma(sigma)?;
    let c = 1.0 / (8.0 * s * s);
    let mut o = *opts;
    o.semi_infinite = SemiInfiniteScheme::Geometric;
    let jf = j as f64;
    integrate_chart(
        |u: f64| {
            let a = u.max(1.0).acosh();
            (-c * a * a + jf * u.ln()).exp()
        },
        Span::SemiInfinite { a: 1.0, scale: 1.0 },
        &o,
    )
}

/// `det{m_{k+ℓ}(σ)}_{k,ℓ<N}`: `Z(σ)` without its constant factor.
pub fn siegel_z(n: usize, sigma: f64, opts: &QuadOptions) -> Result<EvalResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix size N must be at least 1".into()));
    }
    let moments: Vec<Estimate<f64>> = (0..2 * n as u32 - 1)
        .map(|j| siegel_moment(j, sigma, opts))
        .collect::<Result<_>>()?;
    let matrix = SquareMatrix::from_fn(n, |k, l| moments[k + l].value);
    let errors: Vec<f64> = (0..n * n).map(|ij| moments[ij / n + ij % n].error).collect();
    let value = matrix.det();
    Ok(EvalResult {
        value,
        imag_residual: None,
        matrix_dim: n,
        method: "det(hankel siegel moments), up to constant".into(),
        err_estimate: propagate_error(&matrix, value, &errors, false),
    })
}

/// `Z(σ)` without its constant, as the ordered λ-space integral
/// `∫_{0<λ₁<…<λ_N} ∏ 2 e^{−λ²/2σ²} sinh 2λ · ∏ (cosh 2λ_i − cosh 2λ_j)²`.
pub fn siegel_z_lambda(n: usize, sigma: f64, opts: &ChamberOptions) -> Result<Estimate<f64>> {
    let s = check_sigma(sigma)?;
    let c = 0.5 / (s * s);
    chamber_integral(
        n,
        Span::SemiInfinite { a: 0.0, scale: s },
        |l| 2.0 * (-c * l * l + ln_sinh(2.0 * l)).exp(),
        |x, y| {
            let d = (2.0 * x).cosh() - (2.0 * y).cosh();
            d * d
        },
        opts,
    )
}

/// Christoffel–Darboux kernel `K_N(u, v) = Σ_{k<N} φ_k(u) φ_k(v)` with
/// `φ_k` orthonormal in `L²(μ)`.
#[derive(Debug, Clone)]
pub struct CdKernel {
    basis: StabilizedBasis,
    inv_norms: Vec<f64>,
}

pub fn cd_kernel(mu: &Measure, n: usize, opts: &QuadOptions) -> Result<CdKernel> {
    if n == 0 {
        return Err(Error::InvalidArgument("kernel degree must be at least 1".into()));
    }
    let basis = stabilized_basis(mu, n, opts)?;
    let inv_norms = basis.norms().iter().map(|h| 1.0 / h.sqrt()).collect();
    Ok(CdKernel { basis, inv_norms })
}

impl CdKernel {
    pub fn degree(&self) -> usize {
        self.inv_norms.len()
    }

    /// `φ₀(u), …, φ_{N−1}(u)`.
    pub fn orthonormal(&self, u: f64) -> Vec<f64> {
        self.basis.eval(u).iter().zip(&self.inv_norms).map(|(p, c)| p * c).collect()
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let a = self.orthonormal(u);
        let b = self.orthonormal(v);
        a.iter().zip(&b).map(|(x, y)| x * y).sum()
    }

    pub fn diagonal(&self, u: f64) -> f64 {
        self.orthonormal(u).iter().map(|x| x * x).sum()
    }

    /// Monomial coefficients of `φ_k`, constant term first.
    pub fn ortho_coefficients(&self) -> Vec<Vec<f64>> {
        self.basis
            .coefficients()
            .iter()
            .zip(&self.inv_norms)
            .map(|(row, c)| row.iter().map(|x| x * c).collect())
            .collect()
    }

    /// `(α_k, β_k)` of the monic recurrence `p_{k+1} = (u − α_k)p_k − β_k p_{k−1}`.
    pub fn recurrence(&self) -> Vec<(f64, f64)> {
        self.basis.recurrence()
    }

    pub fn monic_norms(&self) -> &[f64] {
        self.basis.norms()
    }

    /// `∫ K_N(u, u) μ(du)`; equals N.
    pub fn trace(&self, mu: &Measure, opts: &QuadOptions) -> Result<Estimate<f64>> {
        integrate(|u| self.diagonal(u), mu, opts)
    }
}

/// Kernel summary emitted by the command-line front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    pub degree: usize,
    pub trace: f64,
    pub recurrence_alpha: Vec<f64>,
    pub recurrence_beta: Vec<f64>,
    pub orthonormal_coefficients: Vec<Vec<f64>>,
}

pub fn kernel_diagnostics(mu: &Measure, n: usize, opts: &QuadOptions) -> Result<KernelDiagnostics> {
    let k = cd_kernel(mu, n, opts)?;
    let trace = k.trace(mu, opts)?.value;
    let (alpha, beta) = k.recurrence().into_iter().unzip();
    Ok(KernelDiagnostics {
        degree: n,
        trace,
        recurrence_alpha: alpha,
        recurrence_beta: beta,
        orthonormal_coefficients: k.ortho_coefficients(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zbeta::{zbeta, Beta, ZRequest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q() -> QuadOptions {
        QuadOptions::default()
    }

    fn tight() -> QuadOptions {
        QuadOptions {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            ..QuadOptions::default()
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn moments_increase() {
        for sigma in [0.1, 0.5, 1.0, 2.0] {
            let m: Vec<f64> = (0..6).map(|j| siegel_moment(j, sigma, &q()).unwrap().value).collect();
            assert!(m[0] > 0.0);
            for w in m.windows(2) {
                assert!(w[1] > w[0], "sigma {sigma}: {m:?}");
            }
        }
    }

    #[test]
    fn charts_agree() {
        for sigma in [0.25, 1.0] {
            for j in 0..=6 {
                let a = siegel_moment(j, sigma, &tight()).unwrap().value;
                let b = siegel_moment_u_chart(j, sigma, &tight()).unwrap().value;
                assert!(rel(a, b) <= 1e-9, "j {j} sigma {sigma}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn measure_matches_moments() {
        let mu = siegel_measure(0.5).unwrap();
        for j in 0..4 {
            let a = crate::forms::line_moment(&mu, j, &q()).unwrap().value;
            let b = siegel_moment(j as u32, 0.5, &q()).unwrap().value;
            assert!(rel(a, b) <= 1e-8);
        }
    }

    #[test]
    fn concentration_at_small_sigma() {
        let m0 = siegel_moment(0, 1e-3, &q()).unwrap().value;
        for j in 1..=4 {
            let mj = siegel_moment(j, 1e-3, &q()).unwrap().value;
            assert!((mj / m0 - 1.0).abs() <= 1e-2);
        }
    }

    #[test]
    fn z_small_cases() {
        let m = |j| siegel_moment(j, 1.0, &q()).unwrap().value;
        assert!(rel(siegel_z(1, 1.0, &q()).unwrap().value, m(0)) <= 1e-14);
        let z2 = siegel_z(2, 1.0, &q()).unwrap().value;
        assert!(rel(z2, m(0) * m(2) - m(1) * m(1)) <= 1e-12);
    }

    #[test]
    fn z_matches_lambda_integral() {
        for sigma in [0.25, 1.0] {
            let z = siegel_z(2, sigma, &q()).unwrap().value;
            let o = siegel_z_lambda(2, sigma, &ChamberOptions::default()).unwrap().value;
            assert!(rel(z, o) <= 1e-6, "sigma {sigma}: {z} vs {o}");
        }
    }

    #[test]
    fn z_increases_with_sigma() {
        for n in 1..=3 {
            let z: Vec<f64> = [0.25, 0.5, 1.0, 2.0]
                .iter()
                .map(|&s| siegel_z(n, s, &q()).unwrap().value)
                .collect();
            assert!(z[0] > 0.0);
            assert!(z.windows(2).all(|w| w[1] > w[0]), "N {n}: {z:?}");
        }
    }

    #[test]
    fn kernel_trace() {
        let mu = siegel_measure(1.0).unwrap();
        for n in [1, 2, 3, 5] {
            let k = cd_kernel(&mu, n, &q()).unwrap();
            let t = k.trace(&mu, &q()).unwrap().value;
            assert!((t - n as f64).abs() <= 1e-8 * n as f64, "N {n}: {t}");
        }
    }

    #[test]
    fn kernel_of_degree_one() {
        let mu = siegel_measure(0.5).unwrap();
        let k = cd_kernel(&mu, 1, &q()).unwrap();
        let m0 = siegel_moment(0, 0.5, &q()).unwrap().value;
        assert!(rel(k.eval(1.3, 7.0), 1.0 / m0) <= 1e-9);
    }

    #[test]
    fn reproducing_and_projection() {
        let mu = siegel_measure(0.5).unwrap();
        let k = cd_kernel(&mu, 3, &q()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let u = 1.0 + 3.0 * rng.gen::<f64>();
            let v = 1.0 + 3.0 * rng.gen::<f64>();
            let r = integrate(|s| k.eval(u, s) * k.eval(s, v), &mu, &q()).unwrap().value;
            assert!((r - k.eval(u, v)).abs() <= 1e-7 * k.eval(u, u).max(k.eval(v, v)));
        }
        let hs = integrate(
            |x| integrate(|y| k.eval(x, y).powi(2), &mu, &q()).unwrap().value,
            &mu,
            &q(),
        )
        .unwrap()
        .value;
        assert!((hs - 3.0).abs() <= 1e-7 * 3.0);
    }

    #[test]
    fn determinant_of_kernel_is_joint_density() {
        let mu = siegel_measure(0.5).unwrap();
        let k = cd_kernel(&mu, 3, &q()).unwrap();
        let z2 = zbeta(&ZRequest::new(mu.clone(), Beta::Two, 3)).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u: Vec<f64> = (0..3).map(|_| 1.0 + 4.0 * rng.gen::<f64>()).collect();
        let det = SquareMatrix::from_fn(3, |i, j| k.eval(u[i], u[j])).det();
        let v2 = ((u[1] - u[0]) * (u[2] - u[0]) * (u[2] - u[1])).powi(2);
        assert!(rel(det * z2, v2) <= 1e-6);
    }

    #[test]
    fn recurrence_is_three_term() {
        let mu = siegel_measure(1.0).unwrap();
        let basis = stabilized_basis(&mu, 5, &q()).unwrap();
        assert!(basis.recurrence_defect() <= 1e-6);
        let k = cd_kernel(&mu, 5, &q()).unwrap();
        assert!(k.recurrence().iter().skip(1).all(|&(_, b)| b > 0.0));
    }

    #[test]
    fn invalid_sigma() {
        assert!(siegel_measure(0.0).is_err());
        assert!(SiegelGaussian::new(2, -1.0).is_err());
        assert!(SiegelGaussian::new(0, 1.0).is_err());
    }
}
