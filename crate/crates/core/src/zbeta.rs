//! `z_β(μ)` as a single determinant or Pfaffian of moment matrices.
//!
//! | β | line                                   | circle                                    |
//! |---|----------------------------------------|-------------------------------------------|
//! | 1 | `pf{(u^k, u^ℓ)₁}` (bordered for odd N)  | `(−i)^{N(N−1)/2} pf{(g_k, g_ℓ)₁}`           |
//! | 2 | `det{m_{k+ℓ}}`                          | `det{c_{k−ℓ}}`                             |
//! | 4 | `pf{(u^k, u^ℓ)₄}`, size 2N              | `pf{(h_k, h_ℓ)₄}`, size 2N                  |
//!
//! with `g_k = u^{k−(N−1)/2}` and `h_k = u^{k−(N−1)}` on the circle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{
    self, form1, form2, form4, BasisFn, CircleMonomial, EpsilonConvention, HalfInt, LineMonomial, Measure,
};
use crate::linalg::{propagate_error, Precision, SquareMatrix};
use crate::quadrature::{rule_for, Estimate, QuadOptions};

/// Imaginary parts of circle evaluations above `IMAG_TOLERANCE·max(1, |value|)`
/// are reported as errors.
pub const IMAG_TOLERANCE: f64 = 1e-8;

/// Squared norm drop below which Gram–Schmidt declares the measure degenerate.
const DEGENERACY_RATIO: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Beta {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "4")]
    Four,
}

impl Beta {
    pub fn new(beta: u32) -> Result<Self> {
        match beta {
            1 => Ok(Beta::One),
            2 => Ok(Beta::Two),
            4 => Ok(Beta::Four),
            other => Err(Error::InvalidArgument(format!("beta must be 1, 2 or 4, got {other}"))),
        }
    }

    pub fn value(self) -> u32 {
        match self {
            Beta::One => 1,
            Beta::Two => 2,
            Beta::Four => 4,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub quad: QuadOptions,
    pub epsilon: EpsilonConvention,
    pub precision: Precision,
}

#[derive(Debug, Clone)]
pub struct ZRequest {
    pub mu: Measure,
    pub beta: Beta,
    pub n: usize,
    pub stabilize: bool,
    pub options: EvalOptions,
}

impl ZRequest {
    pub fn new(mu: Measure, beta: Beta, n: usize) -> Self {
        Self {
            mu,
            beta,
            n,
            stabilize: false,
            options: EvalOptions::default(),
        }
    }

    pub fn stabilized(mut self, on: bool) -> Self {
        self.stabilize = on;
        self
    }

    pub fn with_options(mut self, options: EvalOptions) -> Self {
        self.options = options;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("point count N must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    /// `|Im|` of the complex result before it was discarded (circle only).
    pub imag_residual: Option<f64>,
    pub matrix_dim: usize,
    pub method: String,
    pub err_estimate: f64,
}

/// Dispatches on the measure's domain.
pub fn zbeta(req: &ZRequest) -> Result<EvalResult> {
    if req.mu.is_circle() {
        zbeta_circle(req)
    } else {
        zbeta_line(req)
    }
}

/// Monic polynomials `p_k = u^k + …`, orthogonal under `(·,·)_{(μ,2)}` up to
/// discretisation error, generated by `p_{k+1} = u·p_k − Σ_{j≤k} c_{kj} p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizedBasis {
    connection: Vec<Vec<f64>>,
    norms: Vec<f64>,
    coefficients: Vec<Vec<f64>>,
}

impl StabilizedBasis {
    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// `‖p_k‖²` under the discretised measure.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Unit lower-triangular table: row `k` holds the monomial coefficients
    /// of `p_k`, constant term first.
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    /// Three-term recurrence coefficients `(α_k, β_k)` with
    /// `p_{k+1} = (u − α_k) p_k − β_k p_{k−1}` (`β₀ = 0`).
    pub fn recurrence(&self) -> Vec<(f64, f64)> {
        self.connection
            .iter()
            .enumerate()
            .map(|(k, c)| (c[k], if k > 0 { c[k - 1] } else { 0.0 }))
            .collect()
    }

    /// Largest `|c_{kj}|`, `j < k−1`, relative to the recurrence scale; zero
    /// for an exactly three-term recurrence.
    pub fn recurrence_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in self.connection.iter().enumerate() {
            let scale = c[k].abs() + if k > 0 { c[k - 1].abs() } else { 0.0 } + 1.0;
            for &v in c.iter().take(k.saturating_sub(1)) {
                worst = worst.max(v.abs() / scale);
            }
        }
        worst
    }

    pub fn eval(&self, u: f64) -> Vec<f64> {
        let n = self.len();
        let mut p = Vec::with_capacity(n);
        if n == 0 {
            return p;
        }
        p.push(1.0);
        for k in 0..n - 1 {
            let c = &self.connection[k];
            let mut next = u * p[k];
            for (j, cj) in c.iter().enumerate() {
                next -= cj * p[j];
            }
            p.push(next);
        }
        p
    }

    pub fn eval_with_derivative(&self, u: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut p = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        if n == 0 {
            return (p, d);
        }
        p.push(1.0);
        d.push(0.0);
        for k in 0..n - 1 {
            let c = &self.connection[k];
            let mut next = u * p[k];
            let mut dnext = p[k] + u * d[k];
            for (j, cj) in c.iter().enumerate() {
                next -= cj * p[j];
                dnext -= cj * d[j];
            }
            p.push(next);
            d.push(dnext);
        }
        (p, d)
    }
}

/// Builds `n` monic polynomials by Gram–Schmidt (with one round of
/// re-orthogonalisation) on a positive rule adapted to μ.
pub fn stabilized_basis(mu: &Measure, n: usize, opts: &QuadOptions) -> Result<StabilizedBasis> {
    if mu.is_circle() {
        return Err(Error::ChartMismatch("stabilized basis needs a line measure".into()));
    }
    if n == 0 {
        return Ok(StabilizedBasis {
            connection: vec![],
            norms: vec![],
            coefficients: vec![],
        });
    }
    let power = 2.0 * (n as f64 - 1.0);
    let rule = rule_for(mu, |u| (1.0 + u.abs()).powf(power), opts)?;
    let x = &rule.nodes;
    let w = &rule.weights;
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        let terms: Vec<f64> = a.iter().zip(b).zip(w).map(|((p, q), wi)| p * q * wi).collect();
        crate::quadrature::pairwise_sum(&terms)
    };
    let mut vectors: Vec<Vec<f64>> = vec![vec![1.0; x.len()]];
    let mut norms = vec![dot(&vectors[0], &vectors[0])];
    if !(norms[0] > 0.0 && norms[0].is_finite()) {
        return Err(Error::DegenerateMeasure { degree: 0 });
    }
    let mut connection = Vec::with_capacity(n);
    for k in 0..n - 1 {
        let mut v: Vec<f64> = vectors[k].iter().zip(x).map(|(p, xi)| p * xi).collect();
        let before = dot(&v, &v);
        let mut c = vec![0.0; k + 1];
        for _pass in 0..2 {
            for j in 0..=k {
                let coef = dot(&v, &vectors[j]) / norms[j];
                for (vi, pj) in v.iter_mut().zip(&vectors[j]) {
                    *vi -= coef * pj;
                }
                c[j] += coef;
            }
        }
        let after = dot(&v, &v);
        if !(after.is_finite() && after > DEGENERACY_RATIO * before) {
            return Err(Error::DegenerateMeasure { degree: k + 1 });
        }
        norms.push(after);
        vectors.push(v);
        connection.push(c);
    }
    let mut coefficients: Vec<Vec<f64>> = vec![vec![1.0]];
    for (k, c) in connection.iter().enumerate() {
        let mut next = vec![0.0; k + 2];
        for (i, v) in coefficients[k].iter().enumerate() {
            next[i + 1] += v;
        }
        for (j, cj) in c.iter().enumerate() {
            for (i, v) in coefficients[j].iter().enumerate() {
                next[i] -= cj * v;
            }
        }
        coefficients.push(next);
    }
    Ok(StabilizedBasis {
        connection,
        norms,
        coefficients,
    })
}

/// `p_k` of a [`StabilizedBasis`] as a line basis function.
pub struct StabilizedPoly<'a> {
    basis: &'a StabilizedBasis,
    degree: usize,
}

impl<'a> StabilizedPoly<'a> {
    pub fn new(basis: &'a StabilizedBasis, degree: usize) -> Self {
        assert!(degree < basis.len());
        Self { basis, degree }
    }
}

impl BasisFn for StabilizedPoly<'_> {
    type Out = f64;
    const ON_CIRCLE: bool = false;

    fn value(&self, u: f64) -> f64 {
        self.basis.eval(u)[self.degree]
    }

    fn derivative(&self, u: f64) -> f64 {
        self.basis.eval_with_derivative(u).1[self.degree]
    }

    fn degree_hint(&self) -> f64 {
        self.degree as f64
    }
}

/// Entries of a matrix, computed in parallel and returned in index order.
fn parallel_entries<T: Send>(
    pairs: &[(usize, usize)],
    f: impl Fn(usize, usize) -> Result<Estimate<T>> + Sync,
) -> Result<Vec<Estimate<T>>> {
    pairs.par_iter().map(|&(i, j)| f(i, j)).collect()
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

struct Assembled<T> {
    matrix: SquareMatrix<T>,
    errors: Vec<f64>,
}

fn assemble_skew<T: crate::linalg::Scalar>(n: usize, pairs: &[(usize, usize)], entries: &[Estimate<T>]) -> Assembled<T> {
    let mut matrix = SquareMatrix::skew_from_upper(n, |_, _| T::zero());
    let mut errors = vec![0.0; n * n];
    for (&(i, j), e) in pairs.iter().zip(entries) {
        matrix.set(i, j, e.value);
        matrix.set(j, i, -e.value);
        errors[i * n + j] = e.error;
        errors[j * n + i] = e.error;
    }
    Assembled { matrix, errors }
}

/// Line evaluation (real interval measures).
pub fn zbeta_line(req: &ZRequest) -> Result<EvalResult> {
    req.validate()?;
    if req.mu.is_circle() {
        return Err(Error::ChartMismatch("zbeta_line called with a circle measure".into()));
    }
    let n = req.n;
    let opts = &req.options.quad;
    let mu = &req.mu;
    let size = match req.beta {
        Beta::One | Beta::Two => n,
        Beta::Four => 2 * n,
    };
    let basis = if req.stabilize {
        Some(stabilized_basis(mu, size, opts)?)
    } else {
        None
    };
    let basis_tag = if req.stabilize { "stabilized" } else { "monomial" };

    match req.beta {
        Beta::Two => {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
            let entries = match &basis {
                Some(b) => parallel_entries(&pairs, |i, j| {
                    form2(&StabilizedPoly::new(b, i), &StabilizedPoly::new(b, j), mu, opts)
                })?,
                None => {
                    let moments = line_moments(mu, 2 * n - 1, opts)?;
                    pairs.iter().map(|&(i, j)| moments[i + j]).collect()
                }
            };
            let mut matrix = SquareMatrix::zeros(n);
            let mut errors = vec![0.0; n * n];
            for (&(i, j), e) in pairs.iter().zip(&entries) {
                matrix.set(i, j, e.value);
                matrix.set(j, i, e.value);
                errors[i * n + j] = e.error;
                errors[j * n + i] = e.error;
            }
            let value = matrix.det_with(req.options.precision);
            let err = propagate_error(&matrix, value, &errors, false);
            Ok(EvalResult {
                value,
                imag_residual: None,
                matrix_dim: n,
                method: format!("det(hankel form2, {basis_tag})"),
                err_estimate: err,
            })
        }
        Beta::One => {
            let eps = req.options.epsilon;
            let pairs = upper_pairs(n);
            let entries = match &basis {
                Some(b) => parallel_entries(&pairs, |i, j| {
                    form1(&StabilizedPoly::new(b, i), &StabilizedPoly::new(b, j), mu, eps, opts)
                })?,
                None => parallel_entries(&pairs, |i, j| {
                    form1(&LineMonomial::new(i as i32), &LineMonomial::new(j as i32), mu, eps, opts)
                })?,
            };
            let dim = if n % 2 == 0 { n } else { n + 1 };
            let mut all_pairs = pairs.clone();
            let mut all_entries = entries;
            if n % 2 == 1 {
                let border: Vec<(usize, usize)> = (0..n).map(|k| (k, n)).collect();
                let border_entries = match &basis {
                    Some(b) => parallel_entries(&border, |k, _| {
                        form2(&StabilizedPoly::new(b, 0), &StabilizedPoly::new(b, k), mu, opts)
                    })?,
                    None => {
                        let moments = line_moments(mu, n, opts)?;
                        border.iter().map(|&(k, _)| moments[k]).collect()
                    }
                };
                all_pairs.extend(border);
                all_entries.extend(border_entries);
            }
            let Assembled { matrix, errors } = assemble_skew(dim, &all_pairs, &all_entries);
            if eps == EpsilonConvention::UnitStep {
                // the unit-step pairing is not antisymmetric: rebuild the
                // lower triangle from the transposed pairing to expose it
                let lower = match &basis {
                    Some(b) => parallel_entries(&pairs, |i, j| {
                        form1(&StabilizedPoly::new(b, j), &StabilizedPoly::new(b, i), mu, eps, opts)
                    })?,
                    None => parallel_entries(&pairs, |i, j| {
                        form1(&LineMonomial::new(j as i32), &LineMonomial::new(i as i32), mu, eps, opts)
                    })?,
                };
                let mut general = matrix.clone();
                for (&(i, j), e) in pairs.iter().zip(&lower) {
                    general.set(j, i, e.value);
                }
                general.check_skew()?;
            }
            let value = matrix.pfaffian_with(req.options.precision)?;
            let err = propagate_error(&matrix, value, &errors, true);
            Ok(EvalResult {
                value,
                imag_residual: None,
                matrix_dim: dim,
                method: format!(
                    "pf(form1{}, {basis_tag})",
                    if n % 2 == 1 { " bordered" } else { "" }
                ),
                err_estimate: err,
            })
        }
        Beta::Four => {
            let dim = 2 * n;
            let pairs = upper_pairs(dim);
            let entries = match &basis {
                Some(b) => parallel_entries(&pairs, |i, j| {
                    form4(&StabilizedPoly::new(b, i), &StabilizedPoly::new(b, j), mu, opts)
                })?,
                None => {
                    // (u^k, u^ℓ)₄ = (ℓ − k)·m_{k+ℓ−1}; m_{−1} never appears for k < ℓ
                    let moments = line_moments(mu, 2 * dim - 2, opts)?;
                    pairs
                        .iter()
                        .map(|&(k, l)| {
                            let c = (l - k) as f64;
                            let m = moments[k + l - 1];
                            Estimate {
                                value: c * m.value,
                                error: c * m.error,
                            }
                        })
                        .collect()
                }
            };
            let Assembled { matrix, errors } = assemble_skew(dim, &pairs, &entries);
            let value = matrix.pfaffian_with(req.options.precision)?;
            let err = propagate_error(&matrix, value, &errors, true);
            Ok(EvalResult {
                value,
                imag_residual: None,
                matrix_dim: dim,
                method: format!("pf(form4, {basis_tag})"),
                err_estimate: err,
            })
        }
    }
}

fn line_moments(mu: &Measure, count: usize, opts: &QuadOptions) -> Result<Vec<Estimate<f64>>> {
    (0..count)
        .into_par_iter()
        .map(|k| forms::line_moment(mu, k as i32, opts))
        .collect()
}

/// `(−i)^q · z`, applied as an exact quarter turn.
fn quarter_turns(z: Complex64, q: usize) -> Complex64 {
    match q % 4 {
        0 => z,
        1 => Complex64::new(z.im, -z.re),
        2 => -z,
        _ => Complex64::new(-z.im, z.re),
    }
}

/// Circle evaluation. Basis stabilisation does not apply (the Fourier
/// basis is already orthonormal for the uniform measure) and is ignored.
pub fn zbeta_circle(req: &ZRequest) -> Result<EvalResult> {
    req.validate()?;
    if !req.mu.is_circle() {
        return Err(Error::ChartMismatch("zbeta_circle called with a line measure".into()));
    }
    let n = req.n;
    let opts = &req.options.quad;
    let mu = &req.mu;
    let fourier = |j: i32| forms::circle_moment(mu, j, opts);

    let (value, err, dim, method) = match req.beta {
        Beta::Two => {
            let span = n as i32 - 1;
            let coeffs: Vec<Estimate<Complex64>> = (-span..=span)
                .into_par_iter()
                .map(fourier)
                .collect::<Result<_>>()?;
            let c = |j: i32| coeffs[(j + span) as usize];
            let matrix = SquareMatrix::from_fn(n, |k, l| c(k as i32 - l as i32).value);
            let errors: Vec<f64> = (0..n * n).map(|ij| c((ij / n) as i32 - (ij % n) as i32).error).collect();
            let v = matrix.det();
            let e = propagate_error(&matrix, v, &errors, false);
            (v, e, n, "det(toeplitz form2)".to_string())
        }
        Beta::One => {
            let shift = n as i32 - 1;
            let g = |k: usize| CircleMonomial(HalfInt::from_twice(2 * k as i32 - shift));
            let pairs = upper_pairs(n);
            let eps = req.options.epsilon;
            let mut entries = parallel_entries(&pairs, |i, j| form1(&g(i), &g(j), mu, eps, opts))?;
            let mut all_pairs = pairs;
            let dim = if n % 2 == 0 { n } else { n + 1 };
            if n % 2 == 1 {
                let border: Vec<(usize, usize)> = (0..n).map(|k| (k, n)).collect();
                let border_entries =
                    parallel_entries(&border, |k, _| form2(&CircleMonomial::new(0), &g(k), mu, opts))?;
                all_pairs.extend(border);
                entries.extend(border_entries);
            }
            let Assembled { matrix, errors } = assemble_skew(dim, &all_pairs, &entries);
            let pf = matrix.pfaffian()?;
            let e = propagate_error(&matrix, pf, &errors, true);
            let v = quarter_turns(pf, n * (n - 1) / 2);
            let method = format!(
                "(-i)^{} pf(form1{}, half-integer powers)",
                n * (n - 1) / 2,
                if n % 2 == 1 { " bordered" } else { "" }
            );
            (v, e, dim, method)
        }
        Beta::Four => {
            let dim = 2 * n;
            let shift = n as i32 - 1;
            // (h_k, h_ℓ)₄ = (ℓ − k)·c_{k+ℓ−2(N−1)−1}
            let lo = 1 - 2 * shift - 1;
            let hi = 2 * (dim as i32 - 1) - 2 * shift - 1;
            let coeffs: Vec<Estimate<Complex64>> =
                (lo..=hi).into_par_iter().map(fourier).collect::<Result<_>>()?;
            let pairs = upper_pairs(dim);
            let entries: Vec<Estimate<Complex64>> = pairs
                .iter()
                .map(|&(k, l)| {
                    let c = coeffs[(k as i32 + l as i32 - 2 * shift - 1 - lo) as usize];
                    let f = (l - k) as f64;
                    Estimate {
                        value: c.value * f,
                        error: c.error * f,
                    }
                })
                .collect();
            let Assembled { matrix, errors } = assemble_skew(dim, &pairs, &entries);
            let v = matrix.pfaffian()?;
            let e = propagate_error(&matrix, v, &errors, true);
            (v, e, dim, "pf(form4, shifted powers)".to_string())
        }
    };
    let residual = value.im.abs();
    if residual > IMAG_TOLERANCE * value.re.abs().max(1.0) {
        return Err(Error::ImagResidualTooLarge {
            value: value.re,
            residual,
        });
    }
    Ok(EvalResult {
        value: value.re,
        imag_residual: Some(residual),
        matrix_dim: dim,
        method,
        err_estimate: err,
    })
}
