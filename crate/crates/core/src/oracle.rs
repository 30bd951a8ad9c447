//! Brute-force `z_β(μ) = (1/N!) ∫ |V|^β dμ^N` at small N.
//!
//! The quadrature method integrates over the ordered chamber
//! `s₁ < … < s_N` of the chart variable, which carries the full `1/N!`
//! symmetry factor; inside the chamber `|V|^β` is smooth, so composite
//! Gauss rules converge geometrically even for odd β. The Monte Carlo
//! method samples μ by inverse transform.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::Measure;
use crate::quadrature::{pairwise_sum, GaussLegendre, Span};
use crate::quadrature::{cumulative, Estimate, QuadOptions};
use crate::zbeta::Beta;

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
const BATCH: u64 = 1 << 16;
const TABLE_POINTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    TensorQuadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct OracleRequest {
    pub mu: Measure,
    pub beta: Beta,
    pub n: usize,
    pub method: OracleMethod,
}

impl OracleRequest {
    pub fn tensor(mu: Measure, beta: Beta, n: usize) -> Self {
        Self {
            mu,
            beta,
            n,
            method: OracleMethod::TensorQuadrature,
        }
    }

    pub fn monte_carlo(mu: Measure, beta: Beta, n: usize, samples: u64, seed: u64) -> Self {
        Self {
            mu,
            beta,
            n,
            method: OracleMethod::MonteCarlo { samples, seed },
        }
    }
}

/// Largest N the quadrature method accepts for a given β.
pub fn tensor_limit(beta: Beta) -> usize {
    match beta {
        Beta::One | Beta::Two => 4,
        Beta::Four => 3,
    }
}

pub fn zbeta_bruteforce(req: &OracleRequest) -> Result<Estimate<f64>> {
    if req.n == 0 {
        return Err(Error::InvalidArgument("point count N must be at least 1".into()));
    }
    match req.method {
        OracleMethod::TensorQuadrature => {
            let axes: Vec<usize> = (0..req.n).collect();
            tensor_with_axes(req, &axes)
        }
        OracleMethod::MonteCarlo { samples, seed } => monte_carlo(&req.mu, req.beta, req.n, samples, seed),
    }
}

/// Quadrature oracle with the μ factors assigned to grid axes in the order
/// `axes`. The result does not depend on `axes`.
pub fn tensor_with_axes(req: &OracleRequest, axes: &[usize]) -> Result<Estimate<f64>> {
    let n = req.n;
    let limit = tensor_limit(req.beta);
    if n > limit {
        let opts = ChamberOptions::default();
        return Err(Error::BudgetExceeded {
            needed: pass_cost(opts.max_order, n),
            budget: pass_cost(opts.max_order, limit),
        });
    }
    let mut sorted = axes.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidArgument("axes must be a permutation of 0..N".into()));
    }
    let beta = req.beta.as_f64();
    let mu = &req.mu;
    let one_body = |s: f64| mu.point(s).1;
    if mu.is_circle() {
        // |e^{ix} − e^{iy}| = 2|sin((x − y)/2)|
        let pair = |x: f64, y: f64| (2.0 * (0.5 * (x - y)).sin().abs()).powf(beta);
        chamber_integral_axes(n, mu.span(), one_body, pair, axes, &ChamberOptions::default())
    } else {
        let pair = |x: f64, y: f64| (mu.point(x).0 - mu.point(y).0).abs().powf(beta);
        let chart = mu.chart();
        let pair_fast = move |x: f64, y: f64| {
            if chart.kind == crate::forms::ChartKind::Direct {
                (chart.scale * (x - y)).abs().powf(beta)
            } else {
                pair(x, y)
            }
        };
        chamber_integral_axes(n, mu.span(), one_body, pair_fast, axes, &ChamberOptions::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamberOptions {
    /// Gauss order on the outermost level in the first pass; doubled per pass.
    pub start_order: usize,
    pub max_order: usize,
    pub rel_tol: f64,
    /// Largest accepted error when `max_order` is reached, relative to the value.
    pub accept_tol: f64,
    pub max_evals: u64,
}

impl Default for ChamberOptions {
    fn default() -> Self {
        Self {
            start_order: 8,
            max_order: 512,
            rel_tol: 1e-10,
            accept_tol: 1e-7,
            max_evals: 400_000_000,
        }
    }
}

/// Approximate node count of one pass: `order^n / n!`.
fn pass_cost(order: usize, n: usize) -> u64 {
    let mut cost = 1.0f64;
    for k in 1..=n {
        cost *= order as f64 / k as f64;
    }
    cost.min(u64::MAX as f64) as u64
}

/// `∫_{s₁<…<s_n} Π ρ(s_i) Π_{i<j} π(s_i, s_j) ds` over `span`. The pair
/// function must be symmetric.
pub fn chamber_integral(
    n: usize,
    span: Span,
    one_body: impl Fn(f64) -> f64 + Sync,
    pair: impl Fn(f64, f64) -> f64 + Sync,
    opts: &ChamberOptions,
) -> Result<Estimate<f64>> {
    let axes: Vec<usize> = (0..n).collect();
    chamber_integral_axes(n, span, one_body, pair, &axes, opts)
}

fn chamber_integral_axes(
    n: usize,
    span: Span,
    one_body: impl Fn(f64) -> f64 + Sync,
    pair: impl Fn(f64, f64) -> f64 + Sync,
    axes: &[usize],
    opts: &ChamberOptions,
) -> Result<Estimate<f64>> {
    // a semi-infinite span is mapped to [0, 1) once, for every level; the
    // map is increasing, so the chamber is preserved
    let (a, b, map) = match span {
        Span::Finite(a, b) => (a, b, None),
        Span::SemiInfinite { a, scale } => (0.0, 1.0, Some((a, scale))),
    };
    let to_span = |t: f64| match map {
        None => (t, 1.0),
        Some((a, scale)) => {
            let r = 1.0 - t;
            (a + scale * t / r, scale / (r * r))
        }
    };
    let mapped_one_body = |t: f64| {
        let (s, jac) = to_span(t);
        let rho = one_body(s);
        if rho == 0.0 {
            0.0
        } else {
            rho * jac
        }
    };
    let mapped_pair = |x: f64, y: f64| pair(to_span(x).0, to_span(y).0);
    let rules: Vec<Arc<GaussLegendre>> = (0..=opts.max_order.max(1))
        .map(|m| GaussLegendre::cached(m.max(1)))
        .collect();
    let grid = Chamber {
        n,
        lo: a,
        hi: b,
        one_body: &mapped_one_body,
        pair: &mapped_pair,
        axes,
        rules: &rules,
    };
    let mut order = opts.start_order.max(2);
    let mut prev = grid.evaluate(order);
    if !prev.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut prev_change = f64::INFINITY;
    loop {
        let next_order = 2 * order;
        let cost = pass_cost(next_order, n);
        if next_order > opts.max_order || cost > opts.max_evals {
            if prev_change <= opts.accept_tol * prev.abs() {
                return Ok(Estimate {
                    value: prev,
                    error: prev_change,
                });
            }
            if cost > opts.max_evals {
                return Err(Error::BudgetExceeded {
                    needed: cost,
                    budget: opts.max_evals,
                });
            }
            return Err(Error::NoConvergence {
                value: prev,
                error: prev_change,
                panels: order,
            });
        }
        let next = grid.evaluate(next_order);
        if !next.is_finite() {
            return Err(Error::NonFinite);
        }
        let change = (next - prev).abs();
        // geometric convergence: the next change is about change²/prev_change
        let error = if change < prev_change && prev_change.is_finite() {
            change * (change / prev_change)
        } else {
            change
        }
        .max(4.0 * f64::EPSILON * next.abs());
        if error <= opts.rel_tol * next.abs() || next == 0.0 {
            return Ok(Estimate { value: next, error });
        }
        prev = next;
        prev_change = change;
        order = next_order;
    }
}

struct Chamber<'a, F, P> {
    n: usize,
    lo: f64,
    hi: f64,
    one_body: &'a F,
    pair: &'a P,
    axes: &'a [usize],
    rules: &'a [Arc<GaussLegendre>],
}

impl<F: Fn(f64) -> f64 + Sync, P: Fn(f64, f64) -> f64 + Sync> Chamber<'_, F, P> {
    /// One pass with `order` nodes on the outermost level; inner levels use
    /// a node count proportional to their interval length.
    fn evaluate(&self, order: usize) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        // outermost level: the largest point, over the whole span
        let lo = self.lo;
        let outer: Vec<(f64, f64)> = nodes(&self.rules[order], lo, self.hi).collect();
        let terms: Vec<f64> = outer
            .par_iter()
            .map(|&(s, w)| {
                let mut slots = vec![f64::NAN; self.n];
                slots[self.axes[self.n - 1]] = s;
                let rho = (self.one_body)(s);
                if rho == 0.0 || w == 0.0 {
                    return 0.0;
                }
                w * rho * self.inner(self.n - 1, s, order, &mut slots)
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Integral over levels `0..level`, each below the previous, given the
    /// points already placed in `slots`.
    fn inner(&self, level: usize, upper: f64, order: usize, slots: &mut [f64]) -> f64 {
        if level == 0 {
            return 1.0;
        }
        let k = level - 1;
        let frac = (upper - self.lo) / (self.hi - self.lo);
        let m = ((order as f64 * frac).ceil() as usize).clamp(order.min(4), order);
        let mut acc = 0.0;
        for (s, w) in nodes(&self.rules[m], self.lo, upper) {
            let rho = (self.one_body)(s);
            if rho == 0.0 {
                continue;
            }
            let mut f = w * rho;
            for placed in level..self.n {
                let t = slots[self.axes[placed]];
                // canonical argument order keeps the pair product independent
                // of the slot layout
                f *= if s <= t { (self.pair)(s, t) } else { (self.pair)(t, s) };
            }
            if f == 0.0 {
                continue;
            }
            slots[self.axes[k]] = s;
            acc += f * self.inner(k, s, order, slots);
        }
        acc
    }
}

fn nodes(rule: &GaussLegendre, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(move |(x, w)| (mid + half * x, half * w))
}

/// Inverse-transform sampler in the chart variable of a measure.
pub struct InverseCdf {
    map: Map,
    probs: Vec<f64>,
    knots: Vec<f64>,
    slopes: Vec<f64>,
    mass: f64,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    Rational { a: f64, scale: f64 },
}

impl Map {
    fn forward(self, t: f64) -> f64 {
        match self {
            Map::Identity => t,
            Map::Rational { a, scale } => a + scale * t / (1.0 - t),
        }
    }
}

impl InverseCdf {
    /// Tabulates the cumulative distribution of μ on `TABLE_POINTS` points.
    pub fn new(mu: &Measure, opts: &QuadOptions) -> Result<Self> {
        let line = if mu.is_circle() { mu.angle_chart()? } else { mu.clone() };
        let cum = cumulative(|_| 1.0, &line, opts).map_err(|e| Error::NonSamplable(e.to_string()))?;
        let mass = cum.total().value;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NonSamplable(format!("total mass {mass}")));
        }
        let (map, t0, t1) = match line.span() {
            Span::Finite(a, b) => (Map::Identity, a, b),
            Span::SemiInfinite { a, scale } => (Map::Rational { a, scale }, 0.0, 1.0),
        };
        let ts: Vec<f64> = (0..TABLE_POINTS)
            .map(|i| t0 + (t1 - t0) * i as f64 / (TABLE_POINTS - 1) as f64)
            .collect();
        let chart_points: Vec<f64> = ts
            .iter()
            .map(|&t| if t >= 1.0 && matches!(map, Map::Rational { .. }) { f64::INFINITY } else { map.forward(t) })
            .collect();
        let values = cum.eval_many_chart(&chart_points);
        let mut probs = Vec::with_capacity(TABLE_POINTS);
        let mut knots = Vec::with_capacity(TABLE_POINTS);
        let mut last = f64::NEG_INFINITY;
        for (i, (&t, &c)) in ts.iter().zip(&values).enumerate() {
            let p = if i == TABLE_POINTS - 1 { 1.0 } else { (c / mass).clamp(0.0, 1.0) };
            if !p.is_finite() {
                return Err(Error::NonSamplable("cumulative is not finite".into()));
            }
            if p > last {
                probs.push(p);
                knots.push(t);
                last = p;
            }
        }
        if probs.len() < 2 {
            return Err(Error::NonSamplable("cumulative is not invertible".into()));
        }
        let slopes = fritsch_carlson(&probs, &knots);
        Ok(Self {
            map,
            probs,
            knots,
            slopes,
            mass,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Chart coordinate with cumulative probability `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let t = hermite(&self.probs, &self.knots, &self.slopes, p);
        self.map.forward(t)
    }
}

/// Monotone cubic Hermite slopes for `y(x)` with increasing `x` and
/// non-decreasing `y`.
fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        m[i] = if delta[i - 1] * delta[i] <= 0.0 {
            0.0
        } else {
            0.5 * (delta[i - 1] + delta[i])
        };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / delta[i];
        let b = m[i + 1] / delta[i];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * a * delta[i];
            m[i + 1] = tau * b * delta[i];
        }
    }
    m
}

fn hermite(x: &[f64], y: &[f64], m: &[f64], p: f64) -> f64 {
    let n = x.len();
    if p <= x[0] {
        return y[0];
    }
    if p >= x[n - 1] {
        return y[n - 1];
    }
    let i = x.partition_point(|&v| v <= p) - 1;
    let h = x[i + 1] - x[i];
    let t = (p - x[i]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y[i]
        + (t3 - 2.0 * t2 + t) * h * m[i]
        + (-2.0 * t3 + 3.0 * t2) * y[i + 1]
        + (t3 - t2) * h * m[i + 1]
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Monte Carlo estimate with `err = 3·standard error`. Batches draw from
/// independent ChaCha streams keyed by batch index, so the result does not
/// depend on the thread count.
pub fn monte_carlo(mu: &Measure, beta: Beta, n: usize, samples: u64, seed: u64) -> Result<Estimate<f64>> {
    if samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are needed".into()));
    }
    let sampler = InverseCdf::new(mu, &QuadOptions::default())?;
    let circle = mu.is_circle();
    let b = beta.as_f64();
    let log_scale = n as f64 * sampler.mass().ln() - ln_factorial(n);
    let batches = samples.div_ceil(BATCH);
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let count = BATCH.min(samples - batch * BATCH) as usize;
            let mut point = vec![0.0; n];
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                for x in point.iter_mut() {
                    let s = sampler.quantile(rng.gen::<f64>());
                    *x = if circle { s } else { mu.point(s).0 };
                }
                let mut log_v = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        let d = if circle {
                            2.0 * (0.5 * (point[i] - point[j])).sin().abs()
                        } else {
                            (point[i] - point[j]).abs()
                        };
                        log_v += d.ln();
                    }
                }
                values.push((b * log_v + log_scale).exp());
            }
            let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
            (pairwise_sum(&values), pairwise_sum(&squares))
        })
        .collect();
    let total: Vec<f64> = sums.iter().map(|s| s.0).collect();
    let total_sq: Vec<f64> = sums.iter().map(|s| s.1).collect();
    let m = samples as f64;
    let mean = pairwise_sum(&total) / m;
    let var = ((pairwise_sum(&total_sq) / m - mean * mean) * m / (m - 1.0)).max(0.0);
    if !mean.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(Estimate {
        value: mean,
        error: 3.0 * (var / m).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zbeta::{zbeta, ZRequest};
    use std::f64::consts::PI;

    fn tensor(mu: Measure, beta: Beta, n: usize) -> Estimate<f64> {
        zbeta_bruteforce(&OracleRequest::tensor(mu, beta, n)).unwrap()
    }

    #[test]
    fn single_point_is_mass() {
        for beta in [Beta::One, Beta::Two, Beta::Four] {
            let e = tensor(Measure::exponential(1.0).unwrap(), beta, 1);
            assert!((e.value - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn closed_forms() {
        let uni = || Measure::uniform(0.0, 1.0).unwrap();
        assert!((tensor(uni(), Beta::Two, 2).value - 1.0 / 12.0).abs() <= 1e-12);
        assert!((tensor(uni(), Beta::One, 2).value - 1.0 / 6.0).abs() <= 1e-12);
        assert!((tensor(uni(), Beta::Four, 2).value - 1.0 / 30.0).abs() <= 1e-12);
        let c = tensor(Measure::circle_uniform(), Beta::One, 2);
        assert!((c.value - 2.0 / PI).abs() <= 1e-10, "{}", c.value);
    }

    #[test]
    fn agrees_with_determinants() {
        let mu = Measure::exponential(1.0).unwrap();
        for beta in [Beta::One, Beta::Two] {
            let z = zbeta(&ZRequest::new(mu.clone(), beta, 3)).unwrap().value;
            let o = tensor(mu.clone(), beta, 3);
            assert!((z - o.value).abs() <= 1e-8 * z, "beta {beta}: {z} vs {}", o.value);
        }
    }

    #[test]
    fn axis_permutation_is_bit_identical() {
        let req = OracleRequest::tensor(Measure::power(1.0).unwrap(), Beta::One, 3);
        let a = tensor_with_axes(&req, &[0, 1, 2]).unwrap();
        for axes in [[2, 0, 1], [1, 2, 0], [2, 1, 0]] {
            let b = tensor_with_axes(&req, &axes).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
        assert!(tensor_with_axes(&req, &[0, 0, 1]).is_err());
    }

    #[test]
    fn budget_limits() {
        let mu = Measure::uniform(0.0, 1.0).unwrap();
        let r = zbeta_bruteforce(&OracleRequest::tensor(mu.clone(), Beta::Four, 4));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
        let r = zbeta_bruteforce(&OracleRequest::tensor(mu, Beta::Two, 5));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn monte_carlo_matches_closed_forms() {
        let e = monte_carlo(&Measure::uniform(0.0, 1.0).unwrap(), Beta::Two, 2, 200_000, 7).unwrap();
        assert!((e.value - 1.0 / 12.0).abs() <= e.error, "{e:?}");
        let c = monte_carlo(&Measure::circle_uniform(), Beta::One, 2, 200_000, 42).unwrap();
        assert!((c.value - 2.0 / PI).abs() <= c.error, "{c:?}");
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let mu = Measure::exponential(1.0).unwrap();
        let a = monte_carlo(&mu, Beta::One, 2, 100_000, 3).unwrap();
        let b = monte_carlo(&mu, Beta::One, 2, 100_000, 3).unwrap();
        let c = monte_carlo(&mu, Beta::One, 2, 100_000, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn quantiles_of_exponential() {
        let s = InverseCdf::new(&Measure::exponential(1.0).unwrap(), &QuadOptions::default()).unwrap();
        for p in [0.1, 0.5, 0.9] {
            let q = s.quantile(p);
            assert!((q + (1.0 - p).ln()).abs() <= 1e-6, "p {p}: {q}");
        }
    }

    #[test]
    fn monte_carlo_agrees_with_tensor() {
        let mu = Measure::power(1.0).unwrap();
        let t = tensor(mu.clone(), Beta::One, 3);
        let m = monte_carlo(&mu, Beta::One, 3, 300_000, 11).unwrap();
        assert!((t.value - m.value).abs() <= m.error + 3.0 * t.error);
    }
}
