//! One-dimensional integration against a [`Measure`].
//!
//! Finite spans use adaptive Gauss–Legendre panels. Semi-infinite spans are
//! mapped to `[0, 1)` with `x = a + L·t/(1−t)` before the same engine runs;
//! a geometric-segment scheme is available for integrands with very slow
//! (log-normal) decay. Circle measures use the periodic trapezoidal rule
//! with node doubling.

mod gauss;

use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use gauss::{pairwise_sum, GaussLegendre, Span};
pub(crate) use gauss::{adaptive, EngineMap};

use crate::error::{Error, Result};
use crate::forms::Measure;

/// Values an integrand may return.
pub trait Value:
    Copy
    + Debug
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
{
    fn norm(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Value for f64 {
    fn norm(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Value for Complex64 {
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemiInfiniteScheme {
    #[default]
    Rational,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    /// Zero by default, which keeps results homogeneous in the measure.
    /// Integrals that cancel stop at the rounding floor `50ε·∫|f|` instead.
    pub abs_tol: f64,
    pub max_panels: usize,
    pub order: usize,
    pub initial_panels: usize,
    pub max_circle_nodes: usize,
    pub semi_infinite: SemiInfiniteScheme,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_panels: 4096,
            order: 20,
            initial_panels: 4,
            max_circle_nodes: 1 << 20,
            semi_infinite: SemiInfiniteScheme::Rational,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// A discrete rule `Σ w_i f(x_i)` approximating `∫ f dμ`; weights already
/// contain the density of μ.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Abscissae in the measure's own coordinate (`u`, or the angle).
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply<T: Value>(&self, f: impl Fn(f64) -> T) -> T {
        let terms: Vec<T> = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).collect();
        pairwise_sum(&terms)
    }
}

/// `∫ f dμ`. On the circle the integrand is assumed `2π`-periodic in the
/// angle; use [`integrate_angle`] otherwise.
pub fn integrate<T: Value>(f: impl Fn(f64) -> T, mu: &Measure, opts: &QuadOptions) -> Result<Estimate<T>> {
    if mu.is_circle() {
        return integrate_periodic(|x| f(x) * mu.weight(x), 32, opts);
    }
    integrate_chart(|s| chart_integrand(&f, mu, s), mu.span(), opts)
}

/// `∫ f dμ` over the angle interval `[0, 2π]` with Gauss panels; valid for
/// non-periodic integrands.
pub fn integrate_angle<T: Value>(f: impl Fn(f64) -> T, mu: &Measure, opts: &QuadOptions) -> Result<Estimate<T>> {
    let line = mu.angle_chart()?;
    integrate(f, &line, opts)
}

#[inline]
pub(crate) fn chart_integrand<T: Value>(f: &impl Fn(f64) -> T, mu: &Measure, s: f64) -> T {
    let (u, dens) = mu.point(s);
    if dens == 0.0 {
        T::default()
    } else {
        f(u) * dens
    }
}

/// Integrates a function of the chart variable over `span`.
pub fn integrate_chart<T: Value>(f: impl Fn(f64) -> T, span: Span, opts: &QuadOptions) -> Result<Estimate<T>> {
    let part = adaptive(f, span, opts)?;
    Ok(Estimate {
        value: part.value,
        error: part.error,
    })
}

/// Trapezoidal rule on `[0, 2π)` with node doubling, starting from at least
/// `min_nodes` nodes.
pub fn integrate_periodic<T: Value>(f: impl Fn(f64) -> T, min_nodes: usize, opts: &QuadOptions) -> Result<Estimate<T>> {
    let mut m = min_nodes.max(8).next_power_of_two();
    let h = 2.0 * PI / m as f64;
    let samples: Vec<T> = (0..m).map(|k| f(h * k as f64)).collect();
    let mut sum = pairwise_sum(&samples);
    let mut abs_sum: f64 = samples.iter().map(|v| v.norm()).sum();
    let mut current = sum * h;
    loop {
        if !current.is_finite() {
            return Err(Error::NonFinite);
        }
        let m2 = 2 * m;
        if m2 > opts.max_circle_nodes {
            return Err(Error::NoConvergence {
                value: current.norm(),
                error: f64::INFINITY,
                panels: m,
            });
        }
        let h2 = 2.0 * PI / m2 as f64;
        let mids: Vec<T> = (0..m).map(|k| f(h2 * (2 * k + 1) as f64)).collect();
        sum += pairwise_sum(&mids);
        abs_sum += mids.iter().map(|v| v.norm()).sum::<f64>();
        let next = sum * h2;
        let error = (next - current).norm();
        if error <= gauss::target(opts, next.norm(), abs_sum * h2) {
            return Ok(Estimate { value: next, error });
        }
        current = next;
        m = m2;
    }
}

/// Running integral `G(u) = ∫_{v ≤ u} g(v) μ(dv)`.
///
/// The adaptive partition for `g·w` is built once; each evaluation adds the
/// stored prefix of whole panels to a Gauss estimate over the partial panel.
pub struct Cumulative<T, F> {
    measure: Measure,
    integrand: F,
    map: EngineMap,
    panels: Vec<(f64, f64)>,
    prefix: Vec<T>,
    total: Estimate<T>,
    rule: std::sync::Arc<GaussLegendre>,
}

pub fn cumulative<T: Value, G: Fn(f64) -> T>(
    g: G,
    mu: &Measure,
    opts: &QuadOptions,
) -> Result<Cumulative<T, G>> {
    let measure = if mu.is_circle() { mu.angle_chart()? } else { mu.clone() };
    let part = adaptive(|s| chart_integrand(&g, &measure, s), measure.span(), opts)?;
    let mut prefix = Vec::with_capacity(part.panels.len() + 1);
    let mut acc = T::default();
    for p in &part.panels {
        prefix.push(acc);
        acc += p.value;
    }
    Ok(Cumulative {
        panels: part.panels.iter().map(|p| (p.a, p.b)).collect(),
        prefix,
        total: Estimate {
            value: part.value,
            error: part.error,
        },
        map: part.map,
        measure,
        integrand: g,
        rule: GaussLegendre::cached(opts.order),
    })
}

impl<T: Value, G: Fn(f64) -> T> Cumulative<T, G> {
    pub fn total(&self) -> Estimate<T> {
        self.total
    }

    /// `G` at the measure coordinate `u` (the angle for circle measures).
    pub fn eval(&self, u: f64) -> T {
        self.eval_chart(self.measure.to_chart(u))
    }

    fn engine_integrand(&self, t: f64) -> T {
        let (s, jac) = self.map.forward(t);
        if !jac.is_finite() {
            return T::default();
        }
        chart_integrand(&self.integrand, &self.measure, s) * jac
    }

    /// `G` at chart coordinate `s`.
    pub fn eval_chart(&self, s: f64) -> T {
        let t = self.map.inverse(s);
        let (lo, hi) = match (self.panels.first(), self.panels.last()) {
            (Some(f), Some(l)) => (f.0, l.1),
            _ => return T::default(),
        };
        if t <= lo {
            return T::default();
        }
        if t >= hi {
            return self.total.value;
        }
        let i = self.panels.partition_point(|p| p.1 <= t).min(self.panels.len() - 1);
        self.prefix[i] + self.partial(i, t)
    }

    fn partial(&self, i: usize, t: f64) -> T {
        let f = |x: f64| self.engine_integrand(x);
        let (a, b) = self.panels[i];
        let m = 0.5 * (a + b);
        if t <= m {
            self.rule.apply(&f, a, t)
        } else {
            self.rule.apply(&f, a, m) + self.rule.apply(&f, m, t)
        }
    }

    /// Evaluates `G` at many chart points. Points are visited in sorted order
    /// and consecutive points in the same panel share the integral between
    /// them.
    pub fn eval_many_chart(&self, points: &[f64]) -> Vec<T> {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&x, &y| points[x].total_cmp(&points[y]));
        let mut out = vec![T::default(); points.len()];
        let f = |x: f64| self.engine_integrand(x);
        let mut last: Option<(usize, f64, T)> = None;
        for idx in order {
            let t = self.map.inverse(points[idx]);
            out[idx] = match (self.panels.first(), self.panels.last()) {
                (Some(first), Some(end)) if t > first.0 && t < end.1 => {
                    let i = self.panels.partition_point(|p| p.1 <= t).min(self.panels.len() - 1);
                    let value = match last {
                        Some((pi, pt, pv)) if pi == i => pv + self.rule.apply(&f, pt, t),
                        _ => self.prefix[i] + self.partial(i, t),
                    };
                    last = Some((i, t, value));
                    value
                }
                (Some(first), _) if t <= first.0 => T::default(),
                (Some(_), Some(_)) => self.total.value,
                _ => T::default(),
            };
        }
        out
    }
}

/// A positive rule for μ, adapted to the integrand `probe(u)·w(u)`.
pub fn rule_for(mu: &Measure, probe: impl Fn(f64) -> f64, opts: &QuadOptions) -> Result<QuadratureRule> {
    if mu.is_circle() {
        // Converge the trapezoidal rule on the probe, then emit its nodes.
        let mut m = 64usize;
        let mut prev = f64::NAN;
        loop {
            let h = 2.0 * PI / m as f64;
            let v: f64 = (0..m).map(|k| probe(h * k as f64) * mu.weight(h * k as f64) * h).sum();
            if (v - prev).abs() <= gauss::tolerance(opts, v.abs()) {
                let nodes: Vec<f64> = (0..m).map(|k| h * k as f64).collect();
                let weights = nodes.iter().map(|&x| mu.weight(x) * h).collect();
                return Ok(QuadratureRule { nodes, weights });
            }
            if 2 * m > opts.max_circle_nodes {
                return Err(Error::NoConvergence {
                    value: v,
                    error: (v - prev).abs(),
                    panels: m,
                });
            }
            prev = v;
            m *= 2;
        }
    }
    let part = adaptive(|s| chart_integrand(&probe, mu, s), mu.span(), opts)?;
    let rule = GaussLegendre::cached(opts.order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for p in &part.panels {
        let m = 0.5 * (p.a + p.b);
        for (lo, hi) in [(p.a, m), (m, p.b)] {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let (s, jac) = part.map.forward(mid + half * x);
                if !jac.is_finite() {
                    continue;
                }
                let (u, dens) = mu.point(s);
                let weight = dens * jac * w * half;
                if weight > 0.0 && u.is_finite() {
                    nodes.push(u);
                    weights.push(weight);
                }
            }
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Measure;
    use approx::assert_relative_eq;

    #[test]
    fn constant_and_quadratic_on_unit_interval() {
        let mu = Measure::lebesgue(0.0, 1.0).unwrap();
        let opts = QuadOptions::default();
        assert_relative_eq!(integrate(|_| 1.0, &mu, &opts).unwrap().value, 1.0, max_relative = 1e-14);
        let sq = integrate(|u| u * u, &mu, &opts).unwrap();
        assert!((sq.value - 1.0 / 3.0).abs() <= 1e-12);
        assert!(sq.error <= 1e-12);
    }

    #[test]
    fn exponential_mass() {
        let mu = Measure::new(crate::forms::Domain::SemiInfinite { a: 0.0 }, |u| -u);
        let est = integrate(|_| 1.0, &mu, &QuadOptions::default()).unwrap();
        assert!((est.value - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn cumulative_examples() {
        let opts = QuadOptions::default();
        let uni = Measure::uniform(0.0, 1.0).unwrap();
        let g1 = cumulative(|_| 1.0, &uni, &opts).unwrap();
        assert!((g1.eval(0.5) - 0.5).abs() <= 1e-12);
        let gv = cumulative(|v| v, &uni, &opts).unwrap();
        for u in [0.1, 0.3, 0.77, 1.0] {
            assert!((gv.eval(u) - u * u / 2.0).abs() <= 1e-12);
        }
        let exp = Measure::new(crate::forms::Domain::SemiInfinite { a: 0.0 }, |u| -u);
        let ge = cumulative(|_| 1.0, &exp, &opts).unwrap();
        for u in [0.0, 0.2, 1.0, 5.0, 30.0] {
            assert!((ge.eval(u) - (1.0 - (-u as f64).exp())).abs() <= 1e-10, "u = {u}");
        }
    }

    #[test]
    fn cumulative_batch_matches_pointwise_and_is_monotone() {
        let opts = QuadOptions::default();
        let mu = Measure::exponential(1.0).unwrap();
        let g = cumulative(|u: f64| 1.0 + u.sin().abs(), &mu, &opts).unwrap();
        let pts: Vec<f64> = (0..200).map(|k| ((k * 37) % 200) as f64 * 0.05).collect();
        let batch = g.eval_many_chart(&pts);
        for (p, b) in pts.iter().zip(&batch) {
            assert!((g.eval_chart(*p) - b).abs() <= 1e-12);
        }
        let mut sorted = pts.clone();
        sorted.sort_by(f64::total_cmp);
        let vals = g.eval_many_chart(&sorted);
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        let total = integrate(|u: f64| 1.0 + u.sin().abs(), &mu, &opts).unwrap();
        let at_sup = g.eval(f64::INFINITY);
        assert!((at_sup - total.value).abs() <= total.error + g.total().error + 1e-12);
    }

    #[test]
    fn trapezoid_exact_for_trig_polynomials() {
        let opts = QuadOptions::default();
        let mu = Measure::circle_uniform();
        for j in -5i32..=5 {
            let est = integrate(|x| Complex64::from_polar(1.0, j as f64 * x), &mu, &opts).unwrap();
            let expected = if j == 0 { 1.0 } else { 0.0 };
            assert!((est.value - expected).norm() <= 1e-14);
        }
        // cos² x has mean 1/2
        let est = integrate(|x: f64| x.cos().powi(2), &mu, &opts).unwrap();
        assert!((est.value - 0.5).abs() <= 1e-14);
    }

    #[test]
    fn chart_transform_for_singular_endpoints() {
        // (1-u²)^{-1/2} on (-1,1) integrates to π
        let mu = Measure::jacobi(-0.5, -0.5).unwrap();
        let opts = QuadOptions::default();
        let est = integrate(|_| 1.0, &mu, &opts).unwrap();
        assert_relative_eq!(est.value, PI, max_relative = 1e-12);
    }

    #[test]
    fn rule_reproduces_moments() {
        let mu = Measure::exponential(1.0).unwrap();
        let opts = QuadOptions::default();
        let rule = rule_for(&mu, |u| 1.0 + u.powi(8), &opts).unwrap();
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert_relative_eq!(rule.apply(|u| u.powi(4)), 24.0, max_relative = 1e-10);
    }
}
