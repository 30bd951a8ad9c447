//! Symmetric spaces whose invariant integrals of product functions reduce
//! to `z_β(μ)`.
//!
//! | family             | points | reduced μ on                                  |
//! |--------------------|--------|-----------------------------------------------|
//! | `cone`             | N      | `(0,∞)`, `w(u)·u^{−N_β}`                       |
//! | `cone_dual`        | N      | circle, `w(e^{iθ})`                            |
//! | `grassmann`        | p      | `(1,∞)` via `u = cosh 2τ`                       |
//! | `grassmann_dual`   | p      | `(−1,1)` via `u = cos 2θ`                       |
//! | `classical_domain` | N      | `(1,∞)` via `u = cosh 2λ`, `w(acosh(u)/2)`      |
//!
//! The multiplicative constant relating the invariant integral to `z_β` is
//! not computed; ratios of integrals on the same space are exact.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{xlogy, Domain, Measure};
use crate::oracle::{chamber_integral, ChamberOptions};
use crate::quadrature::{Estimate, Span};
use crate::zbeta::{zbeta, Beta, EvalOptions, EvalResult, ZRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cone,
    ConeDual,
    Grassmann,
    GrassmannDual,
    ClassicalDomain,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Cone,
        Family::ConeDual,
        Family::Grassmann,
        Family::GrassmannDual,
        Family::ClassicalDomain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Cone => "cone",
            Family::ConeDual => "cone_dual",
            Family::Grassmann => "grassmann",
            Family::GrassmannDual => "grassmann_dual",
            Family::ClassicalDomain => "classical_domain",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let canon = name.trim().replace('-', "_");
        Family::ALL.into_iter().find(|f| f.name() == canon)
    }

    pub fn is_grassmann(self) -> bool {
        matches!(self, Family::Grassmann | Family::GrassmannDual)
    }

    /// The coordinate the one-point weight `w` is a function of.
    pub fn weight_chart(self) -> WeightChart {
        match self {
            Family::Cone => WeightChart::Eigenvalue,
            Family::ConeDual => WeightChart::CirclePoint,
            Family::Grassmann | Family::ClassicalDomain => WeightChart::Boost,
            Family::GrassmannDual => WeightChart::Angle,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dims {
    Points(usize),
    Grassmann { p: usize, q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub family: Family,
    pub beta: Beta,
    pub dims: Dims,
}

impl SpaceSpec {
    pub fn new(family: Family, beta: Beta, dims: Dims) -> Result<Self> {
        match (family.is_grassmann(), dims) {
            (false, Dims::Points(n)) if n >= 1 => {}
            (true, Dims::Grassmann { p, q }) if p >= 1 && p <= q => {}
            (false, _) => {
                return Err(Error::InvalidArgument(format!("{family} needs a point count N >= 1")));
            }
            (true, _) => {
                return Err(Error::InvalidArgument(format!("{family} needs dimensions 1 <= p <= q")));
            }
        }
        Ok(Self { family, beta, dims })
    }

    pub fn points(family: Family, beta: Beta, n: usize) -> Result<Self> {
        Self::new(family, beta, Dims::Points(n))
    }

    pub fn grassmann(family: Family, beta: Beta, p: usize, q: usize) -> Result<Self> {
        Self::new(family, beta, Dims::Grassmann { p, q })
    }

    /// Number of points of the reduced integral.
    pub fn point_count(&self) -> usize {
        match self.dims {
            Dims::Points(n) => n,
            Dims::Grassmann { p, .. } => p,
        }
    }

    /// `N_β = (β/2)(N − 1) + 1` for cones.
    pub fn cone_exponent(&self) -> f64 {
        0.5 * self.beta.as_f64() * (self.point_count() as f64 - 1.0) + 1.0
    }

    /// Root multiplicities `(β(q − p), β − 1)` of a Grassmann family.
    pub fn root_multiplicities(&self) -> Option<(u32, u32)> {
        match self.dims {
            Dims::Grassmann { p, q } => {
                let b = self.beta.value();
                Some((b * (q - p) as u32, b - 1))
            }
            Dims::Points(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChart {
    Eigenvalue,
    Boost,
    Angle,
    CirclePoint,
}

/// A positive one-point weight `w`, given by its logarithm.
#[derive(Clone)]
pub struct WeightSpec {
    log_w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    chart: Option<WeightChart>,
    scale: Option<f64>,
    label: String,
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSpec")
            .field("label", &self.label)
            .field("chart", &self.chart)
            .finish()
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

impl WeightSpec {
    pub fn new(label: impl Into<String>, log_w: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            log_w: Arc::new(log_w),
            chart: None,
            scale: None,
            label: label.into(),
        }
    }

    /// Restricts the weight to one coordinate; reducing it on a family with
    /// a different coordinate is an error.
    pub fn with_chart(mut self, chart: WeightChart) -> Self {
        self.chart = Some(chart);
        self
    }

    /// Typical length of the region carrying the weight's mass.
    pub fn with_scale(mut self, scale: f64) -> Self {
        if scale.is_finite() && scale > 0.0 {
            self.scale = Some(scale);
        }
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn chart(&self) -> Option<WeightChart> {
        self.chart
    }

    pub fn log_value(&self, x: f64) -> f64 {
        (self.log_w)(x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.log_value(x).exp()
    }

    pub fn one() -> Self {
        Self::new("one", |_| 0.0)
    }

    /// `exp(−x²/2σ²)`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let s = positive("sigma", sigma)?;
        let c = 0.5 / (s * s);
        Ok(Self::new(format!("gauss:sigma={sigma}"), move |x| -c * x * x).with_scale(s))
    }

    /// `exp(−rate·x)`.
    pub fn exponential(rate: f64) -> Result<Self> {
        let r = positive("rate", rate)?;
        Ok(Self::new(format!("exp:rate={rate}"), move |x| -r * x).with_scale(1.0 / r))
    }

    /// `x^k` for `x > 0`.
    pub fn power(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidArgument("power must be finite".into()));
        }
        Ok(Self::new(format!("pow:k={k}"), move |x| if x > 0.0 { k * x.ln() } else { f64::NEG_INFINITY }))
    }

    /// `sech(x)^power`.
    pub fn sech(power: f64) -> Result<Self> {
        let p = positive("power", power)?;
        Ok(Self::new(format!("sech:power={power}"), move |x: f64| {
            let a = x.abs();
            // ln cosh a = a + ln(1 + e^{−2a}) − ln 2
            -p * (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
        })
        .with_scale(1.0 / p))
    }

    /// `1 + amp·cos x`, `|amp| < 1`.
    pub fn cosine(amp: f64) -> Result<Self> {
        if !(amp.is_finite() && amp.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("cosine amplitude {amp} must lie in (-1, 1)")));
        }
        Ok(Self::new(format!("cos:amp={amp}"), move |x: f64| (amp * x.cos()).ln_1p()))
    }

    /// `x^a·exp(−rate·x)` for `x > 0`.
    pub fn wishart(a: f64, rate: f64) -> Result<Self> {
        let r = positive("rate", rate)?;
        if !a.is_finite() {
            return Err(Error::InvalidArgument("exponent must be finite".into()));
        }
        Ok(Self::new(format!("wishart:a={a},rate={rate}"), move |x| {
            if x > 0.0 {
                a * x.ln() - r * x
            } else {
                f64::NEG_INFINITY
            }
        })
        .with_scale((a.max(0.0) + 1.0) / r))
    }
}

/// The reduced measure and point count of a space.
#[derive(Debug, Clone)]
pub struct Reduced {
    pub measure: Measure,
    pub n: usize,
    pub beta: Beta,
}

impl Reduced {
    pub fn request(&self) -> ZRequest {
        ZRequest::new(self.measure.clone(), self.beta, self.n)
    }
}

/// `ln sinh x` for `x > 0`, without overflow.
/// `k·f(x)` with `0·f = 0`, so zero exponents survive `f = −∞`.
fn scaled_ln(k: f64, f: fn(f64) -> f64, x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * f(x)
    }
}

fn ln_cosh(x: f64) -> f64 {
    x.abs() - std::f64::consts::LN_2 + (-2.0 * x.abs()).exp().ln_1p()
}

pub(crate) fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-2.0 * x).exp().ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// `c·ln(x)`, with `0·ln 0 = 0`.
/// Builds the reduced measure without checking its total mass.
pub fn reduced_measure(space: &SpaceSpec, w: &WeightSpec) -> Result<Reduced> {
    let expected = space.family.weight_chart();
    if let Some(c) = w.chart {
        if c != expected {
            return Err(Error::ChartMismatch(format!(
                "weight is a function of {c:?}, {} needs {expected:?}",
                space.family
            )));
        }
    }
    let beta = space.beta;
    let b = beta.as_f64();
    let lw = w.log_w.clone();
    let scale = w.scale.unwrap_or(1.0);
    let label = format!("{}[{}]", space.family, w.label);
    let measure = match (space.family, space.dims) {
        (Family::Cone, _) => {
            let nb = space.cone_exponent();
            Measure::new(Domain::semi_infinite(0.0)?, move |u| {
                if u > 0.0 {
                    lw(u) - nb * u.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .with_length_scale(scale)
        }
        (Family::ConeDual, _) => Measure::new(Domain::Circle, move |x| lw(x)),
        (Family::Grassmann, Dims::Grassmann { p, q }) => {
            let a = 0.5 * b * (q - p) as f64;
            let c = 0.5 * b - 1.0;
            let lw_s = lw.clone();
            Measure::cosh2(0.0, 1.0, move |u| {
                let tau = 0.5 * u.max(1.0).acosh();
                lw(tau) + xlogy(a, 0.5 * (u - 1.0)) + xlogy(c, u * u - 1.0) - std::f64::consts::LN_2
            })?
            // u − 1 = 2sinh²s and u + 1 = 2cosh²s; near s = 0 the u form cancels
            .with_chart_density(move |s| {
                lw_s(s) + (2.0 * c + 1.0) * std::f64::consts::LN_2 + scaled_ln(2.0 * (a + c) + 1.0, ln_sinh, s)
                    + scaled_ln(2.0 * c + 1.0, ln_cosh, s)
            })
            .with_length_scale(scale)
        }
        (Family::GrassmannDual, Dims::Grassmann { p, q }) => {
            let a = 0.5 * b * (q - p) as f64;
            let c = 0.5 * b - 1.0;
            let lw_s = lw.clone();
            Measure::cos2(0.0, 1.0, move |u| {
                let theta = 0.5 * u.clamp(-1.0, 1.0).acos();
                lw(theta) + xlogy(a, 0.5 * (1.0 - u)) + xlogy(c, 1.0 - u * u) - std::f64::consts::LN_2
            })?
            // θ = π/2 − s, 1 − u = 2cos²s, 1 + u = 2sin²s
            .with_chart_density(move |s| {
                lw_s(std::f64::consts::FRAC_PI_2 - s)
                    + (2.0 * c + 1.0) * std::f64::consts::LN_2
                    + xlogy(2.0 * (a + c) + 1.0, s.cos())
                    + xlogy(2.0 * c + 1.0, s.sin())
            })
        }
        (Family::ClassicalDomain, _) => {
            let lw_s = lw.clone();
            Measure::cosh2(0.0, 1.0, move |u| lw(0.5 * u.max(1.0).acosh()))?
                .with_chart_density(move |s| lw_s(s) + std::f64::consts::LN_2 + ln_sinh(2.0 * s))
                .with_length_scale(scale)
        }
        (family, dims) => {
            return Err(Error::InvalidArgument(format!("{family} does not accept {dims:?}")));
        }
    };
    Ok(Reduced {
        measure: measure.with_label(label),
        n: space.point_count(),
        beta,
    })
}

/// Reduced measure and point count; fails if the measure has no finite mass.
pub fn reduce(space: &SpaceSpec, w: &WeightSpec, opts: &EvalOptions) -> Result<Reduced> {
    let r = reduced_measure(space, w)?;
    match r.measure.total_mass(&opts.quad) {
        Ok(m) if m.is_finite() && m > 0.0 => Ok(r),
        Ok(_) | Err(Error::NoConvergence { .. }) | Err(Error::NonFinite) => Err(Error::NonIntegrableWeight),
        Err(e) => Err(e),
    }
}

/// `z_β` of the reduced measure: the invariant integral of `∏ w` without
/// its multiplicative constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantIntegral {
    pub result: EvalResult,
    pub points: usize,
    /// Always true: the space-dependent constant is not included.
    pub up_to_constant: bool,
}

pub fn integrate_invariant(space: &SpaceSpec, w: &WeightSpec, opts: &EvalOptions) -> Result<InvariantIntegral> {
    let r = reduce(space, w, opts)?;
    let result = zbeta(&r.request().with_options(*opts))?;
    Ok(InvariantIntegral {
        result,
        points: r.n,
        up_to_constant: true,
    })
}

/// Ratio of two invariant integrals on the same space.
pub fn expectation_ratio(
    space: &SpaceSpec,
    w_num: &WeightSpec,
    w_den: &WeightSpec,
    opts: &EvalOptions,
) -> Result<Estimate<f64>> {
    let num = integrate_invariant(space, w_num, opts)?.result;
    let den = integrate_invariant(space, w_den, opts)?.result;
    if !(den.value.abs() > 0.0) || den.value.abs() <= den.err_estimate {
        return Err(Error::DivisionByZeroMass);
    }
    let value = num.value / den.value;
    let rel = num.err_estimate / num.value.abs().max(f64::MIN_POSITIVE) + den.err_estimate / den.value.abs();
    Ok(Estimate {
        value,
        error: value.abs() * rel,
    })
}

/// The integral in the space's own radial coordinates, over the ordered
/// chamber of positive boosts or angles in `(0, π/2)`:
///
/// * `grassmann`: `∏ w(τ) sinh^{β(q−p)}τ sinh^{β−1}2τ · ∏|cosh 2τ_i − cosh 2τ_j|^β`
/// * `grassmann_dual`: `∏ w(θ) sin^{β(q−p)}θ sin^{β−1}2θ · ∏|cos 2θ_i − cos 2θ_j|^β`
/// * `classical_domain`: `∏ 2w(λ) sinh 2λ · ∏|cosh 2λ_i − cosh 2λ_j|^β`; the
///   factor 2 folds the negative half-line `λ < 0` for even `w`.
///
/// Equal to `z_β` of the reduced measure. Cones have no separate chart.
pub fn original_chart_integral(space: &SpaceSpec, w: &WeightSpec, opts: &ChamberOptions) -> Result<Estimate<f64>> {
    let b = space.beta.as_f64();
    let n = space.point_count();
    let lw = w.log_w.clone();
    let scale = w.scale.unwrap_or(1.0);
    match (space.family, space.dims) {
        (Family::Grassmann, Dims::Grassmann { p, q }) => {
            let m1 = b * (q - p) as f64;
            let m2 = b - 1.0;
            chamber_integral(
                n,
                Span::SemiInfinite { a: 0.0, scale },
                |t| {
                    let lm1 = if m1 == 0.0 { 0.0 } else { m1 * ln_sinh(t) };
                    let lm2 = if m2 == 0.0 { 0.0 } else { m2 * ln_sinh(2.0 * t) };
                    (lw(t) + lm1 + lm2).exp()
                },
                |x, y| ((2.0 * x).cosh() - (2.0 * y).cosh()).abs().powf(b),
                opts,
            )
        }
        (Family::GrassmannDual, Dims::Grassmann { p, q }) => {
            let m1 = b * (q - p) as f64;
            let m2 = b - 1.0;
            chamber_integral(
                n,
                Span::Finite(0.0, std::f64::consts::FRAC_PI_2),
                |t| (lw(t) + xlogy(m1, t.sin()) + xlogy(m2, (2.0 * t).sin())).exp(),
                |x, y| ((2.0 * x).cos() - (2.0 * y).cos()).abs().powf(b),
                opts,
            )
        }
        (Family::ClassicalDomain, _) => chamber_integral(
            n,
            Span::SemiInfinite { a: 0.0, scale },
            |t| 2.0 * (lw(t) + ln_sinh(2.0 * t)).exp(),
            |x, y| ((2.0 * x).cosh() - (2.0 * y).cosh()).abs().powf(b),
            opts,
        ),
        (family, _) => Err(Error::ChartMismatch(format!("{family} has no separate radial chart"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{zbeta_bruteforce, OracleRequest};
    use crate::quadrature::{integrate_chart, QuadOptions};
    use std::f64::consts::FRAC_PI_2;

    fn opts() -> EvalOptions {
        EvalOptions::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn spec_validation() {
        assert!(SpaceSpec::points(Family::Cone, Beta::Two, 0).is_err());
        assert!(SpaceSpec::grassmann(Family::Grassmann, Beta::One, 3, 2).is_err());
        assert!(SpaceSpec::new(Family::Cone, Beta::Two, Dims::Grassmann { p: 1, q: 2 }).is_err());
        assert!(SpaceSpec::new(Family::GrassmannDual, Beta::Two, Dims::Points(2)).is_err());
        let g = SpaceSpec::grassmann(Family::Grassmann, Beta::Four, 2, 5).unwrap();
        assert_eq!(g.root_multiplicities(), Some((12, 3)));
        assert_eq!(Family::from_name("grassmann-dual"), Some(Family::GrassmannDual));
    }

    #[test]
    fn cone_exponent_and_flat_weight() {
        let s = SpaceSpec::points(Family::Cone, Beta::Two, 3).unwrap();
        assert_eq!(s.cone_exponent(), 3.0);
        let r = reduced_measure(&s, &WeightSpec::one()).unwrap();
        for u in [0.3, 1.0, 4.0] {
            assert!(rel(r.measure.weight(u), u.powi(-3)) <= 1e-14);
        }
        assert!(matches!(reduce(&s, &WeightSpec::one(), &opts()), Err(Error::NonIntegrableWeight)));
    }

    #[test]
    fn wishart_cone_is_laguerre() {
        for beta in [Beta::One, Beta::Two, Beta::Four] {
            for n in 1..=3 {
                let s = SpaceSpec::points(Family::Cone, beta, n).unwrap();
                let w = WeightSpec::wishart(s.cone_exponent(), 1.0).unwrap();
                let r = reduce(&s, &w, &opts()).unwrap();
                for u in [0.5, 2.0, 7.0] {
                    assert!(rel(r.measure.weight(u), (-u as f64).exp()) <= 1e-13);
                }
                let z = integrate_invariant(&s, &w, &opts()).unwrap().result.value;
                let o = zbeta_bruteforce(&OracleRequest::tensor(Measure::exponential(1.0).unwrap(), beta, n)).unwrap();
                assert!(rel(z, o.value) <= 1e-8, "beta {beta} N {n}: {z} vs {}", o.value);
            }
        }
    }

    #[test]
    fn cone_dual_flat_is_one() {
        for n in 1..=4 {
            let s = SpaceSpec::points(Family::ConeDual, Beta::Two, n).unwrap();
            let i = integrate_invariant(&s, &WeightSpec::one(), &opts()).unwrap();
            assert!(i.up_to_constant);
            // uniform circle with total mass 2π: z₂ = (2π)^N
            let expected = (2.0 * std::f64::consts::PI).powi(n as i32);
            assert!(rel(i.result.value, expected) <= 1e-10);
        }
    }

    #[test]
    fn classical_domain_gaussian_weight() {
        // w(λ) = exp(−λ²) reduces to exp(−acosh²(u)/4)
        let w = WeightSpec::gaussian(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let s = SpaceSpec::points(Family::ClassicalDomain, Beta::Two, 1).unwrap();
        let r = reduce(&s, &w, &opts()).unwrap();
        for u in [1.5f64, 3.0, 20.0] {
            let a = u.acosh();
            assert!(rel(r.measure.weight(u), (-a * a / 4.0).exp()) <= 1e-13);
        }
        // N = 1: a single quadrature, here in λ with du = 2 sinh 2λ dλ
        let z = integrate_invariant(&s, &w, &opts()).unwrap().result.value;
        let direct = integrate_chart(
            |l: f64| 2.0 * (-l * l + ln_sinh(2.0 * l)).exp(),
            Span::SemiInfinite { a: 0.0, scale: 1.0 },
            &QuadOptions::default(),
        )
        .unwrap()
        .value;
        assert!(rel(z, direct) <= 1e-9);
    }

    #[test]
    fn grassmann_dual_equal_dimensions() {
        let s = SpaceSpec::grassmann(Family::GrassmannDual, Beta::Two, 2, 2).unwrap();
        let w = WeightSpec::cosine(0.5).unwrap();
        let r = reduced_measure(&s, &w).unwrap();
        for u in [-0.7, 0.1, 0.9] {
            let theta = 0.5 * f64::acos(u);
            assert!(rel(r.measure.weight(u), 0.5 * w.value(theta)) <= 1e-13);
        }
    }

    #[test]
    fn grassmann_dual_masses_are_finite() {
        let q_opts = QuadOptions::default();
        for beta in [Beta::One, Beta::Two, Beta::Four] {
            for p in 1..=3 {
                for q in p..=3 {
                    let s = SpaceSpec::grassmann(Family::GrassmannDual, beta, p, q).unwrap();
                    let r = reduce(&s, &WeightSpec::one(), &opts()).unwrap();
                    let mass = r.measure.total_mass(&q_opts).unwrap();
                    let b = beta.as_f64();
                    let m1 = b * (q - p) as f64;
                    let direct = integrate_chart(
                        |t: f64| t.sin().powf(m1) * (2.0 * t).sin().powf(b - 1.0),
                        Span::Finite(0.0, FRAC_PI_2),
                        &q_opts,
                    )
                    .unwrap()
                    .value;
                    assert!(rel(mass, direct) <= 1e-9, "beta {beta} p {p} q {q}");
                }
            }
        }
    }

    #[test]
    fn grassmann_one_point_change_of_variables() {
        let s = SpaceSpec::grassmann(Family::Grassmann, Beta::Two, 1, 1).unwrap();
        let w = WeightSpec::sech(4.0).unwrap();
        let z = integrate_invariant(&s, &w, &opts()).unwrap().result.value;
        let direct = integrate_chart(
            |t: f64| (w.log_value(t) + ln_sinh(2.0 * t)).exp(),
            Span::SemiInfinite { a: 0.0, scale: 1.0 },
            &QuadOptions::default(),
        )
        .unwrap()
        .value;
        assert!(rel(z, direct) <= 1e-9);
    }

    #[test]
    fn original_charts_agree_with_reduction() {
        let cases = [
            (SpaceSpec::grassmann(Family::Grassmann, Beta::Two, 2, 3).unwrap(), WeightSpec::gaussian(0.5).unwrap()),
            (SpaceSpec::grassmann(Family::Grassmann, Beta::Two, 1, 2).unwrap(), WeightSpec::sech(8.0).unwrap()),
            (SpaceSpec::grassmann(Family::GrassmannDual, Beta::One, 2, 2).unwrap(), WeightSpec::one()),
            (SpaceSpec::grassmann(Family::GrassmannDual, Beta::Four, 2, 3).unwrap(), WeightSpec::cosine(0.3).unwrap()),
            (SpaceSpec::points(Family::ClassicalDomain, Beta::Two, 2).unwrap(), WeightSpec::gaussian(0.5).unwrap()),
        ];
        for (s, w) in cases {
            let z = integrate_invariant(&s, &w, &opts()).unwrap().result.value;
            let o = original_chart_integral(&s, &w, &ChamberOptions::default()).unwrap();
            assert!(rel(z, o.value) <= 1e-7, "{s:?}: {z} vs {}", o.value);
        }
    }

    #[test]
    fn cones_have_no_radial_chart() {
        let s = SpaceSpec::points(Family::Cone, Beta::Two, 2).unwrap();
        assert!(original_chart_integral(&s, &WeightSpec::one(), &ChamberOptions::default()).is_err());
    }

    #[test]
    fn weight_chart_is_checked() {
        let s = SpaceSpec::points(Family::Cone, Beta::Two, 2).unwrap();
        let w = WeightSpec::one().with_chart(WeightChart::Angle);
        assert!(matches!(reduced_measure(&s, &w), Err(Error::ChartMismatch(_))));
    }

    #[test]
    fn ratios() {
        let s = SpaceSpec::points(Family::ConeDual, Beta::Two, 3).unwrap();
        let one = WeightSpec::one();
        let r = expectation_ratio(&s, &one, &one, &opts()).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-14);
        let d = SpaceSpec::points(Family::ClassicalDomain, Beta::Two, 2).unwrap();
        let g1 = WeightSpec::gaussian(1.0).unwrap();
        let g2 = WeightSpec::gaussian(2.0).unwrap();
        let r = expectation_ratio(&d, &g1, &g2, &opts()).unwrap();
        let z1 = integrate_invariant(&d, &g1, &opts()).unwrap().result.value;
        let z2 = integrate_invariant(&d, &g2, &opts()).unwrap().result.value;
        assert!(rel(r.value, z1 / z2) <= 1e-14);
        assert!(r.value < 1.0);
    }
}
