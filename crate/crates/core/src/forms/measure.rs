use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadOptions, Span};

pub type LogWeight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Support of a measure, in the coordinate the weight is written in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite { a: f64, b: f64 },
    SemiInfinite { a: f64 },
    /// The unit circle, parametrised by the angle `x ∈ [0, 2π)`.
    Circle,
}

impl Domain {
    pub fn finite(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!("interval ({a}, {b}) is empty or unbounded")));
        }
        Ok(Domain::Finite { a, b })
    }

    pub fn semi_infinite(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("lower endpoint {a} is not finite")));
        }
        Ok(Domain::SemiInfinite { a })
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, Domain::Circle)
    }
}

/// Substitution under which integrals over a line measure are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartKind {
    /// Integrate in `u` itself.
    Direct,
    /// `u = shift + scale · cosh(2s)`, `s ∈ (0, ∞)`.
    Cosh2,
    /// `u = shift − scale · cos(2s)`, `s ∈ (0, π/2)`.
    Cos2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub kind: ChartKind,
    pub shift: f64,
    pub scale: f64,
}

impl Chart {
    pub const DIRECT: Chart = Chart {
        kind: ChartKind::Direct,
        shift: 0.0,
        scale: 1.0,
    };

    fn to_u(&self, s: f64) -> (f64, f64) {
        match self.kind {
            ChartKind::Direct => (self.shift + self.scale * s, self.scale),
            ChartKind::Cosh2 => (
                self.shift + self.scale * (2.0 * s).cosh(),
                2.0 * self.scale * (2.0 * s).sinh(),
            ),
            ChartKind::Cos2 => (
                self.shift - self.scale * (2.0 * s).cos(),
                2.0 * self.scale * (2.0 * s).sin(),
            ),
        }
    }

    fn to_s(&self, u: f64) -> f64 {
        let v = (u - self.shift) / self.scale;
        match self.kind {
            ChartKind::Direct => v,
            ChartKind::Cosh2 => v.max(1.0).acosh() / 2.0,
            ChartKind::Cos2 => (-v).clamp(-1.0, 1.0).acos() / 2.0,
        }
    }
}

/// A positive measure `w(u) du` on a line domain, or `w(x) dx` on the circle
/// in the angle chart.
#[derive(Clone)]
pub struct Measure {
    domain: Domain,
    chart: Chart,
    log_weight: LogWeight,
    /// `ln(w(u(s))·du/ds)` written in the chart variable, for weights that
    /// lose precision when evaluated through `u` near a chart endpoint.
    chart_density: Option<LogWeight>,
    normalized: bool,
    length_scale: f64,
    label: String,
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Measure")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("chart", &self.chart)
            .field("normalized", &self.normalized)
            .finish()
    }
}

impl Measure {
    pub fn new(domain: Domain, log_weight: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            domain,
            chart: Chart::DIRECT,
            log_weight: Arc::new(log_weight),
            chart_density: None,
            normalized: false,
            length_scale: 1.0,
            label: "custom".into(),
        }
    }

    /// Measure on `(a, ∞)` with `a = shift + scale`, integrated in the chart
    /// `u = shift + scale·cosh(2s)`.
    pub fn cosh2(shift: f64, scale: f64, log_weight: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(scale > 0.0 && shift.is_finite()) {
            return Err(Error::InvalidArgument("cosh chart needs positive scale".into()));
        }
        let mut m = Self::new(Domain::semi_infinite(shift + scale)?, log_weight);
        m.chart = Chart {
            kind: ChartKind::Cosh2,
            shift,
            scale,
        };
        Ok(m)
    }

    /// Measure on `(shift − scale, shift + scale)` integrated in the chart
    /// `u = shift − scale·cos(2s)`.
    pub fn cos2(shift: f64, scale: f64, log_weight: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(scale > 0.0 && shift.is_finite()) {
            return Err(Error::InvalidArgument("cos chart needs positive scale".into()));
        }
        let mut m = Self::new(Domain::finite(shift - scale, shift + scale)?, log_weight);
        m.chart = Chart {
            kind: ChartKind::Cos2,
            shift,
            scale,
        };
        Ok(m)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Supplies the density in the chart variable directly. The affine
    /// push-forward leaves it unchanged, since `s ↦ u` is composed with the map.
    pub fn with_chart_density(mut self, log_density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        debug_assert!(self.chart.kind != ChartKind::Direct, "chart density needs a cosh or cos chart");
        self.chart_density = Some(Arc::new(log_density));
        self
    }

    pub fn with_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    /// Length scale used by the rational map of semi-infinite integration
    /// variables.
    pub fn with_length_scale(mut self, scale: f64) -> Self {
        if scale.is_finite() && scale > 0.0 {
            self.length_scale = scale;
        }
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_circle(&self) -> bool {
        self.domain.is_circle()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn log_weight(&self, u: f64) -> f64 {
        (self.log_weight)(u)
    }

    pub fn weight(&self, u: f64) -> f64 {
        (self.log_weight)(u).exp()
    }

    /// Interval of the integration variable `s`.
    pub fn span(&self) -> Span {
        match (self.domain, self.chart.kind) {
            (Domain::Circle, _) => Span::Finite(0.0, 2.0 * PI),
            (Domain::Finite { a, b }, ChartKind::Direct) => Span::Finite(a, b),
            (Domain::SemiInfinite { a }, ChartKind::Direct) => Span::SemiInfinite {
                a,
                scale: self.length_scale,
            },
            (_, ChartKind::Cosh2) => Span::SemiInfinite {
                a: 0.0,
                scale: self.length_scale,
            },
            (_, ChartKind::Cos2) => Span::Finite(0.0, FRAC_PI_2),
        }
    }

    /// Maps the integration variable to `(u, w(u)·du/ds)`.
    #[inline]
    pub fn point(&self, s: f64) -> (f64, f64) {
        if self.is_circle() {
            return (s, self.weight(s));
        }
        let (u, jac) = self.chart.to_u(s);
        if let Some(d) = &self.chart_density {
            return (u, d(s).exp());
        }
        if !u.is_finite() {
            // the chart overflowed far out in the tail of an integrable measure
            return (u, 0.0);
        }
        let lw = (self.log_weight)(u);
        if lw == f64::NEG_INFINITY || jac == 0.0 {
            // zero weight, or the endpoint of a chart: a null set either way
            return (u, 0.0);
        }
        let dens = lw.exp() * jac;
        if dens.is_finite() {
            (u, dens)
        } else {
            // huge chart Jacobian against a vanishing weight
            (u, (lw + jac.ln()).exp())
        }
    }

    /// Inverse of the chart map.
    pub fn to_chart(&self, u: f64) -> f64 {
        if self.is_circle() {
            u
        } else {
            self.chart.to_s(u)
        }
    }

    /// `c · μ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be positive")));
        }
        let base = self.log_weight.clone();
        let lc = c.ln();
        let mut m = self.clone();
        m.log_weight = Arc::new(move |u| base(u) + lc);
        if let Some(d) = self.chart_density.clone() {
            m.chart_density = Some(Arc::new(move |s| d(s) + lc));
        }
        m.normalized = false;
        m.label = format!("{}*{c}", self.label);
        Ok(m)
    }

    /// Push-forward through `u ↦ factor·u + shift` (`factor > 0`).
    pub fn affine_pushforward(&self, factor: f64, shift: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite() && shift.is_finite()) {
            return Err(Error::InvalidArgument("affine map needs positive factor".into()));
        }
        let domain = match self.domain {
            Domain::Circle => {
                return Err(Error::ChartMismatch("affine push-forward of a circle measure".into()))
            }
            Domain::Finite { a, b } => Domain::Finite {
                a: factor * a + shift,
                b: factor * b + shift,
            },
            Domain::SemiInfinite { a } => Domain::SemiInfinite { a: factor * a + shift },
        };
        let base = self.log_weight.clone();
        let lf = factor.ln();
        let mut m = self.clone();
        m.domain = domain;
        if self.chart.kind == ChartKind::Direct {
            m.length_scale = self.length_scale * factor;
        } else {
            m.chart = Chart {
                kind: self.chart.kind,
                shift: factor * self.chart.shift + shift,
                scale: factor * self.chart.scale,
            };
        }
        m.log_weight = Arc::new(move |v| base((v - shift) / factor) - lf);
        m.label = format!("{}@({factor}u+{shift})", self.label);
        Ok(m)
    }

    /// The pull-back of a circle measure to the angle interval `[0, 2π]`,
    /// as a line measure. Used where the integrand is not periodic.
    pub fn angle_chart(&self) -> Result<Self> {
        if !self.is_circle() {
            return Err(Error::ChartMismatch("angle chart of a line measure".into()));
        }
        let mut m = self.clone();
        m.domain = Domain::Finite { a: 0.0, b: 2.0 * PI };
        m.chart = Chart::DIRECT;
        Ok(m)
    }

    pub fn total_mass(&self, opts: &QuadOptions) -> Result<f64> {
        let est = quadrature::integrate(|_| 1.0, self, opts)?;
        if !(est.value.is_finite() && est.value > 0.0) {
            return Err(Error::NonIntegrableWeight);
        }
        Ok(est.value)
    }

    // Builtin families.

    /// Uniform probability measure on `(a, b)`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = Domain::finite(a, b)?;
        let lw = -(b - a).ln();
        Ok(Self::new(d, move |_| lw)
            .with_normalized(true)
            .with_label(format!("uniform({a},{b})")))
    }

    /// Lebesgue measure `du` on `(a, b)`.
    pub fn lebesgue(a: f64, b: f64) -> Result<Self> {
        let d = Domain::finite(a, b)?;
        Ok(Self::new(d, |_| 0.0)
            .with_normalized(b - a == 1.0)
            .with_label(format!("lebesgue({a},{b})")))
    }

    /// `rate · e^{−rate·u} du` on `(0, ∞)`.
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("rate {rate} must be positive")));
        }
        let lr = rate.ln();
        Ok(Self::new(Domain::SemiInfinite { a: 0.0 }, move |u| lr - rate * u)
            .with_normalized(true)
            .with_length_scale(1.0 / rate)
            .with_label(format!("exp({rate})")))
    }

    /// `u^power du` on `(0, 1)`.
    pub fn power(power: f64) -> Result<Self> {
        if power <= -1.0 || !power.is_finite() {
            return Err(Error::InvalidArgument(format!("power {power} is not integrable at 0")));
        }
        Ok(Self::new(Domain::Finite { a: 0.0, b: 1.0 }, move |u| xlogy(power, u))
            .with_label(format!("pow({power})")))
    }

    /// Jacobi weight `(1−u)^α (1+u)^β` on `(−1, 1)`, integrated in the
    /// `cos 2s` chart so that endpoint singularities are smoothed.
    ///
    /// The chart density behaves like `s^{2β+1}` at `u = −1` and like
    /// `(π/2 − s)^{2α+1}` at `u = 1`. Near `π/2` doubles are spaced about
    /// `2e−16` apart, so for `α < −1/2` the adaptive rule cannot resolve the
    /// last `≈ (2e−16)^{2α+2}` of mass and may report `NoConvergence`.
    /// `z_β` is invariant under `u ↦ −u`, so `jacobi(β, α)` gives the same
    /// values with the stronger singularity at `u = −1`.
    pub fn jacobi(alpha: f64, beta: f64) -> Result<Self> {
        if alpha <= -1.0 || beta <= -1.0 {
            return Err(Error::InvalidArgument("Jacobi exponents must exceed -1".into()));
        }
        Ok(
            Self::cos2(0.0, 1.0, move |u| xlogy(alpha, 1.0 - u) + xlogy(beta, 1.0 + u))?
                .with_chart_density(move |s| {
                    // 1 − u = 2cos²s, 1 + u = 2sin²s, du/ds = 4 sin s cos s
                    (alpha + beta + 2.0) * LN_2 + xlogy(2.0 * alpha + 1.0, s.cos()) + xlogy(2.0 * beta + 1.0, s.sin())
                })
                .with_label(format!("jacobi({alpha},{beta})")),
        )
    }

    /// Uniform probability measure on the circle.
    pub fn circle_uniform() -> Self {
        let lw = -(2.0 * PI).ln();
        Self::new(Domain::Circle, move |_| lw)
            .with_normalized(true)
            .with_label("circle-uniform")
    }

    /// `(1 + amp·cos x) dx / 2π` on the circle, `|amp| < 1`.
    pub fn circle_cosine(amp: f64) -> Result<Self> {
        if !(amp.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("amplitude {amp} must lie in (-1, 1)")));
        }
        let l2pi = (2.0 * PI).ln();
        Ok(Self::new(Domain::Circle, move |x| (1.0 + amp * x.cos()).ln() - l2pi)
            .with_normalized(true)
            .with_label(format!("circle-cos({amp})")))
    }
}

/// `c·ln x` with `0·ln 0 = 0`.
pub(crate) fn xlogy(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x.ln()
    }
}
