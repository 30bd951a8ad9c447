//! Measures and the three pairings `(h, g)_{(μ,β)}`, β ∈ {1, 2, 4}.
//!
//! On the line the basis functions are evaluated at `u`; on the circle they
//! are evaluated at the angle `x` and represent `u = e^{ix}`. The derivative
//! used by the β = 4 pairing is always taken with respect to `u`.

mod measure;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use measure::{Chart, ChartKind, Domain, LogWeight, Measure};
pub(crate) use measure::xlogy;

use crate::error::{Error, Result};
use crate::quadrature::{self, cumulative, integrate_chart, Estimate, QuadOptions, Value};

/// An integer or half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn int(k: i32) -> Self {
        HalfInt(2 * k)
    }

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 + o.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 - o.0)
    }
}

/// The kernel used in the β = 1 pairing `∫∫ h(u) K(u, v) g(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonConvention {
    /// `K(u, v) = sgn(v − u)`.
    #[default]
    Sign,
    /// `K(u, v) = sgn(v − u) / 2`.
    HalfSign,
    /// `K(u, v) = 1{u > v}`; not skew, kept for comparison only.
    UnitStep,
}

/// A function the pairings accept.
pub trait BasisFn: Sync {
    type Out: Value;
    /// Whether the argument is an angle on the circle (otherwise `u` on a line).
    const ON_CIRCLE: bool;

    fn value(&self, x: f64) -> Self::Out;
    /// Derivative with respect to `u`.
    fn derivative(&self, x: f64) -> Self::Out;
    /// `f(x + 2π) = −f(x)` (half-integer circle powers).
    fn antiperiodic(&self) -> bool {
        false
    }
    /// Rough frequency content, used to seed the trapezoidal rule.
    fn degree_hint(&self) -> f64 {
        0.0
    }
}

/// `u ↦ u^e` on a line. Non-integer exponents need `u > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMonomial(pub HalfInt);

impl LineMonomial {
    pub fn new(k: i32) -> Self {
        LineMonomial(HalfInt::int(k))
    }
}

fn real_pow(u: f64, e: HalfInt) -> f64 {
    if e.is_integer() {
        u.powi(e.twice() / 2)
    } else {
        u.powf(e.as_f64())
    }
}

impl BasisFn for LineMonomial {
    type Out = f64;
    const ON_CIRCLE: bool = false;

    fn value(&self, u: f64) -> f64 {
        real_pow(u, self.0)
    }

    fn derivative(&self, u: f64) -> f64 {
        if self.0.twice() == 0 {
            0.0
        } else {
            self.0.as_f64() * real_pow(u, self.0 - HalfInt::int(1))
        }
    }

    fn degree_hint(&self) -> f64 {
        self.0.as_f64().abs()
    }
}

/// `u ↦ u^e` on the unit circle, as `x ↦ e^{i e x}` in the angle chart
/// `x ∈ [0, 2π)`; the chart fixes the branch of half-integer powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMonomial(pub HalfInt);

impl CircleMonomial {
    pub fn new(k: i32) -> Self {
        CircleMonomial(HalfInt::int(k))
    }
}

impl BasisFn for CircleMonomial {
    type Out = Complex64;
    const ON_CIRCLE: bool = true;

    fn value(&self, x: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.0.as_f64() * x)
    }

    fn derivative(&self, x: f64) -> Complex64 {
        let e = self.0.as_f64();
        Complex64::from_polar(e, (e - 1.0) * x)
    }

    fn antiperiodic(&self) -> bool {
        !self.0.is_integer()
    }

    fn degree_hint(&self) -> f64 {
        self.0.as_f64().abs() + 1.0
    }
}

fn check_chart<B: BasisFn>(mu: &Measure) -> Result<()> {
    if B::ON_CIRCLE != mu.is_circle() {
        return Err(Error::ChartMismatch(format!(
            "basis functions for the {} used with measure {}",
            if B::ON_CIRCLE { "circle" } else { "line" },
            mu.label()
        )));
    }
    Ok(())
}

/// Integrates `f` against a circle measure, choosing the periodic rule when
/// the integrand is periodic.
fn integrate_on_circle<T: Value>(
    f: impl Fn(f64) -> T,
    mu: &Measure,
    periodic: bool,
    degree: f64,
    opts: &QuadOptions,
) -> Result<Estimate<T>> {
    if periodic {
        let min_nodes = (4.0 * degree) as usize + 32;
        quadrature::integrate_periodic(|x| f(x) * mu.weight(x), min_nodes, opts)
    } else {
        quadrature::integrate_angle(f, mu, opts)
    }
}

/// `∫ u^j μ(du)` on a line, `∫ e^{ijx} μ̃(dx)` on the circle.
pub fn moment(mu: &Measure, j: HalfInt, opts: &QuadOptions) -> Result<Estimate<Complex64>> {
    if mu.is_circle() {
        let f = CircleMonomial(j);
        let est = integrate_on_circle(|x| f.value(x), mu, j.is_integer(), f.degree_hint(), opts)?;
        return Ok(est);
    }
    if !j.is_integer() {
        let lower = match mu.domain() {
            Domain::Finite { a, .. } | Domain::SemiInfinite { a } => a,
            Domain::Circle => unreachable!(),
        };
        if lower < 0.0 {
            return Err(Error::InvalidArgument("half-integer moment of a measure on negative reals".into()));
        }
    }
    let est = quadrature::integrate(|u| real_pow(u, j), mu, opts)?;
    Ok(Estimate {
        value: Complex64::new(est.value, 0.0),
        error: est.error,
    })
}

/// Real moment `∫ u^k μ(du)` of a line measure.
pub fn line_moment(mu: &Measure, k: i32, opts: &QuadOptions) -> Result<Estimate<f64>> {
    if mu.is_circle() {
        return Err(Error::ChartMismatch("line moment of a circle measure".into()));
    }
    quadrature::integrate(|u| u.powi(k), mu, opts)
}

/// Fourier coefficient `c_j = ∫ e^{ijx} μ̃(dx)` of a circle measure.
pub fn circle_moment(mu: &Measure, j: i32, opts: &QuadOptions) -> Result<Estimate<Complex64>> {
    if !mu.is_circle() {
        return Err(Error::ChartMismatch("circle moment of a line measure".into()));
    }
    moment(mu, HalfInt::int(j), opts)
}

/// `(h, g)_{(μ,1)} = ∫∫ h(u) K(u, v) g(v) μ(du) μ(dv)` with the kernel
/// selected by `convention`, evaluated as `∫ h(u)·[G(sup) − 2G(u)] μ(du)`
/// for the sign kernel, `G` the running integral of `g`.
pub fn form1<B: BasisFn>(
    h: &B,
    g: &B,
    mu: &Measure,
    convention: EpsilonConvention,
    opts: &QuadOptions,
) -> Result<Estimate<B::Out>> {
    check_chart::<B>(mu)?;
    let line = if mu.is_circle() { mu.angle_chart()? } else { mu.clone() };
    let running = cumulative(|x| g.value(x), &line, opts)?;
    let total = running.total().value;
    let inner = |s: f64| -> B::Out {
        let gs = running.eval_chart(s);
        match convention {
            EpsilonConvention::Sign => total - gs * 2.0,
            EpsilonConvention::HalfSign => (total - gs * 2.0) * 0.5,
            EpsilonConvention::UnitStep => gs,
        }
    };
    let outer = integrate_chart(
        |s| {
            let (u, dens) = line.point(s);
            if dens == 0.0 {
                B::Out::default()
            } else {
                h.value(u) * inner(s) * dens
            }
        },
        line.span(),
        opts,
    )?;
    let h_mass = quadrature::integrate(|u| h.value(u).norm(), &line, opts)?.value;
    Ok(Estimate {
        value: outer.value,
        error: outer.error + 2.0 * running.total().error * h_mass,
    })
}

/// `(h, g)_{(μ,2)} = ∫ h g dμ`, without conjugation.
pub fn form2<B: BasisFn>(h: &B, g: &B, mu: &Measure, opts: &QuadOptions) -> Result<Estimate<B::Out>> {
    check_chart::<B>(mu)?;
    let f = |x: f64| h.value(x) * g.value(x);
    if mu.is_circle() {
        let periodic = h.antiperiodic() == g.antiperiodic();
        integrate_on_circle(f, mu, periodic, h.degree_hint() + g.degree_hint(), opts)
    } else {
        quadrature::integrate(f, mu, opts)
    }
}

/// `(h, g)_{(μ,4)} = ∫ (h g′ − g h′) dμ`, by direct quadrature.
pub fn form4<B: BasisFn>(h: &B, g: &B, mu: &Measure, opts: &QuadOptions) -> Result<Estimate<B::Out>> {
    check_chart::<B>(mu)?;
    let f = |x: f64| h.value(x) * g.derivative(x) - g.value(x) * h.derivative(x);
    if mu.is_circle() {
        let periodic = h.antiperiodic() == g.antiperiodic();
        integrate_on_circle(f, mu, periodic, h.degree_hint() + g.degree_hint(), opts)
    } else {
        quadrature::integrate(f, mu, opts)
    }
}

/// `(u^a, u^b)_{(μ,4)} = (b − a)·m_{a+b−1}`.
pub fn form4_monomial(a: HalfInt, b: HalfInt, mu: &Measure, opts: &QuadOptions) -> Result<Estimate<Complex64>> {
    let coeff = (b - a).as_f64();
    if coeff == 0.0 {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let m = moment(mu, a + b - HalfInt::int(1), opts)?;
    Ok(Estimate {
        value: m.value * coeff,
        error: m.error * coeff.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn opts() -> QuadOptions {
        QuadOptions::default()
    }

    fn line_family() -> Vec<Measure> {
        vec![
            Measure::uniform(0.0, 1.0).unwrap(),
            Measure::exponential(1.0).unwrap(),
            Measure::power(1.0).unwrap(),
            Measure::jacobi(0.5, -0.5).unwrap(),
        ]
    }

    #[test]
    fn moment_examples() {
        let uni = Measure::uniform(0.0, 1.0).unwrap();
        let m2 = moment(&uni, HalfInt::int(2), &opts()).unwrap().value;
        assert!((m2.re - 1.0 / 3.0).abs() <= 1e-12);
        let c = Measure::circle_uniform();
        assert!((circle_moment(&c, 0, &opts()).unwrap().value - 1.0).norm() <= 1e-14);
        for j in [-1, 1] {
            assert!(circle_moment(&c, j, &opts()).unwrap().value.norm() <= 1e-14);
        }
        let e = Measure::exponential(1.0).unwrap();
        assert!((line_moment(&e, 3, &opts()).unwrap().value - 6.0).abs() <= 1e-9);
        // half-integer circle moment: ∫ e^{ix/2} dx/2π = (e^{iπ} − 1)/(iπ) = 2i/π
        let half = moment(&c, HalfInt::from_twice(1), &opts()).unwrap().value;
        assert!((half - Complex64::new(0.0, 2.0 / PI)).norm() <= 1e-10);
    }

    #[test]
    fn moment_rejects_wrong_chart() {
        let c = Measure::circle_uniform();
        assert!(line_moment(&c, 1, &opts()).is_err());
        let u = Measure::uniform(-1.0, 1.0).unwrap();
        assert!(moment(&u, HalfInt::from_twice(1), &opts()).is_err());
        assert!(form2(&CircleMonomial::new(0), &CircleMonomial::new(1), &u, &opts()).is_err());
    }

    #[test]
    fn form1_examples() {
        let uni = Measure::uniform(0.0, 1.0).unwrap();
        let one = LineMonomial::new(0);
        let v = LineMonomial::new(1);
        let s = EpsilonConvention::Sign;
        assert!(form1(&one, &one, &uni, s, &opts()).unwrap().value.abs() <= 1e-12);
        assert!((form1(&one, &v, &uni, s, &opts()).unwrap().value - 1.0 / 6.0).abs() <= 1e-12);
        assert!((form1(&v, &one, &uni, s, &opts()).unwrap().value + 1.0 / 6.0).abs() <= 1e-12);
        let half = form1(&one, &v, &uni, EpsilonConvention::HalfSign, &opts()).unwrap().value;
        assert!((half - 1.0 / 12.0).abs() <= 1e-12);
        // ∫∫_{u>v} v du dv = 1/6, while (v, 1) under the same kernel is 1/3
        let step = form1(&one, &v, &uni, EpsilonConvention::UnitStep, &opts()).unwrap().value;
        assert!((step - 1.0 / 6.0).abs() <= 1e-12);
        let back = form1(&v, &one, &uni, EpsilonConvention::UnitStep, &opts()).unwrap().value;
        assert!((back - 1.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn form2_and_form4_examples() {
        let uni = Measure::uniform(0.0, 1.0).unwrap();
        let one = LineMonomial::new(0);
        let v = LineMonomial::new(1);
        assert!((form2(&one, &one, &uni, &opts()).unwrap().value - 1.0).abs() <= 1e-12);
        assert!((form2(&v, &v, &uni, &opts()).unwrap().value - 1.0 / 3.0).abs() <= 1e-12);
        let c = Measure::circle_uniform();
        let z = form2(&CircleMonomial::new(1), &CircleMonomial::new(-1), &c, &opts()).unwrap();
        assert!((z.value - 1.0).norm() <= 1e-12);
        assert!(form4(&v, &v, &uni, &opts()).unwrap().value.abs() <= 1e-14);
        assert!((form4(&one, &v, &uni, &opts()).unwrap().value - 1.0).abs() <= 1e-12);
        // N = 2 circle family h_k = u^{k−1}: (h₀, h₃) = 3·c₀
        let h0 = CircleMonomial::new(-1);
        let h3 = CircleMonomial::new(2);
        let direct = form4(&h0, &h3, &c, &opts()).unwrap().value;
        let shortcut = form4_monomial(HalfInt::int(-1), HalfInt::int(2), &c, &opts()).unwrap().value;
        assert!((direct - 3.0).norm() <= 1e-12);
        assert!((shortcut - 3.0).norm() <= 1e-12);
    }

    #[test]
    fn circle_form1_half_integer_pair() {
        // N = 2: (−i)·(g₀, g₁)₁ = 2/π for the uniform circle
        let c = Measure::circle_uniform();
        let g0 = CircleMonomial(HalfInt::from_twice(-1));
        let g1 = CircleMonomial(HalfInt::from_twice(1));
        let a = form1(&g0, &g1, &c, EpsilonConvention::Sign, &opts()).unwrap().value;
        let z = a * Complex64::new(0.0, -1.0);
        assert!((z.re - 2.0 / PI).abs() <= 1e-10);
        assert!(z.im.abs() <= 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pairings_have_the_right_symmetry(k in 0i32..5, l in 0i32..5, which in 0usize..4) {
            let mu = &line_family()[which];
            let (h, g) = (LineMonomial::new(k), LineMonomial::new(l));
            let s = EpsilonConvention::Sign;
            let o = opts();
            let f1 = form1(&h, &g, mu, s, &o).unwrap().value + form1(&g, &h, mu, s, &o).unwrap().value;
            prop_assert!(f1.abs() <= 1e-10);
            let f4 = form4(&h, &g, mu, &o).unwrap().value + form4(&g, &h, mu, &o).unwrap().value;
            prop_assert!(f4.abs() <= 1e-10);
            let f2 = form2(&h, &g, mu, &o).unwrap().value - form2(&g, &h, mu, &o).unwrap().value;
            prop_assert!(f2.abs() <= 1e-10);
        }

        #[test]
        fn form4_shortcut_matches_quadrature(k in 0i32..6, l in 0i32..6, which in 0usize..4) {
            let mu = &line_family()[which];
            let o = opts();
            let direct = form4(&LineMonomial::new(k), &LineMonomial::new(l), mu, &o).unwrap().value;
            let short = form4_monomial(HalfInt::int(k), HalfInt::int(l), mu, &o).unwrap().value.re;
            prop_assert!((direct - short).abs() <= 1e-9 * short.abs().max(1.0));
        }

        #[test]
        fn form1_is_linear_in_second_argument(k in 0i32..4, l in 0i32..4, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            struct Combo { l: i32, a: f64, b: f64 }
            impl BasisFn for Combo {
                type Out = f64;
                const ON_CIRCLE: bool = false;
                fn value(&self, u: f64) -> f64 { self.a * u.powi(self.l) + self.b * u.powi(self.l + 1) }
                fn derivative(&self, _: f64) -> f64 { unimplemented!() }
            }
            struct Mono(i32);
            impl BasisFn for Mono {
                type Out = f64;
                const ON_CIRCLE: bool = false;
                fn value(&self, u: f64) -> f64 { u.powi(self.0) }
                fn derivative(&self, _: f64) -> f64 { unimplemented!() }
            }
            let mu = Measure::exponential(1.0).unwrap();
            let o = opts();
            let s = EpsilonConvention::Sign;
            let combo = form1(&Combo { l: k, a: 1.0, b: 0.0 }, &Combo { l, a, b }, &mu, s, &o).unwrap().value;
            let parts = a * form1(&Mono(k), &Mono(l), &mu, s, &o).unwrap().value
                + b * form1(&Mono(k), &Mono(l + 1), &mu, s, &o).unwrap().value;
            prop_assert!((combo - parts).abs() <= 1e-10 * parts.abs().max(1.0));
        }
    }
}
