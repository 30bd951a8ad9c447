//! Self-verification suites: every identity is checked against an
//! independent evaluation. Reports contain no timings and are reproducible.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forms::Measure;
use crate::linalg::SquareMatrix;
use crate::oracle::{monte_carlo, zbeta_bruteforce, ChamberOptions, OracleRequest};
use crate::quadrature::{integrate, integrate_chart, QuadOptions, Span};
use crate::siegel::{cd_kernel, siegel_measure, siegel_moment, siegel_moment_u_chart, siegel_z, siegel_z_lambda};
use crate::spaces::{
    expectation_ratio, integrate_invariant, original_chart_integral, reduce, Family, SpaceSpec, WeightSpec,
};
use crate::zbeta::{zbeta, Beta, EvalOptions, ZRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Spaces,
    Siegel,
    All,
}

impl Suite {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "identities" => Some(Suite::Identities),
            "spaces" => Some(Suite::Spaces),
            "siegel" => Some(Suite::Siegel),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Relative tolerance of determinant-versus-oracle comparisons.
    pub oracle_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { oracle_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.12e}"));
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<10} {:<58} value={} ref={} tol={} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                fmt(c.value),
                fmt(c.reference),
                c.tolerance.map_or_else(|| "-".to_string(), |t| format!("{t:.1e}")),
                c.detail
            );
        }
        let _ = writeln!(
            out,
            "{} of {} checks passed",
            self.checks.len() - self.failures(),
            self.checks.len()
        );
        out
    }
}

struct Recorder<'a> {
    suite: &'static str,
    report: &'a mut Report,
}

impl Recorder<'_> {
    fn push(&mut self, name: String, passed: bool, value: Option<f64>, reference: Option<f64>, tol: Option<f64>, detail: String) {
        self.report.checks.push(Check {
            suite: self.suite.to_string(),
            name,
            passed,
            value,
            reference,
            tolerance: tol,
            detail,
        });
    }

    /// `|value − reference| ≤ max(tol·|reference|, slack)`.
    fn close(&mut self, name: impl Into<String>, value: Result<f64>, reference: Result<f64>, tol: f64, slack: f64) {
        let name = name.into();
        match (value, reference) {
            (Ok(v), Ok(r)) => {
                let ok = (v - r).abs() <= (tol * r.abs()).max(slack);
                self.push(name, ok, Some(v), Some(r), Some(tol), String::new());
            }
            (Err(e), _) | (_, Err(e)) => self.push(name, false, None, None, Some(tol), format!("error: {e}")),
        }
    }

    fn truth(&mut self, name: impl Into<String>, outcome: Result<bool>, detail: impl Into<String>) {
        let name = name.into();
        match outcome {
            Ok(ok) => self.push(name, ok, None, None, None, detail.into()),
            Err(e) => self.push(name, false, None, None, None, format!("error: {e}")),
        }
    }
}

pub fn run(suite: Suite, opts: &VerifyOptions) -> Report {
    let mut report = Report::default();
    if matches!(suite, Suite::Identities | Suite::All) {
        identities(&mut Recorder { suite: "identities", report: &mut report }, opts);
    }
    if matches!(suite, Suite::Spaces | Suite::All) {
        spaces(&mut Recorder { suite: "spaces", report: &mut report }, opts);
    }
    if matches!(suite, Suite::Siegel | Suite::All) {
        siegel(&mut Recorder { suite: "siegel", report: &mut report }, opts);
    }
    report
}

/// Measures used by the property checks.
pub fn standard_line_measures() -> Vec<(&'static str, Measure)> {
    vec![
        ("uniform(0,1)", Measure::uniform(0.0, 1.0).expect("valid")),
        ("exp(1)", Measure::exponential(1.0).expect("valid")),
        ("u du on (0,1)", Measure::power(1.0).expect("valid")),
    ]
}

pub fn standard_circle_measures() -> Vec<(&'static str, Measure)> {
    vec![
        ("circle-uniform", Measure::circle_uniform()),
        ("circle 1+cos/2", Measure::circle_cosine(0.5).expect("valid")),
    ]
}

const BETAS: [Beta; 3] = [Beta::One, Beta::Two, Beta::Four];

fn z(mu: &Measure, beta: Beta, n: usize) -> Result<f64> {
    zbeta(&ZRequest::new(mu.clone(), beta, n)).map(|r| r.value)
}

fn identities(rec: &mut Recorder, opts: &VerifyOptions) {
    let uni = Measure::uniform(0.0, 1.0).expect("valid");
    let circ = Measure::circle_uniform();
    let golden: [(&str, &Measure, Beta, usize, f64); 7] = [
        ("golden z1 uniform N=2 = 1/6", &uni, Beta::One, 2, 1.0 / 6.0),
        ("golden z2 uniform N=2 = 1/12", &uni, Beta::Two, 2, 1.0 / 12.0),
        ("golden z4 uniform N=2 = 1/30", &uni, Beta::Four, 2, 1.0 / 30.0),
        ("golden z2 uniform N=3 = 1/2160", &uni, Beta::Two, 3, 1.0 / 2160.0),
        ("golden z1 circle N=2 = 2/pi", &circ, Beta::One, 2, 2.0 / PI),
        ("golden z4 circle N=2 = 3", &circ, Beta::Four, 2, 3.0),
        ("golden z2 circle N=1 = 1", &circ, Beta::Two, 1, 1.0),
    ];
    for (name, mu, beta, n, expected) in golden {
        rec.close(name, z(mu, beta, n), Ok(expected), 1e-8, 0.0);
    }
    for n in 2..=5 {
        rec.close(format!("golden z2 circle N={n} = 1"), z(&circ, Beta::Two, n), Ok(1.0), 1e-8, 0.0);
    }
    let mc = monte_carlo(&circ, Beta::One, 2, 1 << 20, 42);
    match mc {
        Ok(e) => rec.close("monte carlo z1 circle N=2 within 3 sigma", Ok(e.value), Ok(2.0 / PI), 0.0, e.error),
        Err(e) => rec.close("monte carlo z1 circle N=2 within 3 sigma", Err(e), Ok(2.0 / PI), 0.0, 0.0),
    }

    let mut cases: Vec<(&str, Measure)> = standard_line_measures();
    cases.extend(standard_circle_measures());
    for (label, mu) in &cases {
        for beta in BETAS {
            let max_n = if beta == Beta::Four || mu.is_circle() { 3 } else { 4 };
            for n in 1..=max_n {
                let name = format!("oracle beta={beta} N={n} {label}");
                let o = zbeta_bruteforce(&OracleRequest::tensor(mu.clone(), beta, n));
                match (zbeta(&ZRequest::new(mu.clone(), beta, n)), o) {
                    (Ok(r), Ok(o)) => {
                        let ok_imag = r.imag_residual.map_or(true, |x| x <= 1e-8);
                        let ok = (r.value - o.value).abs() <= (opts.oracle_tol * o.value.abs()).max(3.0 * o.error);
                        rec.push(
                            name,
                            ok && ok_imag,
                            Some(r.value),
                            Some(o.value),
                            Some(opts.oracle_tol),
                            r.imag_residual.map_or_else(String::new, |x| format!("imag={x:.1e}")),
                        );
                    }
                    (Err(e), _) | (_, Err(e)) => rec.push(name, false, None, None, Some(opts.oracle_tol), format!("error: {e}")),
                }
            }
        }
    }

    pfaffian_checks(rec);

    for (label, mu) in &cases {
        for beta in BETAS {
            let n = 3;
            let base = z(mu, beta, n);
            for c in [0.5, 2.0] {
                let scaled = mu.scaled(c).and_then(|m| z(&m, beta, n));
                rec.close(
                    format!("homogeneity c={c} beta={beta} N={n} {label}"),
                    scaled,
                    base.clone().map(|b| b * c.powi(n as i32)),
                    1e-9,
                    0.0,
                );
            }
            rec.truth(
                format!("positivity beta={beta} N={n} {label}"),
                base.clone().map(|b| b > 0.0),
                "",
            );
            if mu.is_circle() {
                continue;
            }
            let shifted = mu.affine_pushforward(1.0, 0.75).and_then(|m| z(&m, beta, n));
            rec.close(format!("translation beta={beta} N={n} {label}"), shifted, base.clone(), 1e-8, 0.0);
            let s: f64 = 1.5;
            let dilated = mu.affine_pushforward(s, 0.0).and_then(|m| z(&m, beta, n));
            let power = beta.as_f64() * (n * (n - 1)) as f64 / 2.0;
            rec.close(
                format!("scaling s={s} beta={beta} N={n} {label}"),
                dilated,
                base.clone().map(|b| b * s.powf(power)),
                1e-8,
                0.0,
            );
            let stab = zbeta(&ZRequest::new(mu.clone(), beta, n).stabilized(true)).map(|r| r.value);
            rec.close(format!("stabilized basis beta={beta} N={n} {label}"), stab, base, 1e-8, 0.0);
        }
    }
}

fn random_skew<T: Copy>(n: usize, mut draw: impl FnMut() -> T, neg: impl Fn(T) -> T, zero: T) -> SquareMatrix<T>
where
    T: crate::linalg::Scalar,
{
    let mut m = SquareMatrix::skew_from_upper(n, |_, _| zero);
    for i in 0..n {
        for j in i + 1..n {
            let v = draw();
            m.set(i, j, v);
            m.set(j, i, neg(v));
        }
    }
    m
}

fn swap_indices<T: crate::linalg::Scalar>(m: &SquareMatrix<T>, a: usize, b: usize) -> SquareMatrix<T> {
    let n = m.dim();
    let p = |i: usize| if i == a { b } else if i == b { a } else { i };
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, m.get(p(i), p(j)));
        }
    }
    out
}

fn pfaffian_checks(rec: &mut Recorder) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut sign_ok = true;
    let mut failures = 0;
    for k in 0..200 {
        let n = 2 * (1 + k % 6);
        let complex = k % 2 == 1;
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (defect, exact) = if complex {
            let m = random_skew(n, || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), |v| -v, Complex64::new(0.0, 0.0));
            let (pf, det) = (m.pfaffian(), m.det());
            let swapped = swap_indices(&m, a, b).pfaffian();
            match (pf, swapped) {
                (Ok(pf), Ok(sw)) => (
                    (pf * pf - det).norm() / det.norm().max(1.0),
                    if a == b { sw == pf } else { sw == -pf },
                ),
                _ => (f64::INFINITY, false),
            }
        } else {
            let m = random_skew(n, || rng.gen_range(-1.0..1.0), |v: f64| -v, 0.0);
            let (pf, det) = (m.pfaffian(), m.det());
            let swapped = swap_indices(&m, a, b).pfaffian();
            match (pf, swapped) {
                (Ok(pf), Ok(sw)) => (
                    (pf * pf - det).abs() / det.abs().max(1.0),
                    if a == b { sw == pf } else { sw == -pf },
                ),
                _ => (f64::INFINITY, false),
            }
        };
        worst = worst.max(defect);
        if defect > 1e-10 {
            failures += 1;
        }
        sign_ok &= exact;
    }
    rec.push(
        "pfaffian squared equals determinant (200 matrices)".into(),
        failures == 0,
        Some(worst),
        Some(0.0),
        Some(1e-10),
        format!("{failures} over tolerance"),
    );
    rec.push(
        "pfaffian sign under transposition is exact".into(),
        sign_ok,
        None,
        None,
        None,
        String::new(),
    );
}

/// Cases of the change-of-variables certification.
pub fn certification_cases() -> Vec<(SpaceSpec, WeightSpec)> {
    let mut cases = vec![(
        SpaceSpec::grassmann(Family::Grassmann, Beta::Two, 1, 2).expect("valid"),
        WeightSpec::gaussian(0.5).expect("valid"),
    )];
    for beta in [Beta::One, Beta::Two] {
        for p in 1..=2 {
            for q in p..=3 {
                cases.push((
                    SpaceSpec::grassmann(Family::GrassmannDual, beta, p, q).expect("valid"),
                    WeightSpec::cosine(0.3).expect("valid"),
                ));
            }
        }
    }
    for n in 1..=2 {
        cases.push((
            SpaceSpec::points(Family::ClassicalDomain, Beta::Two, n).expect("valid"),
            WeightSpec::gaussian(0.5).expect("valid"),
        ));
    }
    cases
}

fn spaces(rec: &mut Recorder, opts: &VerifyOptions) {
    let eval = EvalOptions::default();
    for (space, w) in certification_cases() {
        let dims = match space.dims {
            crate::spaces::Dims::Points(n) => format!("N={n}"),
            crate::spaces::Dims::Grassmann { p, q } => format!("p={p},q={q}"),
        };
        rec.close(
            format!("change of variables {} beta={} {dims} w={}", space.family, space.beta, w.label()),
            integrate_invariant(&space, &w, &eval).map(|i| i.result.value),
            original_chart_integral(&space, &w, &ChamberOptions::default()).map(|e| e.value),
            opts.oracle_tol,
            0.0,
        );
    }
    for beta in BETAS {
        for n in 1..=3 {
            let result = SpaceSpec::points(Family::Cone, beta, n).and_then(|s| {
                let w = WeightSpec::wishart(s.cone_exponent(), 1.0)?;
                integrate_invariant(&s, &w, &eval).map(|i| i.result.value)
            });
            let oracle = Measure::exponential(1.0)
                .and_then(|mu| zbeta_bruteforce(&OracleRequest::tensor(mu, beta, n)))
                .map(|e| e.value);
            rec.close(format!("cone wishart weight is laguerre beta={beta} N={n}"), result, oracle, opts.oracle_tol, 0.0);
        }
    }
    for beta in BETAS {
        for p in 1..=3 {
            for q in p..=3 {
                let mass = SpaceSpec::grassmann(Family::GrassmannDual, beta, p, q)
                    .and_then(|s| reduce(&s, &WeightSpec::one(), &eval))
                    .and_then(|r| r.measure.total_mass(&eval.quad));
                rec.truth(
                    format!("grassmann_dual finite mass beta={beta} p={p} q={q}"),
                    mass.map(|m| m.is_finite() && m > 0.0),
                    "",
                );
            }
        }
    }
    let one = WeightSpec::one();
    rec.close(
        "cone_dual ratio of equal weights N=3",
        SpaceSpec::points(Family::ConeDual, Beta::Two, 3).and_then(|s| expectation_ratio(&s, &one, &one, &eval)).map(|e| e.value),
        Ok(1.0),
        1e-12,
        0.0,
    );
    let gauss = WeightSpec::gaussian(std::f64::consts::FRAC_1_SQRT_2).expect("valid");
    let direct = integrate_chart(
        |l: f64| 2.0 * (-l * l + crate::spaces::ln_sinh(2.0 * l)).exp(),
        Span::SemiInfinite { a: 0.0, scale: 1.0 },
        &QuadOptions::default(),
    )
    .map(|e| e.value);
    rec.close(
        "classical_domain N=1 is a single quadrature",
        SpaceSpec::points(Family::ClassicalDomain, Beta::Two, 1)
            .and_then(|s| integrate_invariant(&s, &gauss, &eval))
            .map(|i| i.result.value),
        direct,
        1e-9,
        0.0,
    );
    let ratio = SpaceSpec::points(Family::ClassicalDomain, Beta::Two, 2).and_then(|s| {
        expectation_ratio(&s, &WeightSpec::gaussian(1.0)?, &WeightSpec::gaussian(2.0)?, &eval)
    });
    let siegel_ratio = siegel_z(2, 1.0, &eval.quad)
        .and_then(|a| siegel_z(2, 2.0, &eval.quad).map(|b| a.value / b.value));
    rec.close("classical_domain gaussian ratio matches siegel Z ratio", ratio.map(|e| e.value), siegel_ratio, 1e-8, 0.0);
}

fn siegel(rec: &mut Recorder, opts: &VerifyOptions) {
    let q = QuadOptions::default();
    let tight = QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 0.0,
        ..QuadOptions::default()
    };
    for sigma in [0.25, 1.0] {
        rec.close(
            format!("Z(N=2, sigma={sigma}) matches lambda-space integral"),
            siegel_z(2, sigma, &q).map(|r| r.value),
            siegel_z_lambda(2, sigma, &ChamberOptions::default()).map(|e| e.value),
            opts.oracle_tol,
            0.0,
        );
        for j in 0..=6 {
            rec.close(
                format!("moment j={j} sigma={sigma} lambda chart vs u chart"),
                siegel_moment(j, sigma, &tight).map(|e| e.value),
                siegel_moment_u_chart(j, sigma, &tight).map(|e| e.value),
                1e-9,
                0.0,
            );
        }
    }
    let mu = siegel_measure(1.0).expect("valid");
    for n in [1, 2, 3, 5] {
        let trace = cd_kernel(&mu, n, &q).and_then(|k| k.trace(&mu, &q)).map(|e| e.value);
        rec.close(format!("kernel trace N={n}"), trace, Ok(n as f64), 1e-8, 0.0);
    }
    let mu_half = siegel_measure(0.5).expect("valid");
    match cd_kernel(&mu_half, 3, &q) {
        Ok(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            for i in 0..3 {
                let u = 1.0 + 3.0 * rng.gen::<f64>();
                let v = 1.0 + 3.0 * rng.gen::<f64>();
                let r = integrate(|s| k.eval(u, s) * k.eval(s, v), &mu_half, &q).map(|e| e.value);
                let scale = k.eval(u, u).max(k.eval(v, v));
                rec.close(format!("kernel reproducing property pair {i}"), r, Ok(k.eval(u, v)), 0.0, 1e-7 * scale);
            }
            let hs = integrate(
                |x| integrate(|y| k.eval(x, y).powi(2), &mu_half, &q).map_or(f64::NAN, |e| e.value),
                &mu_half,
                &q,
            )
            .map(|e| e.value);
            rec.close("kernel squared integral N=3", hs, Ok(3.0), 1e-7, 0.0);
            let pts: Vec<f64> = (0..3).map(|_| 1.0 + 4.0 * rng.gen::<f64>()).collect();
            let det = SquareMatrix::from_fn(3, |i, j| k.eval(pts[i], pts[j])).det();
            let v2 = ((pts[1] - pts[0]) * (pts[2] - pts[0]) * (pts[2] - pts[1])).powi(2);
            let z2 = z(&mu_half, Beta::Two, 3);
            rec.close("kernel determinant times z2 equals V^2 (N=3)", z2.map(|z| z * det), Ok(v2), 1e-6, 0.0);
        }
        Err(e) => rec.truth("kernel construction sigma=0.5 N=3", Err(e), ""),
    }
    let m0 = siegel_moment(0, 0.5, &q).map(|e| 1.0 / e.value);
    rec.close(
        "kernel N=1 equals 1/m0",
        cd_kernel(&mu_half, 1, &q).map(|k| k.eval(1.7, 4.2)),
        m0,
        1e-9,
        0.0,
    );
    for n in 1..=3 {
        let zs: Result<Vec<f64>> = [0.25, 0.5, 1.0, 2.0].iter().map(|&s| siegel_z(n, s, &q).map(|r| r.value)).collect();
        rec.truth(
            format!("Z(sigma) positive and increasing N={n}"),
            zs.map(|z| z[0] > 0.0 && z.windows(2).all(|w| w[1] > w[0])),
            "sigma in {0.25, 0.5, 1, 2}",
        );
    }
    let m0 = siegel_moment(0, 1e-3, &q).map(|e| e.value);
    for j in 1..=4 {
        let ratio = siegel_moment(j, 1e-3, &q).and_then(|mj| m0.clone().map(|m0| mj.value / m0));
        rec.close(format!("small sigma concentration m{j}/m0"), ratio, Ok(1.0), 1e-2, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!(Suite::from_name("all"), Some(Suite::All));
        assert_eq!(Suite::from_name("everything"), None);
    }

    #[test]
    fn siegel_suite_passes_and_is_reproducible() {
        let a = run(Suite::Siegel, &VerifyOptions::default());
        assert!(a.passed(), "{}", a.render_text());
        let b = run(Suite::Siegel, &VerifyOptions::default());
        assert_eq!(a.render_text(), b.render_text());
    }
}
