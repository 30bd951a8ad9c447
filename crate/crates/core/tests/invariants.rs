use proptest::prelude::*;

use symmint::forms::Measure;
use symmint::linalg::SquareMatrix;
use statrs::function::gamma::ln_gamma;
use symmint::quadrature::QuadOptions;
use symmint::zbeta::{zbeta, Beta, EvalOptions, EvalResult, ZRequest};

fn beta() -> impl Strategy<Value = Beta> {
    prop_oneof![Just(Beta::One), Just(Beta::Two), Just(Beta::Four)]
}

/// Tight quadrature; the default `1e−9` cannot certify `1e−9` agreement
/// for weights that are not smooth at an endpoint.
fn tight() -> EvalOptions {
    EvalOptions {
        quad: QuadOptions {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            ..QuadOptions::default()
        },
        ..EvalOptions::default()
    }
}

fn eval(mu: &Measure, b: Beta, n: usize, stabilize: bool) -> EvalResult {
    zbeta(&ZRequest::new(mu.clone(), b, n).stabilized(stabilize).with_options(tight())).unwrap()
}

fn z(mu: &Measure, b: Beta, n: usize) -> f64 {
    eval(mu, b, n, !mu.is_circle()).value
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Selberg's closed form for `(1/N!)∫|V|^β ∏(1−u)^a (1+u)^b du` on
/// `(−1, 1)`, from the `[0, 1]` integral by `u = 2x − 1`.
fn selberg(a: f64, b: f64, beta: f64, n: usize) -> f64 {
    let g = beta / 2.0;
    let nf = n as f64;
    let mut ln = (nf * (a + b + 1.0) + beta * nf * (nf - 1.0) / 2.0) * std::f64::consts::LN_2;
    for j in 0..n {
        let j = j as f64;
        ln += ln_gamma(b + 1.0 + j * g) + ln_gamma(a + 1.0 + j * g) + ln_gamma(1.0 + (j + 1.0) * g)
            - ln_gamma(a + b + 2.0 + (nf + j - 1.0) * g)
            - ln_gamma(1.0 + g);
    }
    ln -= ln_gamma(nf + 1.0);
    ln.exp()
}

#[test]
fn selberg_fixed_cases() {
    // Legendre weight, N = 2: ∫∫(u−v)² du dv / 2 = 4/3.
    assert!((selberg(0.0, 0.0, 2.0, 2) - 4.0 / 3.0).abs() < 1e-12);
    for (a, b) in [(0.0, -0.43), (0.5, -0.5), (-0.5, 1.5)] {
        let mu = Measure::jacobi(a, b).unwrap();
        for bt in [Beta::One, Beta::Two, Beta::Four] {
            for n in 1..=5 {
                let want = selberg(a, b, bt.as_f64(), n);
                assert!(rel(z(&mu, bt, n), want) < 1e-9, "a={a} b={b} beta={bt} n={n}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homogeneous_of_degree_n(b in beta(), n in 1usize..=4, c in 0.1f64..10.0, k in 0.0f64..2.0) {
        let mu = Measure::power(k).unwrap();
        let scaled = mu.scaled(c).unwrap();
        prop_assert!(rel(z(&scaled, b, n), z(&mu, b, n) * c.powi(n as i32)) < 1e-9);
    }

    #[test]
    fn translation_invariant(b in beta(), n in 1usize..=4, a in -3.0f64..3.0, w in 0.2f64..3.0, s in -5.0f64..5.0) {
        let mu = Measure::uniform(a, a + w).unwrap();
        let moved = mu.affine_pushforward(1.0, s).unwrap();
        prop_assert!(rel(z(&moved, b, n), z(&mu, b, n)) < 1e-8);
    }

    #[test]
    fn dilation_covariant(b in beta(), n in 1usize..=4, s in 0.2f64..4.0) {
        let mu = Measure::exponential(1.0).unwrap();
        let dilated = mu.affine_pushforward(s, 0.0).unwrap();
        let power = b.as_f64() * (n * (n - 1)) as f64 / 2.0;
        prop_assert!(rel(z(&dilated, b, n), z(&mu, b, n) * s.powf(power)) < 1e-8);
    }

    #[test]
    fn circle_rotation_invariant(b in beta(), n in 1usize..=4, amp in 0.0f64..0.9, phase in 0.0f64..6.2) {
        let tau = std::f64::consts::TAU;
        let base = Measure::circle_cosine(amp).unwrap();
        let rotated = Measure::new(base.domain(), move |x: f64| {
            ((1.0 + amp * (x - phase).cos()) / tau).ln()
        });
        prop_assert!(rel(z(&rotated, b, n), z(&base, b, n)) < 1e-9);
    }

    #[test]
    fn positive(b in beta(), n in 1usize..=5, alpha in -0.5f64..2.0, beta_j in -0.95f64..2.0) {
        let mu = Measure::jacobi(alpha, beta_j).unwrap();
        prop_assert!(z(&mu, b, n) > 0.0);
    }

    #[test]
    fn jacobi_matches_selberg(b in beta(), n in 1usize..=5, alpha in -0.5f64..3.0, beta_j in -0.9f64..3.0) {
        let mu = Measure::jacobi(alpha, beta_j).unwrap();
        let want = selberg(alpha, beta_j, b.as_f64(), n);
        prop_assert!(rel(z(&mu, b, n), want) < 1e-9);
    }

    /// The monomial basis loses accuracy away from the origin; its error
    /// estimate must say so.
    #[test]
    fn monomial_error_estimate_is_honest(b in beta(), n in 2usize..=4, a in -6.0f64..6.0, w in 0.1f64..2.0) {
        let mu = Measure::uniform(a, a + w).unwrap();
        let mono = eval(&mu, b, n, false);
        let stab = eval(&mu, b, n, true);
        let dev = (mono.value - stab.value).abs();
        prop_assert!(dev <= mono.err_estimate + stab.err_estimate + 1e-12 * stab.value.abs(),
            "dev {dev:e}, estimates {:e} {:e}", mono.err_estimate, stab.err_estimate);
    }

    #[test]
    fn pfaffian_squares_to_determinant(half in 1usize..=6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * half;
        let m = SquareMatrix::skew_from_upper(n, |_, _| rng.gen_range(-2.0..2.0));
        let pf = m.pfaffian().unwrap();
        let det = m.det();
        prop_assert!((pf * pf - det).abs() <= 1e-10 * det.abs().max(1.0));
    }
}
