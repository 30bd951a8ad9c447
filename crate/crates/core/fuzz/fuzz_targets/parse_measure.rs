#![no_main]

use libfuzzer_sys::fuzz_target;
use symmint::quadrature::Span;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(mu) = symmint::parse::parse_measure(text) else {
        return;
    };
    // Anything the parser accepts must have a usable density.
    let probes: Vec<f64> = match mu.span() {
        Span::Finite(a, b) => [0.1, 0.5, 0.9].iter().map(|t| a + t * (b - a)).collect(),
        Span::SemiInfinite { a, scale } => [0.1, 1.0, 10.0].iter().map(|t| a + t * scale).collect(),
    };
    for s in probes {
        let (_, d) = mu.point(s);
        assert!(d >= 0.0, "{text:?}: density {d} at {s}");
    }
});
