//! Flat `name:key=value,key=value` specifications for measures, weights
//! and spaces.
//!
//! ```text
//! uniform:a=0,b=1          lebesgue:a=0,b=2       exp:rate=1
//! pow:k=1                  jacobi:alpha=0.5,beta=-0.5
//! circle-uniform           circle-cos:amp=0.5     siegel:sigma=1
//! ```
//!
//! Any measure also accepts `scale=c` (multiply by `c`); line measures
//! accept `dilate=f` and `shift=s` (push forward by `u ↦ f·u + s`).
//!
//! Weights: `one`, `gauss:sigma=`, `exp:rate=`, `pow:k=`, `sech:power=`,
//! `cos:amp=`, `wishart:a=,rate=`. Spaces: `grassmann:beta=1,p=2,q=4`,
//! `cone:beta=2,n=5`.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forms::Measure;
use crate::siegel::siegel_measure;
use crate::spaces::{Dims, Family, SpaceSpec, WeightSpec};
use crate::zbeta::Beta;

/// A tokenised specification: a name and its parameters in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spec {
    pub name: String,
    params: Vec<(String, String)>,
}

impl Spec {
    pub fn parse(input: &str) -> Result<Self> {
        let input = input.trim();
        let (name, rest) = match input.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (input, None),
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::Parse(format!("invalid name {name:?}")));
        }
        let mut params: Vec<(String, String)> = Vec::new();
        if let Some(rest) = rest {
            for item in rest.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value, got {:?}", item.trim())))?;
                let (k, v) = (k.trim(), v.trim());
                if k.is_empty() || v.is_empty() {
                    return Err(Error::Parse(format!("empty key or value in {:?}", item.trim())));
                }
                if params.iter().any(|(pk, _)| pk == k) {
                    return Err(Error::Parse(format!("duplicate key {k:?}")));
                }
                params.push((k.to_string(), v.to_string()));
            }
        }
        Ok(Self {
            name: name.to_string(),
            params,
        })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let i = self.params.iter().position(|(k, _)| k == key)?;
        Some(self.params.remove(i).1)
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("{key}: {v:?} is not a number")))?;
                if !x.is_finite() {
                    return Err(Error::Parse(format!("{key}: {v:?} is not finite")));
                }
                Ok(Some(x))
            }
        }
    }

    pub fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.take_f64(key)?
            .ok_or_else(|| Error::Parse(format!("{}: missing parameter {key:?}", self.name)))
    }

    pub fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("{key}: {v:?} is not a count"))),
        }
    }

    /// Fails if any parameter was not consumed.
    pub fn finish(self) -> Result<()> {
        match self.params.first() {
            None => Ok(()),
            Some((k, _)) => Err(Error::Parse(format!("{}: unknown parameter {k:?}", self.name))),
        }
    }
}

fn invalid(e: Error) -> Error {
    match e {
        Error::Parse(m) | Error::InvalidArgument(m) | Error::ChartMismatch(m) => Error::Parse(m),
        other => Error::Parse(other.to_string()),
    }
}

pub fn parse_measure(input: &str) -> Result<Measure> {
    let mut spec = Spec::parse(input)?;
    let base = match spec.name.as_str() {
        "uniform" => {
            let a = spec.take_f64("a")?.unwrap_or(0.0);
            let b = spec.take_f64("b")?.unwrap_or(1.0);
            Measure::uniform(a, b)
        }
        "lebesgue" => {
            let a = spec.take_f64("a")?.unwrap_or(0.0);
            let b = spec.take_f64("b")?.unwrap_or(1.0);
            Measure::lebesgue(a, b)
        }
        "exp" => Measure::exponential(spec.take_f64("rate")?.unwrap_or(1.0)),
        "pow" => Measure::power(spec.require_f64("k")?),
        "jacobi" => {
            let alpha = spec.require_f64("alpha")?;
            let beta = spec.require_f64("beta")?;
            Measure::jacobi(alpha, beta)
        }
        "circle-uniform" => Ok(Measure::circle_uniform()),
        "circle-cos" => Measure::circle_cosine(spec.require_f64("amp")?),
        "siegel" => siegel_measure(spec.require_f64("sigma")?),
        other => return Err(Error::Parse(format!("unknown measure {other:?}"))),
    }
    .map_err(invalid)?;
    let scale = spec.take_f64("scale")?;
    let dilate = spec.take_f64("dilate")?;
    let shift = spec.take_f64("shift")?;
    spec.finish()?;
    let mut mu = base;
    if dilate.is_some() || shift.is_some() {
        mu = mu
            .affine_pushforward(dilate.unwrap_or(1.0), shift.unwrap_or(0.0))
            .map_err(invalid)?;
    }
    if let Some(c) = scale {
        mu = mu.scaled(c).map_err(invalid)?;
    }
    Ok(mu.with_label(input.trim()))
}

pub fn parse_weight(input: &str) -> Result<WeightSpec> {
    let mut spec = Spec::parse(input)?;
    let w = match spec.name.as_str() {
        "one" => Ok(WeightSpec::one()),
        "gauss" => WeightSpec::gaussian(spec.require_f64("sigma")?),
        "exp" => WeightSpec::exponential(spec.require_f64("rate")?),
        "pow" => WeightSpec::power(spec.require_f64("k")?),
        "sech" => WeightSpec::sech(spec.require_f64("power")?),
        "cos" => WeightSpec::cosine(spec.require_f64("amp")?),
        "wishart" => {
            let a = spec.require_f64("a")?;
            let rate = spec.take_f64("rate")?.unwrap_or(1.0);
            WeightSpec::wishart(a, rate)
        }
        other => return Err(Error::Parse(format!("unknown weight {other:?}"))),
    }
    .map_err(invalid)?;
    spec.finish()?;
    Ok(w)
}

pub fn parse_beta(input: &str) -> Result<Beta> {
    let b: u32 = input
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("beta {input:?} is not an integer")))?;
    Beta::new(b).map_err(invalid)
}

pub fn parse_space(input: &str) -> Result<SpaceSpec> {
    let mut spec = Spec::parse(input)?;
    let family = Family::from_name(&spec.name).ok_or_else(|| Error::Parse(format!("unknown space {:?}", spec.name)))?;
    let beta = match spec.take("beta") {
        Some(b) => parse_beta(&b)?,
        None => return Err(Error::Parse("space: missing parameter \"beta\"".into())),
    };
    let n = spec.take_usize("n")?;
    let p = spec.take_usize("p")?;
    let q = spec.take_usize("q")?;
    spec.finish()?;
    let dims = match (n, p, q) {
        (Some(n), None, None) => Dims::Points(n),
        (None, Some(p), Some(q)) => Dims::Grassmann { p, q },
        _ => return Err(Error::Parse("space: give either n, or both p and q".into())),
    };
    SpaceSpec::new(family, beta, dims).map_err(invalid)
}

impl FromStr for SpaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_space(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadOptions;
    use proptest::prelude::*;

    #[test]
    fn measures() {
        let mu = parse_measure("uniform:a=0,b=2").unwrap();
        assert!((mu.total_mass(&QuadOptions::default()).unwrap() - 1.0).abs() < 1e-12);
        assert!(parse_measure("circle-uniform").unwrap().is_circle());
        assert!(parse_measure(" exp : rate = 2 ").is_ok());
        let scaled = parse_measure("exp:rate=1,scale=3").unwrap();
        assert!((scaled.total_mass(&QuadOptions::default()).unwrap() - 3.0).abs() < 1e-9);
        let moved = parse_measure("uniform:a=0,b=1,shift=2,dilate=3").unwrap();
        assert!((moved.weight(3.5) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn measure_errors() {
        for bad in [
            "",
            "uniform:a=1,b=0",
            "uniform:a=0,a=1",
            "uniform:c=1",
            "uniform:a",
            "exp:rate=-1",
            "exp:rate=nan",
            "pow",
            "circle-cos:amp=2",
            "circle-uniform:shift=1",
            "nope",
            "uni form",
        ] {
            assert!(matches!(parse_measure(bad), Err(Error::Parse(_))), "{bad:?}");
        }
    }

    #[test]
    fn weights() {
        let w = parse_weight("gauss:sigma=2").unwrap();
        assert!((w.value(2.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!(parse_weight("one").is_ok());
        assert!(parse_weight("wishart:a=3").is_ok());
        assert!(parse_weight("gauss").is_err());
        assert!(parse_weight("cos:amp=1").is_err());
        assert!(parse_weight("sech:power=1,extra=2").is_err());
    }

    #[test]
    fn spaces() {
        let s: SpaceSpec = "grassmann:beta=1,p=2,q=4".parse().unwrap();
        assert_eq!(s.dims, Dims::Grassmann { p: 2, q: 4 });
        let c: SpaceSpec = "cone:beta=2,n=5".parse().unwrap();
        assert_eq!(c.point_count(), 5);
        for bad in [
            "cone:beta=3,n=2",
            "cone:beta=2,p=1,q=2",
            "grassmann:beta=2,p=3,q=2",
            "cone:n=2",
            "cone:beta=2",
            "cone:beta=2,n=-1",
            "torus:beta=2,n=1",
        ] {
            assert!(bad.parse::<SpaceSpec>().is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn parsers_never_panic(s in "\\PC{0,40}") {
            let _ = parse_measure(&s);
            let _ = parse_weight(&s);
            let _ = parse_space(&s);
        }

        #[test]
        fn uniform_roundtrip(a in -50.0f64..50.0, w in 0.01f64..20.0) {
            let b = a + w;
            let mu = parse_measure(&format!("uniform:a={a},b={b}")).unwrap();
            prop_assert!((mu.weight(a + w / 2.0) * w - 1.0).abs() < 1e-12);
        }
    }
}
