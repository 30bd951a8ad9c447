mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use symmint::forms::EpsilonConvention;
use symmint::linalg::Precision;
use symmint::oracle::{zbeta_bruteforce, OracleRequest, DEFAULT_SAMPLES};
use symmint::parse::{parse_beta, parse_measure, parse_space, parse_weight};
use symmint::quadrature::QuadOptions;
use symmint::siegel::{kernel_diagnostics, siegel_measure, siegel_moment, siegel_z};
use symmint::spaces::{expectation_ratio, integrate_invariant, Dims, Family, SpaceSpec};
use symmint::verify::{self, Suite, VerifyOptions};
use symmint::zbeta::{zbeta, zbeta_circle, EvalOptions, ZRequest};
use symmint::Error;

use output::{Format, Record};

const GRAMMAR: &str = "\
Measures:  uniform:a=0,b=1  lebesgue:a=0,b=2  exp:rate=1  pow:k=1
           jacobi:alpha=0.5,beta=-0.5  circle-uniform  circle-cos:amp=0.5
           siegel:sigma=1
           modifiers: scale=c (any), dilate=f and shift=s (line only)
Weights:   one  gauss:sigma=  exp:rate=  pow:k=  sech:power=  cos:amp=
           wishart:a=,rate=
Spaces:    cone  cone_dual  grassmann  grassmann_dual  classical_domain";

/// Determinant and Pfaffian evaluation of invariant integrals on symmetric spaces.
#[derive(Debug, Parser)]
#[command(name = "symmint", version, after_help = GRAMMAR)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Worker threads; 1 makes every result bit-reproducible.
    #[arg(long, global = true, env = "SYMMINT_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,
    /// Kernel of the β = 1 pairing.
    #[arg(long, global = true, value_enum, default_value_t = EpsilonArg::Sign)]
    epsilon: EpsilonArg,
    /// Relative tolerance of one-dimensional quadrature.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Absolute tolerance of one-dimensional quadrature.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EpsilonArg {
    Sign,
    HalfSign,
    UnitStep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Tensor,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Identities,
    Spaces,
    Siegel,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate z_β(μ) as a determinant or Pfaffian.
    Zbeta {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        measure: String,
        /// Require a measure on the unit circle.
        #[arg(long)]
        circle: bool,
        /// Use the orthogonalised polynomial basis (line measures).
        #[arg(long)]
        stabilize: bool,
    },
    /// Evaluate z_β(μ) by direct N-fold integration.
    Oracle {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        measure: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Tensor)]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
        /// Mandatory with `--method mc`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite; exit status 1 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        /// Relative tolerance of the determinant-versus-oracle checks.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Integrate a radial weight over a symmetric space.
    Space {
        #[arg(long)]
        space: String,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        weight: String,
        /// Divide by the integral of this weight.
        #[arg(long)]
        ratio: Option<String>,
    },
    /// Gaussian on the Siegel disk: moments, partition function, kernel.
    Siegel {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        kernel: bool,
    },
}

enum Failure {
    Usage(String),
    Numerical(Error, Value),
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

impl Global {
    fn eval_options(&self) -> EvalOptions {
        let mut quad = QuadOptions::default();
        if let Some(r) = self.rel_tol {
            quad.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            quad.abs_tol = a;
        }
        EvalOptions {
            quad,
            epsilon: match self.epsilon {
                EpsilonArg::Sign => EpsilonConvention::Sign,
                EpsilonArg::HalfSign => EpsilonConvention::HalfSign,
                EpsilonArg::UnitStep => EpsilonConvention::UnitStep,
            },
            precision: match self.precision {
                PrecisionArg::Double => Precision::Double,
                PrecisionArg::Extended => Precision::Extended,
            },
        }
    }

    fn echo(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("threads".into(), json!(self.threads));
        m.insert("precision".into(), json!(format!("{:?}", self.precision).to_lowercase()));
        m.insert(
            "epsilon".into(),
            json!(self.epsilon.to_possible_value().map(|v| v.get_name().to_string())),
        );
        let q = self.eval_options().quad;
        m.insert("rel_tol".into(), json!(q.rel_tol));
        m.insert("abs_tol".into(), json!(q.abs_tol));
        m
    }
}

fn run(cli: &Cli) -> Result<(Record, bool), Failure> {
    let g = &cli.global;
    let opts = g.eval_options();
    let mut echo = g.echo();
    let fail = |e: Error, echo: &Map<String, Value>| Failure::Numerical(e, Value::Object(echo.clone()));
    match &cli.command {
        Command::Zbeta {
            beta,
            n,
            measure,
            circle,
            stabilize,
        } => {
            let b = parse_beta(beta).map_err(usage)?;
            let mu = parse_measure(measure).map_err(usage)?;
            echo.insert("subcommand".into(), json!("zbeta"));
            echo.insert("beta".into(), json!(b.value()));
            echo.insert("n".into(), json!(n));
            echo.insert("measure".into(), json!(measure));
            echo.insert("circle".into(), json!(circle));
            echo.insert("stabilize".into(), json!(stabilize));
            let req = ZRequest::new(mu, b, *n).stabilized(*stabilize).with_options(opts);
            let r = if *circle { zbeta_circle(&req) } else { zbeta(&req) }.map_err(|e| fail(e, &echo))?;
            let mut rec = Record::new(r.value, r.err_estimate, r.imag_residual, r.method, echo);
            rec.extra.insert("matrix_dim".into(), json!(r.matrix_dim));
            Ok((rec, true))
        }
        Command::Oracle {
            beta,
            n,
            measure,
            method,
            samples,
            seed,
        } => {
            let b = parse_beta(beta).map_err(usage)?;
            let mu = parse_measure(measure).map_err(usage)?;
            echo.insert("subcommand".into(), json!("oracle"));
            echo.insert("beta".into(), json!(b.value()));
            echo.insert("n".into(), json!(n));
            echo.insert("measure".into(), json!(measure));
            let req = match method {
                MethodArg::Tensor => {
                    echo.insert("method".into(), json!("tensor"));
                    OracleRequest::tensor(mu, b, *n)
                }
                MethodArg::Mc => {
                    let seed = seed.ok_or_else(|| Failure::Usage("--method mc requires --seed".into()))?;
                    echo.insert("method".into(), json!("mc"));
                    echo.insert("samples".into(), json!(samples));
                    echo.insert("seed".into(), json!(seed));
                    OracleRequest::monte_carlo(mu, b, *n, *samples, seed)
                }
            };
            let e = zbeta_bruteforce(&req).map_err(|e| fail(e, &echo))?;
            let label = match method {
                MethodArg::Tensor => "ordered-chamber gauss quadrature",
                MethodArg::Mc => "monte carlo, error is 3 standard errors",
            };
            Ok((Record::new(e.value, e.error, None, label.into(), echo), true))
        }
        Command::Verify { suite, tol } => {
            let s = match suite {
                SuiteArg::Identities => Suite::Identities,
                SuiteArg::Spaces => Suite::Spaces,
                SuiteArg::Siegel => Suite::Siegel,
                SuiteArg::All => Suite::All,
            };
            let mut vo = VerifyOptions::default();
            if let Some(t) = tol {
                vo.oracle_tol = *t;
            }
            let report = verify::run(s, &vo);
            let ok = report.passed();
            Ok((Record::report(report), ok))
        }
        Command::Space {
            space,
            beta,
            n,
            p,
            q,
            weight,
            ratio,
        } => {
            let family =
                Family::from_name(space).ok_or_else(|| Failure::Usage(format!("unknown space {space:?}")))?;
            let b = parse_beta(beta).map_err(usage)?;
            let dims = match (n, p, q) {
                (Some(n), None, None) => Dims::Points(*n),
                (None, Some(p), Some(q)) => Dims::Grassmann { p: *p, q: *q },
                _ => return Err(Failure::Usage("give either --n, or both --p and --q".into())),
            };
            let spec = SpaceSpec::new(family, b, dims).map_err(usage)?;
            // Round-trip through the textual form keeps one validation path.
            let spec = parse_space(&spec_string(&spec)).map_err(usage)?;
            let w = parse_weight(weight).map_err(usage)?;
            echo.insert("subcommand".into(), json!("space"));
            echo.insert("space".into(), json!(spec.family.name()));
            echo.insert("beta".into(), json!(b.value()));
            match spec.dims {
                Dims::Points(n) => {
                    echo.insert("n".into(), json!(n));
                }
                Dims::Grassmann { p, q } => {
                    echo.insert("p".into(), json!(p));
                    echo.insert("q".into(), json!(q));
                }
            }
            echo.insert("weight".into(), json!(weight));
            match ratio {
                None => {
                    let r = integrate_invariant(&spec, &w, &opts).map_err(|e| fail(e, &echo))?;
                    let res = r.result;
                    let mut rec = Record::new(res.value, res.err_estimate, res.imag_residual, res.method, echo);
                    rec.extra.insert("points".into(), json!(r.points));
                    rec.extra.insert("up_to_constant".into(), json!(r.up_to_constant));
                    Ok((rec, true))
                }
                Some(den) => {
                    let wd = parse_weight(den).map_err(usage)?;
                    echo.insert("ratio".into(), json!(den));
                    let e = expectation_ratio(&spec, &w, &wd, &opts).map_err(|e| fail(e, &echo))?;
                    Ok((Record::new(e.value, e.error, None, "ratio of invariant integrals".into(), echo), true))
                }
            }
        }
        Command::Siegel { n, sigma, kernel } => {
            echo.insert("subcommand".into(), json!("siegel"));
            echo.insert("n".into(), json!(n));
            echo.insert("sigma".into(), json!(sigma));
            echo.insert("kernel".into(), json!(kernel));
            let mu = siegel_measure(*sigma).map_err(usage)?;
            let z = siegel_z(*n, *sigma, &opts.quad).map_err(|e| fail(e, &echo))?;
            let moments = (0..2 * (*n as u32).max(1) - 1)
                .map(|j| siegel_moment(j, *sigma, &opts.quad).map(|e| e.value))
                .collect::<symmint::Result<Vec<f64>>>()
                .map_err(|e| fail(e, &echo))?;
            let mut rec = Record::new(z.value, z.err_estimate, z.imag_residual, z.method, echo);
            rec.extra.insert("moments".into(), json!(moments));
            if *kernel {
                let k = kernel_diagnostics(&mu, *n, &opts.quad).map_err(|e| fail(e, &rec.config_echo))?;
                rec.extra.insert("kernel".into(), json!(k));
            }
            Ok((rec, true))
        }
    }
}

fn spec_string(s: &SpaceSpec) -> String {
    match s.dims {
        Dims::Points(n) => format!("{}:beta={},n={n}", s.family.name(), s.beta.value()),
        Dims::Grassmann { p, q } => format!("{}:beta={},p={p},q={q}", s.family.name(), s.beta.value()),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if t == 0 || rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("error: invalid thread count {t}");
            return ExitCode::from(2);
        }
    }
    let (text, code) = match run(&cli) {
        Ok((record, ok)) => (record.render(cli.global.format), if ok { 0 } else { 1 }),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_usage());
            eprintln!("\n{GRAMMAR}");
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(e, echo)) => (output::error_text(&e, echo, cli.global.format), 1),
    };
    if let Err(e) = emit(&text, cli.global.out.as_ref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
