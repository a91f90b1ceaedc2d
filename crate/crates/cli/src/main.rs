//! `tropadel`: batch front end over JSON and CSV files.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for bad
//! input. Results go to stdout as one JSON document; diagnostics to stderr.

mod input;

use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tropadel::adelic::{self, AdelicToricDivisor, BoundaryDatum};
use tropadel::berkovich::{self, LaurentPoly, MonomialPoint};
use tropadel::conical::{self, PLConical};
use tropadel::divisor::{self, MonomialArc, ToricBoundaryDivisor};
use tropadel::height::{self, HomogeneousRational, SimplexFunction};
use tropadel::intersect::{self, NefToricDivisor};
use tropadel::lattice::{self, Fan, LatticeVector};
use tropadel::rational::{self, Rat};
use tropadel::{Error, Exec};

use input::{parse_rat_list, parse_u64_list, parse_usize_list, read_csv, read_json};

#[derive(Parser)]
#[command(name = "tropadel", version, about = "Exact toric adelic divisor computations")]
struct Cli {
    /// Seed for every randomized check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Tolerance as `p/q`.
    #[arg(long, global = true)]
    tol: Option<String>,
    /// Subdivision depth (a cap for `adelic approx`).
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fans: validation and refinement.
    #[command(subcommand)]
    Fan(FanCmd),
    /// Piecewise-linear conical functions.
    #[command(subcommand)]
    Sf(SfCmd),
    /// Toric boundary divisors.
    #[command(subcommand)]
    Divisor(DivisorCmd),
    /// Monomial points of the hybrid analytification.
    #[command(subcommand)]
    Point(PointCmd),
    /// Cauchy sequences of model functions.
    #[command(subcommand)]
    Adelic(AdelicCmd),
    /// Intersection pairings.
    #[command(subcommand)]
    Pair(PairCmd),
    /// Asymptotic slopes of heights.
    #[command(subcommand)]
    Slope(SlopeCmd),
}

#[derive(Subcommand)]
enum FanCmd {
    /// Check the fan axioms; fails when the fan is invalid.
    Validate {
        #[arg(long)]
        fan: PathBuf,
    },
    /// Common refinement with `--with`, or `--depth` barycentric subdivisions.
    Refine {
        #[arg(long)]
        fan: PathBuf,
        #[arg(long = "with")]
        other: Option<PathBuf>,
    },
    /// Subdivide into simplicial cones without changing the support.
    Simplicialize {
        #[arg(long)]
        fan: PathBuf,
    },
}

#[derive(Subcommand)]
enum SfCmd {
    /// Value at a point given as comma-separated rationals.
    Eval {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        at: String,
    },
    /// Pointwise sum on the common refinement
    Add {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Pointwise minimum, refining where the two functions cross
    Min {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Boundary norm against a strictly positive divisor.
    Norm {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
    },
}

#[derive(Subcommand)]
enum DivisorCmd {
    /// Supporting function of a divisor.
    Sf {
        #[arg(long)]
        divisor: PathBuf,
    },
    /// Pull back along a one-parameter subgroup (`--direction`) or along a
    /// lattice map (`--map` with `--source`).
    Pullback {
        #[arg(long)]
        divisor: PathBuf,
        #[arg(long)]
        direction: Option<String>,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Order of vanishing along a monomial arc.
    ArcOrder {
        #[arg(long)]
        divisor: PathBuf,
        #[arg(long)]
        arc: PathBuf,
    },
}

#[derive(Subcommand)]
enum PointCmd {
    /// Valuation of a Laurent polynomial at the point.
    Eval {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        poly: PathBuf,
    },
    /// Tropicalization: the cocharacter of the point
    Trop {
        #[arg(long)]
        point: PathBuf,
    },
    /// Whether two points agree up to positive scaling.
    Equiv {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        other: PathBuf,
    },
    /// Model function of a monomial ideal, given as `{"gens": [[...]]}`.
    Green {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        ideal: PathBuf,
    },
    /// Whether the point reduces off the support of an effective divisor.
    Interior {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
    },
}

#[derive(Subcommand)]
enum AdelicCmd {
    /// Build a Cauchy sequence from a named conical oracle.
    Approx {
        /// `euclidean`, `max0`, `lp:<p>` or `quadratic:<json rows>`.
        #[arg(long)]
        oracle: String,
        #[arg(long)]
        fan: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
    },
    /// Exact Cauchy check of the first `--prefix` terms.
    Verify {
        #[arg(long)]
        seq: PathBuf,
        /// Defaults to the boundary stored in the sequence.
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[arg(long)]
        prefix: Option<usize>,
    },
    /// Green function value at a monomial point.
    Green {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        point: PathBuf,
    },
}

#[derive(Subcommand)]
enum PairCmd {
    /// Intersection number of nef divisors on one fan.
    Intersect {
        #[arg(long, num_args = 1.., required = true)]
        divisors: Vec<PathBuf>,
    },
    /// Pair an adelic sequence with nef divisors.
    Adelic {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long, num_args = 0..)]
        divisors: Vec<PathBuf>,
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
    /// Monge-Ampere pairing of a boundary function.
    Ma {
        #[arg(long)]
        h: PathBuf,
        #[arg(long, num_args = 0..)]
        divisors: Vec<PathBuf>,
        #[arg(long)]
        boundary: PathBuf,
    },
}

#[derive(Subcommand)]
enum SlopeCmd {
    /// Fit the slope of `h` against `-log|s|` from a CSV with columns `s,h`.
    Fit {
        #[arg(long)]
        samples: PathBuf,
    },
    /// Slope predicted for an arc with the given vanishing orders.
    Expect {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        orders: String,
    },
    /// Relative residual test from a CSV with columns `z_1..z_r,g`.
    Residual(ResidualArgs),
    /// Continuity of a slope function toward a coordinate face.
    Boundary {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        face: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

#[derive(Args)]
struct ResidualArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    /// Increasing thresholds `R` on `min(-log|z_i|)`.
    #[arg(long)]
    radii: String,
}

/// Why a command did not succeed.
enum Failure {
    /// A check ran and failed; the report is still printed.
    Check(Value, String),
    /// A mathematical obstruction, reported without a payload.
    Obstruction(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotNef { .. }
            | Error::ToleranceUnreachable { .. }
            | Error::NoConvergence { .. }
            | Error::NotPiecewiseLinear
            | Error::OracleNotHomogeneous { .. } => Failure::Obstruction(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = Result<Value, Failure>;

struct Ctx {
    seed: u64,
    exec: Exec,
    tol: Option<Rat>,
    depth: Option<usize>,
    color: bool,
}

impl Ctx {
    fn tol(&self, default: Rat) -> Rat {
        self.tol.clone().unwrap_or(default)
    }

    fn note(&self, msg: &str) {
        let mut err = std::io::stderr().lock();
        let _ = if self.color {
            writeln!(err, "\x1b[2m{msg}\x1b[0m")
        } else {
            writeln!(err, "{msg}")
        };
    }
}

fn main() -> ExitCode {
    let color = std::env::var_os("TROPADEL_NO_COLOR").is_none() && std::io::stderr().is_terminal();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let tol = match cli.tol.as_deref().map(rational::parse_rat).transpose() {
        Ok(Some(t)) if t <= Rat::from_integer(0.into()) => {
            return report(color, Failure::Input("--tol must be positive".into()));
        }
        Ok(t) => t,
        Err(e) => return report(color, Failure::Input(e.to_string())),
    };
    let exec = match cli.jobs {
        Some(0) => return report(color, Failure::Input("--jobs must be at least 1".into())),
        Some(1) => Exec::Sequential,
        _ => Exec::default(),
    };
    let ctx = Ctx {
        seed: cli.seed,
        exec,
        tol,
        depth: cli.depth,
        color,
    };
    let outcome = with_pool(cli.jobs, || dispatch(&ctx, cli.command));
    match outcome {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Check(v, msg)) => {
            print_json(&v);
            report(color, Failure::Check(Value::Null, msg))
        }
        Err(f) => report(color, f),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        Some(n) if n > 1 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_pool<R: Send>(_jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn print_json(v: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{v}");
}

fn report(color: bool, f: Failure) -> ExitCode {
    let (code, label, msg) = match f {
        Failure::Check(_, m) => (1, "check failed", m),
        Failure::Obstruction(m) => (1, "check failed", m),
        Failure::Input(m) => (2, "error", m),
    };
    if color {
        eprintln!("\x1b[1;31m{label}\x1b[0m: {msg}");
    } else {
        eprintln!("{label}: {msg}");
    }
    ExitCode::from(code)
}

fn dispatch(ctx: &Ctx, command: Command) -> Outcome {
    match command {
        Command::Fan(c) => fan_cmd(ctx, c),
        Command::Sf(c) => sf_cmd(c),
        Command::Divisor(c) => divisor_cmd(c),
        Command::Point(c) => point_cmd(c),
        Command::Adelic(c) => adelic_cmd(ctx, c),
        Command::Pair(c) => pair_cmd(ctx, c),
        Command::Slope(c) => slope_cmd(ctx, c),
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Outcome {
    serde_json::to_value(x).map_err(|e| Failure::Input(e.to_string()))
}

fn fmt(q: &Rat) -> Value {
    Value::String(rational::format_rat(q))
}

fn fmt_opt(q: &Option<Rat>) -> Value {
    q.as_ref().map_or_else(|| Value::String("inf".into()), fmt)
}

fn fan_cmd(ctx: &Ctx, c: FanCmd) -> Outcome {
    match c {
        FanCmd::Validate { fan } => {
            let f: Fan = read_json(&fan)?;
            let v = f.validate();
            let out = to_value(&v)?;
            if v.valid {
                Ok(out)
            } else {
                Err(Failure::Check(out, v.issues.join("; ")))
            }
        }
        FanCmd::Refine { fan, other } => {
            let f: Fan = read_json(&fan)?;
            let refined = match other {
                Some(p) => lattice::common_refinement(&f, &read_json(&p)?)?,
                None => {
                    let mut g = f;
                    for _ in 0..ctx.depth.unwrap_or(1) {
                        g = g.barycentric_subdivision()?;
                    }
                    g
                }
            };
            to_value(&refined)
        }
        FanCmd::Simplicialize { fan } => to_value(&lattice::simplicialize(&read_json(&fan)?)?),
    }
}

fn sf_cmd(c: SfCmd) -> Outcome {
    match c {
        SfCmd::Eval { f, at } => {
            let f: PLConical = read_json(&f)?;
            let a = LatticeVector::new(parse_rat_list(&at)?);
            Ok(json!({ "value": fmt(&f.eval(&a)?) }))
        }
        SfCmd::Add { f, g } => {
            let (f, g): (PLConical, PLConical) = (read_json(&f)?, read_json(&g)?);
            to_value(&f.add(&g)?)
        }
        SfCmd::Min { f, g } => {
            let (f, g): (PLConical, PLConical) = (read_json(&f)?, read_json(&g)?);
            to_value(&f.min(&g)?)
        }
        SfCmd::Norm { f, boundary } => {
            let f: PLConical = read_json(&f)?;
            let z: BoundaryDatum = read_json(&boundary)?;
            let r = conical::sup_ratio(&f, z.sf())?;
            Ok(json!({ "norm": fmt_opt(&r.value), "witness": r.witness }))
        }
    }
}

fn divisor_cmd(c: DivisorCmd) -> Outcome {
    match c {
        DivisorCmd::Sf { divisor } => {
            let d: ToricBoundaryDivisor = read_json(&divisor)?;
            to_value(&divisor::supporting_function(&d)?)
        }
        DivisorCmd::Pullback {
            divisor,
            direction,
            map,
            source,
        } => {
            let d: ToricBoundaryDivisor = read_json(&divisor)?;
            match (direction, map, source) {
                (Some(dir), None, None) => {
                    let a = LatticeVector::new(parse_rat_list(&dir)?);
                    let (zero, inf) = divisor::pullback_one_param(&d, &a)?;
                    Ok(json!({ "order_at_zero": fmt(&zero), "order_at_infinity": fmt(&inf) }))
                }
                (None, Some(map), Some(source)) => {
                    let phi: Vec<Vec<i64>> = read_json(&map)?;
                    let source: Fan = read_json(&source)?;
                    to_value(&divisor::pullback_linear(&d, &phi, &source)?)
                }
                _ => Err(Failure::Input("give either --direction or both --map and --source".into())),
            }
        }
        DivisorCmd::ArcOrder { divisor, arc } => {
            let d: ToricBoundaryDivisor = read_json(&divisor)?;
            let arc: MonomialArc = read_json(&arc)?;
            let f = divisor::supporting_function(&d)?;
            Ok(json!({ "order": fmt(&divisor::arc_order(&f, &arc)?) }))
        }
    }
}

#[derive(serde::Deserialize)]
struct IdealJson {
    gens: Vec<Vec<i64>>,
}

fn point_cmd(c: PointCmd) -> Outcome {
    match c {
        PointCmd::Eval { point, poly } => {
            let p: MonomialPoint = read_json(&point)?;
            let f: LaurentPoly = read_json(&poly)?;
            let v = berkovich::valuation_eval(&p, &f)?;
            Ok(json!({ "valuation": fmt_opt(&v) }))
        }
        PointCmd::Trop { point } => {
            let p: MonomialPoint = read_json(&point)?;
            Ok(json!({ "a": berkovich::trop(&p) }))
        }
        PointCmd::Equiv { point, other } => {
            let (x, y): (MonomialPoint, MonomialPoint) = (read_json(&point)?, read_json(&other)?);
            let s = berkovich::norm_equivalent(&x, &y);
            Ok(json!({ "equivalent": s.is_some(), "scale": s.as_ref().map(fmt) }))
        }
        PointCmd::Green { point, ideal } => {
            let p: MonomialPoint = read_json(&point)?;
            let ideal: IdealJson = read_json(&ideal)?;
            Ok(json!({ "value": fmt(&berkovich::model_green(&ideal.gens, &p)?) }))
        }
        PointCmd::Interior { point, boundary } => {
            let p: MonomialPoint = read_json(&point)?;
            let z: ToricBoundaryDivisor = read_json(&boundary)?;
            Ok(json!({ "interior": berkovich::interior_test(&p, &z)? }))
        }
    }
}

fn parse_oracle(spec: &str) -> Result<conical::ConicalOracle, Failure> {
    let bad = || Failure::Input(format!("unknown oracle `{spec}`"));
    let (name, arg) = spec.split_once(':').map_or((spec, None), |(n, a)| (n, Some(a)));
    match (name, arg) {
        ("euclidean", None) => Ok(conical::ConicalOracle::euclidean()),
        ("max0", None) => Ok(conical::ConicalOracle::max_zero()),
        ("lp", Some(p)) => {
            let p: f64 = p.parse().map_err(|_| bad())?;
            if !(p >= 1.0) {
                return Err(Failure::Input("lp oracles need p >= 1".into()));
            }
            Ok(conical::ConicalOracle::lp(p))
        }
        ("quadratic", Some(rows)) => {
            let q: Vec<Vec<f64>> = serde_json::from_str(rows).map_err(|e| Failure::Input(e.to_string()))?;
            Ok(conical::ConicalOracle::quadratic(q))
        }
        _ => Err(bad()),
    }
}

fn adelic_cmd(ctx: &Ctx, c: AdelicCmd) -> Outcome {
    match c {
        AdelicCmd::Approx { oracle, fan, boundary } => {
            let o = parse_oracle(&oracle)?;
            let reference: Fan = read_json(&fan)?;
            let z: BoundaryDatum = read_json(&boundary)?;
            let target = ctx.tol(rational::rat(1, 1000));
            let cap = ctx.depth.unwrap_or(adelic::MAX_DEPTH);
            let a = adelic::from_oracle_with(ctx.exec, &o, &reference, &z, &target, cap, |f, r| {
                ctx.note(&format!(
                    "term {}: {} rays, {} cones, sampled deviation {:.3e}",
                    r.depth,
                    f.fan().rays().len(),
                    f.fan().cones().len(),
                    r.deviation_estimate
                ));
            })?;
            to_value(&a)
        }
        AdelicCmd::Verify { seq, boundary, prefix } => {
            let a: AdelicToricDivisor = read_json(&seq)?;
            let z = match boundary {
                Some(p) => read_json(&p)?,
                None => a.boundary().clone(),
            };
            let r = adelic::verify_cauchy_with(ctx.exec, &a, &z, prefix.unwrap_or(a.len()))?;
            let out = to_value(&r)?;
            if r.pass {
                Ok(out)
            } else {
                let bad = r.pairs.iter().filter(|p| !p.pass).count();
                Err(Failure::Check(out, format!("{bad} pair(s) exceed their epsilon")))
            }
        }
        AdelicCmd::Green { seq, point } => {
            let a: AdelicToricDivisor = read_json(&seq)?;
            let p: MonomialPoint = read_json(&point)?;
            to_value(&adelic::green_of_adelic(&a, &p, &ctx.tol(rational::rat(1, 1000)))?)
        }
    }
}

/// Nef certification failures are check failures, not input errors.
fn read_nef(paths: &[PathBuf]) -> Result<Vec<NefToricDivisor>, Failure> {
    paths
        .iter()
        .map(|p| {
            let d: ToricBoundaryDivisor = read_json(p)?;
            NefToricDivisor::new(d).map_err(|e| match Failure::from(e) {
                Failure::Obstruction(m) => Failure::Obstruction(format!("{}: {m}", p.display())),
                other => other,
            })
        })
        .collect()
}

fn pair_cmd(ctx: &Ctx, c: PairCmd) -> Outcome {
    match c {
        PairCmd::Intersect { divisors } => {
            let ds = read_nef(&divisors)?;
            Ok(json!({ "value": fmt(&intersect::intersection_number_with(ctx.exec, &ds)?) }))
        }
        PairCmd::Adelic { seq, divisors, boundary } => {
            let a: AdelicToricDivisor = read_json(&seq)?;
            let ls = read_nef(&divisors)?;
            let z = match boundary {
                Some(p) => read_json(&p)?,
                None => a.boundary().clone(),
            };
            to_value(&intersect::pair_adelic_with(ctx.exec, &a, &ls, &z, &ctx.tol(rational::rat(1, 1000)))?)
        }
        PairCmd::Ma { h, divisors, boundary } => {
            let h: PLConical = read_json(&h)?;
            let ls = read_nef(&divisors)?;
            let z: BoundaryDatum = read_json(&boundary)?;
            Ok(json!({ "value": fmt(&intersect::ma_integral(&h, &ls, &z)?) }))
        }
    }
}

fn slope_cmd(ctx: &Ctx, c: SlopeCmd) -> Outcome {
    match c {
        SlopeCmd::Fit { samples } => {
            let rows = read_csv(&samples, 2)?;
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            to_value(&height::fit_slope(&pairs)?)
        }
        SlopeCmd::Expect { mu, orders } => {
            let mu: HomogeneousRational = read_json(&mu)?;
            let s = height::expected_slope(&mu, &parse_u64_list(&orders)?)?;
            Ok(json!({ "slope": fmt(&s), "slope_f64": rational::to_f64(&s) }))
        }
        SlopeCmd::Residual(args) => {
            let f: SimplexFunction = read_json(&args.f)?;
            let rows = read_csv(&args.samples, f.r() + 1)?;
            let samples: Vec<(Vec<f64>, f64)> = rows.into_iter().map(|mut r| {
                let g = r.pop().unwrap_or_default();
                (r, g)
            }).collect();
            let radii: Vec<f64> = parse_rat_list(&args.radii)?.iter().map(rational::to_f64).collect();
            let r = height::green_residual_with(ctx.exec, &f, &samples, &radii)?;
            let out = to_value(&r)?;
            if r.pass {
                Ok(out)
            } else {
                Err(Failure::Check(out, "residuals do not decay below the threshold".into()))
            }
        }
        SlopeCmd::Boundary { mu, face, samples } => {
            let mu: HomogeneousRational = read_json(&mu)?;
            let r = height::check_boundary_extension(&mu, &parse_usize_list(&face)?, samples, ctx.seed)?;
            let out = to_value(&r)?;
            if r.pass {
                Ok(out)
            } else {
                Err(Failure::Check(out, "directional limits disagree".into()))
            }
        }
    }
}
