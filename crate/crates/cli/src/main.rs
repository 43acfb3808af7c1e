use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde_json::json;

use gkf::geometry::{
    is_self_avoiding, osculation_check, polygon_svg, polyline_svg, prefractal_curve, snowflake, vertices_csv,
    KochParams,
};
use gkf::moran::{complex_dimensions, lattice_classify, roots_from_json, roots_to_json, similarity_dimension, Window};
use gkf::sfe::{
    check_remainder_with, junction_remainder_bound, koch_operator, remainder_bound, residual, ScalingOperator,
};
use gkf::tube::{
    antiderivative, tube_table, CellSize, EstimatorConfig, GridError, GridSpec, Method, RelativeFractalDrum, TubeTable,
};
use gkf::tubeformula::{compare, reconstruct_vk};
use gkf::zeta::{residues, zeta_grid, zeta_grid_csv, ZetaConfig};

#[derive(Parser)]
#[command(name = "gkf", version, about = "Generalized von Koch fractals: geometry, tubes and complex dimensions")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; the accepted values depend on the command.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Grid,
    Montecarlo,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundArg {
    Sector,
    Junction,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ErrorModel {
    Bound,
    Statistical,
}

#[derive(clap::Args, Clone)]
struct Shape {
    /// Number of sides of the base polygon.
    #[arg(long, default_value_t = 3)]
    n: u32,
    /// Middle-piece ratio, as a fraction (`1/3`) or a decimal.
    #[arg(long, default_value = "1/3")]
    r: String,
}

#[derive(clap::Args, Clone)]
struct OperatorArgs {
    #[command(flatten)]
    shape: Shape,
    /// Explicit operator `a:λ,a:λ,...` (e.g. `2:3/8,3:1/4`), overriding --n/--r.
    #[arg(long)]
    terms: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the prefractal snowflake (or a single curve) as SVG or CSV.
    Render {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, default_value_t = 4)]
        level: u32,
        /// Render one curve on the unit segment instead of the closed snowflake.
        #[arg(long)]
        curve: bool,
    },
    /// Self-avoidance criterion, optionally with a sampled osculation check.
    CheckAvoid {
        #[command(flatten)]
        shape: Shape,
        /// Also sample the osculating-set condition at this level.
        #[arg(long)]
        osculation_level: Option<u32>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Lattice / non-lattice classification and similarity dimension.
    Classify {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_den: u64,
    },
    /// Complex dimensions in a window, with residues of the scaling zeta function.
    Dims {
        #[command(flatten)]
        op: OperatorArgs,
        /// Real range `a:b`.
        #[arg(long, default_value = "0:2", allow_hyphen_values = true)]
        re: String,
        /// Imaginary range `a:b`.
        #[arg(long, default_value = "-20:20", allow_hyphen_values = true)]
        im: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_den: u64,
    },
    /// Tube-volume table of the snowflake drum (CSV `eps,volume,err`).
    Tube {
        #[command(flatten)]
        shape: Shape,
        /// Log-spaced grid `lo:hi:count`.
        #[arg(long)]
        eps: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
        method: MethodArg,
        /// Absolute grid cell size.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Cell size relative to ε (`h = ε/h_rel`), capped by --h; overrides the absolute size.
        #[arg(long)]
        h_rel: Option<f64>,
        #[arg(long, value_enum, default_value_t = ErrorModel::Bound)]
        error_model: ErrorModel,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Fixed prefractal level instead of the ε-dependent rule.
        #[arg(long)]
        level: Option<u32>,
        /// Prefractal Hausdorff distance as a fraction of ε.
        #[arg(long)]
        level_fraction: Option<f64>,
    },
    /// Residual of the scaling functional equation and its remainder bound.
    SfeCheck {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        tube: PathBuf,
        /// Remainder coefficient: `sector` is `n(θ_n + 2cot(θ_n/2))`, `junction`
        /// is `n(π/2 + 2cot(α_n/2) − cot α_n)`.
        #[arg(long, value_enum, default_value_t = BoundArg::Sector)]
        bound: BoundArg,
    },
    /// Tube zeta values on a grid of s for argument plots.
    Zeta {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        tube: PathBuf,
        #[arg(long, default_value = "0.5:2", allow_hyphen_values = true)]
        re: String,
        #[arg(long, default_value = "-20:20", allow_hyphen_values = true)]
        im: String,
        /// Points along each axis.
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Pointwise tube formula for the k-th antiderivative versus the measured table.
    Reconstruct {
        #[arg(long)]
        k: u32,
        /// Output of `dims`.
        #[arg(long)]
        dims: PathBuf,
        #[arg(long)]
        tube: PathBuf,
        /// Keep poles with |Im ω| ≤ T.
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        t_lo: f64,
        #[arg(long, default_value_t = 1e-2)]
        t_hi: f64,
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::ValueValidation, msg)
        .exit()
}

fn parse_ratio(s: &str) -> Result<(f64, Option<Ratio<i64>>)> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().with_context(|| format!("bad numerator in {s:?}"))?;
        let q: i64 = q.trim().parse().with_context(|| format!("bad denominator in {s:?}"))?;
        if q == 0 {
            bail!("zero denominator in {s:?}");
        }
        let r = Ratio::new(p, q);
        return Ok((p as f64 / q as f64, Some(r)));
    }
    let v: f64 = s.parse().with_context(|| format!("not a number: {s:?}"))?;
    Ok((v, None))
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        bail!("expected a:b, got {s:?}");
    }
    Ok((parts[0].trim().parse()?, parts[1].trim().parse()?))
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("expected lo:hi:count, got {s:?}");
    }
    Ok(GridSpec::new(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?)?)
}

fn params(shape: &Shape) -> KochParams {
    let built = parse_ratio(&shape.r).and_then(|(v, exact)| {
        Ok(match exact {
            Some(q) => KochParams::from_rational(shape.n, q)?,
            None => KochParams::new(shape.n, v)?,
        })
    });
    built.unwrap_or_else(|e| usage_error(format!("--n {} --r {}: {e:#}", shape.n, shape.r)))
}

fn operator(args: &OperatorArgs) -> (ScalingOperator, Option<KochParams>) {
    let Some(terms) = &args.terms else {
        let p = params(&args.shape);
        return (koch_operator(&p), Some(p));
    };
    let parsed = terms
        .split(',')
        .map(|t| {
            let (a, l) = t.split_once(':').context("term must be a:ratio")?;
            Ok((a.trim().parse::<u32>()?, parse_ratio(l)?))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|ts| {
            let op = if ts.iter().all(|t| t.1 .1.is_some()) {
                ScalingOperator::with_exact(ts.iter().map(|t| (t.0, t.1 .1.unwrap())).collect())?
            } else {
                ScalingOperator::new(ts.iter().map(|t| (t.0, t.1 .0)).collect())?
            };
            Ok(op)
        });
    match parsed {
        Ok(op) => (op, None),
        Err(e) => usage_error(format!("--terms {terms}: {e:#}")),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_table(path: &Path) -> Result<TubeTable> {
    TubeTable::from_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn check_format(format: Option<Format>, allowed: &[Format], default: Format) -> Format {
    let f = format.unwrap_or(default);
    if !allowed.contains(&f) {
        usage_error("--format is not supported by this command");
    }
    f
}

struct Output {
    path: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = Output { path: cli.out.clone() };
    match cli.command {
        Command::Render { shape, level, curve } => {
            let p = params(&shape);
            let format = check_format(cli.format, &[Format::Svg, Format::Csv], Format::Svg);
            let text = if curve {
                let c = prefractal_curve(&p, level)?;
                match format {
                    Format::Svg => polyline_svg(&c),
                    _ => vertices_csv(&c.vertices),
                }
            } else {
                let s = snowflake(&p, level)?;
                match format {
                    Format::Svg => polygon_svg(&s),
                    _ => vertices_csv(&s.vertices),
                }
            };
            out.write(&text)?;
        }
        Command::CheckAvoid {
            shape,
            osculation_level,
            samples,
        } => {
            check_format(cli.format, &[Format::Json], Format::Json);
            let p = params(&shape);
            let avoid = is_self_avoiding(&p);
            let mut v = json!({
                "n": p.n,
                "r": p.r,
                "passes": avoid.passes,
                "threshold": avoid.threshold,
            });
            let mut ok = avoid.passes;
            if let (Some(level), true) = (osculation_level, avoid.passes) {
                let rep = osculation_check(&p, level, samples, cli.seed)?;
                ok &= rep.passes;
                v["osculation"] = json!({
                    "level": rep.level,
                    "samples_per_map": rep.samples_per_map,
                    "max_violation_per_map": rep.max_violation_per_map,
                    "max_violation": rep.max_violation,
                    "passes": rep.passes,
                });
            }
            out.write(&pretty(&v))?;
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Classify { op, tol, max_den } => {
            check_format(cli.format, &[Format::Json], Format::Json);
            let (op, _) = operator(&op);
            let info = lattice_classify(&op, tol, max_den);
            let v = json!({
                "terms": op.terms,
                "dimension": similarity_dimension(&op),
                "lattice": info,
            });
            out.write(&pretty(&v))?;
        }
        Command::Dims {
            op: args,
            re,
            im,
            tol,
            max_den,
        } => {
            check_format(cli.format, &[Format::Json], Format::Json);
            let (op, p) = operator(&args);
            let ((r0, r1), (i0, i1)) = match (parse_range(&re), parse_range(&im)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => usage_error(format!("window: {e:#}")),
            };
            let window = Window::new(r0, r1, i0, i1).unwrap_or_else(|e| usage_error(e));
            let info = lattice_classify(&op, tol, max_den);
            let roots = complex_dimensions(&op, &window, &info)?;
            let mut v = json!({
                "terms": op.terms,
                "dimension": similarity_dimension(&op),
                "lattice": info,
                "window": window,
                "roots": roots_to_json(&roots),
            });
            if let Some(p) = p {
                v["snowflake"] = json!({ "n": p.n, "r": p.r, "inradius": p.inradius() });
            }
            out.write(&pretty(&v))?;
        }
        Command::Tube {
            shape,
            eps,
            method,
            h,
            h_rel,
            error_model,
            samples,
            level,
            level_fraction,
        } => {
            check_format(cli.format, &[Format::Csv], Format::Csv);
            let p = params(&shape);
            let grid = parse_grid(&eps).unwrap_or_else(|e| usage_error(format!("--eps: {e:#}")));
            let mut cfg = match method {
                MethodArg::Grid => EstimatorConfig::grid(h),
                MethodArg::Montecarlo => EstimatorConfig::monte_carlo(samples, cli.seed),
            };
            if let (Some(f), MethodArg::Grid) = (h_rel, method) {
                cfg.method = Method::Grid {
                    h: CellSize::RelativeCapped { factor: 1.0 / f, max: h },
                };
            }
            cfg.grid_error = match error_model {
                ErrorModel::Bound => GridError::Bound,
                ErrorModel::Statistical => GridError::Statistical,
            };
            cfg.level_policy.fixed = level;
            if let Some(f) = level_fraction {
                cfg.level_policy.fraction = f;
            }
            let drum = RelativeFractalDrum::snowflake(&p)?;
            out.write(&tube_table(&drum, &grid, &cfg)?.to_csv())?;
        }
        Command::SfeCheck { shape, tube, bound } => {
            let format = check_format(cli.format, &[Format::Json, Format::Csv], Format::Json);
            let p = params(&shape);
            let table = read_table(&tube)?;
            let mut res = residual(&koch_operator(&p), &table)?;
            let coefficient = p.n as f64
                * match bound {
                    BoundArg::Sector => remainder_bound(&p),
                    BoundArg::Junction => junction_remainder_bound(&p),
                };
            res.bound_coeff = Some(coefficient);
            let rep = check_remainder_with(&res, coefficient);
            if format == Format::Csv {
                out.write(&res.to_csv())?;
            } else {
                let v = json!({
                    "passes": rep.passes,
                    "coefficient": rep.coefficient,
                    "points": rep.points,
                    "min_lower_margin": rep.min_lower_margin,
                    "min_upper_margin": rep.min_upper_margin,
                    "max_ratio": rep.max_ratio,
                    "failures": rep.failures.iter().map(|f| f.eps).collect::<Vec<_>>(),
                });
                out.write(&pretty(&v))?;
            }
            if !rep.passes {
                eprintln!("remainder check failed at {} of {} points", rep.failures.len(), rep.points);
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Zeta {
            shape,
            tube,
            re,
            im,
            points,
            delta,
        } => {
            check_format(cli.format, &[Format::Csv], Format::Csv);
            let p = params(&shape);
            let op = koch_operator(&p);
            let ((r0, r1), (i0, i1)) = match (parse_range(&re), parse_range(&im)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => usage_error(format!("grid: {e:#}")),
            };
            let table = read_table(&tube)?;
            let res = residual(&op, &table)?;
            let mut cfg = ZetaConfig::for_snowflake(&p, &op);
            if let Some(d) = delta {
                cfg.delta = d;
            }
            let evals = zeta_grid(&op, &table, &res, (r0, r1, points), (i0, i1, points), &cfg);
            out.write(&zeta_grid_csv(&evals))?;
        }
        Command::Reconstruct {
            k,
            dims,
            tube,
            t,
            t_lo,
            t_hi,
            delta,
        } => {
            let format = check_format(cli.format, &[Format::Json, Format::Csv], Format::Json);
            let doc: serde_json::Value =
                serde_json::from_str(&read(&dims)?).with_context(|| format!("parsing {}", dims.display()))?;
            let terms: Vec<(u32, f64)> = serde_json::from_value(doc["terms"].clone())
                .context("dims file lacks the operator `terms`")?;
            let op = ScalingOperator::new(terms)?;
            let roots: Vec<_> = roots_from_json(&doc["roots"])?
                .into_iter()
                .filter(|r| r.omega.im.abs() <= t * (1.0 + 1e-12))
                .collect();
            let delta = match (delta, doc["snowflake"]["inradius"].as_f64()) {
                (Some(d), _) => d,
                (None, Some(rho)) => 0.1 * rho,
                (None, None) => bail!("--delta is required when the dims file has no snowflake parameters"),
            };
            let d = similarity_dimension(&op);
            let cfg = ZetaConfig::new(delta, d)?;
            let table = read_table(&tube)?;
            let res = residual(&op, &table)?;
            let terms = residues(&op, &table, &res, &roots, &cfg)?;
            let measured = antiderivative(&table, k as i64, Some(d))?;
            let grid: Vec<f64> = measured.samples.iter().map(|s| s.eps).collect();
            let rec = reconstruct_vk(&terms, k, &grid, t)?;
            let report = compare(&measured, &rec, t_lo, t_hi, k, t)?;
            if format == Format::Csv {
                out.write(&report.to_csv())?;
            } else {
                let mut v: serde_json::Value = serde_json::from_str(&report.summary_json())?;
                v["poles"] = json!(terms.len());
                v["residues"] = terms
                    .iter()
                    .map(|r| {
                        json!({
                            "re": r.omega.re, "im": r.omega.im,
                            "a_re": r.a_omega.re, "a_im": r.a_omega.im,
                            "err": r.err, "confirmed": r.confirmed,
                        })
                    })
                    .collect();
                out.write(&pretty(&v))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            usage_error("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool initialised once");
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
