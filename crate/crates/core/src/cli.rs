//! The `mquiver` command line. Every subcommand prints one JSON report per
//! input on standard output; the exit code is 0 for pass, 1 for fail or
//! indeterminate and 2 for invalid input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cxmat::{self, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::implosion::{self, AlcovePoint};
use crate::io::{self, complex_to_json, matrix_to_json, Metadata, QuiverDocument};
use crate::normal_form;
use crate::quiver::{self, DimensionVector, Quiver, RandomOptions, ScalarChain, ToricSplit};
use crate::random;
use crate::report::{digest, Report};
use crate::sl2::{self, SL2Point};
use crate::steinberg::{self, TorusLevel};

/// Environment variable overriding the default tolerance.
pub const TOL_ENV: &str = "MQUIVER_TOL";

#[derive(Parser, Debug)]
#[command(name = "mquiver", version, about = "Multiplicative flag quivers: verification and generation")]
struct Cli {
    /// Tolerance for residual checks (default 1e-9, or $MQUIVER_TOL).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the equations, the minimal-polynomial identity and the X_k recursion.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Infer the scalars q from a quiver.
    InferQ { file: PathBuf },
    /// Build the toric quiver for a scalar chain.
    Toric {
        #[arg(long)]
        n: usize,
        /// Comma-separated q_1,...,q_{n-1} in a+bi form.
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        #[arg(long, value_enum, default_value_t = Split::Principal)]
        split: Split,
    },
    /// Generate a random solution on the full flag.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        bound: f64,
        /// Force every q to 1.
        #[arg(long)]
        unipotent: bool,
    },
    /// Gauge a solution into standard form.
    Reduce { file: PathBuf },
    /// Rebuild the standard-form quiver from an element of B1.
    Reconstruct {
        #[arg(long)]
        borel: PathBuf,
    },
    /// Generalized eigenspace decomposition at tau.
    Decompose {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
    /// Steinberg-fibre membership of a matrix at a torus level.
    Steinberg {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
    },
    /// Random multiplicative Springer image at a torus level.
    Springer {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        seed: u64,
    },
    /// The cover B -> B1, or with --lifts the n preimages of an element of B1.
    Cover {
        #[arg(long)]
        borel: PathBuf,
        #[arg(long)]
        lifts: bool,
    },
    /// Toric quiver, stratum and stabilizer at an alcove point.
    Hjs {
        #[arg(long, allow_hyphen_values = true)]
        thetas: String,
    },
    /// The SL(2) examples.
    Sl2 {
        #[command(subcommand)]
        action: Sl2Action,
    },
}

#[derive(Subcommand, Debug)]
enum Sl2Action {
    /// N-invariants x, y and the relation cx - ay = e - e'.
    Invariants(Sl2PointArgs),
    /// Quadric coordinates X = ex, Y = ey.
    Quadric(Sl2PointArgs),
    /// Real slice e = e^{i theta}, f = 0 at u in SU(2).
    Slice {
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// Entries a,b,c,d of u; a seeded random element of SU(2) when absent.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(clap::Args, Debug)]
struct Sl2PointArgs {
    /// Entries a,b,c,d of u (default identity).
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long, default_value = "2", allow_hyphen_values = true)]
    e: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    f: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Principal,
    PositiveCut,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let tol = match resolve_tolerance(cli.tol, std::env::var(TOL_ENV).ok()) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let reports = dispatch(&cli.command, tol);
    let mut code = 0;
    for r in &reports {
        let _ = writeln!(out, "{}", r.to_json());
        if let Some(msg) = &r.error {
            let _ = writeln!(err, "error: {}: {msg}", r.operation);
        }
        code = code.max(r.verdict.exit_code());
    }
    code
}

fn resolve_tolerance(flag: Option<f64>, env: Option<String>) -> Result<f64> {
    let tol = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(text)) => text
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("{TOL_ENV}={text:?} is not a number")))?,
        (None, None) => cxmat::DEFAULT_TOL,
    };
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    Ok(tol)
}

fn dispatch(cmd: &Command, tol: f64) -> Vec<Report> {
    match cmd {
        Command::Verify { files } => files.par_iter().map(|f| run_one("verify", &[], &[f], tol, |r, tol| verify(r, f, tol))).collect(),
        Command::InferQ { file } => vec![run_one("infer-q", &[], &[file], tol, |r, tol| infer_q(r, file, tol))],
        Command::Toric { n, q, split } => {
            let args = [n.to_string(), q.clone().unwrap_or_default(), format!("{split:?}")];
            vec![run_one("toric", &args, &[], tol, |r, tol| toric(r, *n, q.as_deref(), *split, tol))]
        }
        Command::Random { n, seed, bound, unipotent } => {
            let args = [n.to_string(), seed.to_string(), bound.to_string(), unipotent.to_string()];
            vec![run_one("random", &args, &[], tol, |r, tol| random_solution(r, *n, *seed, *bound, *unipotent, tol))]
        }
        Command::Reduce { file } => vec![run_one("reduce", &[], &[file], tol, |r, tol| reduce(r, file, tol))],
        Command::Reconstruct { borel } => vec![run_one("reconstruct", &[], &[borel], tol, |r, tol| reconstruct(r, borel, tol))],
        Command::Decompose { file, tau } => {
            vec![run_one("decompose", std::slice::from_ref(tau), &[file], tol, |r, tol| decompose(r, file, tau, tol))]
        }
        Command::Steinberg { matrix, lambda } => {
            vec![run_one("steinberg", std::slice::from_ref(lambda), &[matrix], tol, |r, tol| steinberg_member(r, matrix, lambda, tol))]
        }
        Command::Springer { n, lambda, seed } => {
            let args = [n.to_string(), lambda.clone(), seed.to_string()];
            vec![run_one("springer", &args, &[], tol, |r, tol| springer(r, *n, lambda, *seed, tol))]
        }
        Command::Cover { borel, lifts } => {
            vec![run_one("cover", &[lifts.to_string()], &[borel], tol, |r, tol| cover(r, borel, *lifts, tol))]
        }
        Command::Hjs { thetas } => vec![run_one("hjs", std::slice::from_ref(thetas), &[], tol, |r, tol| hjs(r, thetas, tol))],
        Command::Sl2 { action } => vec![sl2_command(action, tol)],
    }
}

/// Digests the inputs, runs `body` and turns errors into an invalid report.
fn run_one<F>(op: &str, args: &[String], files: &[&PathBuf], tol: f64, body: F) -> Report
where
    F: FnOnce(&mut Report, f64) -> Result<()>,
{
    let contents: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap_or_default()).collect();
    let tol_text = tol.to_string();
    let mut parts: Vec<&[u8]> = vec![op.as_bytes(), tol_text.as_bytes()];
    parts.extend(args.iter().map(|a| a.as_bytes()));
    parts.extend(contents.iter().map(|c| c.as_slice()));
    let d = digest(parts);
    let mut report = Report::new(op, d.clone());
    if !files.is_empty() {
        report.set("files", json!(files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()));
    }
    match body(&mut report, tol) {
        Ok(()) => report,
        Err(e) => Report::invalid(op, d, e.to_string()),
    }
}

fn cjson(z: Complex) -> Value {
    json!(complex_to_json(z))
}

fn clist(zs: &[Complex]) -> Value {
    Value::Array(zs.iter().map(|&z| cjson(z)).collect())
}

/// Quiver and scalars from a document; scalars are inferred when absent.
fn quiver_and_scalars(path: &Path, tol: f64) -> Result<(Quiver, ScalarChain, bool)> {
    let (q, chain) = io::load_quiver(path)?;
    match chain {
        Some(s) => Ok((q, s, false)),
        None => {
            let s = quiver::infer_scalars(&q, tol.max(cxmat::DEFAULT_TOL))?;
            Ok((q, s, true))
        }
    }
}

fn verify(r: &mut Report, path: &Path, tol: f64) -> Result<()> {
    let (q, chain) = io::load_quiver(path)?;
    let s = match chain {
        Some(s) => s,
        None => match quiver::infer_scalars(&q, tol) {
            Ok(s) => s,
            Err(Error::NotASolution { residual, tolerance }) => {
                r.set("scalars", json!("inferred"));
                r.check("equations", residual, tolerance);
                return Ok(());
            }
            Err(e) => return Err(e),
        },
    };
    r.set("q", clist(s.q()));
    r.check("equations", quiver::max_relative_residual(&q, &s)?, tol);
    r.check("minpoly", quiver::minpoly_residual(&q, &s)?, tol);
    r.check("xk_recursion", quiver::xk_recursion_residual(&q, &s)?, tol);
    Ok(())
}

fn infer_q(r: &mut Report, path: &Path, tol: f64) -> Result<()> {
    let (q, _) = io::load_quiver(path)?;
    match quiver::infer_scalars(&q, tol) {
        Ok(s) => {
            r.set("q", clist(s.q()));
            r.check("equations", quiver::max_relative_residual(&q, &s)?, tol);
        }
        Err(Error::NotASolution { residual, tolerance }) => {
            r.check("equations", residual, tolerance);
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn quiver_json(q: &Quiver, s: Option<&ScalarChain>, metadata: Option<Metadata>) -> Value {
    serde_json::to_value(QuiverDocument::from_quiver(q, s, metadata)).expect("documents serialize")
}

fn toric(r: &mut Report, n: usize, q: Option<&str>, split: Split, tol: f64) -> Result<()> {
    let s = match q {
        Some(text) if !text.is_empty() => ScalarChain::new(io::parse_complex_list(text)?)?,
        _ => ScalarChain::ones(n.saturating_sub(1)),
    };
    let split = match split {
        Split::Principal => ToricSplit::Principal,
        Split::PositiveCut => ToricSplit::PositiveCut,
    };
    let quiver = quiver::gen_toric(n, &s, &split)?;
    let metadata = Metadata { generator: Some("toric".into()), ..Default::default() };
    r.set("quiver", quiver_json(&quiver, Some(&s), Some(metadata)));
    solution_checks(r, &quiver, &s, tol)
}

fn solution_checks(r: &mut Report, q: &Quiver, s: &ScalarChain, tol: f64) -> Result<()> {
    r.check("equations", quiver::max_relative_residual(q, s)?, tol);
    Ok(())
}

fn random_solution(r: &mut Report, n: usize, seed: u64, bound: f64, unipotent: bool, tol: f64) -> Result<()> {
    if n == 0 || !(bound.is_finite() && bound > 0.0) {
        return Err(Error::InvalidInput("need n >= 1 and a positive bound".into()));
    }
    let dims = DimensionVector::full_flag(n);
    let (quiver, s) = quiver::gen_random_with(&dims, seed, RandomOptions { entry_bound: bound, unipotent })?;
    let metadata = Metadata { seed: Some(seed), generator: Some("random".into()), ..Default::default() };
    r.set("quiver", quiver_json(&quiver, Some(&s), Some(metadata)));
    // generated solutions carry the conditioning of Y, so the check is relative to 1e-8
    r.check("equations", quiver::max_relative_residual(&quiver, &s)?, tol.max(1e-8));
    Ok(())
}

fn reduce(r: &mut Report, path: &Path, tol: f64) -> Result<()> {
    let (q, s, inferred) = quiver_and_scalars(path, tol)?;
    let (_, std) = normal_form::reduce_to_standard(&q, tol)?;
    let diag = quiver::endo_y(&std).diagonal();
    let expected = s.standard_diagonal();
    let dev = diag.iter().zip(&expected).map(|(a, b)| (a - b).norm() / b.norm().max(1.0)).fold(0.0, f64::max);
    r.set("scalars_inferred", json!(inferred));
    r.set("standard_diagonal", clist(&expected));
    r.set("quiver", quiver_json(&std, Some(&s), None));
    r.check("standard_diagonal", dev, tol.max(1e-8));
    r.check("equations", quiver::max_relative_residual(&std, &s)?, tol.max(1e-8));
    Ok(())
}

fn reconstruct(r: &mut Report, path: &Path, tol: f64) -> Result<()> {
    let y = io::load_matrix(path)?.to_borel("B1")?;
    let (q, s) = normal_form::reconstruct_from_borel(&y, tol)?;
    let back = quiver::endo_y(&q);
    let scale = y.matrix().max_abs().max(1.0);
    r.set("q", clist(s.q()));
    r.set("quiver", quiver_json(&q, Some(&s), None));
    r.check("y_reproduced", (&back - y.matrix()).max_abs() / scale, tol);
    r.check("equations", quiver::max_relative_residual(&q, &s)?, tol);
    Ok(())
}

fn decompose(r: &mut Report, path: &Path, tau: &str, tol: f64) -> Result<()> {
    let tau = io::parse_complex(tau)?;
    let (q, s, _) = quiver_and_scalars(path, tol)?;
    let d = quiver::eigenspace_decompose(&q, &s, tau, tol)?;
    let failures = d.levels.iter().filter(|l| l.isomorphism_expected && !l.isomorphism).count();
    r.set("dims", json!(d.dims()));
    r.set("node_parameters", clist(&d.node_parameters));
    r.set(
        "levels",
        Value::Array(
            d.levels
                .iter()
                .map(|l| {
                    json!({
                        "alpha_leakage": l.alpha_leakage,
                        "beta_leakage": l.beta_leakage,
                        "kernel_mismatch": l.kernel_mismatch,
                        "upper_parameter": cjson(l.upper_parameter),
                        "isomorphism_expected": l.isomorphism_expected,
                        "isomorphism": l.isomorphism,
                    })
                })
                .collect(),
        ),
    );
    r.check("leakage", d.max_leakage(), tol.max(1e-8));
    r.check("isomorphism_failures", failures as f64, 0.0);
    Ok(())
}

fn steinberg_member(r: &mut Report, path: &Path, lambda: &str, tol: f64) -> Result<()> {
    let m = io::load_matrix(path)?.to_matrix()?;
    let lambda = TorusLevel::new(io::parse_complex_list(lambda)?)?;
    let dev = steinberg::steinberg_membership(&m, &lambda)?;
    let cd = steinberg::centralizer_dim(&m, tol);
    r.set("class_functions", clist(&steinberg::class_functions(&m)));
    r.set("centralizer_dim", json!(cd.dim));
    r.set("regular", json!(cd.is_regular(m.rows())));
    r.set("centralizer_indeterminate", json!(cd.indeterminate));
    r.check("membership", dev, tol);
    Ok(())
}

fn springer(r: &mut Report, n: usize, lambda: &str, seed: u64, tol: f64) -> Result<()> {
    let lambda = TorusLevel::new(io::parse_complex_list(lambda)?)?;
    if lambda.n() != n {
        return Err(Error::InvalidInput(format!("lambda has {} entries, expected {n}", lambda.n())));
    }
    let mut rng = random::rng(seed);
    let u = random::special_linear(&mut rng, n, 1e3);
    let n_part = random::unitriangular(&mut rng, n, 10.0);
    let image = steinberg::springer_image(&u, &lambda, &n_part)?;
    let cd = steinberg::centralizer_dim(&image, tol);
    r.set("image", json!(matrix_to_json(&image)));
    r.set("centralizer_dim", json!(cd.dim));
    r.set("regular", json!(cd.is_regular(n)));
    r.check("membership", steinberg::steinberg_membership(&image, &lambda)?, tol.max(1e-8));
    Ok(())
}

fn cover(r: &mut Report, path: &Path, lifts: bool, tol: f64) -> Result<()> {
    let doc = io::load_matrix(path)?;
    if lifts {
        let y = doc.to_borel("B1")?;
        let all = normal_form::cover_lifts(&y)?;
        let mut det = 0.0f64;
        let mut round_trip = 0.0f64;
        for lift in &all {
            det = det.max(lift.det_residual);
            let back = normal_form::cover_rho(&lift.b)?;
            round_trip = round_trip.max((back.y.matrix() - y.matrix()).max_abs());
        }
        let z1s: Vec<Complex> = all.iter().map(|l| l.z1).collect();
        r.set("z1", clist(&z1s));
        r.set("lifts", Value::Array(all.iter().map(|l| json!(matrix_to_json(l.b.matrix()))).collect()));
        r.check("det_residual", det, tol.max(1e-10));
        r.check("rho_round_trip", round_trip, tol.max(1e-10));
        r.check("lift_count_defect", (all.len() as f64 - y.n() as f64).abs(), 0.0);
    } else {
        let b = doc.to_borel("B")?;
        let image = normal_form::cover_rho(&b)?;
        r.set("y", json!(matrix_to_json(image.y.matrix())));
        r.set("z1", cjson(image.z1));
        r.check("det_residual", image.det_residual, tol.max(1e-10));
    }
    Ok(())
}

fn hjs(r: &mut Report, thetas: &str, tol: f64) -> Result<()> {
    let p = AlcovePoint::new(io::parse_real_list(thetas)?)?;
    let s = implosion::qs_from_alcove(&p);
    let stab = implosion::stabilizer_check(&p, implosion::RUN_TOL)?;
    let mut toric = quiver::endo_y(&stab.quiver).diagonal();
    toric.reverse();
    let b1 = implosion::alcove_to_b1(&p).matrix().diagonal();
    let mismatch = toric.iter().zip(&b1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    r.set("q", clist(s.q()));
    r.set("b1_diagonal", clist(&b1));
    r.set("runs", json!(stab.stratum.runs));
    r.set("collapsed_dims", json!(stab.stratum.collapsed_dims));
    r.set("stabilizer_blocks", json!(stab.stratum.stabilizer_blocks));
    r.set("predicted_dim", json!(stab.predicted_dim));
    r.set("measured_dim", json!(stab.measured_dim));
    r.set("decomposition_ok", json!(stab.decomposition_ok));
    r.set("quiver", quiver_json(&stab.quiver, Some(&s), None));
    r.check("equations", quiver::max_relative_residual(&stab.quiver, &s)?, tol.max(1e-10));
    r.check("diagonal", mismatch, tol);
    r.check("stabilizer_forward", stab.forward_residual, tol);
    if stab.measured_dim != stab.predicted_dim || !stab.decomposition_ok {
        r.mark_indeterminate();
    }
    Ok(())
}

fn sl2_point(args: &Sl2PointArgs) -> Result<SL2Point> {
    let e = io::parse_complex(&args.e)?;
    let f = io::parse_complex(&args.f)?;
    if e.norm() == 0.0 {
        return Err(Error::ZeroE);
    }
    let u = match &args.u {
        Some(text) => four(text)?,
        None => [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
    };
    SL2Point::new(u, e, f, e.inv())
}

fn four(text: &str) -> Result<[Complex; 4]> {
    let v = io::parse_complex_list(text)?;
    <[Complex; 4]>::try_from(v).map_err(|v| Error::InvalidInput(format!("u needs 4 entries, got {}", v.len())))
}

fn sl2_command(action: &Sl2Action, tol: f64) -> Report {
    match action {
        Sl2Action::Invariants(args) => {
            let tag = [format!("{:?}", args.u), args.e.clone(), args.f.clone()];
            run_one("sl2-invariants", &tag, &[], tol, |r, tol| {
                let p = sl2_point(args)?;
                let inv = sl2::sl2_invariants(&p);
                r.set("x", cjson(inv.x));
                r.set("y", cjson(inv.y));
                r.set("e", cjson(inv.e));
                r.set("eprime", cjson(inv.eprime));
                r.check("relation", sl2::sl2_relation_residual(&p), tol);
                Ok(())
            })
        }
        Sl2Action::Quadric(args) => {
            let tag = [format!("{:?}", args.u), args.e.clone(), args.f.clone()];
            run_one("sl2-quadric", &tag, &[], tol, |r, tol| {
                let q = sl2::sl2_quadric_coords(&sl2_point(args)?)?;
                r.set("X", cjson(q.big_x));
                r.set("Y", cjson(q.big_y));
                r.check("quadric", q.residual(), tol);
                Ok(())
            })
        }
        Sl2Action::Slice { theta, u, seed } => {
            let tag = [theta.to_string(), format!("{u:?}"), seed.to_string()];
            run_one("sl2-slice", &tag, &[], tol, |r, tol| {
                let u = match u {
                    Some(text) => {
                        let [a, b, c, d] = four(text)?;
                        CMatrix::from_rows(&[vec![a, b], vec![c, d]])?
                    }
                    None => random::special_unitary(&mut random::rng(*seed), 2),
                };
                let slice = sl2::sl2_real_slice(*theta, &u)?;
                r.set("x", cjson(slice.x));
                r.set("y", cjson(slice.y));
                r.check("slice", slice.residual, tol);
                if let Some(res) = slice.sphere_residual {
                    r.check("sphere", res, tol);
                }
                Ok(())
            })
        }
    }
}
