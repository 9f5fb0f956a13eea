use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use widomspec::abel::{
    delta_at_origin, kernel_at_origin, measure_box, measure_mc, shift_covariance_residual_k,
    transfer_normalization, AbelMap, INVERSION_TOL,
};
use widomspec::comb::{
    comb_from_gaps, gaps_from_comb, independence_check, kernel_truncation_report, truncate_comb,
    widom_delta_report, CombData, CombSolver,
};
use widomspec::config::{OutputFormat, RunConfig};
use widomspec::herglotz::{r00, split_resolvents_with_precision, Divisor};
use widomspec::io::{divisor_entries, InputDoc};
use widomspec::jacobi::{
    cd_residual, coefficients_with_precision, det_residual, j_expanding_min_eigenvalue, transfer_matrix,
};
use widomspec::spectral_set::{GapSystem, SpectralSet};
use widomspec::verify::{verify_document, verify_fixtures, VerifyReport};
use widomspec::{Error, Result};

const BASE_POINT: &str = "Abel map base divisor {(a_k, +1)}: left gap endpoints";

#[derive(Parser, Debug)]
#[command(name = "widomspec", version, about = "Finite-gap Jacobi matrices: spectral data, divisors, Abel map, combs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Input JSON document
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Working precision in bits for the continued-fraction iteration
    #[arg(long, global = true)]
    prec: Option<usize>,
    /// Quadrature tolerance
    #[arg(long, global = true)]
    qtol: Option<f64>,
    /// Seed for Monte-Carlo sampling
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV output (sequence outputs only)
    #[arg(long, global = true)]
    csv: bool,
    /// Evaluation point RE,IM
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    z: Option<Complex64>,
    /// First site
    #[arg(long, global = true, allow_hyphen_values = true)]
    from: Option<i64>,
    /// Last site
    #[arg(long, global = true, allow_hyphen_values = true)]
    to: Option<i64>,
    /// Truncation level, step count or polynomial degree
    #[arg(long, global = true)]
    n: Option<f64>,
    /// Monte-Carlo sample count
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    /// Gap number (from 1)
    #[arg(long, global = true)]
    gap: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Cmd {
    /// Critical points and heights of Green's function
    Critical,
    /// Green's function at --z
    Green,
    /// Harmonic measures at --z and frequencies
    Harmonic,
    /// Density of states at x = Re z, band masses and frequencies
    Dos,
    /// Resolvent functions of the divisor at --z
    Resolvents,
    /// Jacobi coefficients on --from..--to
    Coeffs,
    /// Transfer matrix of degree --n at --z
    Transfer,
    /// Abel map of the divisor
    Abel,
    /// Divisor with the character "alpha"
    Invert,
    /// Shift covariance residual after --n steps
    ShiftCheck,
    /// Reproducing kernel at the origin
    Kernel0,
    /// Invariant measure of the box
    Measure,
    /// Monte-Carlo estimate of the box measure
    MeasureMc,
    /// Comb of a gap system, or gap system of a comb
    Comb,
    /// Finite-band truncation of a comb
    Truncate,
    /// Invariant suite on the bundled fixtures (or on --input)
    Verify,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err("expected RE,IM".into()),
    }
}

enum Output {
    Json(Value),
    Csv(String),
    Verify(VerifyReport),
}

fn c2j(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

struct Ctx {
    cli: Cli,
    cfg: RunConfig,
    doc: InputDoc,
}

impl Ctx {
    fn z(&self) -> Result<Complex64> {
        self.cli.z.ok_or_else(|| Error::invalid("z", "--z RE,IM is required"))
    }

    fn gs(&self) -> Result<GapSystem> {
        self.doc.gap_system()
    }

    fn ss(&self) -> Result<SpectralSet> {
        SpectralSet::with_tolerances(self.gs()?, self.cfg.qtol, self.cfg.solver_tol)
    }

    /// The document's divisor, or the base divisor when none is given.
    fn divisor(&self, gs: &GapSystem) -> Result<Divisor> {
        if self.doc.divisor.is_some() {
            self.doc.divisor(gs)
        } else {
            Ok(Divisor::base(gs))
        }
    }

    fn steps(&self, default: usize) -> Result<usize> {
        match self.cli.n {
            None => Ok(default),
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(v) => Err(Error::invalid("n", format!("expected a nonnegative integer, got {v}"))),
        }
    }

    fn solver(&self) -> CombSolver {
        let [b0, a0] = self.doc.band.unwrap_or([-2.0, 2.0]);
        let mut s = CombSolver::new(b0, a0);
        s.tol = self.cfg.solver_tol;
        s
    }
}

fn comb_json(comb: &CombData) -> Value {
    let omega: Vec<f64> = comb.teeth().iter().map(|t| t.omega).collect();
    let rel = independence_check(&omega, if omega.len() <= 6 { 5 } else { 1 }, 1e-9);
    json!({
        "teeth": comb.teeth().iter().map(|t| json!({"omega": t.omega, "h": t.h})).collect::<Vec<_>>(),
        "tail_bound": if comb.tail_bound().is_finite() { json!(comb.tail_bound()) } else { json!("inf") },
        "height_sum": comb.height_sum(),
        "delta0": comb.delta0(),
        "widom": comb.widom(),
        "integer_relation": {
            "max_coefficient": rel.max_coefficient,
            "relation": rel.relation,
        },
    })
}

fn run(ctx: &Ctx) -> Result<Output> {
    let cli = &ctx.cli;
    let csv_ok = matches!(cli.cmd, Cmd::Coeffs | Cmd::Truncate);
    if cli.csv && !csv_ok {
        return Err(Error::invalid("csv", "CSV output is available for coeffs and truncate"));
    }
    let out = match cli.cmd {
        Cmd::Critical => {
            let ss = ctx.ss()?;
            let cp = ss.critical_points();
            json!({"c": cp.c, "h": cp.h, "residuals": cp.residuals, "widom_sum": ss.widom_sum()})
        }
        Cmd::Green => {
            let ss = ctx.ss()?;
            let z = ctx.z()?;
            json!({"z": c2j(z), "green": ss.green(z)?, "robin": ss.robin_constant()})
        }
        Cmd::Harmonic => {
            let ss = ctx.ss()?;
            let z = ctx.z()?;
            let n = ss.genus();
            let gaps: Vec<usize> = match cli.gap {
                Some(0) => return Err(Error::invalid("gap", "gap numbers start at 1")),
                Some(g) if g > n => {
                    return Err(Error::invalid("gap", format!("only {n} gaps")))
                }
                Some(g) => vec![g - 1],
                None => (0..n).collect(),
            };
            let values = gaps
                .iter()
                .map(|&k| Ok(json!({"gap": k + 1, "omega": ss.harmonic_measure_at(k, z)?, "frequency": ss.frequencies()[k]})))
                .collect::<Result<Vec<_>>>()?;
            json!({"z": c2j(z), "harmonic": values})
        }
        Cmd::Dos => {
            let ss = ctx.ss()?;
            let masses = (0..=ss.genus()).map(|i| ss.band_mass(i)).collect::<Result<Vec<_>>>()?;
            let mut v = json!({"band_masses": masses, "frequencies": ss.frequencies()});
            if let Some(z) = cli.z {
                v["x"] = json!(z.re);
                v["density"] = json!(ss.dos_density(z.re)?);
                v["cdf"] = json!(ss.dos_cdf(z.re)?);
            }
            v
        }
        Cmd::Resolvents => {
            let gs = ctx.gs()?;
            let d = ctx.divisor(&gs)?;
            let z = ctx.z()?;
            let pair = split_resolvents_with_precision(&gs, &d, ctx.cfg.prec_bits)?;
            let (u, v) = pair.uv(z);
            json!({
                "z": c2j(z),
                "divisor": divisor_entries(&d),
                "r00": c2j(r00(&gs, &d, z)?),
                "r_plus": c2j(pair.r_plus(z)),
                "r_minus": c2j(pair.r_minus(z)),
                "u": c2j(u),
                "v": c2j(v),
                "p0sq": pair.p0sq(),
                "q0": pair.q0(),
            })
        }
        Cmd::Coeffs => {
            let gs = ctx.gs()?;
            let d = ctx.divisor(&gs)?;
            let n0 = cli.from.unwrap_or(-10);
            let n1 = cli.to.unwrap_or(10);
            if n0 > n1 {
                return Err(Error::invalid("from", format!("--from {n0} exceeds --to {n1}")));
            }
            let seg = coefficients_with_precision(&gs, &d, n0, n1, ctx.cfg.prec_bits)?;
            if cli.csv {
                return Ok(Output::Csv(seg.to_csv()));
            }
            json!({"n0": seg.n0(), "n1": seg.n1(), "p": seg.p_values(), "q": seg.q_values()})
        }
        Cmd::Transfer => {
            let gs = ctx.gs()?;
            let ss = ctx.ss()?;
            let d = ctx.divisor(&gs)?;
            let z = ctx.z()?;
            let n = ctx.steps(10)?;
            let seg = coefficients_with_precision(&gs, &d, 0, n as i64 + 1, ctx.cfg.prec_bits)?;
            let a = transfer_matrix(&seg, z, n)?;
            let mut v = json!({
                "z": c2j(z),
                "n": n,
                "matrix": [[c2j(a[(0, 0)]), c2j(a[(0, 1)])], [c2j(a[(1, 0)]), c2j(a[(1, 1)])]],
                "det_residual": det_residual(&seg, z, n)?,
            });
            if z.im != 0.0 {
                v["cd_residual"] = json!(cd_residual(&seg, z, n)?);
            }
            if z.im > 0.0 {
                v["j_expanding_min_eigenvalue"] = json!(j_expanding_min_eigenvalue(&seg, z, n)?);
            }
            let norm = transfer_normalization(&ss, &d)?;
            v["normalization"] = json!({
                "lambda": norm.lambda,
                "z_a12_at_infinity": c2j(norm.z_a12),
                "residual": norm.residual,
            });
            v
        }
        Cmd::Abel => {
            let ss = ctx.ss()?;
            let d = ctx.divisor(ss.gap_system())?;
            let map = AbelMap::new(&ss);
            json!({"divisor": divisor_entries(&d), "alpha": map.eval(&d).alpha, "omega": ss.frequencies()})
        }
        Cmd::Invert => {
            let ss = ctx.ss()?;
            let alpha = ctx.doc.alpha()?;
            let map = AbelMap::new(&ss);
            let d = map.invert(&alpha, None, INVERSION_TOL)?;
            let residual = map.eval(&d).distance(&alpha);
            json!({"alpha": alpha.alpha, "divisor": divisor_entries(&d), "residual": residual})
        }
        Cmd::ShiftCheck => {
            let ss = ctx.ss()?;
            let d = ctx.divisor(ss.gap_system())?;
            let k = ctx.steps(1)?;
            let r = shift_covariance_residual_k(&ss, &d, k)?;
            json!({"steps": k, "residual": r, "tolerance": 1e-6, "passed": r <= 1e-6})
        }
        Cmd::Kernel0 => {
            let ss = ctx.ss()?;
            let d = ctx.divisor(ss.gap_system())?;
            let k = kernel_at_origin(&ss, &d)?;
            let delta = delta_at_origin(&ss);
            json!({"kernel": k, "delta": delta, "lower_bound": delta * delta, "upper_bound": 1.0})
        }
        Cmd::Measure => {
            let ss = ctx.ss()?;
            let boxes = ctx.doc.boxes()?;
            json!({"measure": measure_box(&ss, &boxes)?})
        }
        Cmd::MeasureMc => {
            let ss = ctx.ss()?;
            let boxes = ctx.doc.boxes()?;
            let samples = cli.mc_samples.unwrap_or(100_000);
            let est = measure_mc(&ss, &boxes, samples, ctx.cfg.seed)?;
            json!({
                "estimate": est.estimate,
                "stderr": est.stderr,
                "samples": est.samples,
                "seed": est.seed,
                "determinant": measure_box(&ss, &boxes)?,
            })
        }
        Cmd::Comb => {
            if ctx.doc.teeth.is_some() {
                let comb = ctx.doc.comb()?;
                let gs = gaps_from_comb(&comb, &ctx.solver())?;
                json!({"band": [gs.b0(), gs.a0()], "gaps": gs.gaps().iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()})
            } else {
                comb_json(&comb_from_gaps(&ctx.ss()?))
            }
        }
        Cmd::Truncate => {
            let comb = if ctx.doc.teeth.is_some() { ctx.doc.comb()? } else { comb_from_gaps(&ctx.ss()?) };
            let ns = match (&ctx.doc.n_list, cli.n) {
                (Some(list), _) => list.clone(),
                (None, Some(n)) => vec![n],
                (None, None) => {
                    return Err(Error::invalid("n", "give --n or an \"n_list\""))
                }
            };
            let report = widom_delta_report(&comb, &ns)?;
            let kernel = match &ctx.doc.tooth_divisor {
                Some(_) => Some(kernel_truncation_report(&comb, &ctx.doc.tooth_divisor()?, &ns, &ctx.solver())?),
                None => None,
            };
            if cli.csv {
                let mut s = String::from(if kernel.is_some() { "n,delta,kernel\n" } else { "n,delta\n" });
                for (i, (n, d)) in report.iter().enumerate() {
                    match &kernel {
                        Some(k) => s.push_str(&format!("{n},{d},{}\n", k[i].kernel)),
                        None => s.push_str(&format!("{n},{d}\n")),
                    }
                }
                return Ok(Output::Csv(s));
            }
            let last = *ns.last().expect("nonempty");
            let mut v = json!({
                "truncated": comb_json(&truncate_comb(&comb, last)?),
                "delta_report": report.iter().map(|(n, d)| json!({"n": n, "delta": d})).collect::<Vec<_>>(),
                "delta_limit": comb.delta0(),
            });
            if let Some(k) = kernel {
                v["kernel_report"] = json!(k
                    .iter()
                    .map(|r| json!({"n": r.n, "teeth": r.teeth, "kernel": r.kernel, "delta": r.delta}))
                    .collect::<Vec<_>>());
                v["kernel_report_status"] = json!("exploratory");
            }
            v
        }
        Cmd::Verify => {
            let report = if cli.input.is_some() {
                let f = verify_document("input", &ctx.doc, &ctx.cfg)?;
                let passed = f.passed();
                VerifyReport { fixtures: vec![f], passed }
            } else {
                verify_fixtures(&ctx.cfg)?
            };
            return Ok(Output::Verify(report));
        }
    };
    Ok(Output::Json(out))
}

fn meta(cfg: &RunConfig) -> Value {
    json!({
        "config": cfg,
        "base_point": BASE_POINT,
        "indexing": "gaps and teeth numbered from 1",
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn with_meta(mut v: Value, cfg: &RunConfig) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("meta".into(), meta(cfg));
    }
    v
}

fn fail(e: &Error) -> ExitCode {
    let field = match e {
        Error::InvalidInput { field, .. } => Some(field.clone()),
        _ => None,
    };
    eprintln!("{}", json!({"error": e.to_string(), "field": field}));
    ExitCode::from(if e.is_input_error() { 2 } else { 3 })
}

fn setup(cli: Cli) -> Result<Ctx> {
    let mut cfg = RunConfig::from_env()?;
    if let Some(p) = cli.prec {
        cfg.prec_bits = p;
    }
    if let Some(q) = cli.qtol {
        cfg.qtol = q;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.csv {
        cfg.format = OutputFormat::Csv;
    }
    cfg.validate()?;
    let doc = match &cli.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::invalid("input", format!("{}: {e}", path.display())))?;
            InputDoc::parse(&text)?
        }
        None if cli.cmd == Cmd::Verify => InputDoc::default(),
        None => return Err(Error::invalid("input", "--input FILE is required")),
    };
    Ok(Ctx { cli, cfg, doc })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match setup(cli) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run(&ctx) {
        Ok(Output::Json(v)) => {
            println!("{}", serde_json::to_string_pretty(&with_meta(v, &ctx.cfg)).expect("serializable"));
            ExitCode::SUCCESS
        }
        Ok(Output::Csv(s)) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Ok(Output::Verify(report)) => {
            for f in &report.fixtures {
                for c in &f.checks {
                    eprintln!(
                        "{} {:<20} {:<45} {:.3e} (tol {:.0e}){}",
                        if c.passed { "PASS" } else { "FAIL" },
                        f.fixture,
                        c.name,
                        c.value,
                        c.tol,
                        c.error.as_ref().map(|e| format!(" {e}")).unwrap_or_default(),
                    );
                }
            }
            let v = serde_json::to_value(&report).expect("serializable");
            println!("{}", serde_json::to_string_pretty(&with_meta(v, &ctx.cfg)).expect("serializable"));
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&e),
    }
}
