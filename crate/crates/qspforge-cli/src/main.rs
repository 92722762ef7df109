use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use qspforge::bivariate::{frt_counterexample, necessary_condition_check, VariableSchedule};
use qspforge::codec::{
    bivar_from_json, hankel_dets_to_json, load_json_arg, moments_to_json, poly_from_json, poly_to_json,
    to_json_string, toeplitz_dets_to_json,
};
use qspforge::functionals::toeplitz_dets;
use qspforge::gqsp::{find_angles_from_pair, GqspAngles, Seed};
use qspforge::lcuplan::{expand_in_basis, hermite_function_plan, lcu_resources, Basis, BasisSpec, TestFunction};
use qspforge::opqsp::{
    family, find_angles_from_roots, find_angles_from_weighted_roots, FamilySpec, OpqspAngles, DEFAULT_OMEGA1,
};
use qspforge::su11::{find_angles_from_target, nu_to_angles, Su11Angles, VerblunskyCoeffs};
use qspforge::verify::{
    property_suite, verify_gate_level, verify_transfer_product, UnitaryModel, Variant, VariantAngles,
};
use qspforge::{QspError, Tolerances};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const CONFIG_ENV: &str = "QSPFORGE_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "qspforge", version, about = "Angle synthesis and verification for QSP variants")]
struct Cli {
    /// Tolerance config file (JSON); defaults to $QSPFORGE_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Job spec (inline JSON or path) replacing the subcommand.
    #[arg(long, global = true)]
    job: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recurrence, angles and polynomials of a named OP-QSP family.
    Families(FamiliesArgs),
    /// OP-QSP angles for a target with distinct real roots.
    SynthOpqsp(SynthOpqspArgs),
    /// GQSP angles for a unimodular pair (P, Q).
    SynthGqsp(SynthGqspArgs),
    /// SU(1,1) angles for a target with roots inside the unit disk.
    SynthSu11(SynthSu11Args),
    /// Transfer-product and gate-level block checks.
    Verify(VerifyArgs),
    /// LCU coefficients of a target in a QSP basis, or a Hermite-series plan.
    ExpandLcu(ExpandLcuArgs),
    /// Necessary-condition check for a bivariate pair.
    BivariateCheck(BivariateArgs),
    /// Seeded random invariant suite.
    PropertySuite(PropertyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyName {
    Chebyshev,
    TwoChebyshev,
    Hermite,
    Jacobi,
    JacobiShifted,
}

#[derive(Args, Debug)]
struct FamiliesArgs {
    #[arg(long, value_enum)]
    name: FamilyName,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    omega1: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args, Debug)]
struct DumpArgs {
    #[arg(long)]
    dump_moments: bool,
    #[arg(long)]
    dump_determinants: bool,
}

#[derive(Args, Debug)]
struct SynthOpqspArgs {
    #[arg(long)]
    target: String,
    /// Positive root weights, ascending-root order (JSON array).
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    omega1: Option<f64>,
    #[command(flatten)]
    dump: DumpArgs,
}

#[derive(Args, Debug)]
struct SynthGqspArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
    #[command(flatten)]
    dump: DumpArgs,
}

#[derive(Args, Debug)]
struct SynthSu11Args {
    #[arg(long)]
    target: String,
    #[command(flatten)]
    dump: DumpArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Opqsp,
    Gqsp,
    Su11,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Angles JSON: opqsp {tau, omega}, gqsp {theta, phi, seed?}, su11 {theta, phi} or {nu}.
    #[arg(long)]
    angles: String,
    /// Target polynomial for the transfer-product check.
    #[arg(long)]
    target: Option<String>,
    /// Eigenphases of a diagonal U (JSON array) for the gate-level check.
    #[arg(long)]
    eigenphases: Option<String>,
}

#[derive(Args, Debug)]
struct ExpandLcuArgs {
    /// Basis JSON, e.g. {"kind":"opqsp","family":{"name":"hermite","gamma":2},"n":4}.
    #[arg(long, requires = "target", conflicts_with = "function")]
    basis: Option<String>,
    #[arg(long)]
    target: Option<String>,
    /// Function JSON for a Hermite plan, e.g. {"name":"exp_gauss","center":1}.
    #[arg(long, requires_all = ["gamma", "n"])]
    function: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Counterexample {
    Verbatim,
    Corrected,
}

#[derive(Args, Debug)]
struct BivariateArgs {
    #[arg(long, requires = "q", conflicts_with = "counterexample")]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Variable schedule such as ZWZW; all consistent schedules are tried when absent.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, value_enum)]
    counterexample: Option<Counterexample>,
}

#[derive(Args, Debug)]
struct PropertyArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long, default_value_t = 100)]
    ensemble_size: usize,
    #[arg(long, default_value_t = 10)]
    n_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JobSpec {
    schema: u32,
    command: String,
    #[serde(default)]
    args: Map<String, Value>,
    #[serde(default)]
    tolerances: Map<String, Value>,
    seed: Option<u64>,
    output: Option<PathBuf>,
}

enum Failure {
    /// Malformed input, exit 1.
    Input(String),
    /// Domain error, exit 2.
    Domain(QspError),
}

impl From<QspError> for Failure {
    fn from(e: QspError) -> Self {
        match e {
            QspError::InvalidInput(m) => Failure::Input(m),
            e => Failure::Domain(e),
        }
    }
}

type Out = Result<Value, Failure>;

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn pairs(cs: &[C64]) -> Value {
    Value::Array(cs.iter().map(|c| json!([c.re, c.im])).collect())
}

fn need(v: Option<f64>, name: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| input(format!("--{name} is required for this family")))
}

fn families(a: &FamiliesArgs, tol: &Tolerances) -> Out {
    let spec = match a.name {
        FamilyName::Chebyshev => FamilySpec::Chebyshev { gamma: need(a.gamma, "gamma")?, kappa: need(a.kappa, "kappa")? },
        FamilyName::TwoChebyshev => FamilySpec::TwoChebyshev {
            gamma: need(a.gamma, "gamma")?,
            a: need(a.a, "a")?,
            omega1: a.omega1.unwrap_or(DEFAULT_OMEGA1),
        },
        FamilyName::Hermite => FamilySpec::Hermite { gamma: need(a.gamma, "gamma")? },
        FamilyName::Jacobi => FamilySpec::Jacobi { lambda: need(a.lambda, "lambda")?, beta: need(a.beta, "beta")? },
        FamilyName::JacobiShifted => FamilySpec::JacobiShifted { lambda: need(a.lambda, "lambda")? },
    };
    let f = family(&spec, a.n, tol)?;
    let cot: Vec<f64> = f.angles.omega.iter().map(|w| 1.0 / w.tan()).collect();
    Ok(json!({
        "spec": spec,
        "n": a.n,
        "recurrence": f.recurrence,
        "omega1": f.omega1,
        "angles": f.angles,
        "cot_omega": cot,
        "polys": f.polys.iter().map(poly_to_json).collect::<Vec<_>>(),
    }))
}

fn synth_opqsp(a: &SynthOpqspArgs, tol: &Tolerances) -> Out {
    let target = poly_from_json(&load_json_arg(&a.target)?)?;
    let omega1 = a.omega1.unwrap_or(DEFAULT_OMEGA1);
    let s = match &a.weights {
        Some(w) => {
            let w: Vec<f64> = serde_json::from_value(load_json_arg(w)?).map_err(|e| input(format!("weights: {e}")))?;
            find_angles_from_weighted_roots(&target, Some(&w), omega1, tol)?
        }
        None => find_angles_from_roots(&target, omega1, tol)?,
    };
    let mut out = json!({
        "recurrence": s.recurrence,
        "angles": s.angles,
        "rebuild_err": s.rebuild_err,
    });
    if a.dump.dump_moments {
        out["moments"] = moments_to_json(&s.moments);
    }
    if a.dump.dump_determinants {
        out["determinants"] = Value::Array(s.dets.iter().map(hankel_dets_to_json).collect());
    }
    Ok(out)
}

fn synth_gqsp(a: &SynthGqspArgs, tol: &Tolerances) -> Out {
    let p = poly_from_json(&load_json_arg(&a.p)?)?;
    let q = poly_from_json(&load_json_arg(&a.q)?)?;
    let s = find_angles_from_pair(&p, &q, tol)?;
    let mut out = json!({
        "angles": s.angles,
        "alpha": pairs(&s.angles.alpha()),
        "tan2_theta": pairs(&s.tan2_theta),
        "rebuild_err": s.rebuild_err,
        "q_phase_err": s.q_phase_err,
        "unitarity_defect": s.unitarity_defect,
        "printed_phase_ratio_defect": s.printed_phase_ratio_defect,
    });
    if a.dump.dump_moments {
        out["moments"] = moments_to_json(&s.moments);
    }
    if a.dump.dump_determinants {
        out["determinants"] = Value::Array(s.dets.iter().map(toeplitz_dets_to_json).collect());
    }
    Ok(out)
}

fn synth_su11(a: &SynthSu11Args, tol: &Tolerances) -> Out {
    let target = poly_from_json(&load_json_arg(&a.target)?)?;
    let s = find_angles_from_target(&target, tol)?;
    let ang = &s.angles;
    let mut out = json!({
        "nu": pairs(&s.nu.nu),
        "theta": ang.theta,
        "phi": ang.phi,
        "theta_tilde": ang.theta_tilde,
        "tilde_sign": ang.tilde_sign,
        "chi": ang.chi,
        "alpha": pairs(&ang.alpha),
        "moment_path": s.moment_path,
        "rebuild_err": s.rebuild_err,
        "max_root_modulus": s.max_root_modulus,
    });
    if a.dump.dump_moments {
        out["moments"] = moments_to_json(&s.moments);
    }
    if a.dump.dump_determinants {
        let n = s.nu.nu.len();
        let dets = (1..=n).map(|j| toeplitz_dets(&s.moments, j, tol).map(|d| toeplitz_dets_to_json(&d)));
        out["determinants"] = Value::Array(dets.collect::<Result<_, _>>()?);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpqspWire {
    tau: Vec<f64>,
    omega: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GqspWire {
    theta: Vec<f64>,
    phi: Vec<f64>,
    #[serde(default)]
    seed: Seed,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, untagged)]
enum Su11Wire {
    Angles { theta: Vec<f64>, phi: Vec<f64> },
    Nu { nu: Vec<[f64; 2]> },
}

fn parse_wire<T: for<'de> Deserialize<'de>>(v: Value, what: &str) -> Result<T, Failure> {
    serde_json::from_value(v).map_err(|e| input(format!("{what}: {e}")))
}

fn same_len(a: usize, b: usize) -> Result<(), Failure> {
    if a == b {
        Ok(())
    } else {
        Err(input(format!("angle lists differ in length ({a} vs {b})")))
    }
}

fn parse_angles(variant: VariantArg, v: Value) -> Result<VariantAngles, Failure> {
    Ok(match variant {
        VariantArg::Opqsp => {
            let w: OpqspWire = parse_wire(v, "opqsp angles")?;
            same_len(w.tau.len(), w.omega.len())?;
            VariantAngles::Opqsp(OpqspAngles::new(w.tau, w.omega))
        }
        VariantArg::Gqsp => {
            let w: GqspWire = parse_wire(v, "gqsp angles")?;
            same_len(w.theta.len(), w.phi.len())?;
            if w.seed == Seed::Rotation && w.theta.is_empty() {
                return Err(input("rotation seed needs at least one angle"));
            }
            VariantAngles::Gqsp(GqspAngles::new(w.theta, w.phi, w.seed))
        }
        VariantArg::Su11 => match parse_wire::<Su11Wire>(v, "su11 angles")? {
            Su11Wire::Angles { theta, phi } => {
                same_len(theta.len(), phi.len())?;
                VariantAngles::Su11(Su11Angles::from_theta_phi(theta, phi))
            }
            Su11Wire::Nu { nu } => {
                let nu = VerblunskyCoeffs::new(nu.iter().map(|c| C64::new(c[0], c[1])).collect())?;
                VariantAngles::Su11(nu_to_angles(&nu))
            }
        },
    })
}

fn verify(a: &VerifyArgs, tol: &Tolerances) -> Out {
    let angles = parse_angles(a.variant, load_json_arg(&a.angles)?)?;
    if a.target.is_none() && a.eigenphases.is_none() {
        return Err(input("verify needs --target, --eigenphases, or both"));
    }
    let mut out = Map::new();
    if let Some(t) = &a.target {
        let target = poly_from_json(&load_json_arg(t)?)?;
        let r = verify_transfer_product(&angles, &target);
        r.check(tol)?;
        out.insert("transfer".into(), json!(r));
    }
    if let Some(e) = &a.eigenphases {
        let phases: Vec<f64> = parse_wire(load_json_arg(e)?, "eigenphases")?;
        let r = verify_gate_level(&angles, &UnitaryModel::new(phases))?;
        if r.max_coeff_err > 1e-10 || !r.max_coeff_err.is_finite() {
            return Err(Failure::Domain(QspError::ReconstructionMismatch { max_coeff_err: r.max_coeff_err }));
        }
        out.insert("gate".into(), json!(r));
    }
    Ok(Value::Object(out))
}

fn expand_lcu(a: &ExpandLcuArgs, tol: &Tolerances) -> Out {
    if let (Some(b), Some(t)) = (&a.basis, &a.target) {
        let spec: BasisSpec = parse_wire(load_json_arg(b)?, "basis")?;
        let basis = Basis::build(&spec, tol)?;
        let target = poly_from_json(&load_json_arg(t)?)?;
        let plan = expand_in_basis(&target, &basis, tol)?;
        let res = lcu_resources(&plan, basis.ell);
        return Ok(json!({ "plan": plan, "resources": res }));
    }
    if let (Some(f), Some(g), Some(n)) = (&a.function, a.gamma, a.n) {
        let f: TestFunction = parse_wire(load_json_arg(f)?, "function")?;
        let h = hermite_function_plan(&f, g, n, tol)?;
        let res = lcu_resources(&h.plan, n + 1);
        return Ok(json!({ "hermite": h, "resources": res }));
    }
    Err(input("expand-lcu needs --basis with --target, or --function with --gamma and --n"))
}

fn bivariate(a: &BivariateArgs, tol: &Tolerances) -> Out {
    let (p, q) = match (a.counterexample, &a.p, &a.q) {
        (Some(c), _, _) => frt_counterexample(matches!(c, Counterexample::Corrected)),
        (None, Some(p), Some(q)) => (bivar_from_json(&load_json_arg(p)?)?, bivar_from_json(&load_json_arg(q)?)?),
        _ => return Err(input("bivariate-check needs --p and --q, or --counterexample")),
    };
    let sched = a.schedule.as_deref().map(VariableSchedule::parse).transpose()?;
    Ok(json!(necessary_condition_check(&p, &q, sched.as_ref(), tol)?))
}

fn properties(a: &PropertyArgs, tol: &Tolerances) -> Out {
    let v = match a.variant {
        VariantArg::Opqsp => Variant::Opqsp,
        VariantArg::Gqsp => Variant::Gqsp,
        VariantArg::Su11 => Variant::Su11,
    };
    Ok(json!(property_suite(v, a.ensemble_size, a.n_max, a.seed, tol)))
}

fn dispatch(cmd: &Command, tol: &Tolerances) -> Out {
    match cmd {
        Command::Families(a) => families(a, tol),
        Command::SynthOpqsp(a) => synth_opqsp(a, tol),
        Command::SynthGqsp(a) => synth_gqsp(a, tol),
        Command::SynthSu11(a) => synth_su11(a, tol),
        Command::Verify(a) => verify(a, tol),
        Command::ExpandLcu(a) => expand_lcu(a, tol),
        Command::BivariateCheck(a) => bivariate(a, tol),
        Command::PropertySuite(a) => properties(a, tol),
    }
}

/// Tolerances from the config file, then per-job overrides; unknown keys are rejected.
fn load_tolerances(config: Option<&PathBuf>, overrides: &Map<String, Value>) -> Result<Tolerances, Failure> {
    let path = config.cloned().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut base = match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            match serde_json::from_str(&text).map_err(|e| input(format!("config: {e}")))? {
                Value::Object(m) => m,
                _ => return Err(input("config must be a JSON object")),
            }
        }
        None => Map::new(),
    };
    base.extend(overrides.clone());
    serde_json::from_value(Value::Object(base)).map_err(|e| input(format!("tolerances: {e}")))
}

/// Turns a job spec into argv for the regular parser.
fn job_argv(job: &JobSpec) -> Result<Vec<String>, Failure> {
    if job.schema != 1 {
        return Err(input(format!("unsupported job schema {}", job.schema)));
    }
    let mut argv = vec!["qspforge".to_string(), job.command.clone()];
    for (k, v) in &job.args {
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Bool(true) => argv.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => argv.extend([flag, s.clone()]),
            other => argv.extend([flag, other.to_string()]),
        }
    }
    // only the property suite draws random numbers; other commands ignore the seed
    if let (Some(s), "property-suite") = (job.seed, job.command.as_str()) {
        argv.extend(["--seed".to_string(), s.to_string()]);
    }
    Ok(argv)
}

fn error_object(e: &QspError) -> Value {
    json!({ "code": e.code(), "message": e.to_string(), "context": e.context() })
}

fn emit(v: &Value, path: Option<&PathBuf>) -> Result<(), Failure> {
    let s = to_json_string(v);
    match path {
        Some(p) => std::fs::write(p, s + "\n").map_err(|e| input(format!("{}: {e}", p.display()))),
        // a closed reader (e.g. `| head`) is not an error
        None => {
            let _ = writeln!(std::io::stdout().lock(), "{s}");
            Ok(())
        }
    }
}

fn parse_cli<I: IntoIterator<Item = String>>(args: I) -> Result<Cli, ExitCode> {
    Cli::try_parse_from(args).map_err(|e| {
        let _ = e.print();
        match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
            _ => ExitCode::from(1),
        }
    })
}

fn run() -> Result<ExitCode, Failure> {
    let cli = match parse_cli(std::env::args()) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    let (cli, overrides, output) = match &cli.job {
        Some(j) => {
            let job: JobSpec = parse_wire(load_json_arg(j)?, "job")?;
            let mut inner = match parse_cli(job_argv(&job)?) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            inner.config = cli.config.clone();
            inner.threads = cli.threads;
            let output = cli.output.clone().or(job.output.clone());
            (inner, job.tolerances, output)
        }
        None => {
            let output = cli.output.clone();
            (cli, Map::new(), output)
        }
    };
    let Some(cmd) = &cli.command else {
        return Err(input("a subcommand or --job is required"));
    };
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| input(format!("--threads: {e}")))?;
    }
    let tol = load_tolerances(cli.config.as_ref(), &overrides)?;
    let v = dispatch(cmd, &tol)?;
    emit(&v, output.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(Failure::Input(m)) => {
            let e = QspError::InvalidInput(m);
            let _ = writeln!(std::io::stdout().lock(), "{}", to_json_string(&error_object(&e)));
            ExitCode::from(1)
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(std::io::stdout().lock(), "{}", to_json_string(&error_object(&e)));
            ExitCode::from(2)
        }
    }
}
