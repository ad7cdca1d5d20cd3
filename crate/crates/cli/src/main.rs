use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use bms_core::bmsgroup::{act_on_scri, compose, ExtComplex, SL2C, BMSElement};
use bms_core::config::Config;
use bms_core::dynamics::{
    directional_difference_check, energy, fiber_derivative, finite_difference_check, hamiltonian,
    lagrangian_full, random_state, symplectic_rank,
};
use bms_core::induced::{
    bump_field, induced_act, orbit_norm, unitarity_drift, OrbitParams,
    OrbitQuadrature,
};
use bms_core::serial::{self, Document};
use bms_core::sphere::SphereFunction;
use bms_core::supermomenta::{mass_squared, orbit_fixed_point, project_t4, OrbitKind};
use bms_core::verify::{self, casimir_battery, cocycle_battery, random_function, Status};
use bms_core::whitenoise::{
    adjoint_dstar, fourier_f, fourier_gauss, gateaux_d, multiply_q, project_pi_v, s_transform,
    HermiteSeries,
};

type C = Complex64;

// Writes to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

macro_rules! out_raw {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

/// Numerical tools for BMS-invariant free fields.
#[derive(Parser)]
#[command(name = "bmsfield", version)]
struct Cli {
    /// Configuration file (JSON).
    #[arg(long, global = true, env = "BMSFIELD_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BMS group elements.
    #[command(subcommand)]
    Bms(BmsCmd),
    /// Supermomenta and Casimirs.
    #[command(subcommand)]
    Momenta(MomentaCmd),
    /// White-noise operators and identities.
    #[command(subcommand)]
    Wn(WnCmd),
    /// Lagrangian dynamics.
    #[command(subcommand)]
    Dyn(DynCmd),
    /// Induced representations on orbits.
    #[command(subcommand)]
    Induced(InducedCmd),
    /// Run verification suites.
    Verify {
        /// cocycle, casimir, operators, transforms, variational, induced or all
        suite: String,
    },
    /// Parse, write and re-parse a document; prints whether it is bit-identical.
    Roundtrip { path: PathBuf },
    /// Print the effective configuration.
    ShowConfig,
}

#[derive(Subcommand)]
enum BmsCmd {
    /// g1 ∘ g2.
    Compose {
        #[arg(long)]
        g1: PathBuf,
        #[arg(long)]
        g2: PathBuf,
    },
    /// Action on a point (u, θ, φ) of null infinity.
    Act {
        #[arg(long)]
        g: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
    },
    Inverse {
        #[arg(long)]
        g: PathBuf,
    },
    /// Random element at the configured L_max.
    Random {
        /// Include boosts (rapidity ≤ 0.5).
        #[arg(long)]
        boosts: bool,
    },
    CocycleCheck {
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Subcommand)]
enum MomentaCmd {
    /// Mass squared and four-momentum of a supermomentum.
    Casimir {
        #[arg(long)]
        input: PathBuf,
    },
    /// Orbit representative.
    FixedPoint {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        value: f64,
    },
    InvarianceCheck {
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Massive,
    Massless,
}

impl From<Kind> for OrbitKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Massive => OrbitKind::Massive,
            Kind::Massless => OrbitKind::Massless,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WnOp {
    Q,
    D,
    Dstar,
    #[value(alias = "piv")]
    PiV,
    S,
    F,
    Fg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Identity {
    #[value(name = "DQ", alias = "dq")]
    Dq,
    Uno,
    Due,
    Multdiff,
    FgInverse,
}

#[derive(Subcommand)]
enum WnCmd {
    /// Apply an operator to a Hermite series.
    Op {
        #[arg(long, value_enum, ignore_case = true)]
        op: WnOp,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        params: OpParams,
    },
    /// Matrix identity on the configured truncation.
    IdentityCheck {
        #[arg(long, value_enum, ignore_case = true)]
        which: Identity,
    },
}

#[derive(Args)]
struct OpParams {
    /// Direction slot for Q, D, Dstar.
    #[arg(long)]
    slot: Option<usize>,
    /// Test function for Q, D, Dstar instead of a slot.
    #[arg(long)]
    alpha: Option<PathBuf>,
    /// Retained slots for PiV, comma separated.
    #[arg(long, value_delimiter = ',')]
    slots: Vec<usize>,
    /// Output degree cap for F (defaults to the input cap).
    #[arg(long)]
    out_cap: Option<usize>,
    /// Fourier-Gauss parameter a as "re,im".
    #[arg(long, default_value = "1.4142135623730951,0")]
    a: String,
    /// Fourier-Gauss parameter b as "re,im".
    #[arg(long, default_value = "0,1")]
    b: String,
}

#[derive(Args)]
struct StateArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    m2: f64,
}

#[derive(Subcommand)]
enum DynCmd {
    Lagrangian(StateArgs),
    /// Analytic gradient against central differences.
    GradientCheck {
        #[command(flatten)]
        s: StateArgs,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        /// Check every coefficient instead of random directions.
        #[arg(long)]
        coordinates: bool,
    },
    /// H at the fiber derivative of the state.
    Hamiltonian(StateArgs),
    LegendreCheck(StateArgs),
    /// Rank of the symplectic Gram matrix on the configured directions.
    SymplecticRank {
        #[arg(long, default_value_t = 2)]
        cap: usize,
    },
    /// Random state on the configured directions.
    RandomState {
        #[arg(long, default_value_t = 2)]
        degree: usize,
    },
}

#[derive(Subcommand)]
enum InducedCmd {
    BuildOrbit {
        #[arg(long, value_enum, default_value = "massive")]
        kind: Kind,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 2.5)]
        chi_max: f64,
        #[arg(long, default_value_t = 40)]
        n_chi: usize,
        #[arg(long, default_value_t = 24)]
        n_sphere: usize,
    },
    /// Smooth compactly supported test field on an orbit.
    Bump {
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        support: f64,
    },
    Norm {
        #[arg(long)]
        phi: PathBuf,
    },
    Act {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        /// Treat the field as zero outside the sampled window.
        #[arg(long)]
        zero_outside: bool,
    },
    /// Norm drift of a bump field under a boost, with refinement.
    UnitarityCheck {
        #[arg(long, value_enum, default_value = "massive")]
        kind: Kind,
        #[arg(long, default_value_t = 0.2)]
        chi: f64,
        #[arg(long, default_value_t = 1)]
        refine: usize,
        #[arg(long, default_value_t = 20)]
        n_chi: usize,
        #[arg(long, default_value_t = 12)]
        n_sphere: usize,
    },
}

/// A failed check, reported with exit status 1.
#[derive(Debug)]
struct CheckFailed;

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed")
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn read_doc(path: &Path) -> anyhow::Result<Document> {
    Document::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_bms(path: &Path) -> anyhow::Result<BMSElement> {
    match read_doc(path)? {
        Document::Bms(g) => Ok(g),
        d => bail!("{} holds a {}, expected a BMSElement", path.display(), d.kind()),
    }
}

fn read_hermite(path: &Path) -> anyhow::Result<HermiteSeries> {
    match read_doc(path)? {
        Document::Hermite(h) => Ok(h),
        d => bail!("{} holds a {}, expected a HermiteSeries", path.display(), d.kind()),
    }
}

fn read_state(path: &Path) -> anyhow::Result<bms_core::dynamics::FieldState> {
    match read_doc(path)? {
        Document::State(s) => Ok(s),
        d => bail!("{} holds a {}, expected a FieldState", path.display(), d.kind()),
    }
}

fn read_orbit(path: &Path) -> anyhow::Result<OrbitParams> {
    match read_doc(path)? {
        Document::Orbit(o) => Ok(o),
        Document::Field { orbit, .. } => Ok(orbit),
        d => bail!("{} holds a {}, expected an orbit", path.display(), d.kind()),
    }
}

fn read_field(path: &Path) -> anyhow::Result<(OrbitParams, bms_core::induced::InducedField)> {
    match read_doc(path)? {
        Document::Field { orbit, field } => Ok((orbit, field)),
        d => bail!("{} holds a {}, expected an induced field", path.display(), d.kind()),
    }
}

fn parse_complex(s: &str) -> anyhow::Result<C> {
    let parts: Vec<&str> = s.split(',').collect();
    let re = parts.first().ok_or_else(|| anyhow!("empty complex number"))?.trim().parse()?;
    let im = match parts.get(1) {
        Some(p) => p.trim().parse()?,
        None => 0.0,
    };
    Ok(C::new(re, im))
}

fn print_doc(doc: &Document) {
    out!("{}", doc.to_string_pretty());
}

fn print_value(cli: &Cli, v: Value, text: impl FnOnce() -> String) {
    if cli.json {
        out!("{}", serde_json::to_string_pretty(&v).expect("JSON"));
    } else {
        out!("{}", text());
    }
}

/// Prints a pass/fail line and fails with exit status 1 on a violation.
fn verdict(cli: &Cli, name: &str, defect: f64, tol_name: &str, tol: f64) -> anyhow::Result<()> {
    let pass = defect <= tol;
    print_value(
        cli,
        json!({"check": name, "defect": defect, "tolerance": tol, "tolerance_name": tol_name, "status": if pass {"pass"} else {"fail"}}),
        || format!("{name}: defect {defect:.3e} (tolerance {tol_name} = {tol:.1e}) {}", if pass { "PASS" } else { "FAIL" }),
    );
    if pass {
        Ok(())
    } else {
        Err(CheckFailed.into())
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = load_config(cli)?;
    match &cli.cmd {
        Command::Verify { suite } => {
            let report = verify::run_suite(suite, &cfg)?;
            if cli.json {
                out!("{}", report.to_json());
            } else {
                out_raw!("{}", report.table());
            }
            if report.passed() {
                Ok(())
            } else {
                Err(CheckFailed.into())
            }
        }
        Command::Roundtrip { path } => {
            let ok = serial::roundtrip(path)?;
            print_value(cli, json!({"path": path, "identical": ok}), || ok.to_string());
            if ok {
                Ok(())
            } else {
                Err(CheckFailed.into())
            }
        }
        Command::ShowConfig => {
            out!("{}", serde_json::to_string_pretty(&cfg.to_json())?);
            Ok(())
        }
        Command::Bms(c) => bms(cli, &cfg, c),
        Command::Momenta(c) => momenta(cli, &cfg, c),
        Command::Wn(c) => wn(cli, &cfg, c),
        Command::Dyn(c) => dynamics(cli, &cfg, c),
        Command::Induced(c) => induced(cli, c),
    }
}

fn bms(cli: &Cli, cfg: &Config, c: &BmsCmd) -> anyhow::Result<()> {
    match c {
        BmsCmd::Compose { g1, g2 } => {
            print_doc(&Document::Bms(compose(&read_bms(g1)?, &read_bms(g2)?)?));
        }
        BmsCmd::Inverse { g } => print_doc(&Document::Bms(read_bms(g)?.inverse())),
        BmsCmd::Act { g, u, theta, phi } => {
            let (u2, z) = act_on_scri(&read_bms(g)?, *u, ExtComplex::from_angles(*theta, *phi));
            let (t2, p2) = z.to_angles();
            print_value(cli, json!({"u": u2, "theta": t2, "phi": p2}), || {
                format!("u = {u2}\ntheta = {t2}\nphi = {p2}")
            });
        }
        BmsCmd::Random { boosts } => {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            let lam = if *boosts {
                SL2C::random_bounded(&mut r, 0.5)
            } else {
                SL2C::random_su2(&mut r)
            };
            print_doc(&Document::Bms(BMSElement::new(lam, random_function(&mut r, cfg.l_max))));
        }
        BmsCmd::CocycleCheck { trials } => {
            let d = cocycle_battery(&mut ChaCha8Rng::seed_from_u64(cfg.seed), *trials);
            verdict(cli, "conformal_cocycle", d, "cocycle", cfg.tol("cocycle")?)?;
        }
    }
    Ok(())
}

fn momenta(cli: &Cli, cfg: &Config, c: &MomentaCmd) -> anyhow::Result<()> {
    match c {
        MomentaCmd::Casimir { input } => {
            let b = match read_doc(input)? {
                Document::Super(b) => b,
                d => bail!("{} holds a {}, expected a Supermomentum", input.display(), d.kind()),
            };
            let m2 = mass_squared(&b, cfg.signature);
            let p = project_t4(&b).cartesian();
            print_value(cli, json!({"mass_squared": m2, "four_momentum": p}), || {
                format!("mass² = {m2}\np = ({}, {}, {}, {})", p[0], p[1], p[2], p[3])
            });
        }
        MomentaCmd::FixedPoint { kind, value } => {
            print_doc(&Document::Super(orbit_fixed_point((*kind).into(), *value, cfg.l_max)?));
        }
        MomentaCmd::InvarianceCheck { trials } => {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut failed = false;
            for (kind, v, tol) in [
                (OrbitKind::Massive, 1.0, "casimir"),
                (OrbitKind::Massive, 2.0, "casimir"),
                (OrbitKind::Massless, 1.0, "massless"),
            ] {
                let d = casimir_battery(&mut r, *trials, kind, v, cfg.l_max, cfg.signature)?;
                let name = format!("{kind:?}_{v}").to_lowercase();
                failed |= verdict(cli, &name, d, tol, cfg.tol(tol)?).is_err();
            }
            if failed {
                return Err(CheckFailed.into());
            }
        }
    }
    Ok(())
}

fn wn(cli: &Cli, cfg: &Config, c: &WnCmd) -> anyhow::Result<()> {
    match c {
        WnCmd::Op { op, input, params } => {
            let psi = read_hermite(input)?;
            let alpha = match &params.alpha {
                Some(p) => match read_doc(p)? {
                    Document::Sphere(f) => Some(f),
                    d => bail!("{} holds a {}, expected a SphereFunction", p.display(), d.kind()),
                },
                None => None,
            };
            let directional = |slot_op: &dyn Fn(usize) -> bms_core::Result<HermiteSeries>,
                               alpha_op: &dyn Fn(&SphereFunction) -> bms_core::Result<HermiteSeries>|
             -> anyhow::Result<HermiteSeries> {
                match (&alpha, params.slot) {
                    (Some(a), None) => Ok(alpha_op(a)?),
                    (None, Some(i)) => Ok(slot_op(i)?),
                    _ => bail!("give exactly one of --slot or --alpha"),
                }
            };
            let out = match op {
                WnOp::Q => directional(&|i| psi.q_slot(i), &|a| multiply_q(a, &psi))?,
                WnOp::D => directional(&|i| psi.d_slot(i), &|a| gateaux_d(a, &psi))?,
                WnOp::Dstar => directional(&|i| psi.dstar_slot(i), &|a| adjoint_dstar(a, &psi))?,
                WnOp::PiV => project_pi_v(&psi, &params.slots)?,
                WnOp::F => fourier_f(&psi, params.out_cap.unwrap_or(psi.cap())),
                WnOp::Fg => fourier_gauss(parse_complex(&params.a)?, parse_complex(&params.b)?, &psi)?,
                WnOp::S => {
                    let p = s_transform(&psi);
                    let terms: Vec<Value> = p
                        .terms
                        .iter()
                        .map(|(n, c)| json!([n.to_vec(p.dims), c.re, c.im]))
                        .collect();
                    out!("{}", serde_json::to_string_pretty(&json!({"monomials": terms}))?);
                    return Ok(());
                }
            };
            print_doc(&Document::Hermite(out));
        }
        WnCmd::IdentityCheck { which } => {
            let (suite, names): (&str, &[&str]) = match which {
                Identity::Dq => ("operators", &["q_equals_d_plus_dstar"]),
                Identity::Uno => ("transforms", &["fg_intertwine_d"]),
                Identity::Due => ("transforms", &["fg_intertwine_q"]),
                Identity::Multdiff => ("transforms", &["fourier_fd_equals_iqf", "fourier_fq_equals_idf"]),
                Identity::FgInverse => ("transforms", &["fg_inverse"]),
            };
            let report = verify::run_suite(suite, cfg)?;
            let mut failed = false;
            for c in report.checks.iter().filter(|c| names.contains(&c.name.as_str())) {
                let tol = c.tolerance.unwrap_or(0.0);
                let tn = c.tolerance_name.clone().unwrap_or_default();
                failed |= c.status == Status::Fail;
                verdict(cli, &c.name, c.defect, &tn, tol).ok();
            }
            if failed {
                return Err(CheckFailed.into());
            }
        }
    }
    Ok(())
}

fn dynamics(cli: &Cli, cfg: &Config, c: &DynCmd) -> anyhow::Result<()> {
    let sig = cfg.signature;
    match c {
        DynCmd::Lagrangian(a) => {
            let l = lagrangian_full(&read_state(&a.state)?, a.m2, sig)?;
            print_value(cli, json!({"lagrangian": l}), || format!("L = {l}"));
        }
        DynCmd::GradientCheck { s, h, coordinates } => {
            let st = read_state(&s.state)?;
            let err = if *coordinates {
                finite_difference_check(&st, s.m2, sig, *h)?
            } else {
                directional_difference_check(&st, s.m2, sig, *h, 8, st.psi.degree().max(1), cfg.seed)?
            };
            verdict(cli, "euler_lagrange_gradient", err, "gradient", cfg.tol("gradient")?)?;
        }
        DynCmd::Hamiltonian(a) => {
            let st = read_state(&a.state)?;
            let h = hamiltonian(&fiber_derivative(&st, sig)?, a.m2, sig)?;
            print_value(cli, json!({"hamiltonian": h}), || format!("H = {h}"));
        }
        DynCmd::LegendreCheck(a) => {
            let st = read_state(&a.state)?;
            let e = energy(&st, a.m2, sig)?;
            let h = hamiltonian(&fiber_derivative(&st, sig)?, a.m2, sig)?;
            let d = (h - e).abs() / e.abs().max(1.0);
            verdict(cli, "legendre", d, "legendre", cfg.tol("legendre")?)?;
        }
        DynCmd::SymplecticRank { cap } => {
            let (rank, n) = symplectic_rank(&cfg.directions()?, *cap)?;
            print_value(cli, json!({"rank": rank, "size": n}), || format!("rank {rank} of {n}"));
            if rank != n {
                return Err(CheckFailed.into());
            }
        }
        DynCmd::RandomState { degree } => {
            print_doc(&Document::State(random_state(&cfg.directions()?, cfg.n, *degree, cfg.seed)?));
        }
    }
    Ok(())
}

fn induced(cli: &Cli, c: &InducedCmd) -> anyhow::Result<()> {
    match c {
        InducedCmd::BuildOrbit { kind, m, chi_max, n_chi, n_sphere } => {
            let p = OrbitParams {
                kind: (*kind).into(),
                m: *m,
                chi_max: *chi_max,
                n_chi: *n_chi,
                n_sphere: *n_sphere,
            };
            OrbitQuadrature::from_params(&p)?;
            print_doc(&Document::Orbit(p));
        }
        InducedCmd::Bump { orbit, support } => {
            let p = read_orbit(orbit)?;
            let o = OrbitQuadrature::from_params(&p)?;
            print_doc(&Document::Field { orbit: p, field: bump_field(&o, *support) });
        }
        InducedCmd::Norm { phi } => {
            let (p, f) = read_field(phi)?;
            let n = orbit_norm(&f, &OrbitQuadrature::from_params(&p)?)?;
            print_value(cli, json!({"norm_squared": n}), || format!("‖Φ‖² = {n}"));
        }
        InducedCmd::Act { g, phi, zero_outside } => {
            let g = read_bms(g)?;
            let (p, f) = read_field(phi)?;
            let o = OrbitQuadrature::from_params(&p)?;
            let out = induced_act(&g, &f, &o, *zero_outside)?;
            print_doc(&Document::Field { orbit: p, field: out });
        }
        InducedCmd::UnitarityCheck { kind, chi, refine, n_chi, n_sphere } => {
            let g = BMSElement::new(SL2C::boost([0.3, 0.5, 0.8], *chi), SphereFunction::zeros(1));
            let d = unitarity_drift((*kind).into(), 1.0, &g, 2.5, *n_chi, *n_sphere, 1.5, *refine)?;
            let rows: Vec<Value> = d
                .iter()
                .map(|(a, b, e)| json!({"n_chi": a, "n_sphere": b, "relative_drift": e}))
                .collect();
            print_value(cli, json!({"drift": rows}), || {
                let mut s = String::from("n_chi n_sphere  relative drift\n");
                for (i, (a, b, e)) in d.iter().enumerate() {
                    s.push_str(&format!("{a:>5} {b:>8}  {e:.3e}"));
                    if i > 0 {
                        s.push_str(&format!("  (ratio {:.3})", e / d[i - 1].2));
                    }
                    s.push('\n');
                }
                s.trim_end().to_string()
            });
        }
    }
    Ok(())
}
