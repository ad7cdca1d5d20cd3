//! Verification suites: batteries of invariant checks with named
//! tolerances, assembled into deterministic reports.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::Value;

use crate::bmsgroup::{
    act_on_scri, compose, conformal_factor, dual_act, metric_defect, mobius, momentum_action,
    random_zeta, BMSElement, ExtComplex, SL2C,
};
use crate::config::Config;
use crate::dynamics::{
    directional_difference_check, energy, fiber_derivative, finite_difference_check, hamiltonian,
    hamiltonian_displayed, kg_apply, random_state, st_derivative_defect, symplectic_rank,
    wave_dd_matrix, wave_qd_matrix, constraint_pairing_defect, FG_WAVE_PREFACTOR,
};
use crate::error::{Error, Result};
use crate::induced::{
    build_orbit, bump_field, induced_act, orbit_norm, reduce_covariant, unitarity_drift,
    DEFAULT_WEIGHT_EXPONENT,
};
use crate::sphere::{hs_increment, hs_norm_partial, nuclear_norm, split_t4_st, SphereFunction};
use crate::supermomenta::{mass_squared, orbit_fixed_point, OrbitKind, Signature};
use crate::whitenoise::{
    adjoint_dstar, characteristic_functional, eval_at_coords, fourier_f, fourier_gauss,
    fourier_gauss_monte_carlo, gamma_a_norm, gateaux_d, multi_index_basis, multiply_q,
    project_pi_v, vainberg_symmetry_defect, DirectionSet, HermiteSeries, MultiIndex,
    OperatorMatrix,
};

type C = Complex64;

pub const SUITES: [&str; 6] = ["cocycle", "casimir", "operators", "transforms", "variational", "induced"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub status: Status,
    pub defect: f64,
    pub comparison: Comparison,
    pub tolerance: Option<f64>,
    pub tolerance_name: Option<String>,
    pub detail: String,
    #[serde(skip)]
    pub runtime: Duration,
}

/// Report of one or more suites. Runtimes are kept out of the JSON so that
/// equal inputs give byte-identical output.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: u64,
    pub config: Value,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable table, runtimes included.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<12} {:<34} {:<6} {:>12} {:>3} {:>10}  {:>9}\n",
            "suite", "check", "status", "defect", "", "tolerance", "time"
        );
        for c in &self.checks {
            let tol = match (c.tolerance, &c.tolerance_name) {
                (Some(t), Some(_)) => format!("{t:.1e}"),
                _ => "-".into(),
            };
            let cmp = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
            };
            s.push_str(&format!(
                "{:<12} {:<34} {:<6} {:>12.3e} {:>3} {:>10}  {:>8.2}s\n",
                c.suite,
                c.name,
                match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Info => "info",
                },
                c.defect,
                cmp,
                tol,
                c.runtime.as_secs_f64()
            ));
        }
        s.push_str(&format!(
            "{} checks, {} failed, {:.1}s\n",
            self.checks.len(),
            self.failures(),
            self.runtime.as_secs_f64()
        ));
        s
    }
}

struct Ctx<'a> {
    cfg: &'a Config,
    suite: &'static str,
    checks: Vec<Check>,
    stream: u64,
}

impl<'a> Ctx<'a> {
    /// A fresh generator per check, derived from the seed and the check's
    /// position, so suites run alone or inside `all` draw the same samples.
    fn rng(&mut self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        r.set_stream(self.stream);
        self.stream += 1;
        r
    }

    fn push(&mut self, name: &str, defect: f64, cmp: Comparison, tol: Option<(&str, f64)>, detail: String, t0: Instant) {
        let status = match tol {
            None => Status::Info,
            Some((_, t)) => {
                let ok = match cmp {
                    Comparison::AtMost => defect <= t,
                    Comparison::AtLeast => defect >= t,
                };
                if ok {
                    Status::Pass
                } else {
                    Status::Fail
                }
            }
        };
        self.checks.push(Check {
            suite: self.suite.to_string(),
            name: name.to_string(),
            status,
            defect,
            comparison: cmp,
            tolerance: tol.map(|t| t.1),
            tolerance_name: tol.map(|t| t.0.to_string()),
            detail,
            runtime: t0.elapsed(),
        });
    }

    fn at_most(&mut self, name: &str, defect: f64, tol_name: &str, detail: String, t0: Instant) -> Result<()> {
        let t = self.cfg.tol(tol_name)?;
        self.push(name, defect, Comparison::AtMost, Some((tol_name, t)), detail, t0);
        Ok(())
    }

    fn at_least(&mut self, name: &str, defect: f64, tol_name: &str, detail: String, t0: Instant) -> Result<()> {
        let t = self.cfg.tol(tol_name)?;
        self.push(name, defect, Comparison::AtLeast, Some((tol_name, t)), detail, t0);
        Ok(())
    }

    fn info(&mut self, name: &str, value: f64, detail: String, t0: Instant) {
        self.push(name, value, Comparison::AtMost, None, detail, t0);
    }
}

/// Runs one suite, or every suite for `all`.
pub fn run_suite(name: &str, cfg: &Config) -> Result<VerificationReport> {
    cfg.validate()?;
    let names: Vec<&'static str> = if name == "all" {
        SUITES.to_vec()
    } else {
        vec![*SUITES
            .iter()
            .find(|s| **s == name)
            .ok_or_else(|| Error::UnknownSuite(name.to_string()))?]
    };
    let start = Instant::now();
    let mut checks = Vec::new();
    for s in names {
        let mut ctx = Ctx {
            cfg,
            suite: s,
            checks: Vec::new(),
            stream: 0,
        };
        match s {
            "cocycle" => cocycle_suite(&mut ctx)?,
            "casimir" => casimir_suite(&mut ctx)?,
            "operators" => operators_suite(&mut ctx)?,
            "transforms" => transforms_suite(&mut ctx)?,
            "variational" => variational_suite(&mut ctx)?,
            "induced" => induced_suite(&mut ctx)?,
            _ => unreachable!(),
        }
        checks.extend(ctx.checks);
    }
    Ok(VerificationReport {
        suite: name.to_string(),
        seed: cfg.seed,
        config: cfg.to_json(),
        checks,
        runtime: start.elapsed(),
    })
}

// ------------------------------------------------------------- helpers

pub fn random_function<R: Rng>(rng: &mut R, l_max: usize) -> SphereFunction {
    let mut f = SphereFunction::zeros(l_max);
    for x in f.coeffs_mut() {
        *x = rng.sample(StandardNormal);
    }
    f
}

pub fn random_series<R: Rng>(
    rng: &mut R,
    dirs: &Arc<DirectionSet>,
    cap: usize,
    degree: usize,
    complex: bool,
) -> Result<HermiteSeries> {
    let b = multi_index_basis(dirs.len(), degree.min(cap));
    let terms: Vec<(MultiIndex, C)> = b
        .list()
        .iter()
        .map(|n| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
            (*n, C::new(re, im))
        })
        .collect();
    HermiteSeries::from_terms(dirs.clone(), cap, terms)
}

fn unit_point(z: ExtComplex) -> [f64; 3] {
    let (t, p) = z.to_angles();
    [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
}

fn chordal(a: ExtComplex, b: ExtComplex) -> f64 {
    let (x, y) = (unit_point(a), unit_point(b));
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
}

fn random_element<R: Rng>(rng: &mut R, l_max: usize, boosts: bool) -> BMSElement {
    let lam = if boosts {
        SL2C::random_bounded(rng, 0.5)
    } else {
        SL2C::random_su2(rng)
    };
    BMSElement::new(lam, random_function(rng, l_max))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// `max|A - B| / max(1, max|B|)`.
fn matrix_defect(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<f64> {
    Ok(a.max_abs_diff(b)? / b.max_abs().max(1.0))
}

/// Worst relative defect of `K_{Λ'}(Λζ) K_Λ(ζ) = K_{Λ'Λ}(ζ)` over random
/// triples.
pub fn cocycle_battery<R: Rng>(r: &mut R, trials: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let l1 = SL2C::random(r);
        let l2 = SL2C::random(r);
        let z = random_zeta(r, 5.0);
        let lhs = conformal_factor(&l2, mobius(&l1, z)) * conformal_factor(&l1, z);
        let rhs = conformal_factor(&(l2 * l1), z);
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    worst
}

/// Worst `|Δ mass²|` (massive) or `|B(β, β)|` (massless) of the orbit fixed
/// point under alternating random boosts (rapidity ≤ 1.5) and rotations.
pub fn casimir_battery<R: Rng>(
    r: &mut R,
    trials: usize,
    kind: OrbitKind,
    value: f64,
    l_max: usize,
    sig: Signature,
) -> Result<f64> {
    let b = orbit_fixed_point(kind, value, l_max)?;
    let m2 = match kind {
        OrbitKind::Massive => mass_squared(&b, sig),
        OrbitKind::Massless => 0.0,
    };
    let mut worst: f64 = (mass_squared(&b, sig) - m2).abs();
    for i in 0..trials {
        let lam = if i % 2 == 0 {
            SL2C::random_bounded(r, 1.5)
        } else {
            SL2C::random_su2(r)
        };
        worst = worst.max((mass_squared(&dual_act(&lam, &b), sig) - m2).abs());
    }
    Ok(worst)
}

// ------------------------------------------------------------- cocycle

fn cocycle_suite(ctx: &mut Ctx) -> Result<()> {
    let l_max = ctx.cfg.l_max;

    let t0 = Instant::now();
    let worst = cocycle_battery(&mut ctx.rng(), 200);
    ctx.at_most("conformal_cocycle", worst, "cocycle", "200 random (Λ, Λ', ζ), relative".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let l1 = SL2C::random(&mut r);
        let l2 = SL2C::random(&mut r);
        let z = random_zeta(&mut r, 5.0);
        worst = worst.max(chordal(mobius(&(l2 * l1), z), mobius(&l2, mobius(&l1, z))));
    }
    ctx.at_most("mobius_composition", worst, "mobius", "chordal distance, 200 triples".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = SL2C::random_bounded(&mut r, 2.0);
        let p = momentum_action(&m);
        worst = worst.max(metric_defect(&p) / p[0][0].powi(2));
    }
    ctx.at_most("momentum_action_lorentz", worst, "mobius", "η-preservation, relative to (Λ⁰₀)²".into(), t0)?;

    let e = BMSElement::identity(l_max);
    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = random_element(&mut r, l_max, true);
        worst = worst
            .max(compose(&e, &g)?.max_abs_diff(&g))
            .max(compose(&g, &e)?.max_abs_diff(&g));
    }
    ctx.at_most("group_identity", worst, "group_law", format!("50 elements with boosts, L_max = {l_max}"), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = random_element(&mut r, l_max, false);
        worst = worst
            .max(compose(&g, &g.inverse())?.max_abs_diff(&e))
            .max(compose(&g.inverse(), &g)?.max_abs_diff(&e));
    }
    ctx.at_most("group_inverse", worst, "group_law", "50 rotations with supertranslations".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = random_element(&mut r, l_max, false);
        let h = random_element(&mut r, l_max, false);
        let k = random_element(&mut r, l_max, false);
        let left = compose(&compose(&g, &h)?, &k)?;
        let right = compose(&g, &compose(&h, &k)?)?;
        worst = worst.max(left.max_abs_diff(&right));
    }
    ctx.at_most("group_associativity", worst, "group_law", "50 triples, rotations".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = BMSElement::new(SL2C::random_bounded(&mut r, 0.5), random_function(&mut r, 1));
        let h = BMSElement::new(SL2C::random_bounded(&mut r, 0.5), random_function(&mut r, 1));
        let k = BMSElement::new(SL2C::random_bounded(&mut r, 0.5), random_function(&mut r, 1));
        let left = compose(&compose(&g, &h)?, &k)?;
        let right = compose(&g, &compose(&h, &k)?)?;
        worst = worst.max(left.max_abs_diff(&right));
    }
    ctx.at_most("group_associativity_t4_boosts", worst, "group_law", "50 triples, boosts with translations".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g = random_element(&mut r, l_max, true);
        let h = random_element(&mut r, l_max, true);
        let k = random_element(&mut r, l_max, true);
        let left = compose(&compose(&g, &h)?, &k)?;
        let right = compose(&g, &compose(&h, &k)?)?;
        worst = worst.max(left.max_abs_diff(&right));
    }
    ctx.info(
        "group_associativity_boosted_st",
        worst,
        "boosts with l > 1 supertranslations alias at finite L_max".into(),
        t0,
    );

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g1 = random_element(&mut r, l_max.min(4), false);
        let g2 = random_element(&mut r, l_max.min(4), false);
        let z = random_zeta(&mut r, 2.0);
        let u = r.gen_range(-1.0..1.0);
        let (u1, z1) = act_on_scri(&g2, u, z);
        let (u2, z2) = act_on_scri(&g1, u1, z1);
        let (u3, z3) = act_on_scri(&compose(&g1, &g2)?, u, z);
        worst = worst.max((u2 - u3).abs()).max(chordal(z2, z3));
    }
    ctx.at_most("scri_action_homomorphism", worst, "group_law", "50 pairs on (u, ζ)".into(), t0)
}

// ------------------------------------------------------------- casimir

fn casimir_suite(ctx: &mut Ctx) -> Result<()> {
    let l_max = ctx.cfg.l_max;
    let k = ctx.cfg.k;
    let sig = ctx.cfg.signature;

    for m in [1.0, 2.0] {
        let t0 = Instant::now();
        let worst = casimir_battery(&mut ctx.rng(), 500, OrbitKind::Massive, m, l_max, sig)?;
        let name = format!("casimir_massive_m{m}");
        ctx.at_most(&name, worst, "casimir", "500 boosts/rotations, |Δ mass²|".into(), t0)?;
    }

    let t0 = Instant::now();
    let worst = casimir_battery(&mut ctx.rng(), 500, OrbitKind::Massless, 1.0, l_max, sig)?;
    ctx.at_most("casimir_massless", worst, "massless", "500 boosts/rotations, |B(β, β)|".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..100 {
        let f = random_function(&mut r, l_max);
        for p in 0..=3 {
            worst = worst.max(nuclear_norm(&f, p, k)? - nuclear_norm(&f, p + 1, k)?);
        }
    }
    ctx.at_most("nuclear_chain_monotone", worst.max(0.0), "nuclear_chain", "100 functions, p = 0..3".into(), t0)?;

    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for cut in [0i64, 1, 10, 100, 2000] {
        // independent oracle: reverse-order compensated summation
        let (mut s, mut comp) = (0.0f64, 0.0f64);
        for l in (0..=cut).rev() {
            let l = l as f64;
            let term = (2.0 * l + 1.0) / (l * (l + 1.0) + 2.0).powi(2) - comp;
            let t = s + term;
            comp = (t - s) - term;
            s = t;
        }
        worst = worst.max(rel(hs_norm_partial(2.0, 2.0, cut), s));
    }
    ctx.at_most("hs_partial_sums", worst, "hs_oracle", "α = 2, k = 2 against compensated sum".into(), t0)?;

    let t0 = Instant::now();
    let inc = hs_increment(2.0, 2.0, 2000);
    ctx.at_most("hs_cauchy_increment", inc, "hs_cauchy", "increment at L = 2000".into(), t0)?;
    let t0 = Instant::now();
    let tail = hs_norm_partial(2.0, 2.0, 200_000) - hs_norm_partial(2.0, 2.0, 2000);
    ctx.info("hs_tail_after_2000", tail, "S(200000) - S(2000); decays like L⁻²".into(), t0);

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = random_function(&mut r, l_max);
        let (t, s) = split_t4_st(&f);
        worst = worst.max(t.dot(&s)?.abs()).max((&t + &s).max_abs_diff(&f));
    }
    ctx.at_most("t4_st_split", worst, "split", "100 functions: orthogonality and re-sum".into(), t0)
}

// ----------------------------------------------------------- operators

fn operators_suite(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let dirs = cfg.directions()?;
    let n = cfg.n;
    let dims = dirs.len();

    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..dims {
        let q = OperatorMatrix::build(&dirs, n - 1, n, false, |s| s.q_slot(i))?;
        let split = OperatorMatrix::build(&dirs, n - 1, n, false, |s| s.d_slot(i)?.add(&s.dstar_slot(i)?))?;
        worst = worst.max(q.max_abs_diff(&split)?);
    }
    let mut r = ctx.rng();
    let alpha = {
        let mut a = SphereFunction::zeros(dirs.l_max());
        for i in 0..dims {
            let (l, m) = dirs.direction(i);
            a.set(l, m, r.sample(StandardNormal));
        }
        a
    };
    let q = OperatorMatrix::build(&dirs, n - 1, n, false, |s| multiply_q(&alpha, s))?;
    let split = OperatorMatrix::build(&dirs, n - 1, n, false, |s| {
        gateaux_d(&alpha, s)?.add(&adjoint_dstar(&alpha, s)?)
    })?;
    worst = worst.max(q.max_abs_diff(&split)? / q.max_abs().max(1.0));
    ctx.at_most(
        "q_equals_d_plus_dstar",
        worst,
        "operator_exact",
        format!("K = {dims}, degree ≤ {}, every slot and a random direction", n - 1),
        t0,
    )?;

    let t0 = Instant::now();
    let basis = multi_index_basis(dims, n);
    let mut worst: f64 = 0.0;
    for i in 0..dims {
        for y in basis.list() {
            let ys = HermiteSeries::monomial(dirs.clone(), n, *y)?;
            // ⟨D*x, y⟩ = ⟨x, Dy⟩ for every monomial x
            for (x, c) in ys.d_slot(i)?.terms() {
                let xs = HermiteSeries::monomial(dirs.clone(), n, *x)?.grow();
                let back = xs.dstar_slot(i)?.get(y);
                let lhs = back * y.factorial();
                let rhs = c * x.factorial();
                worst = worst.max((lhs - rhs).norm() / rhs.norm().max(1.0));
            }
        }
    }
    ctx.at_most("dstar_adjoint_of_d", worst, "adjoint", format!("all monomials of degree ≤ {n}"), t0)?;

    let t0 = Instant::now();
    let qd = wave_qd_matrix(&dirs, n, cfg.signature)?;
    ctx.at_most(
        "wave_qd_symmetric",
        vainberg_symmetry_defect(&qd)?,
        "symmetry",
        format!("η^μν qd_μ qd_ν compressed to degree ≤ {n}"),
        t0,
    )?;

    let t0 = Instant::now();
    let dd = wave_dd_matrix(&dirs, n, cfg.signature)?;
    ctx.at_least(
        "wave_dd_vainberg_obstruction",
        vainberg_symmetry_defect(&dd)?,
        "vainberg_gap",
        "η^μν D_μ D_ν is not a potential operator".into(),
        t0,
    )?;

    let t0 = Instant::now();
    let t4 = dirs.t4_slots();
    let mono = multi_index_basis(dims, 4);
    let (mut d_bad, mut pair_bad) = (0usize, 0usize);
    for m in mono.list() {
        let psi = HermiteSeries::monomial(dirs.clone(), 4, *m)?;
        let supported = project_pi_v(&psi, &t4)? == psi;
        if supported != (st_derivative_defect(&psi)? == 0.0) {
            d_bad += 1;
        }
        if supported != (constraint_pairing_defect(&psi)? == 0.0) {
            pair_bad += 1;
        }
    }
    ctx.at_most(
        "constraint_equivalence_derivative",
        d_bad as f64,
        "counterexamples",
        format!("{} monomials of degree ≤ 4: Π_T4 ψ = ψ ⇔ D_{{e_i}} ψ = 0", mono.len()),
        t0,
    )?;
    ctx.info(
        "constraint_equivalence_pairing",
        pair_bad as f64,
        format!(
            "counterexamples to Π_T4 ψ = ψ ⇔ ⟨Q_{{e_i}}ψ, φ⟩ = 0 for T4-supported φ, e.g. He_2 in an l = 2 slot; {} monomials",
            mono.len()
        ),
        t0,
    );

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = random_series(&mut r, &dirs, n, n, true)?;
        let once = project_pi_v(&psi, &t4)?;
        worst = worst.max(project_pi_v(&once, &t4)?.max_abs_diff(&once));
        let (p1, p2) = (project_pi_v(&psi, &[0, 1])?, project_pi_v(&psi, &[1, 2])?);
        worst = worst.max(project_pi_v(&p1, &[1, 2])?.max_abs_diff(&project_pi_v(&p2, &[0, 1])?));
    }
    ctx.at_most("projection_idempotent_commuting", worst, "operator_exact", "20 random series".into(), t0)
}

// ---------------------------------------------------------- transforms

fn transforms_suite(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let dirs = cfg.directions()?;
    let n = cfg.n;
    let dims = dirs.len();
    let i = C::new(0.0, 1.0);
    let (a0, b0) = (C::new(2f64.sqrt(), 0.0), i);

    let t0 = Instant::now();
    let (mut wd, mut wq) = (0.0f64, 0.0f64);
    for s in 0..dims {
        let lhs = OperatorMatrix::build(&dirs, n - 2, n, true, |x| Ok(fourier_f(&x.d_slot(s)?, n)))?;
        let rhs = OperatorMatrix::build(&dirs, n - 2, n, true, |x| {
            Ok(fourier_f(x, n + 1).q_slot(s)?.scale(i).truncated(n))
        })?;
        wd = wd.max(matrix_defect(&lhs, &rhs)?);
        let lhs = OperatorMatrix::build(&dirs, n - 2, n, true, |x| Ok(fourier_f(&x.q_slot(s)?, n)))?;
        let rhs = OperatorMatrix::build(&dirs, n - 2, n, true, |x| {
            Ok(fourier_f(x, n + 1).d_slot(s)?.scale(i).truncated(n))
        })?;
        wq = wq.max(matrix_defect(&lhs, &rhs)?);
    }
    ctx.at_most("fourier_fd_equals_iqf", wd, "intertwining", format!("degree ≤ {}", n - 2), t0)?;
    ctx.at_most("fourier_fq_equals_idf", wq, "intertwining", format!("degree ≤ {}", n - 2), t0)?;

    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for s in 0..dims {
        for deg in 0..=n {
            let h = HermiteSeries::he(dirs.clone(), n, s, deg)?;
            let g = fourier_gauss(a0, b0, &h)?;
            worst = worst.max(g.max_abs_diff(&h.scale(i.powu(deg as u32))));
        }
    }
    ctx.at_most("fg_eigenvalues", worst, "operator_exact", "G_{√2,i} He_n = iⁿ He_n".into(), t0)?;

    let t0 = Instant::now();
    let t4 = Arc::new(DirectionSet::t4(cfg.k)?);
    let x = [0.7, -0.4, 0.2, 1.1];
    let mut worst: f64 = 0.0;
    for deg in 0..=4usize {
        let h = HermiteSeries::he(t4.clone(), n.max(4), 0, deg)?;
        let exact = eval_at_coords(&h, &x)? * i.powu(deg as u32);
        let (mean, se) = fourier_gauss_monte_carlo(a0, b0, &h, &x, 1_000_000, cfg.seed + deg as u64)?;
        let diff = (mean - exact).norm();
        let sigmas = if diff <= 1e-12 { 0.0 } else { diff / se.max(1e-300) };
        worst = worst.max(sigmas);
    }
    ctx.at_most("fg_monte_carlo", worst, "mc_sigmas", "10⁶ samples, n ≤ 4, in standard errors".into(), t0)?;

    let t0 = Instant::now();
    let ginv = OperatorMatrix::build(&dirs, n, n, false, |x| fourier_gauss(a0, b0, &fourier_gauss(a0, -b0, x)?))?;
    let id = OperatorMatrix::build(&dirs, n, n, false, |x| Ok(x.clone()))?;
    ctx.at_most("fg_inverse", ginv.max_abs_diff(&id)?, "fg_inverse", "G_{√2,i} G_{√2,-i} = 1".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let (mut w0, mut w1) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let psi = random_series(&mut r, &dirs, n, n, true)?;
        let g = fourier_gauss(a0, b0, &psi)?;
        w0 = w0.max(rel(gamma_a_norm(&g, 0), gamma_a_norm(&psi, 0)));
        w1 = w1.max(rel(gamma_a_norm(&g, 1), gamma_a_norm(&psi, 1)));
    }
    ctx.at_most("fg_norm_0", w0, "fg_norm", "20 random complex series".into(), t0)?;
    ctx.at_most("fg_norm_1", w1, "fg_norm", "20 random complex series".into(), t0)?;

    let t0 = Instant::now();
    let (mut uno, mut due) = (0.0f64, 0.0f64);
    for (a, b) in [(a0, b0), (C::new(0.8, 0.3), C::new(1.2, -0.4))] {
        let a2b = a * a / b;
        for s in 0..dims {
            let lhs = OperatorMatrix::build(&dirs, n - 1, n, false, |x| fourier_gauss(a, b, &x.d_slot(s)?))?;
            let rhs = OperatorMatrix::build(&dirs, n - 1, n, false, |x| {
                Ok(fourier_gauss(a, b, x)?.d_slot(s)?.scale(b.inv()))
            })?;
            uno = uno.max(matrix_defect(&lhs, &rhs)?);
            let lhs = OperatorMatrix::build(&dirs, n - 1, n, false, |x| fourier_gauss(a, b, &x.q_slot(s)?))?;
            let rhs = OperatorMatrix::build(&dirs, n - 1, n, false, |x| {
                let g = fourier_gauss(a, b, x)?;
                g.d_slot(s)?.scale(a2b).add(&g.q_slot(s)?.scale(b))
            })?;
            due = due.max(matrix_defect(&lhs, &rhs)?);
        }
    }
    ctx.at_most("fg_intertwine_d", uno, "intertwining", format!("G D = b⁻¹ D G, degree ≤ {}", n - 1), t0)?;
    ctx.at_most("fg_intertwine_q", due, "intertwining", format!("G Q = a²b⁻¹ D G + b Q G, degree ≤ {}", n - 1), t0)?;

    let t0 = Instant::now();
    let eta = cfg.signature.eta();
    let wave = |x: &HermiteSeries, qd: bool| -> Result<HermiteSeries> {
        let mut acc = HermiteSeries::zero(x.dirs().clone(), x.cap()).grow();
        for (mu, e) in eta.iter().enumerate() {
            let y = if qd { x.qd_slot(mu)?.qd_slot(mu)? } else { x.q_slot(mu)?.q_slot(mu)? };
            acc = acc.axpy(C::new(*e, 0.0), &y)?;
        }
        Ok(acc)
    };
    let lhs = OperatorMatrix::build(&dirs, n - 2, n, false, |x| fourier_gauss(a0, b0, &wave(x, false)?))?;
    let rhs = OperatorMatrix::build(&dirs, n - 2, n, false, |x| {
        Ok(wave(&fourier_gauss(a0, b0, x)?, true)?.scale_re(FG_WAVE_PREFACTOR))
    })?;
    ctx.at_most(
        "fg_wave_operator_identity",
        matrix_defect(&lhs, &rhs)?,
        "intertwining",
        format!("G η^μν Q_μ Q_ν = ({FG_WAVE_PREFACTOR}) η^μν qd_μ qd_ν G, degree ≤ {}", n - 2),
        t0,
    )?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let samples = 1_000_000usize;
    let mut worst: f64 = 0.0;
    for j in 0..10u64 {
        let alpha = random_function(&mut r, cfg.l_max.min(3));
        let alpha = 0.4 * &alpha;
        let (exact, mc) = characteristic_functional(&alpha, samples, cfg.seed.wrapping_add(j))?;
        worst = worst.max((mc - C::new(exact, 0.0)).norm() * (samples as f64).sqrt());
    }
    ctx.at_most("minlos_characteristic", worst, "mc_sigmas", "10 random α, 10⁶ samples, in units of 1/√n".into(), t0)
}

// --------------------------------------------------------- variational

fn variational_suite(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let dirs = cfg.directions()?;
    let n = cfg.n;
    let sig = cfg.signature;
    let m2 = 1.0;
    let seed = cfg.seed;

    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for j in 0..50u64 {
        let st = random_state(&dirs, n, 2, seed.wrapping_add(j))?;
        worst = worst.max(directional_difference_check(&st, m2, sig, 1e-5, 3, 2, seed.wrapping_add(1000 + j))?);
    }
    ctx.at_most(
        "euler_lagrange_directional",
        worst,
        "gradient",
        format!("50 states, N = {n}, 3 random directions each, h = 1e-5"),
        t0,
    )?;

    let t0 = Instant::now();
    let small = Arc::new(DirectionSet::with_st(&cfg.st_directions[..1], cfg.k)?);
    let mut worst: f64 = 0.0;
    for j in 0..3u64 {
        let st = random_state(&small, 3, 2, seed.wrapping_add(j))?;
        worst = worst.max(finite_difference_check(&st, m2, sig, 1e-5)?);
    }
    ctx.at_most(
        "euler_lagrange_coordinates",
        worst,
        "gradient",
        "every coefficient, 5 directions, N = 3".into(),
        t0,
    )?;

    let t0 = Instant::now();
    let (mut leg, mut fib) = (0.0f64, 0.0f64);
    let mut r = ctx.rng();
    for j in 0..50u64 {
        let st = random_state(&dirs, n, 2, seed.wrapping_add(500 + j))?;
        let e = energy(&st, m2, sig)?;
        let h = hamiltonian(&fiber_derivative(&st, sig)?, m2, sig)?;
        leg = leg.max(rel(h, e));
        let mut moved = st.clone();
        for lv in moved.lambda_vs.iter_mut() {
            *lv = random_series(&mut r, &dirs, n, 2, false)?;
        }
        if fiber_derivative(&moved, sig)? != fiber_derivative(&st, sig)? {
            fib = f64::INFINITY;
        }
        fib = fib.max(rel(energy(&moved, m2, sig)?, e));
    }
    ctx.at_most("legendre_h_of_fl_equals_energy", leg, "legendre", "50 states".into(), t0)?;
    ctx.at_most("energy_constant_on_fibers", fib, "fiber", "50 states, random multiplier velocities".into(), t0)?;

    let t0 = Instant::now();
    let st = random_state(&dirs, n, 2, seed)?;
    let pt = fiber_derivative(&st, sig)?;
    let gap = (hamiltonian_displayed(&pt, m2)? - hamiltonian(&pt, m2, sig)?).abs();
    ctx.info("hamiltonian_displayed_gap", gap, "displayed formula vs exact Legendre transform".into(), t0);

    let t0 = Instant::now();
    let mut deficit = 0usize;
    let mut sizes = Vec::new();
    for cap in 0..=3usize.min(n) {
        let (rank, size) = symplectic_rank(&dirs, cap)?;
        deficit = deficit.max(size - rank);
        sizes.push(size);
    }
    ctx.at_most(
        "symplectic_gram_full_rank",
        deficit as f64,
        "rank_deficit",
        format!("caps 0..=3, sizes {sizes:?}"),
        t0,
    )?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let eta = sig.eta();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = random_series(&mut r, &dirs, n, n - 2, false)?;
        let out = kg_apply(&psi, m2, sig)?;
        let p: Vec<f64> = (0..dirs.len()).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let quad: f64 = (0..4).map(|mu| eta[mu] * p[mu] * p[mu]).sum();
        let lhs = eval_at_coords(&out, &p)?;
        let rhs = eval_at_coords(&psi, &p)? * (quad - m2);
        worst = worst.max((lhs - rhs).norm() / rhs.norm().max(1.0));
    }
    ctx.at_most("klein_gordon_pointwise", worst, "kg_pointwise", "20 series at random points".into(), t0)
}

// ------------------------------------------------------------- induced

fn induced_suite(ctx: &mut Ctx) -> Result<()> {
    let sig = ctx.cfg.signature;
    let l_max = ctx.cfg.l_max;

    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for m in [1.0, 2.0] {
        let o = build_orbit(OrbitKind::Massive, m, 2.5, 16, 8)?;
        worst = worst.max(o.mass_defect(sig));
    }
    ctx.at_most("orbit_nodes_massive", worst, "orbit_mass", "m = 1, 2".into(), t0)?;
    let t0 = Instant::now();
    let o = build_orbit(OrbitKind::Massless, 1.0, 2.5, 16, 8)?;
    ctx.at_most("orbit_nodes_massless", o.mass_defect(sig), "orbit_null", "B(p, p) on the cone".into(), t0)?;

    let o = build_orbit(OrbitKind::Massive, 1.0, 2.5, 20, 12)?;
    let phi = bump_field(&o, 1.5);
    let norm0 = orbit_norm(&phi, &o)?;

    let t0 = Instant::now();
    let same = induced_act(&BMSElement::identity(l_max), &phi, &o, false)?;
    ctx.at_most("induced_identity", same.max_abs_diff(&phi), "phase_exact", "identity element".into(), t0)?;

    let t0 = Instant::now();
    let mut r = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (_, st) = split_t4_st(&random_function(&mut r, l_max));
        let out = induced_act(&BMSElement::translation(st), &phi, &o, false)?;
        worst = worst.max(out.max_abs_diff(&phi));
    }
    ctx.at_most("induced_st_trivial", worst, "phase_exact", "5 pure l > 1 supertranslations".into(), t0)?;

    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (t4, _) = split_t4_st(&random_function(&mut r, l_max));
        let out = induced_act(&BMSElement::translation(t4), &phi, &o, false)?;
        worst = worst.max((orbit_norm(&out, &o)? - norm0).abs() / norm0);
        for (a, b) in out.values.iter().zip(&phi.values) {
            worst = worst.max((a.norm() - b.norm()).abs());
        }
    }
    ctx.at_most("induced_t4_phase_unitary", worst, "phase_exact", "5 translations, pointwise modulus and norm".into(), t0)?;

    let g = BMSElement::new(SL2C::boost([0.3, 0.5, 0.8], 0.2), SphereFunction::zeros(1));
    for (kind, chi, nc, ns, support, label) in [
        (OrbitKind::Massive, 2.5, 40, 24, 1.5, "massive"),
        (OrbitKind::Massless, 2.5, 80, 48, 2.0, "massless"),
    ] {
        let t0 = Instant::now();
        let d = unitarity_drift(kind, 1.0, &g, chi, nc, ns, support, 1)?;
        let detail = format!(
            "χ = 0.2 boost; drift {:.2e} at {}×{}, {:.2e} at {}×{}",
            d[0].2, d[0].0, d[0].1, d[1].2, d[1].0, d[1].1
        );
        ctx.at_most(&format!("boost_unitarity_{label}"), d[0].2, "unitarity", detail.clone(), t0)?;
        ctx.at_most(
            &format!("boost_refinement_{label}"),
            d[1].2 / d[0].2,
            "refinement_ratio",
            format!("observed order {:.2}", (d[0].2 / d[1].2).log2()),
            t0,
        )?;
    }

    let t0 = Instant::now();
    let t4 = Arc::new(DirectionSet::t4(ctx.cfg.k)?);
    let mut r = ctx.rng();
    let psi = random_series(&mut r, &t4, ctx.cfg.n, ctx.cfg.n, false)?;
    let red = reduce_covariant(&psi, DEFAULT_WEIGHT_EXPONENT)?;
    let w = red.weight_exponent;
    // C fitted on |p| ≤ 5 must bound the tail 7 ≤ |p| ≤ 10
    let (mut inner, mut outer) = (0.0f64, 0.0f64);
    for _ in 0..8 {
        let mut u: [f64; 4] = std::array::from_fn(|_| r.sample(StandardNormal));
        let len = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= len);
        for j in 0..=200 {
            let x = j as f64 * 0.05;
            let ratio = red.eval(u.map(|c| c * x)).norm() / (-w * x * x / 2.0).exp();
            if x <= 5.0 {
                inner = inner.max(ratio);
            } else if x >= 7.0 {
                outer = outer.max(ratio);
            }
        }
    }
    ctx.at_most(
        "reduced_gaussian_decay",
        outer / inner,
        "decay",
        format!("sup over 7 ≤ |p| ≤ 10 of |ψ̃| e^{{w|p|²/2}} relative to the fit C = {inner:.3e} on |p| ≤ 5, 8 rays"),
        t0,
    )?;

    let t0 = Instant::now();
    let o = build_orbit(OrbitKind::Massive, 2.0, 1.5, 6, 6)?;
    let eta = sig.eta();
    let mut worst: f64 = 0.0;
    for p in o.nodes() {
        let q: f64 = (0..4).map(|mu| eta[mu] * p[mu] * p[mu]).sum();
        worst = worst.max((eta[0] * q - 4.0).abs());
    }
    ctx.at_most("reduced_on_mass_shell", worst, "orbit_mass", "(η p p - m²) at m = 2 nodes".into(), t0)?;

    Ok(())
}
