//! Field equations, the constrained Lagrangian and its Legendre transform.
//!
//! The building block is `qd_i = Q_{e_i} - 2D_{e_i} = D*_{e_i} - D_{e_i}`,
//! which is antisymmetric for the Gaussian inner product. Hence
//! `⟨η^{μν} qd_μ qd_ν ψ, ψ⟩ = -Σ_μ η^{μμ} ‖qd_μ ψ‖²`, and the Lagrangian is
//!
//! ```text
//! L(ψ, v, λ) = -½ η^{00} ‖Q_0ψ - 2v‖² - ½ Σ_{k=1}^{3} η^{kk} ‖qd_k ψ‖²
//!              + ½ m² ‖ψ‖² + ½ Σ_i E[λ_i (qd_i ψ)²]
//! ```
//!
//! where the velocity `v` replaces `D_{e_0}ψ` in the time slot. Every
//! quantity is evaluated exactly: operators grow the degree cap instead of
//! truncating.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::supermomenta::Signature;
use crate::whitenoise::{
    gaussian_inner_re, multi_index_basis, multiply_series, DirectionSet, HermiteSeries,
    MultiIndex, OperatorMatrix, C,
};

/// Scalar `c` in `G_{√2,i} η^{μν}Q_μQ_ν = c η^{μν}qd_μ qd_ν G_{√2,i}`.
/// Per slot `G Q = i qd G`, so `c = i² = -1`.
pub const FG_WAVE_PREFACTOR: f64 = -1.0;

/// Tangent point `(ψ, v, λ, λ̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub psi: HermiteSeries,
    pub v: HermiteSeries,
    pub lambdas: Vec<HermiteSeries>,
    pub lambda_vs: Vec<HermiteSeries>,
    /// Direction slots constrained by the multipliers, one per entry of
    /// `lambdas`.
    pub active: Vec<usize>,
}

/// Cotangent point `(ψ, Π, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentPoint {
    pub psi: HermiteSeries,
    pub pi: HermiteSeries,
    pub lambdas: Vec<HermiteSeries>,
    pub active: Vec<usize>,
}

/// All `l = 2` slots of the direction set.
pub fn default_active(dirs: &DirectionSet) -> Vec<usize> {
    dirs.slots_of_degree(2)
}

fn check_shared(base: &HermiteSeries, others: &[&HermiteSeries]) -> Result<()> {
    for o in others {
        if o.dirs() != base.dirs() && **o.dirs() != **base.dirs() {
            return Err(Error::InputShape("state components use different bases".into()));
        }
        if o.cap() != base.cap() {
            return Err(Error::InputShape(format!(
                "state components use different caps ({} vs {})",
                o.cap(),
                base.cap()
            )));
        }
    }
    Ok(())
}

fn check_active(dirs: &DirectionSet, active: &[usize], lambdas: usize) -> Result<()> {
    if active.len() != lambdas {
        return Err(Error::InputShape(format!(
            "{lambdas} multipliers for {} active directions",
            active.len()
        )));
    }
    for &i in active {
        if i >= dirs.len() || dirs.direction(i).0 < 2 {
            return Err(Error::InputShape(format!(
                "active slot {i} is not a proper supertranslation direction"
            )));
        }
    }
    Ok(())
}

impl FieldState {
    pub fn new(
        psi: HermiteSeries,
        v: HermiteSeries,
        lambdas: Vec<HermiteSeries>,
        lambda_vs: Vec<HermiteSeries>,
        active: Vec<usize>,
    ) -> Result<Self> {
        let mut all = vec![&v];
        all.extend(lambdas.iter());
        all.extend(lambda_vs.iter());
        check_shared(&psi, &all)?;
        if lambda_vs.len() != lambdas.len() {
            return Err(Error::InputShape(
                "multiplier velocities must match multipliers".into(),
            ));
        }
        check_active(psi.dirs(), &active, lambdas.len())?;
        Ok(FieldState {
            psi,
            v,
            lambdas,
            lambda_vs,
            active,
        })
    }

    pub fn zero(dirs: Arc<DirectionSet>, cap: usize) -> Self {
        let active = default_active(&dirs);
        let z = HermiteSeries::zero(dirs, cap);
        FieldState {
            psi: z.clone(),
            v: z.clone(),
            lambdas: vec![z.clone(); active.len()],
            lambda_vs: vec![z; active.len()],
            active,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lambda_vs.len() != self.lambdas.len() {
            return Err(Error::InputShape(
                "multiplier velocities must match multipliers".into(),
            ));
        }
        check_active(self.psi.dirs(), &self.active, self.lambdas.len())
    }

    pub fn dirs(&self) -> &Arc<DirectionSet> {
        self.psi.dirs()
    }
}

impl CotangentPoint {
    pub fn new(
        psi: HermiteSeries,
        pi: HermiteSeries,
        lambdas: Vec<HermiteSeries>,
        active: Vec<usize>,
    ) -> Result<Self> {
        let mut all = vec![&pi];
        all.extend(lambdas.iter());
        check_shared(&psi, &all)?;
        check_active(psi.dirs(), &active, lambdas.len())?;
        Ok(CotangentPoint {
            psi,
            pi,
            lambdas,
            active,
        })
    }
}

fn g(x: &HermiteSeries) -> HermiteSeries {
    x.clone().grow()
}

fn norm2(x: &HermiteSeries) -> Result<f64> {
    gaussian_inner_re(x, x)
}

/// `Q_{e_i} ψ` for every proper supertranslation slot.
pub fn constraint_residuals(psi: &HermiteSeries) -> Result<Vec<(usize, HermiteSeries)>> {
    psi.dirs()
        .st_slots()
        .into_iter()
        .map(|i| Ok((i, g(psi).q_slot(i)?)))
        .collect()
}

/// Largest `|⟨Q_{e_i}ψ, φ⟩|` over ST slots `i` and T⁴-supported basis
/// monomials `φ`.
pub fn constraint_pairing_defect(psi: &HermiteSeries) -> Result<f64> {
    let dirs = psi.dirs().clone();
    let t4 = dirs.t4_slots();
    let cap = psi.degree() + 1;
    let mut worst: f64 = 0.0;
    for (_, r) in constraint_residuals(psi)? {
        for n in multi_index_basis(dirs.len(), cap).list() {
            if !n.supported_in(&t4) {
                continue;
            }
            let phi = HermiteSeries::monomial(dirs.clone(), cap, *n)?;
            worst = worst.max(crate::whitenoise::gaussian_inner(&r, &phi)?.norm());
        }
    }
    Ok(worst)
}

/// `max_i ‖D_{e_i} ψ‖` over ST slots; zero exactly when ψ depends on the
/// T⁴ coordinates only.
pub fn st_derivative_defect(psi: &HermiteSeries) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in psi.dirs().st_slots() {
        worst = worst.max(crate::whitenoise::gaussian_norm(&psi.d_slot(i)?));
    }
    Ok(worst)
}

/// `η^{μν} Q_{e_μ} Q_{e_ν} ψ - m² ψ`.
pub fn kg_apply(psi: &HermiteSeries, m2: f64, sig: Signature) -> Result<HermiteSeries> {
    let eta = sig.eta();
    let mut acc = psi.scale_re(-m2);
    for (mu, e) in eta.iter().enumerate() {
        acc = acc.axpy(C::new(*e, 0.0), &psi.q_slot(mu)?.q_slot(mu)?)?;
    }
    Ok(acc)
}

/// `(Q_{e_i} - 2D_{e_i}) ψ`.
pub fn qd_apply(i: usize, psi: &HermiteSeries) -> Result<HermiteSeries> {
    psi.qd_slot(i)
}

/// `η^{μν} qd_μ qd_ν ψ`.
pub fn wave_qd(psi: &HermiteSeries, sig: Signature) -> Result<HermiteSeries> {
    let mut acc = HermiteSeries::zero(psi.dirs().clone(), psi.cap()).with_policy(psi.policy());
    for (mu, e) in sig.eta().iter().enumerate() {
        acc = acc.axpy(C::new(*e, 0.0), &psi.qd_slot(mu)?.qd_slot(mu)?)?;
    }
    Ok(acc)
}

/// `η^{μν} qd_μ qd_ν ψ - m² ψ`.
pub fn eom_dyn2(psi: &HermiteSeries, m2: f64, sig: Signature) -> Result<HermiteSeries> {
    wave_qd(psi, sig)?.axpy(C::new(-m2, 0.0), psi)
}

/// `½ ⟨[η^{μν} qd_μ qd_ν + m²] ψ, ψ⟩`.
pub fn lagrangian_kg(psi: &HermiteSeries, m2: f64, sig: Signature) -> Result<f64> {
    let w = wave_qd(&g(psi), sig)?.axpy(C::new(m2, 0.0), psi)?;
    Ok(0.5 * gaussian_inner_re(&w, psi)?)
}

/// `Q_0ψ - 2v`, the time slot of `qd` with the velocity substituted.
pub fn time_slot(state: &FieldState) -> Result<HermiteSeries> {
    g(&state.psi).q_slot(0)?.axpy(C::new(-2.0, 0.0), &state.v)
}

/// `½ Σ_i E[λ_i (qd_i ψ)²]`.
pub fn multiplier_term(
    psi: &HermiteSeries,
    lambdas: &[HermiteSeries],
    active: &[usize],
) -> Result<f64> {
    let mut acc = 0.0;
    for (lam, &i) in lambdas.iter().zip(active) {
        if lam.is_empty() {
            continue;
        }
        let w = g(psi).qd_slot(i)?;
        acc += gaussian_inner_re(lam, &multiply_series(&w, &w)?)?;
    }
    Ok(0.5 * acc)
}

fn spatial_part(psi: &HermiteSeries, sig: Signature) -> Result<f64> {
    let eta = sig.eta();
    let mut acc = 0.0;
    for (k, e) in eta.iter().enumerate().skip(1) {
        acc += e * norm2(&g(psi).qd_slot(k)?)?;
    }
    Ok(acc)
}

/// Constrained Lagrangian on the tangent space.
pub fn lagrangian_full(state: &FieldState, m2: f64, sig: Signature) -> Result<f64> {
    state.validate()?;
    let eta = sig.eta();
    let w0 = time_slot(state)?;
    Ok(-0.5 * eta[0] * norm2(&w0)? - 0.5 * spatial_part(&state.psi, sig)?
        + 0.5 * m2 * norm2(&state.psi)?
        + multiplier_term(&state.psi, &state.lambdas, &state.active)?)
}

/// Gradient of [`lagrangian_full`] in `ψ` for the Gaussian inner product:
///
/// `-η^{00} Q_0(Q_0ψ - 2v) + Σ_k η^{kk} qd_k qd_k ψ + m²ψ - Σ_i qd_i(λ_i qd_i ψ)`.
pub fn euler_lagrange_gradient(state: &FieldState, m2: f64, sig: Signature) -> Result<HermiteSeries> {
    state.validate()?;
    let eta = sig.eta();
    let psi = g(&state.psi);
    let mut acc = time_slot(state)?.q_slot(0)?.scale_re(-eta[0]);
    for (k, e) in eta.iter().enumerate().skip(1) {
        acc = acc.axpy(C::new(*e, 0.0), &psi.qd_slot(k)?.qd_slot(k)?)?;
    }
    acc = acc.axpy(C::new(m2, 0.0), &psi)?;
    for (lam, &i) in state.lambdas.iter().zip(&state.active) {
        if lam.is_empty() {
            continue;
        }
        let w = psi.qd_slot(i)?;
        let lw = multiply_series(&g(lam), &w)?;
        acc = acc.axpy(C::new(-1.0, 0.0), &lw.qd_slot(i)?)?;
    }
    Ok(acc)
}

/// Gradient in `v`: `2η^{00}(Q_0ψ - 2v)`.
pub fn velocity_gradient(state: &FieldState, sig: Signature) -> Result<HermiteSeries> {
    Ok(time_slot(state)?.scale_re(2.0 * sig.eta()[0]))
}

/// Gradient in `λ_j`: `½ (qd_{i_j} ψ)²`.
pub fn multiplier_gradient(state: &FieldState, j: usize) -> Result<HermiteSeries> {
    let w = g(&state.psi).qd_slot(state.active[j])?;
    Ok(multiply_series(&w, &w)?.scale_re(0.5))
}

/// Fiber derivative `(ψ, v, λ, λ̇) ↦ (ψ, ∂L/∂v, λ)`; the multiplier
/// velocities have no conjugate momentum.
pub fn fiber_derivative(state: &FieldState, sig: Signature) -> Result<CotangentPoint> {
    state.validate()?;
    Ok(CotangentPoint {
        psi: state.psi.clone(),
        pi: velocity_gradient(state, sig)?,
        lambdas: state.lambdas.clone(),
        active: state.active.clone(),
    })
}

/// `E = ⟨v, ∂L/∂v⟩ - L`.
pub fn energy(state: &FieldState, m2: f64, sig: Signature) -> Result<f64> {
    let pt = fiber_derivative(state, sig)?;
    Ok(gaussian_inner_re(&state.v, &pt.pi)? - lagrangian_full(state, m2, sig)?)
}

/// Hamiltonian on the image of the fiber derivative, the Legendre
/// transform of [`lagrangian_full`]:
///
/// `H = ½⟨Q_0ψ, Π⟩ - ‖Π‖²/(8η^{00}) + ½ Σ_k η^{kk} ‖qd_k ψ‖² - ½ m²‖ψ‖² - ½ Σ_i E[λ_i (qd_i ψ)²]`.
pub fn hamiltonian(pt: &CotangentPoint, m2: f64, sig: Signature) -> Result<f64> {
    check_active(pt.psi.dirs(), &pt.active, pt.lambdas.len())?;
    let eta0 = sig.eta()[0];
    let q0 = g(&pt.psi).q_slot(0)?;
    Ok(0.5 * gaussian_inner_re(&q0, &pt.pi)? - norm2(&pt.pi)? / (8.0 * eta0)
        + 0.5 * spatial_part(&pt.psi, sig)?
        - 0.5 * m2 * norm2(&pt.psi)?
        - multiplier_term(&pt.psi, &pt.lambdas, &pt.active)?)
}

/// `½∫[Π² - Σ_k (qd_k ψ)² - m²ψ²] - ½ Σ_i ∫ λ_i (qd_i ψ)²`, the
/// textbook closed form. It is not the Legendre transform of
/// [`lagrangian_full`] (see [`hamiltonian`]) and is kept for comparison.
pub fn hamiltonian_displayed(pt: &CotangentPoint, m2: f64) -> Result<f64> {
    check_active(pt.psi.dirs(), &pt.active, pt.lambdas.len())?;
    let mut spatial = 0.0;
    for k in 1..4 {
        spatial += norm2(&g(&pt.psi).qd_slot(k)?)?;
    }
    Ok(0.5 * (norm2(&pt.pi)? - spatial - m2 * norm2(&pt.psi)?)
        - multiplier_term(&pt.psi, &pt.lambdas, &pt.active)?)
}

/// `Ω((ψ₁, Π₁), (ψ₂, Π₂)) = ⟨Π₂, ψ₁⟩ - ⟨Π₁, ψ₂⟩`.
pub fn symplectic_form(
    nu1: (&HermiteSeries, &HermiteSeries),
    nu2: (&HermiteSeries, &HermiteSeries),
) -> Result<f64> {
    Ok(gaussian_inner_re(nu2.1, nu1.0)? - gaussian_inner_re(nu1.1, nu2.0)?)
}

/// Gram matrix of `Ω` on `{(He_n, 0)} ∪ {(0, He_n)}`, `|n| ≤ cap`.
pub fn symplectic_gram(dirs: &Arc<DirectionSet>, cap: usize) -> Result<DMatrix<f64>> {
    let basis = multi_index_basis(dirs.len(), cap);
    let zero = HermiteSeries::zero(dirs.clone(), cap);
    let elems: Vec<(HermiteSeries, HermiteSeries)> = basis
        .list()
        .iter()
        .map(|n| HermiteSeries::monomial(dirs.clone(), cap, *n).map(|m| (m, zero.clone())))
        .chain(
            basis
                .list()
                .iter()
                .map(|n| HermiteSeries::monomial(dirs.clone(), cap, *n).map(|m| (zero.clone(), m))),
        )
        .collect::<Result<_>>()?;
    let size = elems.len();
    let mut gram = DMatrix::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            gram[(i, j)] = symplectic_form(
                (&elems[i].0, &elems[i].1),
                (&elems[j].0, &elems[j].1),
            )?;
        }
    }
    Ok(gram)
}

/// `(rank, dimension)` of the symplectic Gram matrix.
pub fn symplectic_rank(dirs: &Arc<DirectionSet>, cap: usize) -> Result<(usize, usize)> {
    let gram = symplectic_gram(dirs, cap)?;
    let n = gram.nrows();
    let svd = gram.svd(false, false);
    let top = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > top * 1e-12 * n as f64)
        .count();
    Ok((rank, n))
}

/// Compressed square matrix of `η^{μν} qd_μ qd_ν` on degree `≤ cap`.
pub fn wave_qd_matrix(dirs: &Arc<DirectionSet>, cap: usize, sig: Signature) -> Result<OperatorMatrix> {
    OperatorMatrix::build(dirs, cap, cap, true, |s| wave_qd(s, sig))
}

/// Compressed square matrix of `η^{μν} D_μ D_ν` on degree `≤ cap`.
pub fn wave_dd_matrix(dirs: &Arc<DirectionSet>, cap: usize, sig: Signature) -> Result<OperatorMatrix> {
    OperatorMatrix::build(dirs, cap, cap, true, |s| {
        let mut acc = HermiteSeries::zero(s.dirs().clone(), s.cap()).grow();
        for (mu, e) in sig.eta().iter().enumerate() {
            acc = acc.axpy(C::new(*e, 0.0), &s.d_slot(mu)?.d_slot(mu)?)?;
        }
        Ok(acc)
    })
}

fn random_series(
    dirs: &Arc<DirectionSet>,
    cap: usize,
    degree: usize,
    rng: &mut ChaCha8Rng,
) -> Result<HermiteSeries> {
    let basis = multi_index_basis(dirs.len(), degree.min(cap));
    let terms: Vec<(MultiIndex, C)> = basis
        .list()
        .iter()
        .map(|n| (*n, C::new(rng.sample::<f64, _>(StandardNormal) * 0.5, 0.0)))
        .collect();
    HermiteSeries::from_terms(dirs.clone(), cap, terms)
}

/// Random real state with components of degree `≤ degree`.
pub fn random_state(
    dirs: &Arc<DirectionSet>,
    cap: usize,
    degree: usize,
    seed: u64,
) -> Result<FieldState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active = default_active(dirs);
    let psi = random_series(dirs, cap, degree, &mut rng)?;
    let v = random_series(dirs, cap, degree, &mut rng)?;
    let lambdas = (0..active.len())
        .map(|_| random_series(dirs, cap, degree, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let lambda_vs = (0..active.len())
        .map(|_| random_series(dirs, cap, degree, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    FieldState::new(psi, v, lambdas, lambda_vs, active)
}

/// Which component a coordinate of [`finite_difference_check`] perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Psi,
    V,
    Lambda(usize),
}

fn component(state: &mut FieldState, slot: Slot) -> &mut HermiteSeries {
    match slot {
        Slot::Psi => &mut state.psi,
        Slot::V => &mut state.v,
        Slot::Lambda(j) => &mut state.lambdas[j],
    }
}

/// Worst relative error between the analytic gradients and central
/// differences of [`lagrangian_full`], over every coefficient of degree
/// `≤ cap` in ψ, v and each multiplier. The relative error is measured
/// against the largest gradient component.
pub fn finite_difference_check(state: &FieldState, m2: f64, sig: Signature, h: f64) -> Result<f64> {
    let dirs = state.dirs().clone();
    let cap = state.psi.cap();
    let basis = multi_index_basis(dirs.len(), cap);
    let mut slots = vec![Slot::Psi, Slot::V];
    slots.extend((0..state.lambdas.len()).map(Slot::Lambda));
    let mut pairs = Vec::new();
    let mut scale: f64 = 0.0;
    for slot in slots {
        let grad = match slot {
            Slot::Psi => euler_lagrange_gradient(state, m2, sig)?,
            Slot::V => velocity_gradient(state, sig)?,
            Slot::Lambda(j) => multiplier_gradient(state, j)?,
        };
        for n in basis.list() {
            let analytic = grad.get(n).re * n.factorial();
            let mut plus = state.clone();
            let c = component(&mut plus, slot);
            let base = c.get(n);
            c.set(*n, base + h)?;
            let mut minus = state.clone();
            component(&mut minus, slot).set(*n, base - h)?;
            let fd = (lagrangian_full(&plus, m2, sig)? - lagrangian_full(&minus, m2, sig)?) / (2.0 * h);
            scale = scale.max(analytic.abs());
            pairs.push((analytic, fd));
        }
    }
    let scale = scale.max(1e-300);
    Ok(pairs
        .iter()
        .map(|(a, f)| (a - f).abs() / scale)
        .fold(0.0, f64::max))
}

/// Central differences of [`lagrangian_full`] along `probes` random
/// directions that move ψ, v and every multiplier at once, each component
/// drawn with degree `≤ probe_degree`. Returns the worst of
/// `|⟨∇L, δ⟩ - fd| / (‖∇L‖ ‖δ‖)`, all norms Gaussian.
pub fn directional_difference_check(
    state: &FieldState,
    m2: f64,
    sig: Signature,
    h: f64,
    probes: usize,
    probe_degree: usize,
    seed: u64,
) -> Result<f64> {
    let dirs = state.dirs().clone();
    let cap = state.psi.cap();
    let mut grads = vec![euler_lagrange_gradient(state, m2, sig)?, velocity_gradient(state, sig)?];
    for j in 0..state.lambdas.len() {
        grads.push(multiplier_gradient(state, j)?);
    }
    let gnorm = grads.iter().map(|g| gaussian_inner_re(g, g)).sum::<Result<f64>>()?.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let delta = (0..grads.len())
            .map(|_| random_series(&dirs, cap, probe_degree, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut analytic = 0.0;
        let mut dnorm = 0.0;
        for (g, d) in grads.iter().zip(&delta) {
            analytic += gaussian_inner_re(g, d)?;
            dnorm += gaussian_inner_re(d, d)?;
        }
        let shifted = |t: f64| -> Result<f64> {
            let mut s = state.clone();
            s.psi = s.psi.axpy(C::new(t, 0.0), &delta[0])?;
            s.v = s.v.axpy(C::new(t, 0.0), &delta[1])?;
            for (j, l) in s.lambdas.iter_mut().enumerate() {
                *l = l.axpy(C::new(t, 0.0), &delta[2 + j])?;
            }
            lagrangian_full(&s, m2, sig)
        };
        let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
        let scale = (gnorm * dnorm.sqrt()).max(1e-300);
        worst = worst.max((analytic - fd).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::whitenoise::{eval_at_coords, gauss_hermite, hermite_all, HermiteSeries};

    const SIG: Signature = Signature::MostlyMinus;

    fn dirs(st: &[(usize, i64)]) -> Arc<DirectionSet> {
        Arc::new(DirectionSet::with_st(st, 2.0).unwrap())
    }

    fn he(d: &Arc<DirectionSet>, cap: usize, i: usize, n: usize) -> HermiteSeries {
        HermiteSeries::he(d.clone(), cap, i, n).unwrap()
    }

    fn one(d: &Arc<DirectionSet>, cap: usize) -> HermiteSeries {
        HermiteSeries::constant(d.clone(), cap, 1.0)
    }

    /// Tensor Gauss-Hermite integral over the first `dims` coordinates.
    fn gh_tensor(dims: usize, pts: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        let (x, w) = gauss_hermite(pts);
        let mut idx = vec![0usize; dims];
        let mut acc = 0.0;
        loop {
            let p: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
            let wt: f64 = idx.iter().map(|&i| w[i]).product();
            acc += wt * f(&p);
            let mut k = 0;
            loop {
                if k == dims {
                    return acc;
                }
                idx[k] += 1;
                if idx[k] < pts {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn constraint_examples() {
        let d = dirs(&[(2, 0)]);
        let z = HermiteSeries::zero(d.clone(), 3);
        for (_, r) in constraint_residuals(&z).unwrap() {
            assert!(r.is_empty());
        }
        let r = constraint_residuals(&he(&d, 3, 4, 1)).unwrap();
        assert!(!r[0].1.is_empty());
        let t = he(&d, 3, 0, 2).add(&he(&d, 3, 2, 1)).unwrap();
        assert_eq!(constraint_pairing_defect(&t).unwrap(), 0.0);
        assert_eq!(st_derivative_defect(&t).unwrap(), 0.0);
        // He_1 in an ST slot pairs with the constant
        assert_eq!(constraint_pairing_defect(&he(&d, 3, 4, 1)).unwrap(), 1.0);
        // He_2 in an ST slot: pairings vanish though ψ is not T⁴-supported
        assert_eq!(constraint_pairing_defect(&he(&d, 3, 4, 2)).unwrap(), 0.0);
        assert!(st_derivative_defect(&he(&d, 3, 4, 2)).unwrap() > 0.0);
    }

    #[test]
    fn kg_examples() {
        let d = dirs(&[]);
        let k = kg_apply(&one(&d, 2), 0.0, SIG).unwrap();
        let mut expect = HermiteSeries::zero(d.clone(), 2);
        for (mu, e) in SIG.eta().iter().enumerate() {
            expect = expect
                .axpy(C::new(*e, 0.0), &he(&d, 2, mu, 2).add(&one(&d, 2)).unwrap())
                .unwrap();
        }
        assert!(k.max_abs_diff(&expect) < 1e-15);
        assert!(kg_apply(&HermiteSeries::zero(d.clone(), 2), 1.0, SIG).unwrap().is_empty());
        let psi = he(&d, 4, 1, 1).add(&he(&d, 4, 0, 2).scale_re(0.3)).unwrap();
        let out = kg_apply(&psi, 1.5, SIG).unwrap();
        for p in [[0.3, -0.7, 1.1, 0.2], [1.5, 0.0, -0.4, 0.9]] {
            let quad = p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3];
            let lhs = eval_at_coords(&out, &p).unwrap().re;
            let rhs = (quad - 1.5) * eval_at_coords(&psi, &p).unwrap().re;
            assert!((lhs - rhs).abs() < 1e-10);
        }
        assert!(kg_apply(&he(&d, 2, 0, 2), 0.0, SIG).is_err());
    }

    #[test]
    fn qd_examples() {
        let d = dirs(&[]);
        assert_eq!(qd_apply(0, &one(&d, 3)).unwrap(), he(&d, 3, 0, 1));
        let expect = he(&d, 3, 0, 2).sub(&one(&d, 3)).unwrap();
        assert_eq!(qd_apply(0, &he(&d, 3, 0, 1)).unwrap(), expect);
        // quadrature oracle: (x - 2∂)He_1 = x² - 2 = He_2 - He_0
        let (x, w) = gauss_hermite(10);
        let c0: f64 = x.iter().zip(&w).map(|(x, w)| w * (x * x - 2.0)).sum();
        assert!((c0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_kg_examples() {
        let d = dirs(&[]);
        assert_eq!(lagrangian_kg(&HermiteSeries::zero(d.clone(), 2), 1.0, SIG).unwrap(), 0.0);
        // only e_0 is excited by the constant in its own slot; the other
        // three slots contribute through η^{kk}
        let l = lagrangian_kg(&one(&d, 2), 0.0, SIG).unwrap();
        assert!((l - (-0.5 + 1.5)).abs() < 1e-15);
        let psi = he(&d, 3, 2, 1).add(&he(&d, 3, 0, 2)).unwrap();
        let a = lagrangian_kg(&psi, 0.7, SIG).unwrap();
        let b = lagrangian_kg(&psi.scale_re(3.0), 0.7, SIG).unwrap();
        assert!((b - 9.0 * a).abs() < 1e-12 * b.abs());
    }

    #[test]
    fn lagrangian_kg_single_direction_oracle() {
        // ½ ∫ [(x - 2∂)² 1] · 1 dμ = ½ ∫ (x² - 2) dμ = -½
        let (x, w) = gauss_hermite(10);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * 0.5 * (x * x - 2.0)).sum();
        assert!((q + 0.5).abs() < 1e-14);
        let d = dirs(&[]);
        let psi = one(&d, 2);
        let w0 = psi.clone().grow().qd_slot(0).unwrap().qd_slot(0).unwrap();
        assert!((0.5 * gaussian_inner_re(&w0, &psi).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn full_lagrangian_reduces_and_matches_quadrature() {
        let d = dirs(&[(2, 0)]);
        let psi = he(&d, 4, 0, 1)
            .add(&he(&d, 4, 4, 1).scale_re(0.4))
            .unwrap()
            .add(&he(&d, 4, 1, 2).scale_re(-0.3))
            .unwrap();
        let v = psi.d_slot(0).unwrap();
        let z = HermiteSeries::zero(d.clone(), 4);
        let st = FieldState::new(psi.clone(), v, vec![z.clone()], vec![z.clone()], vec![4]).unwrap();
        let l = lagrangian_full(&st, 0.8, SIG).unwrap();
        assert!((l - lagrangian_kg(&psi, 0.8, SIG).unwrap()).abs() < 1e-12);

        // multiplier term vanishes when qd_4 ψ = 0 (ψ free of slot 4 does
        // not satisfy that, so use ψ = 0 instead with any λ)
        let lam = he(&d, 4, 4, 2).add(&one(&d, 4)).unwrap();
        assert_eq!(multiplier_term(&z, &[lam.clone()], &[4]).unwrap(), 0.0);

        // quadrature oracle of ½∫λ (qd ψ)²
        let m = multiplier_term(&psi, &[lam.clone()], &[4]).unwrap();
        let w = psi.clone().grow().qd_slot(4).unwrap();
        let oracle = gh_tensor(5, 8, &|p| {
            let lv = eval_at_coords(&lam, p).unwrap().re;
            let wv = eval_at_coords(&w, p).unwrap().re;
            0.5 * lv * wv * wv
        });
        assert!((m - oracle).abs() < 1e-10, "{m} vs {oracle}");
        assert!(FieldState::new(psi.clone(), psi.clone(), vec![], vec![], vec![4]).is_err());
    }

    #[test]
    fn gradient_examples_and_finite_differences() {
        let d = dirs(&[(2, 0)]);
        let z = FieldState::zero(d.clone(), 3);
        assert!(euler_lagrange_gradient(&z, 1.0, SIG).unwrap().is_empty());
        for seed in 0..3 {
            let st = random_state(&d, 3, 2, seed).unwrap();
            let err = finite_difference_check(&st, 0.9, SIG, 1e-5).unwrap();
            assert!(err < 1e-6, "seed {seed}: {err}");
            let err = directional_difference_check(&st, 0.9, SIG, 1e-5, 3, 3, seed).unwrap();
            assert!(err < 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn vainberg_contrast() {
        let d = dirs(&[(2, 0)]);
        let qd = wave_qd_matrix(&d, 3, SIG).unwrap();
        assert!(crate::whitenoise::vainberg_symmetry_defect(&qd).unwrap() < 1e-12);
        let dd = wave_dd_matrix(&d, 3, SIG).unwrap();
        assert!(crate::whitenoise::vainberg_symmetry_defect(&dd).unwrap() >= 0.5);
    }

    #[test]
    fn fiber_derivative_examples() {
        let d = dirs(&[(2, 0)]);
        let z = HermiteSeries::zero(d.clone(), 3);
        let st = FieldState::new(he(&d, 3, 0, 1), z.clone(), vec![z.clone()], vec![z.clone()], vec![4])
            .unwrap();
        let pt = fiber_derivative(&st, Signature::MostlyPlus).unwrap();
        let expect = he(&d, 3, 0, 2).add(&one(&d, 3)).unwrap().scale_re(-2.0);
        assert_eq!(pt.pi, expect);
        let pt = fiber_derivative(&st, SIG).unwrap();
        assert_eq!(pt.pi, expect.scale_re(-1.0));

        let st = FieldState::new(z.clone(), one(&d, 3), vec![z.clone()], vec![z.clone()], vec![4]).unwrap();
        assert_eq!(fiber_derivative(&st, Signature::MostlyPlus).unwrap().pi, one(&d, 3).scale_re(4.0));

        let a = random_state(&d, 3, 2, 4).unwrap();
        let mut b = a.clone();
        b.lambda_vs[0] = he(&d, 3, 4, 3);
        assert_eq!(fiber_derivative(&a, SIG).unwrap(), fiber_derivative(&b, SIG).unwrap());
        assert!((energy(&a, 1.0, SIG).unwrap() - energy(&b, 1.0, SIG).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn hamiltonian_examples() {
        let d = dirs(&[(2, 0)]);
        let z = HermiteSeries::zero(d.clone(), 3);
        let pt = CotangentPoint::new(z.clone(), he(&d, 3, 0, 1), vec![z.clone()], vec![4]).unwrap();
        assert!((hamiltonian_displayed(&pt, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((hamiltonian(&pt, 0.0, SIG).unwrap() + 0.125).abs() < 1e-15);
        let pt = CotangentPoint::new(one(&d, 3), z.clone(), vec![z.clone()], vec![4]).unwrap();
        assert!((hamiltonian_displayed(&pt, 0.0).unwrap() + 1.5).abs() < 1e-15);
        assert!((hamiltonian(&pt, 0.0, SIG).unwrap() + 1.5).abs() < 1e-15);
    }

    #[test]
    fn legendre_consistency_and_scaling() {
        let d = dirs(&[(2, 0), (2, 1)]);
        for seed in 0..5 {
            let st = random_state(&d, 3, 2, 100 + seed).unwrap();
            for sig in [SIG, Signature::MostlyPlus] {
                let e = energy(&st, 0.6, sig).unwrap();
                let h = hamiltonian(&fiber_derivative(&st, sig).unwrap(), 0.6, sig).unwrap();
                assert!((e - h).abs() < 1e-10 * e.abs().max(1.0));
            }
        }
        let z = FieldState::zero(d.clone(), 3);
        assert_eq!(energy(&z, 1.0, SIG).unwrap(), 0.0);
        let st = random_state(&d, 3, 2, 7).unwrap();
        let mut scaled = st.clone();
        scaled.psi = st.psi.scale_re(2.0);
        scaled.v = st.v.scale_re(2.0);
        for l in scaled.lambdas.iter_mut() {
            *l = HermiteSeries::zero(d.clone(), 3);
        }
        let mut base = st.clone();
        base.lambdas = scaled.lambdas.clone();
        let e1 = energy(&base, 0.5, SIG).unwrap();
        let e2 = energy(&scaled, 0.5, SIG).unwrap();
        assert!((e2 - 4.0 * e1).abs() < 1e-10 * e2.abs().max(1.0));
    }

    #[test]
    fn symplectic_examples() {
        let d = dirs(&[(2, 0)]);
        let z = HermiteSeries::zero(d.clone(), 2);
        let h1 = he(&d, 2, 0, 1);
        assert_eq!(symplectic_form((&h1, &z), (&z, &h1)).unwrap(), 1.0);
        let a = he(&d, 2, 1, 2).add(&h1).unwrap();
        assert_eq!(symplectic_form((&a, &h1), (&a, &h1)).unwrap(), 0.0);
        for cap in 0..=2 {
            let (rank, n) = symplectic_rank(&d, cap).unwrap();
            assert_eq!(rank, n);
        }
    }

    #[test]
    fn hermite_dictionary_helper() {
        assert_eq!(hermite_all(3, 2.0), vec![1.0, 2.0, 3.0, 2.0]);
    }
}
