//! Finite-dimensional white-noise calculus.
//!
//! A covariant field is a finite Hermite-chaos series
//! `ψ(β) = Σ_n c_n ∏_i He_{n_i}((β, e_i))` over a fixed ordered set of
//! spherical-harmonic directions `e_i`, with probabilists' Hermite
//! polynomials `He_n` (weight `e^{-x²/2}/√(2π)`). Under the white-noise
//! measure the coordinates `(β, e_i)` are independent standard Gaussians, so
//! `⟨He_n, He_m⟩ = δ_nm ∏ n_i!`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{a_eigenvalue, check_k, SphereFunction};
use crate::supermomenta::Supermomentum;

pub type C = Complex64;

/// Largest supported number of directions.
pub const MAX_DIRECTIONS: usize = 16;

/// Relative tolerance of the span test for operator directions.
pub const SPAN_TOL: f64 = 1e-12;

/// `e_0..e_3 = (Y_00, Y_1-1, Y_10, Y_11)`.
pub const T4_DIRECTIONS: [(usize, i64); 4] = [(0, 0), (1, -1), (1, 0), (1, 1)];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Ordered list of harmonic directions, the first four spanning T⁴.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    dirs: Vec<(usize, i64)>,
    k: f64,
}

impl DirectionSet {
    pub fn new(dirs: Vec<(usize, i64)>, k: f64) -> Result<Self> {
        check_k(k)?;
        if dirs.len() < 4 || dirs.len() > MAX_DIRECTIONS {
            return Err(Error::InputShape(format!(
                "direction count must lie in 4..={MAX_DIRECTIONS} (got {})",
                dirs.len()
            )));
        }
        if dirs[..4] != T4_DIRECTIONS {
            return Err(Error::InputShape(
                "the first four directions must be (0,0), (1,-1), (1,0), (1,1)".into(),
            ));
        }
        for (i, &(l, m)) in dirs.iter().enumerate() {
            if m.unsigned_abs() as usize > l {
                return Err(Error::InputShape(format!("direction ({l},{m}) has |m| > l")));
            }
            if dirs[..i].contains(&(l, m)) {
                return Err(Error::InputShape(format!("direction ({l},{m}) repeated")));
            }
        }
        Ok(DirectionSet { dirs, k })
    }

    /// T⁴ followed by the given proper supertranslation directions.
    pub fn with_st(st: &[(usize, i64)], k: f64) -> Result<Self> {
        let mut dirs = T4_DIRECTIONS.to_vec();
        dirs.extend_from_slice(st);
        Self::new(dirs, k)
    }

    pub fn t4(k: f64) -> Result<Self> {
        Self::new(T4_DIRECTIONS.to_vec(), k)
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn dirs(&self) -> &[(usize, i64)] {
        &self.dirs
    }

    pub fn direction(&self, i: usize) -> (usize, i64) {
        self.dirs[i]
    }

    /// `λ_i = l_i(l_i+1) + k`.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        a_eigenvalue(self.dirs[i].0, self.k)
    }

    pub fn l_max(&self) -> usize {
        self.dirs.iter().map(|d| d.0).max().unwrap_or(0)
    }

    pub fn t4_slots(&self) -> Vec<usize> {
        (0..4).collect()
    }

    /// Slots carrying `l > 1` harmonics.
    pub fn st_slots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.dirs[i].0 > 1).collect()
    }

    pub fn slots_of_degree(&self, l: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.dirs[i].0 == l).collect()
    }

    /// `e_i` as a function truncated at `l_max`.
    pub fn unit_direction(&self, i: usize, l_max: usize) -> SphereFunction {
        let (l, m) = self.dirs[i];
        SphereFunction::basis(l_max, l, m)
    }

    /// Expansion coefficients `γ_i` of `α = Σ γ_i e_i`.
    pub fn decompose(&self, alpha: &SphereFunction) -> Result<Vec<f64>> {
        let gamma: Vec<f64> = self
            .dirs
            .iter()
            .map(|&(l, m)| if l <= alpha.l_max() { alpha.get(l, m) } else { 0.0 })
            .collect();
        let total = alpha.norm();
        let inside: f64 = gamma.iter().map(|g| g * g).sum::<f64>();
        let residual = (total * total - inside).max(0.0).sqrt();
        if residual > SPAN_TOL * total.max(1.0) {
            return Err(Error::UnsupportedDirection { residual });
        }
        Ok(gamma)
    }

    /// Coordinates `p_i = (β, e_i)`.
    pub fn coordinates(&self, beta: &Supermomentum) -> Vec<f64> {
        self.dirs
            .iter()
            .map(|&(l, m)| if l <= beta.l_max() { beta.get(l, m) } else { 0.0 })
            .collect()
    }
}

/// Occupation numbers `(n_1, …, n_K)`, unused slots zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex([u8; MAX_DIRECTIONS]);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex([0; MAX_DIRECTIONS])
    }

    pub fn from_slice(n: &[usize]) -> Result<Self> {
        if n.len() > MAX_DIRECTIONS {
            return Err(Error::InputShape(format!("multi-index longer than {MAX_DIRECTIONS}")));
        }
        let mut out = [0u8; MAX_DIRECTIONS];
        for (o, &v) in out.iter_mut().zip(n) {
            *o = u8::try_from(v)
                .map_err(|_| Error::InputShape(format!("occupation {v} too large")))?;
        }
        Ok(MultiIndex(out))
    }

    /// `n_i = d` in slot `i`, zero elsewhere.
    pub fn single(i: usize, d: usize) -> Self {
        let mut out = Self::zero();
        out.0[i] = d as u8;
        out
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&v| v as usize).sum()
    }

    pub fn raised(&self, i: usize) -> Self {
        let mut out = *self;
        out.0[i] += 1;
        out
    }

    pub fn lowered(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut out = *self;
        out.0[i] -= 1;
        Some(out)
    }

    pub fn with(&self, i: usize, v: usize) -> Self {
        let mut out = *self;
        out.0[i] = v as u8;
        out
    }

    pub fn to_vec(&self, dims: usize) -> Vec<usize> {
        self.0[..dims].iter().map(|&v| v as usize).collect()
    }

    /// `∏ n_i!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&v| factorial(v as usize)).product()
    }

    /// True iff every nonzero slot lies in `slots`.
    pub fn supported_in(&self, slots: &[usize]) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, &v)| v == 0 || slots.contains(&i))
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64).round()
}

/// Behaviour when an operator would exceed the degree cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CapPolicy {
    #[default]
    Strict,
    Grow,
}

/// Hermite-chaos series with degree cap `N`.
///
/// Equality compares the represented function: basis and coefficients, not
/// the cap or policy.
#[derive(Debug, Clone)]
pub struct HermiteSeries {
    dirs: Arc<DirectionSet>,
    cap: usize,
    policy: CapPolicy,
    terms: BTreeMap<MultiIndex, C>,
}

impl PartialEq for HermiteSeries {
    fn eq(&self, other: &Self) -> bool {
        *self.dirs == *other.dirs && self.terms == other.terms
    }
}

fn same_basis(a: &Arc<DirectionSet>, b: &Arc<DirectionSet>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::InputShape("series live on different direction sets".into()))
    }
}

impl HermiteSeries {
    pub fn zero(dirs: Arc<DirectionSet>, cap: usize) -> Self {
        HermiteSeries {
            dirs,
            cap,
            policy: CapPolicy::Strict,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dirs: Arc<DirectionSet>, cap: usize, value: f64) -> Self {
        let mut s = Self::zero(dirs, cap);
        s.insert(MultiIndex::zero(), C::new(value, 0.0));
        s
    }

    /// The single basis element `∏ He_{n_i}`.
    pub fn monomial(dirs: Arc<DirectionSet>, cap: usize, n: MultiIndex) -> Result<Self> {
        Self::from_terms(dirs, cap, [(n, ONE)])
    }

    /// `He_d` in slot `i`.
    pub fn he(dirs: Arc<DirectionSet>, cap: usize, i: usize, d: usize) -> Result<Self> {
        Self::monomial(dirs, cap, MultiIndex::single(i, d))
    }

    pub fn from_terms(
        dirs: Arc<DirectionSet>,
        cap: usize,
        terms: impl IntoIterator<Item = (MultiIndex, C)>,
    ) -> Result<Self> {
        let mut s = Self::zero(dirs, cap);
        for (n, c) in terms {
            if (s.dirs.len()..MAX_DIRECTIONS).any(|i| n.get(i) != 0) {
                return Err(Error::InputShape("multi-index uses an absent direction".into()));
            }
            if n.degree() > cap {
                return Err(Error::DegreeCap {
                    cap,
                    degree: n.degree(),
                });
            }
            *s.terms.entry(n).or_insert(ZERO) += c;
        }
        s.terms.retain(|_, c| *c != ZERO);
        Ok(s)
    }

    pub fn dirs(&self) -> &Arc<DirectionSet> {
        &self.dirs
    }

    pub fn dims(&self) -> usize {
        self.dirs.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn policy(&self) -> CapPolicy {
        self.policy
    }

    pub fn with_policy(mut self, policy: CapPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn grow(self) -> Self {
        self.with_policy(CapPolicy::Grow)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, n: &MultiIndex) -> C {
        self.terms.get(n).copied().unwrap_or(ZERO)
    }

    fn insert(&mut self, n: MultiIndex, c: C) {
        if c != ZERO {
            self.terms.insert(n, c);
        } else {
            self.terms.remove(&n);
        }
    }

    /// Sets a coefficient; the degree must respect the cap.
    pub fn set(&mut self, n: MultiIndex, c: C) -> Result<()> {
        if n.degree() > self.cap {
            return Err(Error::DegreeCap {
                cap: self.cap,
                degree: n.degree(),
            });
        }
        self.insert(n, c);
        Ok(())
    }

    /// Largest degree carrying a nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|n| n.degree()).max().unwrap_or(0)
    }

    /// True when every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }

    pub fn with_cap(&self, cap: usize) -> Result<Self> {
        if self.degree() > cap {
            return Err(Error::DegreeCap {
                cap,
                degree: self.degree(),
            });
        }
        let mut s = self.clone();
        s.cap = cap;
        Ok(s)
    }

    /// Drops every term of degree above `cap`.
    pub fn truncated(&self, cap: usize) -> Self {
        let mut s = self.clone();
        s.cap = cap;
        s.terms.retain(|n, _| n.degree() <= cap);
        s
    }

    pub fn scale(&self, c: C) -> Self {
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v *= c;
        }
        s.terms.retain(|_, v| *v != ZERO);
        s
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(ONE, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-ONE, other)
    }

    /// `self + a·other`, with the larger of the two caps.
    pub fn axpy(&self, a: C, other: &Self) -> Result<Self> {
        same_basis(&self.dirs, &other.dirs)?;
        let mut s = self.clone();
        s.cap = self.cap.max(other.cap);
        for (n, c) in &other.terms {
            let v = s.get(n) + a * c;
            s.insert(*n, v);
        }
        Ok(s)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, c) in &self.terms {
            worst = worst.max((c - other.get(n)).norm());
        }
        for (n, c) in &other.terms {
            if !self.terms.contains_key(n) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Real parts as a new series.
    pub fn re(&self) -> Self {
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v = C::new(v.re, 0.0);
        }
        s.terms.retain(|_, v| *v != ZERO);
        s
    }

    fn rebuild(&self, terms: BTreeMap<MultiIndex, C>) -> Result<Self> {
        let mut out = HermiteSeries {
            dirs: self.dirs.clone(),
            cap: self.cap,
            policy: self.policy,
            terms,
        };
        out.terms.retain(|_, c| *c != ZERO);
        let d = out.degree();
        if d > out.cap {
            match out.policy {
                CapPolicy::Strict => {
                    return Err(Error::DegreeCap {
                        cap: out.cap,
                        degree: d,
                    })
                }
                CapPolicy::Grow => out.cap = d,
            }
        }
        Ok(out)
    }

    fn check_slot(&self, i: usize) -> Result<()> {
        if i < self.dims() {
            Ok(())
        } else {
            Err(Error::InputShape(format!(
                "slot {i} outside the {} directions",
                self.dims()
            )))
        }
    }

    /// Multiplication by `(β, e_i)`: `x He_n = He_{n+1} + n He_{n-1}`.
    pub fn q_slot(&self, i: usize) -> Result<Self> {
        self.check_slot(i)?;
        let mut out = BTreeMap::new();
        for (n, c) in &self.terms {
            *out.entry(n.raised(i)).or_insert(ZERO) += c;
            if let Some(lo) = n.lowered(i) {
                *out.entry(lo).or_insert(ZERO) += c * n.get(i) as f64;
            }
        }
        self.rebuild(out)
    }

    /// `∂/∂(β, e_i)`: `He_n ↦ n He_{n-1}`.
    pub fn d_slot(&self, i: usize) -> Result<Self> {
        self.check_slot(i)?;
        let mut out = BTreeMap::new();
        for (n, c) in &self.terms {
            if let Some(lo) = n.lowered(i) {
                *out.entry(lo).or_insert(ZERO) += c * n.get(i) as f64;
            }
        }
        self.rebuild(out)
    }

    /// `He_n ↦ He_{n+1}`.
    pub fn dstar_slot(&self, i: usize) -> Result<Self> {
        self.check_slot(i)?;
        let out = self.terms.iter().map(|(n, c)| (n.raised(i), *c)).collect();
        self.rebuild(out)
    }

    /// `(Q - 2D)` in slot `i`, i.e. `D* - D`.
    pub fn qd_slot(&self, i: usize) -> Result<Self> {
        self.check_slot(i)?;
        let mut out = BTreeMap::new();
        for (n, c) in &self.terms {
            *out.entry(n.raised(i)).or_insert(ZERO) += c;
            if let Some(lo) = n.lowered(i) {
                *out.entry(lo).or_insert(ZERO) -= c * n.get(i) as f64;
            }
        }
        self.rebuild(out)
    }
}

fn along(
    alpha: &SphereFunction,
    psi: &HermiteSeries,
    op: impl Fn(&HermiteSeries, usize) -> Result<HermiteSeries>,
) -> Result<HermiteSeries> {
    let gamma = psi.dirs.decompose(alpha)?;
    let mut acc = HermiteSeries::zero(psi.dirs.clone(), psi.cap).with_policy(psi.policy);
    for (i, g) in gamma.iter().enumerate() {
        if *g != 0.0 {
            acc = acc.axpy(C::new(*g, 0.0), &op(psi, i)?)?;
        }
    }
    Ok(acc)
}

/// `Q_α ψ = (β, α) ψ`.
pub fn multiply_q(alpha: &SphereFunction, psi: &HermiteSeries) -> Result<HermiteSeries> {
    along(alpha, psi, |s, i| s.q_slot(i))
}

/// Gateaux derivative along `α`.
pub fn gateaux_d(alpha: &SphereFunction, psi: &HermiteSeries) -> Result<HermiteSeries> {
    along(alpha, psi, |s, i| s.d_slot(i))
}

/// Adjoint of [`gateaux_d`] under the Gaussian inner product.
pub fn adjoint_dstar(alpha: &SphereFunction, psi: &HermiteSeries) -> Result<HermiteSeries> {
    along(alpha, psi, |s, i| s.dstar_slot(i))
}

/// `⟨ψ, φ⟩ = Σ conj(c_n) d_n ∏ n_i!`.
pub fn gaussian_inner(psi: &HermiteSeries, phi: &HermiteSeries) -> Result<C> {
    same_basis(&psi.dirs, &phi.dirs)?;
    let (small, large, flip) = if psi.len() <= phi.len() {
        (psi, phi, false)
    } else {
        (phi, psi, true)
    };
    let mut acc = ZERO;
    for (n, c) in &small.terms {
        if let Some(d) = large.terms.get(n) {
            let v = if flip { c * d.conj() } else { c.conj() * d };
            acc += v * n.factorial();
        }
    }
    Ok(acc)
}

/// Real part of [`gaussian_inner`], for real series.
pub fn gaussian_inner_re(psi: &HermiteSeries, phi: &HermiteSeries) -> Result<f64> {
    Ok(gaussian_inner(psi, phi)?.re)
}

pub fn gaussian_norm(psi: &HermiteSeries) -> f64 {
    gamma_a_norm(psi, 0)
}

/// `‖Γ(A)^p ψ‖`; negative `p` gives the distribution norms.
pub fn gamma_a_norm(psi: &HermiteSeries, p: i32) -> f64 {
    let lam: Vec<f64> = (0..psi.dims()).map(|i| psi.dirs.eigenvalue(i)).collect();
    psi.terms
        .iter()
        .map(|(n, c)| {
            let w: f64 = (0..psi.dims())
                .map(|i| lam[i].powi(2 * p * n.get(i) as i32))
                .product();
            c.norm_sqr() * n.factorial() * w
        })
        .sum::<f64>()
        .sqrt()
}

/// Keeps the terms whose support lies in `v`.
pub fn project_pi_v(psi: &HermiteSeries, v: &[usize]) -> Result<HermiteSeries> {
    if let Some(&bad) = v.iter().find(|&&i| i >= psi.dims()) {
        return Err(Error::InputShape(format!("slot {bad} outside the direction set")));
    }
    let mut out = psi.clone();
    out.terms.retain(|n, _| n.supported_in(v));
    Ok(out)
}

/// `He_0..He_n` at `x`.
pub fn hermite_all(n: usize, x: f64) -> Vec<f64> {
    let mut h = vec![1.0; n + 1];
    if n >= 1 {
        h[1] = x;
    }
    for k in 1..n {
        h[k + 1] = x * h[k] - k as f64 * h[k - 1];
    }
    h
}

/// `He_0..He_n` at complex `z`.
pub fn hermite_all_c(n: usize, z: C) -> Vec<C> {
    let mut h = vec![ONE; n + 1];
    if n >= 1 {
        h[1] = z;
    }
    for k in 1..n {
        h[k + 1] = z * h[k] - h[k - 1] * k as f64;
    }
    h
}

/// Evaluates the series at direction coordinates `p_i`.
pub fn eval_at_coords(psi: &HermiteSeries, p: &[f64]) -> Result<C> {
    if p.len() != psi.dims() {
        return Err(Error::InputShape(format!(
            "{} coordinates for {} directions",
            p.len(),
            psi.dims()
        )));
    }
    let pc: Vec<C> = p.iter().map(|&x| C::new(x, 0.0)).collect();
    eval_at_complex(psi, &pc)
}

/// Evaluates the series at complex coordinates.
pub fn eval_at_complex(psi: &HermiteSeries, p: &[C]) -> Result<C> {
    if p.len() != psi.dims() {
        return Err(Error::InputShape(format!(
            "{} coordinates for {} directions",
            p.len(),
            psi.dims()
        )));
    }
    let d = psi.degree();
    let tables: Vec<Vec<C>> = p.iter().map(|&z| hermite_all_c(d, z)).collect();
    Ok(psi
        .terms
        .iter()
        .map(|(n, c)| {
            let prod: C = (0..psi.dims()).map(|i| tables[i][n.get(i)]).product();
            c * prod
        })
        .sum())
}

/// `ψ(β)` with `p_i = (β, e_i)`.
pub fn eval_at_sample(psi: &HermiteSeries, beta: &Supermomentum) -> Result<C> {
    eval_at_coords(psi, &psi.dirs.coordinates(beta))
}

/// Product of two series via `He_a He_b = Σ_r C(a,r) C(b,r) r! He_{a+b-2r}`.
pub fn multiply_series(psi: &HermiteSeries, phi: &HermiteSeries) -> Result<HermiteSeries> {
    same_basis(&psi.dirs, &phi.dirs)?;
    let dims = psi.dims();
    let mut out: BTreeMap<MultiIndex, C> = BTreeMap::new();
    for (a, ca) in &psi.terms {
        for (b, cb) in &phi.terms {
            linearize(dims, 0, a, b, MultiIndex::zero(), ca * cb, &mut out);
        }
    }
    let mut base = psi.clone();
    base.cap = psi.cap.max(phi.cap);
    base.rebuild(out)
}

fn linearize(
    dims: usize,
    slot: usize,
    a: &MultiIndex,
    b: &MultiIndex,
    acc: MultiIndex,
    coef: C,
    out: &mut BTreeMap<MultiIndex, C>,
) {
    if slot == dims {
        *out.entry(acc).or_insert(ZERO) += coef;
        return;
    }
    let (x, y) = (a.get(slot), b.get(slot));
    if x == 0 || y == 0 {
        linearize(dims, slot + 1, a, b, acc.with(slot, x + y), coef, out);
        return;
    }
    for r in 0..=x.min(y) {
        let w = binomial(x, r) * binomial(y, r) * factorial(r);
        linearize(dims, slot + 1, a, b, acc.with(slot, x + y - 2 * r), coef * w, out);
    }
}

/// `E[ψ]`, the zero-degree coefficient.
pub fn expectation(psi: &HermiteSeries) -> C {
    psi.get(&MultiIndex::zero())
}

/// Polynomial `Σ c_n ξ^n` in the direction variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub dims: usize,
    pub terms: BTreeMap<MultiIndex, C>,
}

impl Polynomial {
    pub fn eval(&self, xi: &[C]) -> C {
        self.terms
            .iter()
            .map(|(n, c)| {
                let prod: C = (0..self.dims)
                    .map(|i| xi[i].powu(n.get(i) as u32))
                    .product();
                c * prod
            })
            .sum()
    }
}

/// S-transform: `He_n ↦ ξ^n` with the same coefficients.
pub fn s_transform(psi: &HermiteSeries) -> Polynomial {
    Polynomial {
        dims: psi.dims(),
        terms: psi.terms.clone(),
    }
}

/// Inverse of [`s_transform`] on a given basis.
pub fn from_polynomial(dirs: Arc<DirectionSet>, cap: usize, p: &Polynomial) -> Result<HermiteSeries> {
    HermiteSeries::from_terms(dirs, cap, p.terms.iter().map(|(n, c)| (*n, *c)))
}

/// Fourier transform truncated at `out_cap`: the S-inverse of
/// `P(-iξ) exp(-½ Σ ξ_i²)` with `P` the S-transform of `ψ`.
pub fn fourier_f(psi: &HermiteSeries, out_cap: usize) -> HermiteSeries {
    let dims = psi.dims();
    let mut out: BTreeMap<MultiIndex, C> = BTreeMap::new();
    let minus_i = C::new(0.0, -1.0);
    for (n, c) in &psi.terms {
        let d = n.degree();
        if d > out_cap {
            continue;
        }
        let c = c * minus_i.powu(d as u32);
        gauss_factor(dims, 0, *n, d, out_cap, c, &mut out);
    }
    let mut s = HermiteSeries::zero(psi.dirs.clone(), out_cap);
    s.policy = psi.policy;
    s.terms = out;
    s.terms.retain(|_, c| *c != ZERO);
    s
}

fn gauss_factor(
    dims: usize,
    slot: usize,
    n: MultiIndex,
    degree: usize,
    cap: usize,
    coef: C,
    out: &mut BTreeMap<MultiIndex, C>,
) {
    if slot == dims {
        *out.entry(n).or_insert(ZERO) += coef;
        return;
    }
    let mut j = 0;
    while degree + 2 * j <= cap {
        let w = (-0.5f64).powi(j as i32) / factorial(j);
        let m = n.with(slot, n.get(slot) + 2 * j);
        gauss_factor(dims, slot + 1, m, degree + 2 * j, cap, coef * w, out);
        j += 1;
    }
}

/// `‖·‖_{-1}` norm of the first two degree shells dropped by truncating
/// [`fourier_f`] at `out_cap`.
pub fn fourier_f_tail(psi: &HermiteSeries, out_cap: usize) -> f64 {
    let wide = fourier_f(psi, out_cap + 2);
    let mut tail = wide.clone();
    tail.terms.retain(|n, _| n.degree() > out_cap);
    gamma_a_norm(&tail, -1)
}

/// Fourier-Gauss transform `G_{a,b}`, per slot
/// `He_n ↦ Σ_{m+2j=n} n!/(m! j!) ((a²+b²-1)/2)^j b^m He_m`.
pub fn fourier_gauss(a: C, b: C, psi: &HermiteSeries) -> Result<HermiteSeries> {
    if a == ZERO || b == ZERO {
        return Err(Error::Domain("Fourier-Gauss parameters must be nonzero".into()));
    }
    let c = (a * a + b * b - 1.0) / 2.0;
    let dims = psi.dims();
    let mut out: BTreeMap<MultiIndex, C> = BTreeMap::new();
    for (n, coef) in &psi.terms {
        fg_expand(dims, 0, n, MultiIndex::zero(), *coef, b, c, &mut out);
    }
    psi.rebuild(out)
}

#[allow(clippy::too_many_arguments)]
fn fg_expand(
    dims: usize,
    slot: usize,
    n: &MultiIndex,
    acc: MultiIndex,
    coef: C,
    b: C,
    c: C,
    out: &mut BTreeMap<MultiIndex, C>,
) {
    if slot == dims {
        *out.entry(acc).or_insert(ZERO) += coef;
        return;
    }
    let ni = n.get(slot);
    for j in 0..=ni / 2 {
        let m = ni - 2 * j;
        let w = factorial(ni) / (factorial(m) * factorial(j));
        let f = c.powu(j as u32) * b.powu(m as u32) * w;
        if f == ZERO {
            continue;
        }
        fg_expand(dims, slot + 1, n, acc.with(slot, m), coef * f, b, c, out);
    }
}

/// Monte-Carlo estimate of `∫ ψ(a x' + b x) dμ(x')` at coordinates `x`,
/// with its standard error.
pub fn fourier_gauss_monte_carlo(
    a: C,
    b: C,
    psi: &HermiteSeries,
    x: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<(C, f64)> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be positive".into()));
    }
    let dims = psi.dims();
    if x.len() != dims {
        return Err(Error::InputShape("coordinate count mismatch".into()));
    }
    let chunks = chunk_ranges(n_samples);
    let partial: Vec<Result<(C, f64)>> = chunks
        .par_iter()
        .enumerate()
        .map(|(ci, &(lo, hi))| {
            let mut rng = chunk_rng(seed, ci);
            let mut sum = ZERO;
            let mut sq = 0.0;
            let mut z = vec![ZERO; dims];
            for _ in lo..hi {
                for (zi, &xi) in z.iter_mut().zip(x) {
                    let g: f64 = rng.sample(StandardNormal);
                    *zi = a * g + b * xi;
                }
                let v = eval_at_complex(psi, &z)?;
                sum += v;
                sq += v.norm_sqr();
            }
            Ok((sum, sq))
        })
        .collect();
    let mut sum = ZERO;
    let mut sq = 0.0;
    for p in partial {
        let (s, q) = p?;
        sum += s;
        sq += q;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean.norm_sqr()).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

const CHUNK: usize = 1 << 14;

fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n)))
        .collect()
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Exact `exp(-½‖α‖²)` and the Monte-Carlo mean of `e^{i(β,α)}` over
/// white noise restricted to the harmonics of `α`.
pub fn characteristic_functional(
    alpha: &SphereFunction,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, C)> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be positive".into()));
    }
    let exact = (-0.5 * alpha.norm().powi(2)).exp();
    let coeffs: Vec<f64> = alpha.coeffs().to_vec();
    let sums: Vec<C> = chunk_ranges(n_samples)
        .par_iter()
        .enumerate()
        .map(|(ci, &(lo, hi))| {
            let mut rng = chunk_rng(seed, ci);
            let mut acc = ZERO;
            for _ in lo..hi {
                let s: f64 = coeffs
                    .iter()
                    .map(|a| a * rng.sample::<f64, _>(StandardNormal))
                    .sum();
                acc += C::from_polar(1.0, s);
            }
            acc
        })
        .collect();
    let total: C = sums.into_iter().fold(ZERO, |a, b| a + b);
    Ok((exact, total / n_samples as f64))
}

/// Gauss-Hermite rule for the standard normal distribution (weights sum
/// to 1), via the eigenvalues of the Jacobi matrix.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let v = (i as f64).sqrt();
        j[(i, i - 1)] = v;
        j[(i - 1, i)] = v;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Multi-indices with `|n| ≤ cap` over `dims` slots, graded then
/// lexicographic.
#[derive(Debug)]
pub struct MultiIndexBasis {
    dims: usize,
    cap: usize,
    list: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
}

impl MultiIndexBasis {
    fn build(dims: usize, cap: usize) -> Self {
        let mut list = Vec::new();
        for d in 0..=cap {
            let mut layer = Vec::new();
            compositions(dims, 0, d, MultiIndex::zero(), &mut layer);
            layer.sort();
            list.extend(layer);
        }
        let index = list.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        MultiIndexBasis {
            dims,
            cap,
            list,
            index,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn list(&self) -> &[MultiIndex] {
        &self.list
    }

    pub fn position(&self, n: &MultiIndex) -> Option<usize> {
        self.index.get(n).copied()
    }
}

fn compositions(dims: usize, slot: usize, left: usize, acc: MultiIndex, out: &mut Vec<MultiIndex>) {
    if slot + 1 == dims {
        out.push(acc.with(slot, left));
        return;
    }
    for v in 0..=left {
        compositions(dims, slot + 1, left - v, acc.with(slot, v), out);
    }
}

/// Shared enumeration for `(dims, cap)`.
pub fn multi_index_basis(dims: usize, cap: usize) -> Arc<MultiIndexBasis> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MultiIndexBasis>>>> = OnceLock::new();
    let mut cache = CACHE
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("basis cache poisoned");
    cache
        .entry((dims, cap))
        .or_insert_with(|| Arc::new(MultiIndexBasis::build(dims, cap)))
        .clone()
}

/// Sparse matrix of a linear operator from degree `≤ domain_cap` to degree
/// `≤ codomain_cap`, stored by columns.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    domain: Arc<MultiIndexBasis>,
    codomain: Arc<MultiIndexBasis>,
    columns: Vec<Vec<(usize, C)>>,
}

impl OperatorMatrix {
    /// Matrix of `f` on monomials of degree `≤ domain_cap`. Outputs above
    /// `codomain_cap` are an error unless `compress` is set, in which case
    /// they are dropped (the compression `Π_N f Π_N`).
    pub fn build<F>(
        dirs: &Arc<DirectionSet>,
        domain_cap: usize,
        codomain_cap: usize,
        compress: bool,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&HermiteSeries) -> Result<HermiteSeries> + Sync,
    {
        let dims = dirs.len();
        let domain = multi_index_basis(dims, domain_cap);
        let codomain = multi_index_basis(dims, codomain_cap);
        let columns: Result<Vec<Vec<(usize, C)>>> = domain
            .list()
            .par_iter()
            .map(|n| {
                let input = HermiteSeries::monomial(dirs.clone(), domain_cap, *n)?.grow();
                let out = f(&input)?;
                let mut col = Vec::with_capacity(out.len());
                for (m, c) in out.terms() {
                    match codomain.position(m) {
                        Some(r) => col.push((r, *c)),
                        None if compress => {}
                        None => {
                            return Err(Error::DegreeCap {
                                cap: codomain_cap,
                                degree: m.degree(),
                            })
                        }
                    }
                }
                col.sort_by_key(|e| e.0);
                Ok(col)
            })
            .collect();
        Ok(OperatorMatrix {
            domain,
            codomain,
            columns: columns?,
        })
    }

    pub fn rows(&self) -> usize {
        self.codomain.len()
    }

    pub fn cols(&self) -> usize {
        self.domain.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    pub fn is_square(&self) -> bool {
        self.domain.cap() == self.codomain.cap() && self.domain.dims() == self.codomain.dims()
    }

    pub fn entry(&self, row: usize, col: usize) -> C {
        self.columns[col]
            .binary_search_by_key(&row, |e| e.0)
            .map(|p| self.columns[col][p].1)
            .unwrap_or(ZERO)
    }

    /// Largest entrywise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::InputShape("operator matrix shapes differ".into()));
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.columns.iter().zip(&other.columns) {
            let mut m: BTreeMap<usize, C> = a.iter().copied().collect();
            for (r, v) in b {
                *m.entry(*r).or_insert(ZERO) -= v;
            }
            worst = m.values().map(|v| v.norm()).fold(worst, f64::max);
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.columns
            .iter()
            .flatten()
            .map(|e| e.1.norm())
            .fold(0.0, f64::max)
    }

    /// Row and column multi-indices of an entry.
    pub fn labels(&self, row: usize, col: usize) -> (MultiIndex, MultiIndex) {
        (self.codomain.list()[row], self.domain.list()[col])
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let mut m = DMatrix::from_element(self.rows(), self.cols(), ZERO);
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Symmetry defect `max |M̃ - M̃ᵀ|` in the Gaussian-orthonormal basis
/// `He_n/√(n!)`, where symmetry is equivalent to self-adjointness (and, for
/// a linear map, to being a potential operator).
pub fn vainberg_symmetry_defect(op: &OperatorMatrix) -> Result<f64> {
    if !op.is_square() {
        return Err(Error::InputShape("symmetry defect needs a square matrix".into()));
    }
    let scaled = |r: usize, c: usize, v: C| {
        let (rn, cn) = op.labels(r, c);
        v * (rn.factorial() / cn.factorial()).sqrt()
    };
    let mut worst: f64 = 0.0;
    for (c, col) in op.columns.iter().enumerate() {
        for &(r, v) in col {
            let t = op.entry(c, r);
            worst = worst.max((scaled(r, c, v) - scaled(c, r, t)).norm());
        }
    }
    Ok(worst)
}
