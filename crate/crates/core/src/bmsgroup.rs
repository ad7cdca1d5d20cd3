//! SL(2,ℂ), its Möbius action on the celestial sphere, the conformal factor
//! and the BMS composition law in a fixed Bondi frame.
//!
//! Points of the extended plane are handled in homogeneous coordinates
//! `v = (v₁, v₂)`, `ζ = v₁/v₂`. On the unit sphere we use
//! `ζ = e^{iφ} cot(θ/2)`, so the north pole is `ζ = ∞` and the unit
//! representative `v = (cos(θ/2) e^{iφ}, sin(θ/2))` has `|v| = 1`. In those
//! coordinates
//!
//! ```text
//! K_Λ(ζ) = (1 + |ζ|²) / (|aζ + b|² + |cζ + d|²) = |v|² / |Λv|².
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Mul;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{analyze, real_sh_all, sh_count, SphereFunction, SphereGrid};
use crate::supermomenta::Supermomentum;

type C = Complex64;



/// Unimodular complex 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SL2C {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
}

impl SL2C {
    /// Rescales by `det^{-1/2}` so the result has unit determinant.
    pub fn new(a: C, b: C, c: C, d: C) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 || !det.is_finite() {
            return Err(Error::Domain("singular matrix cannot be normalized".into()));
        }
        let s = det.sqrt().inv();
        Ok(SL2C {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        })
    }

    pub fn identity() -> Self {
        SL2C {
            a: C::new(1.0, 0.0),
            b: C::new(0.0, 0.0),
            c: C::new(0.0, 0.0),
            d: C::new(1.0, 0.0),
        }
    }

    pub fn det(&self) -> C {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        SL2C {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn dagger(&self) -> Self {
        SL2C {
            a: self.a.conj(),
            b: self.c.conj(),
            c: self.b.conj(),
            d: self.d.conj(),
        }
    }

    pub fn neg(&self) -> Self {
        SL2C {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    pub fn apply(&self, v: [C; 2]) -> [C; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }

    /// Rotation by `angle` about the unit `axis`: `exp(-i angle/2 n·σ)`.
    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        let n = unit(axis);
        let (s, c) = (angle / 2.0).sin_cos();
        SL2C {
            a: C::new(c, -s * n[2]),
            b: C::new(-s * n[1], -s * n[0]),
            c: C::new(s * n[1], -s * n[0]),
            d: C::new(c, s * n[2]),
        }
    }

    /// Boost of rapidity `chi` along the unit `axis`: `exp(chi/2 n·σ)`.
    pub fn boost(axis: [f64; 3], chi: f64) -> Self {
        let n = unit(axis);
        let (s, c) = ((chi / 2.0).sinh(), (chi / 2.0).cosh());
        SL2C {
            a: C::new(c + s * n[2], 0.0),
            b: C::new(s * n[0], -s * n[1]),
            c: C::new(s * n[0], s * n[1]),
            d: C::new(c - s * n[2], 0.0),
        }
    }

    /// Gaussian entries projected to unit determinant.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut z = || C::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let (a, b, c, d) = (z(), z(), z(), z());
            if let Ok(m) = SL2C::new(a, b, c, d) {
                if (a * d - b * c).norm() > 1e-3 {
                    return m;
                }
            }
        }
    }

    /// Haar-random element of SU(2).
    pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let q = q.map(|x| x / n);
        SL2C {
            a: C::new(q[0], q[1]),
            b: C::new(q[2], q[3]),
            c: C::new(-q[2], q[3]),
            d: C::new(q[0], -q[1]),
        }
    }

    /// `R₁ · boost(z, χ) · R₂` with `χ` uniform in `[0, chi_max]`.
    pub fn random_bounded<R: Rng + ?Sized>(rng: &mut R, chi_max: f64) -> Self {
        let chi = rng.gen_range(0.0..=chi_max);
        Self::random_su2(rng) * Self::boost([0.0, 0.0, 1.0], chi) * Self::random_su2(rng)
    }
}

impl Mul for SL2C {
    type Output = SL2C;
    fn mul(self, r: SL2C) -> SL2C {
        SL2C {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtComplex {
    Finite(C),
    Infinity,
}

impl ExtComplex {
    pub fn homogeneous(self) -> [C; 2] {
        match self {
            ExtComplex::Finite(z) => [z, C::new(1.0, 0.0)],
            ExtComplex::Infinity => [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        }
    }

    pub fn from_homogeneous(v: [C; 2]) -> Self {
        if v[1].norm() <= 1e-300 * v[0].norm() || v[1] == C::new(0.0, 0.0) {
            ExtComplex::Infinity
        } else {
            ExtComplex::Finite(v[0] / v[1])
        }
    }

    /// Colatitude/longitude under `ζ = e^{iφ} cot(θ/2)`.
    pub fn to_angles(self) -> (f64, f64) {
        angles_from_homogeneous(self.homogeneous())
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self::from_homogeneous(unit_homogeneous(theta, phi))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (ExtComplex::Infinity, ExtComplex::Infinity) => true,
            (ExtComplex::Finite(a), ExtComplex::Finite(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }
}

/// Unit homogeneous representative of the sphere point `(θ, φ)`.
pub fn unit_homogeneous(theta: f64, phi: f64) -> [C; 2] {
    [
        C::from_polar((theta / 2.0).cos(), phi),
        C::new((theta / 2.0).sin(), 0.0),
    ]
}

pub fn angles_from_homogeneous(v: [C; 2]) -> (f64, f64) {
    let (r1, r2) = (v[0].norm(), v[1].norm());
    let theta = 2.0 * r2.atan2(r1);
    // v₁ v̄₂ carries the relative phase e^{iφ}
    let w = v[0] * v[1].conj();
    let phi = if w.norm() == 0.0 { 0.0 } else { w.arg() };
    (theta, phi)
}

pub fn mobius(lam: &SL2C, zeta: ExtComplex) -> ExtComplex {
    ExtComplex::from_homogeneous(lam.apply(zeta.homogeneous()))
}

fn norm2(v: [C; 2]) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

pub fn conformal_factor(lam: &SL2C, zeta: ExtComplex) -> f64 {
    let v = zeta.homogeneous();
    norm2(v) / norm2(lam.apply(v))
}

fn grid_cache() -> &'static Mutex<HashMap<usize, Arc<SphereGrid>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SphereGrid>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared quadrature grid of the given band.
pub fn shared_grid(band: usize) -> Arc<SphereGrid> {
    let mut cache = grid_cache().lock().expect("grid cache poisoned");
    cache
        .entry(band)
        .or_insert_with(|| Arc::new(SphereGrid::new(band)))
        .clone()
}

/// Band of the oversampled grid used for the Lorentz action at `l_max`.
pub fn action_band(l_max: usize) -> usize {
    2 * l_max.max(1)
}

/// `(K_{Λ⁻¹} ∘ Λ) · (f ∘ Λ)`, projected back onto degree `≤ L_max`.
///
/// The pointwise function is not band-limited for boosts; the projection
/// runs on a grid oversampled to band `2·L_max`, and whatever lies beyond
/// `L_max` is dropped. Rotations and `l ≤ 1` inputs are reproduced exactly.
pub fn lorentz_act_function(lam: &SL2C, f: &SphereFunction) -> SphereFunction {
    let l_max = f.l_max();
    let grid = shared_grid(action_band(l_max));
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&(t, p)| {
            let w = lam.apply(unit_homogeneous(t, p));
            let (t2, p2) = angles_from_homogeneous(w);
            norm2(w) * f.eval(t2, p2)
        })
        .collect();
    analyze(&values, &grid, l_max).expect("grid resolves l_max")
}

/// Truncated matrix of [`lorentz_act_function`]: column `j` is the image of
/// the `j`-th harmonic.
pub fn function_action_matrix(lam: &SL2C, l_max: usize) -> Vec<Vec<f64>> {
    let n = sh_count(l_max);
    let grid = shared_grid(action_band(l_max));
    let mut cols = vec![vec![0.0; n]; n];
    for (i, &(t, p)) in grid.nodes().iter().enumerate() {
        let w = lam.apply(unit_homogeneous(t, p));
        let (t2, p2) = angles_from_homogeneous(w);
        let y_img = real_sh_all(l_max, t2, p2);
        let y_here = &grid.harmonics_at(i)[..n];
        let s = grid.weights()[i] * norm2(w);
        for (j, col) in cols.iter_mut().enumerate() {
            let v = s * y_img[j];
            for (c, y) in col.iter_mut().zip(y_here) {
                *c += v * y;
            }
        }
    }
    cols
}

/// Dual action on supermomenta, `(Λβ, α) = (β, Λ⁻¹α)` where `Λ⁻¹α` is the
/// function action of `Λ⁻¹`. Computed as the transpose of that truncated
/// matrix, so the defining identity holds exactly at the truncation.
pub fn dual_act(lam: &SL2C, beta: &Supermomentum) -> Supermomentum {
    let l_max = beta.l_max();
    let n = sh_count(l_max);
    let inv = lam.inverse();
    let grid = shared_grid(action_band(l_max));
    let mut out = vec![0.0; n];
    for (i, &(t, p)) in grid.nodes().iter().enumerate() {
        let y_here = &grid.harmonics_at(i)[..n];
        let b_here: f64 = y_here.iter().zip(beta.coeffs()).map(|(y, b)| y * b).sum();
        if b_here == 0.0 {
            continue;
        }
        let w = inv.apply(unit_homogeneous(t, p));
        let (t2, p2) = angles_from_homogeneous(w);
        let s = grid.weights()[i] * norm2(w) * b_here;
        for (o, y) in out.iter_mut().zip(real_sh_all(l_max, t2, p2)) {
            *o += s * y;
        }
    }
    Supermomentum::new(l_max, out).expect("layout")
}

/// Element of the BMS group: a Lorentz part and a supertranslation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BMSElement {
    pub lambda: SL2C,
    pub f: SphereFunction,
}

impl BMSElement {
    pub fn new(lambda: SL2C, f: SphereFunction) -> Self {
        BMSElement { lambda, f }
    }

    pub fn identity(l_max: usize) -> Self {
        BMSElement {
            lambda: SL2C::identity(),
            f: SphereFunction::zeros(l_max),
        }
    }

    pub fn translation(f: SphereFunction) -> Self {
        BMSElement {
            lambda: SL2C::identity(),
            f,
        }
    }

    /// `(Λ, f)⁻¹ = (Λ⁻¹, -(K_Λ ∘ Λ⁻¹)·(f ∘ Λ⁻¹))`.
    pub fn inverse(&self) -> Self {
        let inv = self.lambda.inverse();
        BMSElement {
            lambda: inv,
            f: -&lorentz_act_function(&inv, &self.f),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        // ±Λ represent the same element
        let dl = self
            .lambda
            .max_abs_diff(&other.lambda)
            .min(self.lambda.max_abs_diff(&other.lambda.neg()));
        dl.max(self.f.max_abs_diff(&other.f))
    }
}

/// `(Λ′, f′) ⊙ (Λ, f) = (Λ′Λ, f + (K_{Λ⁻¹} ∘ Λ)·(f′ ∘ Λ))`.
pub fn compose(g1: &BMSElement, g2: &BMSElement) -> Result<BMSElement> {
    crate::sphere::same_order(g1.f.l_max(), g2.f.l_max())?;
    let moved = lorentz_act_function(&g2.lambda, &g1.f);
    Ok(BMSElement {
        lambda: g1.lambda * g2.lambda,
        f: &g2.f + &moved,
    })
}

/// Action on a point `(u, ζ)` of null infinity.
pub fn act_on_scri(g: &BMSElement, u: f64, zeta: ExtComplex) -> (f64, ExtComplex) {
    let (t, p) = zeta.to_angles();
    let k = conformal_factor(&g.lambda, zeta);
    (k * (u + g.f.eval(t, p)), mobius(&g.lambda, zeta))
}

const PAULI: [[[C; 2]; 2]; 4] = [
    [
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::new(1.0, 0.0)],
    ],
    [
        [C::new(0.0, 0.0), C::new(1.0, 0.0)],
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
    ],
    [
        [C::new(0.0, 0.0), C::new(0.0, -1.0)],
        [C::new(0.0, 1.0), C::new(0.0, 0.0)],
    ],
    [
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::new(-1.0, 0.0)],
    ],
];

fn mat(l: &SL2C) -> [[C; 2]; 2] {
    [[l.a, l.b], [l.c, l.d]]
}

fn mm(x: [[C; 2]; 2], y: [[C; 2]; 2]) -> [[C; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| x[i][0] * y[0][j] + x[i][1] * y[1][j]))
}

pub type Mat4 = [[f64; 4]; 4];

/// `Π(Λ)_{μν} = ½ tr(σ_μ Λ σ_ν Λ†)` in the basis `(t, x, y, z)`.
pub fn covering_map(lam: &SL2C) -> Mat4 {
    let l = mat(lam);
    let ld = mat(&lam.dagger());
    std::array::from_fn(|mu| {
        std::array::from_fn(|nu| {
            let m = mm(mm(PAULI[mu], l), mm(PAULI[nu], ld));
            0.5 * (m[0][0] + m[1][1]).re
        })
    })
}

pub fn mat4_mul(x: &Mat4, y: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| x[i][k] * y[k][j]).sum()))
}

pub fn mat4_apply(x: &Mat4, v: [f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| (0..4).map(|k| x[i][k] * v[k]).sum())
}

/// Linear map on Cartesian four-momenta induced by [`dual_act`].
///
/// With `ζ = e^{iφ} cot(θ/2)` a degree-≤1 function is the Hermitian form
/// `v† H v / |v|²` with `H = a_t σ₀ + a_x σ₁ - a_y σ₂ + a_z σ₃`, so the
/// dictionary to Minkowski components flips the `y` axis, and the dual
/// action reads `S Π(Λ⁻¹) S` with `S = diag(1, 1, -1, 1)`.
pub fn momentum_action(lam: &SL2C) -> Mat4 {
    let mut m = covering_map(&lam.inverse());
    for i in 0..4 {
        for j in 0..4 {
            if (i == 2) != (j == 2) {
                m[i][j] = -m[i][j];
            }
        }
    }
    m
}

/// Minkowski metric `diag(+1,-1,-1,-1)` preservation defect of `m`.
pub fn metric_defect(m: &Mat4) -> f64 {
    let eta = [1.0, -1.0, -1.0, -1.0];
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let v: f64 = (0..4).map(|k| m[k][i] * eta[k] * m[k][j]).sum();
            let e = if i == j { eta[i] } else { 0.0 };
            worst = worst.max((v - e).abs());
        }
    }
    worst
}

/// Random `ζ` in a disc of the given radius.
pub fn random_zeta<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> ExtComplex {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = 2.0 * PI * rng.gen::<f64>();
    ExtComplex::Finite(C::from_polar(r, a))
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::sh_index;
    use crate::supermomenta::{mass_squared, project_t4, Signature};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn random_function(rng: &mut ChaCha8Rng, l_max: usize) -> SphereFunction {
        let mut f = SphereFunction::zeros(l_max);
        for x in f.coeffs_mut() {
            *x = rng.sample::<f64, _>(StandardNormal);
        }
        f
    }

    #[test]
    fn construction_normalizes_determinant() {
        let m = SL2C::new(c(2.0, 1.0), c(0.3, 0.0), c(-1.0, 0.5), c(1.0, 1.0)).unwrap();
        assert!((m.det() - c(1.0, 0.0)).norm() < 1e-12);
        assert!(SL2C::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)).is_err());
    }

    #[test]
    fn mobius_examples() {
        let z = ExtComplex::Finite(c(1.0, 2.0));
        assert!(mobius(&SL2C::identity(), z).approx_eq(&z, 1e-15));

        let s = SL2C::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)).unwrap();
        let one = ExtComplex::Finite(c(1.0, 0.0));
        let img = mobius(&s, one);
        assert!(img.approx_eq(&ExtComplex::Finite(c(-1.0, 0.0)), 1e-15));
        // -1/(-1/ζ) = ζ
        assert!(mobius(&s, img).approx_eq(&one, 1e-15));

        let r2 = 2f64.sqrt();
        let b = SL2C::new(c(r2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 / r2, 0.0)).unwrap();
        assert!(mobius(&b, one).approx_eq(&ExtComplex::Finite(c(2.0, 0.0)), 1e-14));
    }

    #[test]
    fn mobius_pole_and_infinity() {
        let m = SL2C::new(c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)).unwrap();
        // ∞ ↦ a/c
        assert!(mobius(&m, ExtComplex::Infinity).approx_eq(&ExtComplex::Finite(c(1.0, 0.0)), 1e-14));
        // -d/c ↦ ∞
        assert_eq!(
            mobius(&m, ExtComplex::Finite(c(-3.0, 0.0))),
            ExtComplex::Infinity
        );
    }

    #[test]
    fn conformal_factor_examples() {
        let z = ExtComplex::Finite(c(0.4, -2.0));
        assert!((conformal_factor(&SL2C::identity(), z) - 1.0).abs() < 1e-15);
        let t = 2f64.ln();
        let b = SL2C::new(
            c((t / 2.0).exp(), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c((-t / 2.0).exp(), 0.0),
        )
        .unwrap();
        let origin = ExtComplex::Finite(c(0.0, 0.0));
        assert!((conformal_factor(&b, origin) - 2.0).abs() < 1e-14);
        // explicit formula at ζ = 0: 1 / (|b|² + |d|²) = e^{t}
        assert!((conformal_factor(&b, origin) - 1.0 / (-t).exp()).abs() < 1e-14);
    }

    #[test]
    fn conformal_factor_is_rotation_invariant_and_sign_blind() {
        let mut r = rng();
        for _ in 0..20 {
            let u = SL2C::random_su2(&mut r);
            let m = SL2C::random(&mut r);
            let z = random_zeta(&mut r, 3.0);
            assert!((conformal_factor(&u, z) - 1.0).abs() < 1e-13);
            assert_eq!(conformal_factor(&m, z), conformal_factor(&m.neg(), z));
            assert!(conformal_factor(&m, z) > 0.0);
        }
    }

    #[test]
    fn cocycle_spot_values() {
        let mut r = rng();
        for _ in 0..200 {
            let l1 = SL2C::random(&mut r);
            let l2 = SL2C::random(&mut r);
            let z = random_zeta(&mut r, 5.0);
            let lhs = conformal_factor(&l2, mobius(&l1, z)) * conformal_factor(&l1, z);
            let rhs = conformal_factor(&(l2 * l1), z);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn angles_roundtrip_through_zeta() {
        for &(t, p) in &[(0.3, 1.0), (2.9, -2.0), (1.0, 3.1)] {
            let z = ExtComplex::from_angles(t, p);
            let (t2, p2) = z.to_angles();
            assert!((t - t2).abs() < 1e-13 && (p - p2).abs() < 1e-13);
        }
        assert_eq!(ExtComplex::from_angles(0.0, 0.3), ExtComplex::Infinity);
    }

    #[test]
    fn identity_action_is_trivial() {
        let f = random_function(&mut rng(), 5);
        let g = lorentz_act_function(&SL2C::identity(), &f);
        assert!(g.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn rotations_fix_constants_and_preserve_degree() {
        let mut r = rng();
        let y00 = SphereFunction::basis(4, 0, 0);
        for _ in 0..5 {
            let u = SL2C::random_su2(&mut r);
            assert!(lorentz_act_function(&u, &y00).max_abs_diff(&y00) < 1e-12);
            // values on the grid: K ≡ 1 on SU(2)
            for &(t, p) in shared_grid(4).nodes() {
                let z = ExtComplex::from_angles(t, p);
                assert!((conformal_factor(&u, z) - 1.0).abs() < 1e-12);
            }
            let f = random_function(&mut r, 4);
            let g = lorentz_act_function(&u, &f);
            assert!((g.norm() - f.norm()).abs() < 1e-11);
        }
    }

    #[test]
    fn action_is_linear() {
        let mut r = rng();
        let f = random_function(&mut r, 4);
        let h = random_function(&mut r, 4);
        let m = SL2C::random_bounded(&mut r, 0.5);
        let lhs = lorentz_act_function(&m, &(&f + &h));
        let rhs = &lorentz_act_function(&m, &f) + &lorentz_act_function(&m, &h);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn t4_is_invariant() {
        let mut r = rng();
        for _ in 0..10 {
            let m = SL2C::random(&mut r);
            let mut f = SphereFunction::zeros(6);
            for i in 0..4 {
                f.coeffs_mut()[i] = r.sample(StandardNormal);
            }
            let g = lorentz_act_function(&m, &f);
            let tail = g.coeffs()[4..].iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let scale = g.coeffs()[..4].iter().fold(0.0f64, |a, b| a.max(b.abs()));
            assert!(tail < 1e-9 * scale.max(1.0), "tail {tail}");
        }
    }

    #[test]
    fn compose_identity_inverse_associativity_on_rotations() {
        let mut r = rng();
        let l_max = 5;
        let e = BMSElement::identity(l_max);
        for _ in 0..5 {
            let g = BMSElement::new(SL2C::random_su2(&mut r), random_function(&mut r, l_max));
            assert!(compose(&e, &g).unwrap().max_abs_diff(&g) < 1e-12);
            assert!(compose(&g, &e).unwrap().max_abs_diff(&g) < 1e-12);
            assert!(compose(&g, &g.inverse()).unwrap().max_abs_diff(&e) < 1e-11);
            let h = BMSElement::new(SL2C::random_su2(&mut r), random_function(&mut r, l_max));
            let k = BMSElement::new(SL2C::random_su2(&mut r), random_function(&mut r, l_max));
            let left = compose(&compose(&g, &h).unwrap(), &k).unwrap();
            let right = compose(&g, &compose(&h, &k).unwrap()).unwrap();
            assert!(left.max_abs_diff(&right) < 1e-9);
        }
    }

    #[test]
    fn pure_lorentz_inverse() {
        let mut r = rng();
        let m = SL2C::random(&mut r);
        let a = BMSElement::new(m, SphereFunction::zeros(4));
        let b = BMSElement::new(m.inverse(), SphereFunction::zeros(4));
        assert!(compose(&a, &b).unwrap().max_abs_diff(&BMSElement::identity(4)) < 1e-12);
    }

    #[test]
    fn act_on_scri_examples() {
        let p = (0.7, ExtComplex::Finite(c(0.3, -0.2)));
        let (u, z) = act_on_scri(&BMSElement::identity(3), p.0, p.1);
        assert!((u - p.0).abs() < 1e-15 && z.approx_eq(&p.1, 1e-15));

        let g = BMSElement::translation(SphereFunction::basis(3, 0, 0));
        for zeta in [ExtComplex::Finite(c(2.0, 1.0)), ExtComplex::Infinity] {
            let (u, _) = act_on_scri(&g, 1.0, zeta);
            assert!((u - 1.0 - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn act_on_scri_respects_composition() {
        let mut r = rng();
        for _ in 0..10 {
            let g1 = BMSElement::new(SL2C::random_su2(&mut r), random_function(&mut r, 4));
            let g2 = BMSElement::new(SL2C::random_su2(&mut r), random_function(&mut r, 4));
            let z = random_zeta(&mut r, 2.0);
            let u = r.gen_range(-1.0..1.0);
            let (u1, z1) = act_on_scri(&g2, u, z);
            let (u2, z2) = act_on_scri(&g1, u1, z1);
            let (u3, z3) = act_on_scri(&compose(&g1, &g2).unwrap(), u, z);
            assert!((u2 - u3).abs() < 1e-9 && z2.approx_eq(&z3, 1e-9));
        }
    }

    #[test]
    fn covering_map_examples() {
        let id = covering_map(&SL2C::identity());
        for i in 0..4 {
            for j in 0..4 {
                assert!((id[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let m = SL2C::random(&mut rng());
        assert_eq!(covering_map(&m), covering_map(&m.neg()));

        let t = 0.8;
        let b = covering_map(&SL2C::boost([0.0, 0.0, 1.0], t));
        assert!((b[0][0] - t.cosh()).abs() < 1e-14);
        assert!((b[0][3] - t.sinh()).abs() < 1e-14);
        assert!((b[3][0] - t.sinh()).abs() < 1e-14);
        assert!((b[3][3] - t.cosh()).abs() < 1e-14);
        assert!(metric_defect(&b) < 1e-13);
    }

    #[test]
    fn covering_map_is_homomorphism_into_lorentz() {
        let mut r = rng();
        for _ in 0..50 {
            let a = SL2C::random_bounded(&mut r, 2.0);
            let b = SL2C::random_bounded(&mut r, 2.0);
            let pa = covering_map(&a);
            assert!(metric_defect(&pa) < 1e-10 * pa[0][0].powi(2));
            assert!(pa[0][0] > 0.0);
            let lhs = covering_map(&(a * b));
            let rhs = mat4_mul(&pa, &covering_map(&b));
            for i in 0..4 {
                for j in 0..4 {
                    assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-12 * lhs[0][0].powi(2));
                }
            }
        }
    }

    #[test]
    fn dual_act_identity_and_adjointness() {
        let mut r = rng();
        let l_max = 4;
        let mut beta = Supermomentum::zeros(l_max);
        for x in beta.coeffs_mut() {
            *x = r.sample(StandardNormal);
        }
        let same = dual_act(&SL2C::identity(), &beta);
        assert!(same.max_abs_diff(&beta) < 1e-12);
        for _ in 0..5 {
            let m = SL2C::random_bounded(&mut r, 1.0);
            let alpha = random_function(&mut r, l_max);
            let lhs = crate::sphere::pair(&dual_act(&m, &beta), &alpha).unwrap();
            let moved = lorentz_act_function(&m.inverse(), &alpha);
            let rhs = crate::sphere::pair(&beta, &moved).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn dual_act_on_t4_is_the_covering_map() {
        let mut r = rng();
        for _ in 0..20 {
            let m = SL2C::random(&mut r);
            let p = [3.0, 0.4, -1.2, 0.9];
            let beta = Supermomentum::from_cartesian(3, p);
            let out = project_t4(&dual_act(&m, &beta)).cartesian();
            let expect = mat4_apply(&momentum_action(&m), p);
            let scale = expect.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            for i in 0..4 {
                assert!((out[i] - expect[i]).abs() < 1e-8 * scale, "{out:?} vs {expect:?}");
            }
            let before = mass_squared(&beta, Signature::MostlyMinus);
            let after = mass_squared(&dual_act(&m, &beta), Signature::MostlyMinus);
            assert!((before - after).abs() < 1e-8 * scale * scale);
        }
    }

    #[test]
    fn rotations_keep_fixed_point_in_annihilator() {
        let mut r = rng();
        let b = crate::supermomenta::orbit_fixed_point(
            crate::supermomenta::OrbitKind::Massive,
            1.0,
            4,
        )
        .unwrap();
        for _ in 0..5 {
            let u = SL2C::random_su2(&mut r);
            assert!(crate::supermomenta::annihilator_check(&dual_act(&u, &b), 1e-8));
        }
        // a boost develops l > 1 components: ST is not boost invariant
        let k = dual_act(&SL2C::boost([0.0, 0.0, 1.0], 0.5), &b);
        assert!(k.coeffs()[sh_index(2, 0)].abs() > 1e-3);
    }
}
