//! Induced wave functions on the massive hyperboloid and the forward light
//! cone, the induced BMS action and the covariant-to-orbit reduction.
//!
//! Orbits are sampled on a product grid: a radial parameter (rapidity `χ`
//! for the hyperboloid, log-energy `s` for the cone) times a midpoint
//! colatitude/longitude grid. Values between nodes are obtained by linear
//! interpolation in each of the three parameters.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bmsgroup::{mat4_apply, momentum_action, BMSElement};
use crate::error::{Error, Result};
use crate::sphere::pair;
use crate::supermomenta::{mass_squared, OrbitKind, Signature, Supermomentum};
use crate::whitenoise::{hermite_all, HermiteSeries, MultiIndex};

type C = Complex64;

/// Slack, in grid units, before a point counts as outside the window.
const EDGE_SLACK: f64 = 1e-9;

/// Default Gaussian weight exponent of [`reduce_covariant`].
pub const DEFAULT_WEIGHT_EXPONENT: f64 = 0.25;

/// Sampled orbit with invariant-measure weights `d³p/p⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitQuadrature {
    kind: OrbitKind,
    scale: f64,
    chi_max: f64,
    n_chi: usize,
    n_sphere: usize,
    radial: Vec<f64>,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    nodes: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

/// Node parametrization, enough to rebuild an orbit exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub kind: OrbitKind,
    pub m: f64,
    pub chi_max: f64,
    pub n_chi: usize,
    pub n_sphere: usize,
}

fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Builds the orbit quadrature.
///
/// Massive: `p = m(cosh χ, sinh χ n̂)` at midpoints of `[0, χ_max]`, weights
/// `m² sinh²χ dχ dΩ`; `χ_max = 0` gives the single rest-frame node.
/// Massless: `p = E(1, n̂)` with `E = m e^s` at midpoints of
/// `[-χ_max, χ_max]`, weights `E² ds dΩ`. The sphere uses `n_sphere`
/// colatitude rings and `2 n_sphere` longitudes.
pub fn build_orbit(
    kind: OrbitKind,
    m: f64,
    chi_max: f64,
    n_chi: usize,
    n_sphere: usize,
) -> Result<OrbitQuadrature> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("orbit scale must be positive (got {m})")));
    }
    if !(chi_max >= 0.0) || !chi_max.is_finite() {
        return Err(Error::Domain(format!("chi_max must be non-negative (got {chi_max})")));
    }
    if chi_max == 0.0 {
        if kind == OrbitKind::Massive {
            return Ok(OrbitQuadrature {
                kind,
                scale: m,
                chi_max,
                n_chi: 1,
                n_sphere: 1,
                radial: vec![0.0],
                thetas: vec![],
                phis: vec![],
                nodes: vec![[m, 0.0, 0.0, 0.0]],
                weights: vec![1.0],
            });
        }
        return Err(Error::Domain("massless orbit needs chi_max > 0".into()));
    }
    if n_chi == 0 || n_sphere < 2 {
        return Err(Error::Domain("need n_chi ≥ 1 and n_sphere ≥ 2".into()));
    }
    let (lo, width) = match kind {
        OrbitKind::Massive => (0.0, chi_max),
        OrbitKind::Massless => (-chi_max, 2.0 * chi_max),
    };
    let dr = width / n_chi as f64;
    let radial: Vec<f64> = (0..n_chi).map(|i| lo + (i as f64 + 0.5) * dr).collect();
    let dt = PI / n_sphere as f64;
    let n_phi = 2 * n_sphere;
    let dp = 2.0 * PI / n_phi as f64;
    let thetas: Vec<f64> = (0..n_sphere).map(|j| (j as f64 + 0.5) * dt).collect();
    let phis: Vec<f64> = (0..n_phi).map(|k| k as f64 * dp).collect();
    let mut nodes = Vec::with_capacity(n_chi * n_sphere * n_phi);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for &r in &radial {
        for &t in &thetas {
            for &p in &phis {
                let n = unit_vector(t, p);
                let d_omega = t.sin() * dt * dp;
                match kind {
                    OrbitKind::Massive => {
                        let (e, q) = (m * r.cosh(), m * r.sinh());
                        nodes.push([e, q * n[0], q * n[1], q * n[2]]);
                        weights.push(q * q * dr * d_omega);
                    }
                    OrbitKind::Massless => {
                        let e = m * r.exp();
                        nodes.push([e, e * n[0], e * n[1], e * n[2]]);
                        weights.push(e * e * dr * d_omega);
                    }
                }
            }
        }
    }
    Ok(OrbitQuadrature {
        kind,
        scale: m,
        chi_max,
        n_chi,
        n_sphere,
        radial,
        thetas,
        phis,
        nodes,
        weights,
    })
}

impl OrbitQuadrature {
    pub fn from_params(p: &OrbitParams) -> Result<Self> {
        build_orbit(p.kind, p.m, p.chi_max, p.n_chi, p.n_sphere)
    }

    pub fn params(&self) -> OrbitParams {
        OrbitParams {
            kind: self.kind,
            m: self.scale,
            chi_max: self.chi_max,
            n_chi: self.n_chi,
            n_sphere: self.n_sphere,
        }
    }

    pub fn kind(&self) -> OrbitKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Cartesian momenta `(E, p_x, p_y, p_z)`.
    pub fn nodes(&self) -> &[[f64; 4]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn degenerate(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Node as a supermomentum supported on `l ≤ 1`.
    pub fn node_supermomentum(&self, i: usize, l_max: usize) -> Supermomentum {
        Supermomentum::from_cartesian(l_max, self.nodes[i])
    }

    /// Orbit coordinates `(radial, θ, φ)` of a momentum.
    fn parametrize(&self, p: [f64; 4]) -> (f64, f64, f64) {
        let q = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
        let theta = if q == 0.0 { 0.0 } else { (p[3] / q).clamp(-1.0, 1.0).acos() };
        let phi = p[2].atan2(p[1]).rem_euclid(2.0 * PI);
        let r = match self.kind {
            OrbitKind::Massive => (q / self.scale).asinh(),
            OrbitKind::Massless => (q / self.scale).ln(),
        };
        (r, theta, phi)
    }

    /// Value of the field on radial layer `i` at direction `(θ, φ)`.
    fn sphere_interp(&self, values: &[C], i: usize, theta: f64, phi: f64) -> C {
        let nt = self.thetas.len();
        let np = self.phis.len();
        let base = i * nt * np;
        let ring = |j: usize, phi: f64| -> C {
            let u = phi.rem_euclid(2.0 * PI) / (2.0 * PI / np as f64);
            let k0 = (u.floor() as usize) % np;
            let k1 = (k0 + 1) % np;
            let f = u - u.floor();
            let row = base + j * np;
            values[row + k0] * (1.0 - f) + values[row + k1] * f
        };
        let dt = PI / nt as f64;
        let u = theta / dt - 0.5;
        if u < 0.0 {
            // ghost ring at -θ_0 is ring 0 seen through the pole
            let f = u + 1.0;
            ring(0, phi + PI) * (1.0 - f) + ring(0, phi) * f
        } else if u > (nt - 1) as f64 {
            let f = u - (nt - 1) as f64;
            ring(nt - 1, phi) * (1.0 - f) + ring(nt - 1, phi + PI) * f
        } else {
            let j0 = (u.floor() as usize).min(nt - 2);
            let f = u - j0 as f64;
            ring(j0, phi) * (1.0 - f) + ring(j0 + 1, phi) * f
        }
    }

    /// Interpolated value at momentum `p`, or `None` outside the window.
    fn interpolate(&self, values: &[C], p: [f64; 4]) -> Option<C> {
        if self.degenerate() {
            let q = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
            return (q <= 1e-12 * self.scale).then(|| values[0]);
        }
        let (r, theta, phi) = self.parametrize(p);
        let dr = self.radial[1.min(self.radial.len() - 1)] - self.radial[0];
        let dr = if self.radial.len() > 1 {
            dr
        } else {
            match self.kind {
                OrbitKind::Massive => self.chi_max,
                OrbitKind::Massless => 2.0 * self.chi_max,
            }
        };
        let t = (r - self.radial[0]) / dr;
        let last = (self.radial.len() - 1) as f64;
        if !t.is_finite() || t > last + EDGE_SLACK {
            return None;
        }
        if t < 0.0 {
            return match self.kind {
                OrbitKind::Massive => {
                    // (−χ_0, n̂) is (χ_0, −n̂)
                    let f = (t + 1.0).max(0.0);
                    let anti = self.sphere_interp(values, 0, PI - theta, phi + PI);
                    let here = self.sphere_interp(values, 0, theta, phi);
                    Some(anti * (1.0 - f) + here * f)
                }
                OrbitKind::Massless if t >= -EDGE_SLACK => {
                    Some(self.sphere_interp(values, 0, theta, phi))
                }
                OrbitKind::Massless => None,
            };
        }
        let t = t.min(last);
        let i0 = (t.floor() as usize).min(self.radial.len().saturating_sub(2));
        let f = t - i0 as f64;
        let a = self.sphere_interp(values, i0, theta, phi);
        if self.radial.len() == 1 {
            return Some(a);
        }
        let b = self.sphere_interp(values, i0 + 1, theta, phi);
        Some(a * (1.0 - f) + b * f)
    }

    /// `max |B(p, p) - m²|` over the nodes (`m² = 0` on the cone).
    pub fn mass_defect(&self, sig: Signature) -> f64 {
        let target = match self.kind {
            OrbitKind::Massive => self.scale * self.scale,
            OrbitKind::Massless => 0.0,
        };
        (0..self.len())
            .map(|i| (mass_squared(&self.node_supermomentum(i, 1), sig) - target).abs())
            .fold(0.0, f64::max)
    }

    fn outer_layer_vanishes(&self, values: &[C]) -> bool {
        if self.degenerate() {
            return false;
        }
        let per = self.thetas.len() * self.phis.len();
        let start = (self.radial.len() - 1) * per;
        let mut ok = values[start..start + per].iter().all(|v| *v == C::new(0.0, 0.0));
        if self.kind == OrbitKind::Massless {
            ok &= values[..per].iter().all(|v| *v == C::new(0.0, 0.0));
        }
        ok
    }
}

/// Field values on the orbit nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedField {
    pub values: Vec<C>,
}

impl InducedField {
    pub fn zeros(orbit: &OrbitQuadrature) -> Self {
        InducedField {
            values: vec![C::new(0.0, 0.0); orbit.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(orbit: &OrbitQuadrature, f: impl Fn([f64; 4]) -> C) -> Self {
        InducedField {
            values: orbit.nodes.iter().map(|p| f(*p)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_len(phi: &InducedField, orbit: &OrbitQuadrature) -> Result<()> {
    if phi.values.len() != orbit.len() {
        return Err(Error::InputShape(format!(
            "field has {} values for {} nodes",
            phi.values.len(),
            orbit.len()
        )));
    }
    Ok(())
}

/// `∫ |Φ|² dμ` by the orbit quadrature.
pub fn orbit_norm(phi: &InducedField, orbit: &OrbitQuadrature) -> Result<f64> {
    check_len(phi, orbit)?;
    Ok(phi
        .values
        .iter()
        .zip(&orbit.weights)
        .map(|(v, w)| v.norm_sqr() * w)
        .sum())
}

/// `(gΦ)(p) = e^{i(p, α)} Φ(Λ⁻¹p)`.
///
/// Nodes whose preimage leaves the sampled window are reported in a
/// coverage error. With `zero_outside`, the caller asserts that Φ vanishes
/// beyond the window; this is accepted only if Φ is exactly zero on the
/// boundary layer(s), and escaped nodes then receive 0.
pub fn induced_act(
    g: &BMSElement,
    phi: &InducedField,
    orbit: &OrbitQuadrature,
    zero_outside: bool,
) -> Result<InducedField> {
    check_len(phi, orbit)?;
    if zero_outside && !orbit.outer_layer_vanishes(&phi.values) {
        return Err(Error::Domain(
            "zero_outside requires the field to vanish on the boundary layer".into(),
        ));
    }
    let l = g.f.l_max().max(1);
    let alpha = g.f.with_l_max(l);
    let back = momentum_action(&g.lambda.inverse());
    let mut out = Vec::with_capacity(orbit.len());
    let mut escaped = Vec::new();
    for (i, p) in orbit.nodes.iter().enumerate() {
        let q = mat4_apply(&back, *p);
        let value = match orbit.interpolate(&phi.values, q) {
            Some(v) => v,
            None if zero_outside => C::new(0.0, 0.0),
            None => {
                escaped.push(i);
                continue;
            }
        };
        let phase = pair(&Supermomentum::from_cartesian(l, *p), &alpha)?;
        out.push(C::from_polar(1.0, phase) * value);
    }
    if !escaped.is_empty() {
        return Err(Error::Coverage {
            count: escaped.len(),
            nodes: escaped,
        });
    }
    Ok(InducedField { values: out })
}

/// Covariant field reduced to momentum space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedField {
    terms: Vec<([usize; 4], C)>,
    degree: usize,
    pub weight_exponent: f64,
}

/// `ψ ↦ F(p) = Σ c_n ∏ He_{n_μ}(p_μ)` together with the weighted
/// `ψ̃(p) = e^{-w δ^{μν} p_μ p_ν} F(p)`. The coordinates `p_μ` are the
/// direction pairings `(β, e_μ)`. Fails with the per-direction residual
/// norms `‖D_{e_i}ψ‖` when ψ depends on an ST slot.
pub fn reduce_covariant(psi: &HermiteSeries, weight_exponent: f64) -> Result<ReducedField> {
    let st = psi.dirs().st_slots();
    let residuals: Vec<f64> = st
        .iter()
        .map(|&i| psi.d_slot(i).map(|r| crate::whitenoise::gaussian_norm(&r)))
        .collect::<Result<_>>()?;
    if residuals.iter().any(|r| *r != 0.0) {
        return Err(Error::Constraint(residuals));
    }
    let terms = psi
        .terms()
        .map(|(n, c)| ([n.get(0), n.get(1), n.get(2), n.get(3)], *c))
        .collect();
    Ok(ReducedField {
        terms,
        degree: psi.degree(),
        weight_exponent,
    })
}

impl ReducedField {
    /// `F(p)`.
    pub fn eval_polynomial(&self, p: [f64; 4]) -> C {
        let tables: Vec<Vec<f64>> = p.iter().map(|&x| hermite_all(self.degree, x)).collect();
        self.terms
            .iter()
            .map(|(n, c)| c * (0..4).map(|i| tables[i][n[i]]).product::<f64>())
            .sum()
    }

    /// `ψ̃(p)`.
    pub fn eval(&self, p: [f64; 4]) -> C {
        let r2: f64 = p.iter().map(|x| x * x).sum();
        self.eval_polynomial(p) * (-self.weight_exponent * r2).exp()
    }

    /// Samples `ψ̃` on the orbit, with `p_μ` the pairings of the node
    /// supermomentum with `e_μ`.
    pub fn on_orbit(&self, orbit: &OrbitQuadrature) -> InducedField {
        InducedField::from_fn(orbit, |p| {
            let b = Supermomentum::from_cartesian(1, p);
            self.eval([b.get(0, 0), b.get(1, -1), b.get(1, 0), b.get(1, 1)])
        })
    }

    pub fn coefficient(&self, n: [usize; 4]) -> C {
        self.terms
            .iter()
            .find(|t| t.0 == n)
            .map(|t| t.1)
            .unwrap_or(C::new(0.0, 0.0))
    }
}

/// Smooth, compactly supported test field used by the unitarity checks:
/// a bump in the radial parameter times `1 + 0.3 p_x/m + 0.2 p_z/m`.
pub fn bump_field(orbit: &OrbitQuadrature, support: f64) -> InducedField {
    let m = orbit.scale;
    let kind = orbit.kind;
    InducedField::from_fn(orbit, |p| {
        let q = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
        let r = match kind {
            OrbitKind::Massive => (q / m).asinh(),
            OrbitKind::Massless => (q / m).ln(),
        };
        let x = r / support;
        let b = if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        };
        C::new(b * (1.0 + 0.3 * p[1] / m + 0.2 * p[3] / m), 0.0)
    })
}

/// Relative change of the orbit norm of [`bump_field`] under the boost,
/// on the base resolution and `refine` successive doublings.
pub fn unitarity_drift(
    kind: OrbitKind,
    m: f64,
    g: &BMSElement,
    chi_max: f64,
    n_chi: usize,
    n_sphere: usize,
    support: f64,
    refine: usize,
) -> Result<Vec<(usize, usize, f64)>> {
    (0..=refine)
        .map(|r| {
            let (nc, ns) = (n_chi << r, n_sphere << r);
            let orbit = build_orbit(kind, m, chi_max, nc, ns)?;
            let phi = bump_field(&orbit, support);
            let before = orbit_norm(&phi, &orbit)?.sqrt();
            let after = orbit_norm(&induced_act(g, &phi, &orbit, true)?, &orbit)?.sqrt();
            Ok((nc, ns, (after - before).abs() / before))
        })
        .collect()
}

/// Coefficient multi-index of `He_n` in T⁴ slots, for building inputs.
pub fn t4_index(n: [usize; 4]) -> MultiIndex {
    MultiIndex::from_slice(&n).expect("four slots")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmsgroup::SL2C;
    use crate::sphere::SphereFunction;
    use crate::whitenoise::DirectionSet;
    use std::sync::Arc;

    const SIG: Signature = Signature::MostlyMinus;

    #[test]
    fn degenerate_massive_orbit() {
        let o = build_orbit(OrbitKind::Massive, 1.0, 0.0, 5, 5).unwrap();
        assert_eq!(o.nodes(), &[[1.0, 0.0, 0.0, 0.0]]);
        assert!(build_orbit(OrbitKind::Massive, 0.0, 1.0, 4, 4).is_err());
        assert!(build_orbit(OrbitKind::Massive, 1.0, -1.0, 4, 4).is_err());
    }

    #[test]
    fn nodes_lie_on_the_orbits() {
        for m in [1.0, 2.0] {
            let o = build_orbit(OrbitKind::Massive, m, 2.0, 8, 6).unwrap();
            assert!(o.mass_defect(SIG) <= 1e-10 * m * m * 10f64.max(1.0));
        }
        let o = build_orbit(OrbitKind::Massless, 1.0, 2.0, 8, 6).unwrap();
        assert!(o.mass_defect(SIG) <= 1e-12 * 100.0);
        assert!(o.nodes().iter().all(|p| p[0] > 0.0));
    }

    #[test]
    fn weights_integrate_invariant_measure() {
        // ∫ e^{-p⁰} d³p/p⁰ over the hyperboloid, m = 1: 4π K₁(1)
        let o = build_orbit(OrbitKind::Massive, 1.0, 6.0, 300, 60).unwrap();
        let s: f64 = o
            .nodes()
            .iter()
            .zip(o.weights())
            .map(|(p, w)| w * (-p[0]).exp())
            .sum();
        let k1 = 0.601_907_230_197_234_6;
        assert!((s / (4.0 * PI * k1) - 1.0).abs() < 5e-4, "{s}");
    }

    #[test]
    fn orbit_norm_examples() {
        let o = build_orbit(OrbitKind::Massive, 1.0, 1.0, 4, 4).unwrap();
        assert_eq!(orbit_norm(&InducedField::zeros(&o), &o).unwrap(), 0.0);
        let half = InducedField {
            values: (0..o.len())
                .map(|i| C::new(if i % 2 == 0 { 1.0 } else { 0.0 }, 0.0))
                .collect(),
        };
        let expect: f64 = o.weights().iter().step_by(2).sum();
        assert!((orbit_norm(&half, &o).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn identity_and_supertranslations() {
        let o = build_orbit(OrbitKind::Massive, 1.0, 2.0, 10, 8).unwrap();
        let phi = bump_field(&o, 1.5);
        let id = BMSElement::identity(4);
        let same = induced_act(&id, &phi, &o, false).unwrap();
        assert!(same.max_abs_diff(&phi) < 1e-12);

        let mut st = SphereFunction::zeros(4);
        st.set(2, 1, 0.7);
        st.set(3, -2, -1.1);
        let g = BMSElement::translation(st);
        assert!(induced_act(&g, &phi, &o, false).unwrap().max_abs_diff(&phi) < 1e-12);

        let mut t4 = SphereFunction::zeros(4);
        t4.set(0, 0, 0.4);
        t4.set(1, 1, -0.9);
        let g = BMSElement::translation(t4);
        let moved = induced_act(&g, &phi, &o, false).unwrap();
        for (a, b) in moved.values.iter().zip(&phi.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let n0 = orbit_norm(&phi, &o).unwrap();
        assert!((orbit_norm(&moved, &o).unwrap() - n0).abs() <= 1e-13 * n0);
    }

    #[test]
    fn rotations_are_exact_on_nodes_with_symmetric_grids() {
        // rotation by a longitude step maps nodes to nodes
        let o = build_orbit(OrbitKind::Massive, 1.0, 2.0, 6, 6).unwrap();
        let phi = bump_field(&o, 1.5);
        let step = 2.0 * PI / 12.0;
        let g = BMSElement::new(SL2C::rotation([0.0, 0.0, 1.0], step), SphereFunction::zeros(2));
        let out = induced_act(&g, &phi, &o, true).unwrap();
        let n0 = orbit_norm(&phi, &o).unwrap();
        assert!((orbit_norm(&out, &o).unwrap() - n0).abs() < 1e-12 * n0);
    }

    #[test]
    fn escaped_nodes_are_reported() {
        let o = build_orbit(OrbitKind::Massive, 1.0, 1.0, 6, 6).unwrap();
        let phi = InducedField {
            values: vec![C::new(1.0, 0.0); o.len()],
        };
        let g = BMSElement::new(SL2C::boost([0.0, 0.0, 1.0], 0.5), SphereFunction::zeros(2));
        match induced_act(&g, &phi, &o, false) {
            Err(Error::Coverage { count, nodes }) => {
                assert!(count > 0);
                assert_eq!(count, nodes.len());
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
        assert!(induced_act(&g, &phi, &o, true).is_err());
    }

    #[test]
    fn boost_unitarity_improves_under_refinement() {
        let g = BMSElement::new(SL2C::boost([0.3, 0.5, 0.8], 0.2), SphereFunction::zeros(2));
        let d = unitarity_drift(OrbitKind::Massive, 1.0, &g, 2.5, 40, 24, 1.5, 1).unwrap();
        assert!(d[0].2 < 1e-3, "{d:?}");
        assert!(d[1].2 <= 0.5 * d[0].2, "{d:?}");
        let d = unitarity_drift(OrbitKind::Massless, 1.0, &g, 2.5, 80, 48, 2.0, 1).unwrap();
        assert!(d[0].2 < 1e-3, "{d:?}");
        assert!(d[1].2 <= 0.5 * d[0].2, "{d:?}");
    }

    #[test]
    fn reduction_examples() {
        let d = Arc::new(DirectionSet::with_st(&[(2, 0)], 2.0).unwrap());
        let one = HermiteSeries::constant(d.clone(), 3, 1.0);
        let r = reduce_covariant(&one, DEFAULT_WEIGHT_EXPONENT).unwrap();
        let p = [0.3, -1.0, 0.2, 0.5];
        assert_eq!(r.eval_polynomial(p), C::new(1.0, 0.0));
        let r2: f64 = p.iter().map(|x| x * x).sum();
        assert!((r.eval(p).re - (-0.25 * r2).exp()).abs() < 1e-15);

        let h2 = HermiteSeries::he(d.clone(), 3, 0, 2).unwrap();
        let r = reduce_covariant(&h2, 1.0).unwrap();
        assert!((r.eval_polynomial(p).re - (0.09 - 1.0)).abs() < 1e-15);

        let bad = HermiteSeries::he(d.clone(), 3, 4, 1).unwrap();
        assert!(matches!(reduce_covariant(&bad, 0.25), Err(Error::Constraint(v)) if v == vec![1.0]));
    }

    #[test]
    fn reduced_field_decays() {
        let d = Arc::new(DirectionSet::t4(2.0).unwrap());
        let psi = HermiteSeries::he(d.clone(), 4, 0, 4)
            .unwrap()
            .add(&HermiteSeries::he(d.clone(), 4, 2, 3).unwrap())
            .unwrap();
        for w in [0.25, 1.0] {
            let r = reduce_covariant(&psi, w).unwrap();
            let bound = |x: f64| (-w * x * x / 2.0).exp();
            let ratios: Vec<f64> = (0..=200)
                .map(|i| {
                    let x = i as f64 * 0.05;
                    let p = [x * 0.5, x * 0.5, x * 0.5, x * 0.5];
                    r.eval(p).norm() / bound(x)
                })
                .collect();
            let c = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(c.is_finite());
            // the ratio itself decays at the edge of the radial grid
            assert!(ratios[200] < 1e-3 * c);
        }
    }

    #[test]
    fn kg_residual_on_orbit_nodes() {
        let o = build_orbit(OrbitKind::Massive, 2.0, 1.5, 6, 6).unwrap();
        for p in o.nodes() {
            let r = p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3] - 4.0;
            assert!(r.abs() < 1e-10);
        }
        assert!(o.mass_defect(SIG) < 1e-10);
    }
}
