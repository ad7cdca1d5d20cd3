//! Band-limited real functions on the unit sphere.
//!
//! Functions are stored as coefficient vectors in the real orthonormal
//! spherical-harmonic basis, `∫ Y_lm Y_l'm' dΩ = δ_ll' δ_mm'`, indexed by
//! `l² + l + m`. Pointwise data only appears at the analysis/synthesis
//! boundary, on a Gauss-Legendre × uniform-longitude product grid.
//!
//! The real harmonics carry no Condon-Shortley phase, so the degree-one
//! block is `(Y_1-1, Y_10, Y_11) = √(3/4π) (y, z, x)`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::supermomenta::Supermomentum;

/// Default shift in `A = L² + k`.
pub const DEFAULT_K: f64 = 2.0;

#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`sh_index`].
pub fn sh_degree_order(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

#[inline]
pub fn sh_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Eigenvalue of `A = L² + k` on the degree-`l` eigenspace.
#[inline]
pub fn a_eigenvalue(l: usize, k: f64) -> f64 {
    (l * (l + 1)) as f64 + k
}

pub(crate) fn check_k(k: f64) -> Result<()> {
    if k > 1.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("k must exceed 1 (got {k})")))
    }
}

/// Evaluates every real orthonormal harmonic with `l ≤ l_max` at `(θ, φ)`.
///
/// Uses the fully normalized associated-Legendre recurrences, stable well
/// past the degrees used here.
pub fn real_sh_all(l_max: usize, theta: f64, phi: f64) -> Vec<f64> {
    let mut out = vec![0.0; sh_count(l_max)];
    let x = theta.cos();
    let s = theta.sin();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        let (cm, sm) = if m == 0 {
            (1.0, 0.0)
        } else {
            let a = m as f64 * phi;
            (2f64.sqrt() * a.cos(), 2f64.sqrt() * a.sin())
        };
        let mut store = |l: usize, p: f64| {
            if m == 0 {
                out[sh_index(l, 0)] = p;
            } else {
                out[sh_index(l, m as i64)] = p * cm;
                out[sh_index(l, -(m as i64))] = p * sm;
            }
        };
        store(m, pmm);
        if m == l_max {
            break;
        }
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        store(m + 1, p_cur);
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            let p_next = a * (x * p_cur - b * p_prev);
            store(l, p_next);
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        xs[i] = -z;
        xs[n - 1 - i] = z;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Product quadrature on the sphere, exact for harmonic products of total
/// degree `≤ 2·band`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    band: usize,
    nodes: Vec<(f64, f64)>,
    weights: Vec<f64>,
    /// Harmonics up to `band` at every node, row-major by node.
    table: Vec<f64>,
}

impl SphereGrid {
    pub fn new(band: usize) -> Self {
        let (xs, ws) = gauss_legendre(band + 1);
        let n_phi = 2 * band + 1;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(xs.len() * n_phi);
        let mut weights = Vec::with_capacity(xs.len() * n_phi);
        for (x, w) in xs.iter().zip(&ws) {
            let theta = x.acos();
            for j in 0..n_phi {
                nodes.push((theta, j as f64 * dphi));
                weights.push(w * dphi);
            }
        }
        let table = nodes
            .iter()
            .flat_map(|&(t, p)| real_sh_all(band, t, p))
            .collect();
        SphereGrid {
            band,
            nodes,
            weights,
            table,
        }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
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

    /// Harmonic values up to `band` at node `i`.
    pub fn harmonics_at(&self, i: usize) -> &[f64] {
        let n = sh_count(self.band);
        &self.table[i * n..(i + 1) * n]
    }
}

/// A supertranslation: a real band-limited function on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereFunction {
    l_max: usize,
    coeffs: Vec<f64>,
}

impl SphereFunction {
    pub fn new(l_max: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != sh_count(l_max) {
            return Err(Error::InputShape(format!(
                "expected {} coefficients for L_max = {l_max}, got {}",
                sh_count(l_max),
                coeffs.len()
            )));
        }
        Ok(SphereFunction { l_max, coeffs })
    }

    pub fn zeros(l_max: usize) -> Self {
        SphereFunction {
            l_max,
            coeffs: vec![0.0; sh_count(l_max)],
        }
    }

    /// The single harmonic `Y_lm`.
    pub fn basis(l_max: usize, l: usize, m: i64) -> Self {
        let mut f = Self::zeros(l_max);
        f.coeffs[sh_index(l, m)] = 1.0;
        f
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.l_max {
            0.0
        } else {
            self.coeffs[sh_index(l, m)]
        }
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        self.coeffs[sh_index(l, m)] = value;
    }

    /// `L²(S²)` inner product.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        same_order(self.l_max, other.l_max)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Zero-pads or truncates to a different order.
    pub fn with_l_max(&self, l_max: usize) -> Self {
        let mut out = Self::zeros(l_max);
        let n = sh_count(l_max.min(self.l_max));
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// Pointwise value at `(θ, φ)`.
    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        let y = real_sh_all(self.l_max, theta, phi);
        y.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Largest degree carrying a coefficient above `tol`.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        (0..self.coeffs.len())
            .rev()
            .find(|&i| self.coeffs[i].abs() > tol)
            .map(|i| sh_degree_order(i).0)
    }
}

pub(crate) fn same_order(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::InputShape(format!(
            "truncation orders differ ({a} vs {b})"
        )))
    }
}

impl Add for &SphereFunction {
    type Output = SphereFunction;
    fn add(self, rhs: Self) -> SphereFunction {
        assert_eq!(self.l_max, rhs.l_max, "truncation orders differ");
        SphereFunction {
            l_max: self.l_max,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SphereFunction {
    type Output = SphereFunction;
    fn sub(self, rhs: Self) -> SphereFunction {
        assert_eq!(self.l_max, rhs.l_max, "truncation orders differ");
        SphereFunction {
            l_max: self.l_max,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&SphereFunction> for f64 {
    type Output = SphereFunction;
    fn mul(self, rhs: &SphereFunction) -> SphereFunction {
        SphereFunction {
            l_max: rhs.l_max,
            coeffs: rhs.coeffs.iter().map(|c| self * c).collect(),
        }
    }
}

impl Neg for &SphereFunction {
    type Output = SphereFunction;
    fn neg(self) -> SphereFunction {
        -1.0 * self
    }
}

/// Projects grid samples onto harmonics of degree `≤ l_max`.
pub fn analyze(values: &[f64], grid: &SphereGrid, l_max: usize) -> Result<SphereFunction> {
    if values.len() != grid.len() {
        return Err(Error::InputShape(format!(
            "{} values for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    if l_max > grid.band {
        return Err(Error::InputShape(format!(
            "grid band {} cannot resolve L_max = {l_max}",
            grid.band
        )));
    }
    let n = sh_count(l_max);
    let mut coeffs = vec![0.0; n];
    for (i, (&v, &w)) in values.iter().zip(&grid.weights).enumerate() {
        let wv = w * v;
        for (c, y) in coeffs.iter_mut().zip(&grid.harmonics_at(i)[..n]) {
            *c += wv * y;
        }
    }
    Ok(SphereFunction { l_max, coeffs })
}

/// Values of `f` at arbitrary points.
pub fn synthesize(f: &SphereFunction, points: &[(f64, f64)]) -> Vec<f64> {
    points.iter().map(|&(t, p)| f.eval(t, p)).collect()
}

/// Values of `f` on the nodes of `grid`, reusing the cached harmonic table.
pub fn synthesize_on_grid(f: &SphereFunction, grid: &SphereGrid) -> Vec<f64> {
    let n = sh_count(f.l_max.min(grid.band));
    (0..grid.len())
        .map(|i| {
            grid.harmonics_at(i)[..n]
                .iter()
                .zip(&f.coeffs[..n])
                .map(|(y, c)| y * c)
                .sum()
        })
        .collect()
}

/// `A^power f` with `A = L² + k`.
pub fn apply_a(f: &SphereFunction, k: f64, power: i32) -> Result<SphereFunction> {
    check_k(k)?;
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * a_eigenvalue(sh_degree_order(i).0, k).powi(power))
        .collect();
    Ok(SphereFunction {
        l_max: f.l_max,
        coeffs,
    })
}

/// `‖A^p f‖_{L²}`, the p-th norm of the nuclear chain.
pub fn nuclear_norm(f: &SphereFunction, p: i32, k: f64) -> Result<f64> {
    check_k(k)?;
    Ok(f.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let lam = a_eigenvalue(sh_degree_order(i).0, k).powi(p);
            (lam * c) * (lam * c)
        })
        .sum::<f64>()
        .sqrt())
}

/// Hilbert-Schmidt partial sum `Σ_{l=0}^{l_cut} (2l+1) (l(l+1)+k)^{-alpha}`.
///
/// A negative `l_cut` is the empty sum.
pub fn hs_norm_partial(k: f64, alpha: f64, l_cut: i64) -> f64 {
    (0..=l_cut.max(-1))
        .filter(|&l| l >= 0)
        .map(|l| hs_increment(k, alpha, l as usize))
        .sum()
}

/// The degree-`l` term of [`hs_norm_partial`].
pub fn hs_increment(k: f64, alpha: f64, l: usize) -> f64 {
    (2 * l + 1) as f64 * a_eigenvalue(l, k).powf(-alpha)
}

/// Splits `f` into its `l ≤ 1` (translation) and `l > 1` parts.
pub fn split_t4_st(f: &SphereFunction) -> (SphereFunction, SphereFunction) {
    let mut t4 = SphereFunction::zeros(f.l_max);
    let mut st = f.clone();
    let n = sh_count(1).min(f.coeffs.len());
    t4.coeffs[..n].copy_from_slice(&f.coeffs[..n]);
    st.coeffs[..n].iter_mut().for_each(|c| *c = 0.0);
    (t4, st)
}

/// Dual pairing `(β, α) = Σ b_lm a_lm`.
pub fn pair(beta: &Supermomentum, alpha: &SphereFunction) -> Result<f64> {
    same_order(beta.l_max(), alpha.l_max)?;
    Ok(beta
        .coeffs()
        .iter()
        .zip(&alpha.coeffs)
        .map(|(b, a)| b * a)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y10(theta: f64) -> f64 {
        (3.0 / (4.0 * PI)).sqrt() * theta.cos()
    }

    fn y21(theta: f64, phi: f64) -> f64 {
        (15.0 / (4.0 * PI)).sqrt() * theta.sin() * theta.cos() * phi.cos()
    }

    fn y11(theta: f64, phi: f64) -> f64 {
        (3.0 / (4.0 * PI)).sqrt() * theta.sin() * phi.cos()
    }

    #[test]
    fn index_roundtrip() {
        for idx in 0..200 {
            let (l, m) = sh_degree_order(idx);
            assert_eq!(sh_index(l, m), idx);
        }
    }

    #[test]
    fn closed_forms() {
        for &(t, p) in &[(0.3, 1.1), (2.0, -0.4), (1.5707, 3.0)] {
            let y = real_sh_all(3, t, p);
            assert!((y[sh_index(1, 0)] - y10(t)).abs() < 1e-14);
            assert!((y[sh_index(2, 1)] - y21(t, p)).abs() < 1e-14);
            assert!((y[sh_index(1, 1)] - y11(t, p)).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        for deg in 0..12 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn grid_weights_sum_to_sphere_area() {
        let g = SphereGrid::new(8);
        let s: f64 = g.weights().iter().sum();
        assert!((s - 4.0 * PI).abs() < 1e-12);
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn grid_gram_matrix_is_identity() {
        let band = 6;
        let g = SphereGrid::new(band);
        let n = sh_count(band);
        for i in 0..n {
            for j in 0..n {
                let (li, _) = sh_degree_order(i);
                let (lj, _) = sh_degree_order(j);
                if li + lj > 2 * band {
                    continue;
                }
                let s: f64 = (0..g.len())
                    .map(|k| g.weights()[k] * g.harmonics_at(k)[i] * g.harmonics_at(k)[j])
                    .sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-12, "({i},{j}) -> {s}");
            }
        }
    }

    #[test]
    fn analyze_constant_and_y21() {
        let g = SphereGrid::new(4);
        let c = vec![1.0 / (4.0 * PI).sqrt(); g.len()];
        let f = analyze(&c, &g, 4).unwrap();
        assert!(f.max_abs_diff(&SphereFunction::basis(4, 0, 0)) < 1e-12);

        let v: Vec<f64> = g.nodes().iter().map(|&(t, p)| y21(t, p)).collect();
        let f = analyze(&v, &g, 4).unwrap();
        assert!(f.max_abs_diff(&SphereFunction::basis(4, 2, 1)) < 1e-12);
    }

    #[test]
    fn analyze_product_reproduces_samples() {
        let g = SphereGrid::new(2);
        let v: Vec<f64> = g.nodes().iter().map(|&(t, p)| y11(t, p).powi(2)).collect();
        let f = analyze(&v, &g, 2).unwrap();
        let back = synthesize(&f, g.nodes());
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn analyze_rejects_length_mismatch() {
        let g = SphereGrid::new(3);
        assert!(matches!(
            analyze(&[1.0, 2.0], &g, 3),
            Err(Error::InputShape(_))
        ));
    }

    #[test]
    fn synthesize_examples() {
        let f = SphereFunction::basis(2, 0, 0);
        let pts = [(0.1, 0.2), (2.0, 5.0)];
        for v in synthesize(&f, &pts) {
            assert!((v - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        }
        assert!(synthesize(&SphereFunction::zeros(3), &pts)
            .iter()
            .all(|&v| v == 0.0));
        let f = SphereFunction::basis(2, 1, 0);
        assert!((synthesize(&f, &[(0.0, 0.0)])[0] - y10(0.0)).abs() < 1e-15);
    }

    /// `-Δ` by second-order finite differences in (θ, φ).
    fn neg_laplacian_fd(f: impl Fn(f64, f64) -> f64, t: f64, p: f64) -> f64 {
        let h = 1e-4;
        let dtheta = |t: f64| (f(t + h, p) - f(t - h, p)) / (2.0 * h);
        let term_t = ((t + h / 2.0).sin() * dtheta(t + h / 2.0)
            - (t - h / 2.0).sin() * dtheta(t - h / 2.0))
            / (h * t.sin());
        let term_p = (f(t, p + h) - 2.0 * f(t, p) + f(t, p - h)) / (h * h * t.sin().powi(2));
        -(term_t + term_p)
    }

    #[test]
    fn apply_a_matches_laplacian_oracle() {
        let f = SphereFunction::basis(3, 2, 1);
        let af = apply_a(&f, 2.0, 1).unwrap();
        assert!(af.max_abs_diff(&(8.0 * &f)) < 1e-15);
        for &(t, p) in &[(0.7, 0.3), (1.9, 2.2)] {
            let oracle = neg_laplacian_fd(y21, t, p) + 2.0 * y21(t, p);
            assert!((af.eval(t, p) - oracle).abs() < 1e-5);
        }
    }

    #[test]
    fn apply_a_power_zero_and_inverse() {
        let mut f = SphereFunction::zeros(3);
        f.coeffs_mut().iter_mut().enumerate().for_each(|(i, c)| *c = i as f64 - 3.5);
        assert_eq!(apply_a(&f, 2.0, 0).unwrap(), f);
        let y00 = SphereFunction::basis(3, 0, 0);
        let inv = apply_a(&y00, 2.0, -1).unwrap();
        assert!(inv.max_abs_diff(&(0.5 * &y00)) < 1e-16);
        let back = apply_a(&apply_a(&f, 2.0, -1).unwrap(), 2.0, 1).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-13);
        assert!(matches!(apply_a(&f, 1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn nuclear_norm_examples() {
        let y00 = SphereFunction::basis(4, 0, 0);
        assert!((nuclear_norm(&y00, 1, 2.0).unwrap() - 2.0).abs() < 1e-15);
        let f = &SphereFunction::basis(4, 2, 1) + &y00;
        let expect = (8f64.powi(4) + 2f64.powi(4)).sqrt();
        assert!((nuclear_norm(&f, 2, 2.0).unwrap() - expect).abs() < 1e-12);
        assert!((nuclear_norm(&f, 0, 2.0).unwrap() - f.norm()).abs() < 1e-15);
        assert!(nuclear_norm(&f, 1, 0.5).is_err());
    }

    #[test]
    fn hs_partial_examples() {
        assert!((hs_norm_partial(2.0, 2.0, 0) - 0.25).abs() < 1e-16);
        assert!((hs_norm_partial(2.0, 2.0, 2) - 0.515625).abs() < 1e-15);
        assert_eq!(hs_norm_partial(3.0, 1.0, -1), 0.0);
    }

    #[test]
    fn hs_increment_decay_rates() {
        // α = 1.5: terms ~ 2 l^{-2}, summable.
        assert!(hs_increment(2.0, 1.5, 10_000) < 1e-6);
        // α = 0.9: terms ~ 2 l^{-0.8}, not summable.
        for &l in &[1_000usize, 10_000, 100_000] {
            let ratio = hs_increment(2.0, 0.9, l) / (2.0 * (l as f64).powf(-0.8));
            assert!((ratio - 1.0).abs() < 1e-2, "l = {l}: ratio {ratio}");
        }
    }

    #[test]
    fn split_examples() {
        let f = &SphereFunction::basis(3, 0, 0) + &SphereFunction::basis(3, 2, -1);
        let (t4, st) = split_t4_st(&f);
        assert_eq!(t4, SphereFunction::basis(3, 0, 0));
        assert_eq!(st, SphereFunction::basis(3, 2, -1));
        let g = &SphereFunction::basis(3, 1, 1) + &SphereFunction::basis(3, 0, 0);
        let (t4, st) = split_t4_st(&g);
        assert_eq!(t4, g);
        assert_eq!(st, SphereFunction::zeros(3));
    }

    #[test]
    fn pair_examples() {
        let b00 = Supermomentum::basis(3, 0, 0);
        assert_eq!(pair(&b00, &SphereFunction::basis(3, 0, 0)).unwrap(), 1.0);
        assert_eq!(pair(&b00, &SphereFunction::basis(3, 1, 1)).unwrap(), 0.0);
        let mut b = Supermomentum::zeros(3);
        b.set(1, 0, 2.0);
        b.set(0, 0, 1.0);
        let a = 3.0 * &SphereFunction::basis(3, 1, 0);
        assert_eq!(pair(&b, &a).unwrap(), 6.0);
        assert!(pair(&b, &SphereFunction::zeros(2)).is_err());
    }
}
