//! Supermomenta: real distributions on the sphere truncated to a harmonic
//! band, their four-momentum shadow and the Casimir mass.
//!
//! A supermomentum is stored by its dual coefficients `b_lm`, so the pairing
//! with a supertranslation is the coefficient dot product. The four-momentum
//! reads the `l ≤ 1` block. With orthonormal harmonics the covariant
//! extraction is
//!
//! ```text
//! p = ( -√(3/4π) b_00, -b_1-1/√(4π), -b_10/√(4π), -b_11/√(4π) )
//! ```
//!
//! in the component order `(b_00, b_1-1, b_10, b_11)`, i.e. `(t, y, z, x)`.
//! The time slot keeps the `-√(3/4π)` factor of the fixed-point convention
//! `β̄ = √(4π/3) m Y*_00 ↦ (-m, 0, 0, 0)`; the spatial slots carry the
//! factor that makes `η^{μν} p_μ p_ν` invariant under the Lorentz action.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{pair, same_order, sh_count, sh_index, SphereFunction};

/// Metric signature used by every quadratic form in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Signature {
    /// `diag(+1, -1, -1, -1)`: positive mass squared on the massive orbit.
    #[default]
    #[serde(rename = "+---")]
    MostlyMinus,
    /// `diag(-1, +1, +1, +1)`.
    #[serde(rename = "-+++")]
    MostlyPlus,
}

impl Signature {
    pub fn eta(self) -> [f64; 4] {
        match self {
            Signature::MostlyMinus => [1.0, -1.0, -1.0, -1.0],
            Signature::MostlyPlus => [-1.0, 1.0, 1.0, 1.0],
        }
    }
}

/// Extraction scale of each T⁴ slot, in `(b_00, b_1-1, b_10, b_11)` order.
pub fn extraction_scale() -> [f64; 4] {
    let s = 1.0 / (4.0 * PI).sqrt();
    [-(3.0 / (4.0 * PI)).sqrt(), -s, -s, -s]
}

/// `η^{μμ} c_μ²`: the Casimir form expressed on the raw dual coefficients
/// (equivalently on the white-noise pairings `(β, e_μ)`).
pub fn casimir_pairing_weights(sig: Signature) -> [f64; 4] {
    let eta = sig.eta();
    let c = extraction_scale();
    [
        eta[0] * c[0] * c[0],
        eta[1] * c[1] * c[1],
        eta[2] * c[2] * c[2],
        eta[3] * c[3] * c[3],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supermomentum {
    l_max: usize,
    coeffs: Vec<f64>,
}

impl Supermomentum {
    pub fn new(l_max: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != sh_count(l_max) {
            return Err(Error::InputShape(format!(
                "expected {} dual coefficients for L_max = {l_max}, got {}",
                sh_count(l_max),
                coeffs.len()
            )));
        }
        Ok(Supermomentum { l_max, coeffs })
    }

    pub fn zeros(l_max: usize) -> Self {
        Supermomentum {
            l_max,
            coeffs: vec![0.0; sh_count(l_max)],
        }
    }

    /// The dual basis element `Y*_lm`.
    pub fn basis(l_max: usize, l: usize, m: i64) -> Self {
        let mut b = Self::zeros(l_max);
        b.coeffs[sh_index(l, m)] = 1.0;
        b
    }

    /// The dual of a smooth function under the `L²` pairing.
    pub fn from_function(f: &SphereFunction) -> Self {
        Supermomentum {
            l_max: f.l_max(),
            coeffs: f.coeffs().to_vec(),
        }
    }

    /// The supermomentum supported on `l ≤ 1` whose four-momentum has the
    /// given Cartesian components `(E, p_x, p_y, p_z)`.
    pub fn from_cartesian(l_max: usize, p: [f64; 4]) -> Self {
        let mut b = Self::zeros(l_max.max(1));
        let r = (4.0 * PI).sqrt();
        b.set(0, 0, (4.0 * PI / 3.0).sqrt() * p[0]);
        b.set(1, 1, r * p[1]);
        b.set(1, -1, r * p[2]);
        b.set(1, 0, r * p[3]);
        b
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

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        self.coeffs[sh_index(l, m)] = v;
    }

    pub fn as_function(&self) -> SphereFunction {
        SphereFunction::new(self.l_max, self.coeffs.clone()).expect("same layout")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &Supermomentum {
    type Output = Supermomentum;
    fn add(self, rhs: Self) -> Supermomentum {
        same_order(self.l_max, rhs.l_max).expect("truncation orders differ");
        Supermomentum {
            l_max: self.l_max,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Supermomentum {
    type Output = Supermomentum;
    fn sub(self, rhs: Self) -> Supermomentum {
        same_order(self.l_max, rhs.l_max).expect("truncation orders differ");
        Supermomentum {
            l_max: self.l_max,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&Supermomentum> for f64 {
    type Output = Supermomentum;
    fn mul(self, rhs: &Supermomentum) -> Supermomentum {
        Supermomentum {
            l_max: rhs.l_max,
            coeffs: rhs.coeffs.iter().map(|c| self * c).collect(),
        }
    }
}

/// Four-momentum in the extraction convention, components ordered as
/// `(b_00, b_1-1, b_10, b_11)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourMomentum(pub [f64; 4]);

impl FourMomentum {
    /// Physical energy. Positive on both fixed points.
    pub fn energy(&self) -> f64 {
        -self.0[0]
    }

    /// Physical components `(E, p_x, p_y, p_z)`.
    pub fn cartesian(&self) -> [f64; 4] {
        [-self.0[0], -self.0[3], -self.0[1], -self.0[2]]
    }

    pub fn from_cartesian(p: [f64; 4]) -> Self {
        FourMomentum([-p[0], -p[2], -p[3], -p[1]])
    }

    pub fn minkowski(&self, other: &Self, sig: Signature) -> f64 {
        let eta = sig.eta();
        (0..4).map(|i| eta[i] * self.0[i] * other.0[i]).sum()
    }
}

impl Add for FourMomentum {
    type Output = FourMomentum;
    fn add(self, rhs: Self) -> FourMomentum {
        FourMomentum(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

pub fn project_t4(beta: &Supermomentum) -> FourMomentum {
    let c = extraction_scale();
    let b = [
        beta.get(0, 0),
        beta.get(1, -1),
        beta.get(1, 0),
        beta.get(1, 1),
    ];
    FourMomentum(std::array::from_fn(|i| c[i] * b[i]))
}

pub fn casimir_b(beta1: &Supermomentum, beta2: &Supermomentum, sig: Signature) -> f64 {
    project_t4(beta1).minkowski(&project_t4(beta2), sig)
}

pub fn mass_squared(beta: &Supermomentum, sig: Signature) -> f64 {
    casimir_b(beta, beta, sig)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitKind {
    Massive,
    Massless,
}

/// Orbit representative.
///
/// Massive: `√(4π/3) m Y*_00`. Massless: the `l ≤ 1` shadow of the
/// `K = S = 0` fixed point, a null momentum of energy `E` along `+x`, which
/// reads `(-E, 0, 0, -E)` in extraction order.
pub fn orbit_fixed_point(kind: OrbitKind, value: f64, l_max: usize) -> Result<Supermomentum> {
    if !(value > 0.0) {
        return Err(Error::Domain(format!(
            "orbit parameter must be positive (got {value})"
        )));
    }
    Ok(match kind {
        OrbitKind::Massive => {
            let mut b = Supermomentum::zeros(l_max);
            b.set(0, 0, (4.0 * PI / 3.0).sqrt() * value);
            b
        }
        OrbitKind::Massless => Supermomentum::from_cartesian(l_max, [value, value, 0.0, 0.0]),
    })
}

/// True iff `β` annihilates every `l > 1` harmonic to within `tol`.
pub fn annihilator_check(beta: &Supermomentum, tol: f64) -> bool {
    (2..=beta.l_max).all(|l| {
        (-(l as i64)..=l as i64).all(|m| {
            let y = SphereFunction::basis(beta.l_max, l, m);
            pair(beta, &y).map(|v| v.abs() <= tol).unwrap_or(false)
        })
    })
}
