//! Run configuration shared by the verification suites and the CLI.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::supermomenta::Signature;
use crate::whitenoise::DirectionSet;

/// Named tolerances with their default values.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("cocycle", 1e-12),
    ("group_law", 1e-9),
    ("mobius", 1e-10),
    ("nuclear_chain", 0.0),
    ("hs_oracle", 1e-14),
    ("hs_cauchy", 1e-8),
    ("split", 1e-14),
    ("casimir", 1e-7),
    ("massless", 1e-10),
    ("orbit_mass", 1e-10),
    ("operator_exact", 1e-14),
    ("adjoint", 1e-12),
    ("fg_inverse", 1e-12),
    ("fg_norm", 1e-12),
    ("intertwining", 1e-10),
    ("mc_sigmas", 3.0),
    ("symmetry", 1e-12),
    ("vainberg_gap", 0.5),
    ("gradient", 1e-6),
    ("legendre", 1e-10),
    ("fiber", 1e-12),
    ("kg_pointwise", 1e-10),
    ("unitarity", 1e-3),
    ("refinement_ratio", 0.5),
    ("phase_exact", 1e-13),
    ("decay", 1.0),
    ("counterexamples", 0.0),
    ("rank_deficit", 0.0),
    ("orbit_null", 1e-12),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub l_max: usize,
    pub k: f64,
    /// Chaos degree cap.
    pub n: usize,
    pub signature: Signature,
    pub st_directions: Vec<(usize, i64)>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            l_max: 8,
            k: 2.0,
            n: 6,
            signature: Signature::MostlyMinus,
            st_directions: vec![(2, -2), (2, -1), (2, 0), (2, 1), (2, 2)],
            seed: 20240,
            tolerances: DEFAULT_TOLERANCES
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }
}

pub fn signature_name(sig: Signature) -> &'static str {
    match sig {
        Signature::MostlyMinus => "+---",
        Signature::MostlyPlus => "-+++",
    }
}

pub fn parse_signature(s: &str) -> Result<Signature> {
    match s {
        "+---" | "mostly-minus" => Ok(Signature::MostlyMinus),
        "-+++" | "mostly-plus" => Ok(Signature::MostlyPlus),
        other => Err(Error::Config(format!(
            "signature must be \"+---\" or \"-+++\" (got {other:?})"
        ))),
    }
}

fn field_err(name: &str, what: &str) -> Error {
    Error::Config(format!("field `{name}` {what}"))
}

fn as_usize(v: &Value, name: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| field_err(name, "must be a non-negative integer"))
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 1.0) || !self.k.is_finite() {
            return Err(Error::Config(format!("k must satisfy k > 1 (got {})", self.k)));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("N must satisfy N >= 2 (got {})", self.n)));
        }
        if self.l_max < 2 {
            return Err(Error::Config(format!(
                "L_max must be at least 2 (got {})",
                self.l_max
            )));
        }
        for &(l, m) in &self.st_directions {
            if l < 2 {
                return Err(Error::Config(format!(
                    "ST_directions must have l > 1 (got ({l}, {m}))"
                )));
            }
            if l > self.l_max {
                return Err(Error::Config(format!(
                    "ST direction ({l}, {m}) exceeds L_max = {}",
                    self.l_max
                )));
            }
        }
        for (name, v) in &self.tolerances {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "tolerance `{name}` must be finite and non-negative"
                )));
            }
        }
        self.directions().map(|_| ())
    }

    pub fn directions(&self) -> Result<Arc<DirectionSet>> {
        DirectionSet::with_st(&self.st_directions, self.k)
            .map(Arc::new)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Tolerance by name; unknown names are a configuration error.
    pub fn tol(&self, name: &str) -> Result<f64> {
        self.tolerances
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("no tolerance named `{name}`")))
    }

    /// Parses a JSON object. Missing fields keep their defaults; tolerances
    /// given in the file override the defaults by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("top level must be an object".into()))?;
        let mut c = Config::default();
        for (key, val) in obj {
            match key.as_str() {
                "L_max" => c.l_max = as_usize(val, key)?,
                "k" => c.k = val.as_f64().ok_or_else(|| field_err(key, "must be a number"))?,
                "N" => c.n = as_usize(val, key)?,
                "signature" => {
                    c.signature = parse_signature(
                        val.as_str().ok_or_else(|| field_err(key, "must be a string"))?,
                    )?
                }
                "seed" => {
                    c.seed = val
                        .as_u64()
                        .ok_or_else(|| field_err(key, "must be a non-negative integer"))?
                }
                "ST_directions" => {
                    let arr = val.as_array().ok_or_else(|| field_err(key, "must be a list"))?;
                    c.st_directions = arr
                        .iter()
                        .map(|p| {
                            let pair = p.as_array().filter(|a| a.len() == 2);
                            let pair = pair.ok_or_else(|| field_err(key, "entries must be [l, m]"))?;
                            let l = as_usize(&pair[0], key)?;
                            let m = pair[1]
                                .as_i64()
                                .ok_or_else(|| field_err(key, "m must be an integer"))?;
                            Ok((l, m))
                        })
                        .collect::<Result<_>>()?;
                }
                "tolerances" => {
                    let map = val.as_object().ok_or_else(|| field_err(key, "must be an object"))?;
                    for (name, t) in map {
                        if !c.tolerances.contains_key(name) {
                            return Err(Error::Config(format!("unknown tolerance `{name}`")));
                        }
                        let t = t
                            .as_f64()
                            .ok_or_else(|| Error::Config(format!("tolerance `{name}` must be a number")))?;
                        c.tolerances.insert(name.clone(), t);
                    }
                }
                other => return Err(Error::Config(format!("unknown field `{other}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Value {
        let tol: Map<String, Value> = self
            .tolerances
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        json!({
            "L_max": self.l_max,
            "k": self.k,
            "N": self.n,
            "signature": signature_name(self.signature),
            "ST_directions": self.st_directions.iter().map(|(l, m)| json!([l, m])).collect::<Vec<_>>(),
            "seed": self.seed,
            "tolerances": tol,
        })
    }
}
