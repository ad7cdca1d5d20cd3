//! JSON documents for every data type, with schema errors that name the
//! offending field path.
//!
//! Floats are written with shortest round-trip formatting, so parsing a
//! written document reproduces every value bit for bit.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::bmsgroup::{BMSElement, SL2C};
use crate::dynamics::FieldState;
use crate::error::{Error, Result};
use crate::induced::{InducedField, OrbitParams, OrbitQuadrature};
use crate::sphere::{sh_index, SphereFunction};
use crate::supermomenta::{OrbitKind, Supermomentum};
use crate::whitenoise::{CapPolicy, DirectionSet, HermiteSeries, MultiIndex};

type C = Complex64;

/// Any document the tools read or write.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Sphere(SphereFunction),
    Super(Supermomentum),
    Bms(BMSElement),
    Hermite(HermiteSeries),
    State(FieldState),
    Orbit(OrbitParams),
    Field {
        orbit: OrbitParams,
        field: InducedField,
    },
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Sphere(_) => "SphereFunction",
            Document::Super(_) => "Supermomentum",
            Document::Bms(_) => "BMSElement",
            Document::Hermite(_) => "HermiteSeries",
            Document::State(_) => "FieldState",
            Document::Orbit(_) => "OrbitQuadrature",
            Document::Field { .. } => "InducedField",
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Document::Sphere(f) => sphere_to_value(f),
            Document::Super(b) => super_to_value(b),
            Document::Bms(g) => bms_to_value(g),
            Document::Hermite(h) => hermite_to_value(h),
            Document::State(s) => state_to_value(s),
            Document::Orbit(o) => orbit_to_value(o),
            Document::Field { orbit, field } => field_to_value(orbit, field),
        }
    }

    /// Detects the document type from its keys.
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = object(v, "$")?;
        if obj.contains_key("lambda") {
            Ok(Document::Bms(bms_from_value(v, "$")?))
        } else if obj.contains_key("psi") {
            Ok(Document::State(state_from_value(v, "$")?))
        } else if obj.contains_key("directions") {
            Ok(Document::Hermite(hermite_from_value(v, "$")?))
        } else if obj.contains_key("values") {
            let (orbit, field) = field_from_value(v, "$")?;
            Ok(Document::Field { orbit, field })
        } else if obj.contains_key("kind") {
            Ok(Document::Orbit(orbit_from_value(v, "$")?))
        } else if obj.contains_key("L_max") {
            if obj.get("dual").and_then(Value::as_bool).unwrap_or(false) {
                Ok(Document::Super(super_from_value(v, "$")?))
            } else {
                Ok(Document::Sphere(sphere_from_value(v, "$")?))
            }
        } else {
            Err(Error::schema("$", "unrecognised document"))
        }
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("JSON values serialize")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| {
            Error::schema(
                "$",
                format!("malformed JSON at line {} column {}: {e}", e.line(), e.column()),
            )
        })?;
        Self::from_value(&v)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::schema("$", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Equality of every float by bit pattern.
    pub fn bit_identical(&self, other: &Self) -> bool {
        // serialized forms agree iff every float has the same bits
        self.to_value() == other.to_value()
            && float_bits(&self.to_value()) == float_bits(&other.to_value())
    }
}

fn float_bits(v: &Value) -> Vec<u64> {
    let mut out = Vec::new();
    fn walk(v: &Value, out: &mut Vec<u64>) {
        match v {
            Value::Number(n) => out.push(n.as_f64().unwrap_or(f64::NAN).to_bits()),
            Value::Array(a) => a.iter().for_each(|x| walk(x, out)),
            Value::Object(o) => o.values().for_each(|x| walk(x, out)),
            _ => {}
        }
    }
    walk(v, &mut out);
    out
}

/// Parses `path`, writes it back, parses again and compares bit for bit.
pub fn roundtrip(path: &Path) -> Result<bool> {
    let first = Document::read(path)?;
    let text = first.to_string_pretty();
    let second = Document::parse(&text)?;
    Ok(first.bit_identical(&second) && second.to_string_pretty() == text)
}

// ---------------------------------------------------------------- helpers

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::schema(path, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::schema(format!("{path}.{name}"), "missing field"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::schema(path, "expected a list"))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::schema(path, "expected a number"))
}

fn uint(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::schema(path, "expected a non-negative integer"))
}

fn int(v: &Value, path: &str) -> Result<i64> {
    v.as_i64()
        .ok_or_else(|| Error::schema(path, "expected an integer"))
}

fn complex(v: &Value, path: &str) -> Result<C> {
    let a = array(v, path)?;
    if a.len() != 2 {
        return Err(Error::schema(path, "expected [re, im]"));
    }
    Ok(C::new(
        number(&a[0], &format!("{path}[0]"))?,
        number(&a[1], &format!("{path}[1]"))?,
    ))
}

fn complex_value(c: C) -> Value {
    json!([c.re, c.im])
}

fn reject_unknown(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<()> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::schema(format!("{path}.{k}"), "unknown field"));
        }
    }
    Ok(())
}

// ------------------------------------------------------ sphere functions

fn coeff_list(l_max: usize, coeffs: &[f64]) -> Value {
    let mut out = Vec::with_capacity(coeffs.len());
    for l in 0..=l_max {
        for m in -(l as i64)..=(l as i64) {
            out.push(json!([l, m, coeffs[sh_index(l, m)]]));
        }
    }
    Value::Array(out)
}

fn coeffs_from_value(obj: &Map<String, Value>, path: &str) -> Result<(usize, Vec<f64>)> {
    let l_max = uint(field(obj, path, "L_max")?, &format!("{path}.L_max"))?;
    if l_max > 256 {
        return Err(Error::schema(format!("{path}.L_max"), "too large"));
    }
    let cpath = format!("{path}.coeffs");
    let list = array(field(obj, path, "coeffs")?, &cpath)?;
    let mut coeffs = vec![0.0; (l_max + 1) * (l_max + 1)];
    for (i, entry) in list.iter().enumerate() {
        let p = format!("{cpath}[{i}]");
        let e = array(entry, &p)?;
        if e.len() != 3 {
            return Err(Error::schema(p, "expected [l, m, value]"));
        }
        let l = uint(&e[0], &format!("{p}[0]"))?;
        let m = int(&e[1], &format!("{p}[1]"))?;
        if l > l_max || m.unsigned_abs() as usize > l {
            return Err(Error::schema(p, format!("index ({l}, {m}) outside L_max = {l_max}")));
        }
        coeffs[sh_index(l, m)] = number(&e[2], &format!("{p}[2]"))?;
    }
    Ok((l_max, coeffs))
}

pub fn sphere_to_value(f: &SphereFunction) -> Value {
    json!({"L_max": f.l_max(), "coeffs": coeff_list(f.l_max(), f.coeffs())})
}

pub fn sphere_from_value(v: &Value, path: &str) -> Result<SphereFunction> {
    let obj = object(v, path)?;
    reject_unknown(obj, path, &["L_max", "coeffs", "dual"])?;
    if obj.get("dual").and_then(Value::as_bool) == Some(true) {
        return Err(Error::schema(format!("{path}.dual"), "expected a test function"));
    }
    let (l, c) = coeffs_from_value(obj, path)?;
    SphereFunction::new(l, c).map_err(|e| Error::schema(path, e.to_string()))
}

pub fn super_to_value(b: &Supermomentum) -> Value {
    json!({"L_max": b.l_max(), "coeffs": coeff_list(b.l_max(), b.coeffs()), "dual": true})
}

pub fn super_from_value(v: &Value, path: &str) -> Result<Supermomentum> {
    let obj = object(v, path)?;
    reject_unknown(obj, path, &["L_max", "coeffs", "dual"])?;
    if obj.get("dual").and_then(Value::as_bool) != Some(true) {
        return Err(Error::schema(format!("{path}.dual"), "must be true for a supermomentum"));
    }
    let (l, c) = coeffs_from_value(obj, path)?;
    Supermomentum::new(l, c).map_err(|e| Error::schema(path, e.to_string()))
}

// ------------------------------------------------------------------ BMS

pub fn bms_to_value(g: &BMSElement) -> Value {
    let l = &g.lambda;
    json!({
        "lambda": [complex_value(l.a), complex_value(l.b), complex_value(l.c), complex_value(l.d)],
        "f": sphere_to_value(&g.f),
    })
}

pub fn bms_from_value(v: &Value, path: &str) -> Result<BMSElement> {
    let obj = object(v, path)?;
    reject_unknown(obj, path, &["lambda", "f"])?;
    let lp = format!("{path}.lambda");
    let l = array(field(obj, path, "lambda")?, &lp)?;
    if l.len() != 4 {
        return Err(Error::schema(lp, "expected four complex entries [a, b, c, d]"));
    }
    let e: Vec<C> = l
        .iter()
        .enumerate()
        .map(|(i, x)| complex(x, &format!("{lp}[{i}]")))
        .collect::<Result<_>>()?;
    let lambda = SL2C {
        a: e[0],
        b: e[1],
        c: e[2],
        d: e[3],
    };
    if (lambda.det() - C::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::schema(lp, "determinant must be 1"));
    }
    let f = sphere_from_value(field(obj, path, "f")?, &format!("{path}.f"))?;
    Ok(BMSElement::new(lambda, f))
}

// ------------------------------------------------------- Hermite series

fn directions_value(d: &DirectionSet) -> Value {
    Value::Array(d.dirs().iter().map(|(l, m)| json!([l, m])).collect())
}

pub fn hermite_to_value(h: &HermiteSeries) -> Value {
    let dims = h.dims();
    let coeffs: Vec<Value> = h
        .terms()
        .map(|(n, c)| json!([n.to_vec(dims), c.re, c.im]))
        .collect();
    let mut v = json!({
        "N": h.cap(),
        "directions": directions_value(h.dirs()),
        "k": h.dirs().k(),
        "coeffs": coeffs,
    });
    if h.policy() == CapPolicy::Grow {
        v["cap_policy"] = json!("grow");
    }
    v
}

fn directions_from_value(obj: &Map<String, Value>, path: &str) -> Result<Arc<DirectionSet>> {
    let dp = format!("{path}.directions");
    let list = array(field(obj, path, "directions")?, &dp)?;
    let dirs = list
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let p = format!("{dp}[{i}]");
            let a = array(e, &p)?;
            if a.len() != 2 {
                return Err(Error::schema(p, "expected [l, m]"));
            }
            Ok((uint(&a[0], &format!("{p}[0]"))?, int(&a[1], &format!("{p}[1]"))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = number(field(obj, path, "k")?, &format!("{path}.k"))?;
    DirectionSet::new(dirs, k)
        .map(Arc::new)
        .map_err(|e| Error::schema(dp, e.to_string()))
}

pub fn hermite_from_value(v: &Value, path: &str) -> Result<HermiteSeries> {
    let obj = object(v, path)?;
    reject_unknown(obj, path, &["N", "directions", "k", "coeffs", "cap_policy"])?;
    let dirs = directions_from_value(obj, path)?;
    hermite_body(obj, path, dirs)
}

fn hermite_body(obj: &Map<String, Value>, path: &str, dirs: Arc<DirectionSet>) -> Result<HermiteSeries> {
    let cap = uint(field(obj, path, "N")?, &format!("{path}.N"))?;
    let cp = format!("{path}.coeffs");
    let list = array(field(obj, path, "coeffs")?, &cp)?;
    let mut terms = Vec::with_capacity(list.len());
    for (i, e) in list.iter().enumerate() {
        let p = format!("{cp}[{i}]");
        let a = array(e, &p)?;
        if a.len() != 3 {
            return Err(Error::schema(p, "expected [[n_1, ..., n_K], re, im]"));
        }
        let ip = format!("{p}[0]");
        let idx = array(&a[0], &ip)?
            .iter()
            .enumerate()
            .map(|(j, x)| uint(x, &format!("{ip}[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        if idx.len() != dirs.len() {
            return Err(Error::schema(
                ip,
                format!("multi-index has {} entries for {} directions", idx.len(), dirs.len()),
            ));
        }
        let n = MultiIndex::from_slice(&idx).map_err(|e| Error::schema(&ip, e.to_string()))?;
        if n.degree() > cap {
            return Err(Error::schema(ip, format!("degree {} exceeds N = {cap}", n.degree())));
        }
        let c = C::new(number(&a[1], &format!("{p}[1]"))?, number(&a[2], &format!("{p}[2]"))?);
        terms.push((n, c));
    }
    let mut h = HermiteSeries::from_terms(dirs, cap, terms).map_err(|e| Error::schema(&cp, e.to_string()))?;
    match obj.get("cap_policy").map(|p| p.as_str()) {
        None | Some(Some("strict")) => {}
        Some(Some("grow")) => h = h.grow(),
        Some(_) => {
            return Err(Error::schema(
                format!("{path}.cap_policy"),
                "expected \"strict\" or \"grow\"",
            ))
        }
    }
    Ok(h)
}

// ----------------------------------------------------------- field state

fn component_value(h: &HermiteSeries) -> Value {
    let full = hermite_to_value(h);
    json!({"N": full["N"], "coeffs": full["coeffs"]})
}

pub fn state_to_value(s: &FieldState) -> Value {
    let d = s.dirs();
    json!({
        "directions": directions_value(d),
        "k": d.k(),
        "psi": component_value(&s.psi),
        "v": component_value(&s.v),
        "lambdas": s.lambdas.iter().map(component_value).collect::<Vec<_>>(),
        "lambda_vs": s.lambda_vs.iter().map(component_value).collect::<Vec<_>>(),
        "active": s.active,
    })
}

pub fn state_from_value(v: &Value, path: &str) -> Result<FieldState> {
    let obj = object(v, path)?;
    reject_unknown(obj, path, &["directions", "k", "psi", "v", "lambdas", "lambda_vs", "active"])?;
    let dirs = directions_from_value(obj, path)?;
    let comp = |val: &Value, p: &str| -> Result<HermiteSeries> {
        let o = object(val, p)?;
        reject_unknown(o, p, &["N", "coeffs"])?;
        hermite_body(o, p, dirs.clone())
    };
    let list = |name: &str| -> Result<Vec<HermiteSeries>> {
        let p = format!("{path}.{name}");
        array(field(obj, path, name)?, &p)?
            .iter()
            .enumerate()
            .map(|(i, x)| comp(x, &format!("{p}[{i}]")))
            .collect()
    };
    let psi = comp(field(obj, path, "psi")?, &format!("{path}.psi"))?;
    let vel = comp(field(obj, path, "v")?, &format!("{path}.v"))?;
    let ap = format!("{path}.active");
    let active = array(field(obj, path, "active")?, &ap)?
        .iter()
        .enumerate()
        .map(|(i, x)| uint(x, &format!("{ap}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    FieldState::new(psi, vel, list("lambdas")?, list("lambda_vs")?, active)
        .map_err(|e| Error::schema(path, e.to_string()))
}

// ----------------------------------------------------------------- orbits

pub fn orbit_to_value(o: &OrbitParams) -> Value {
    json!({
        "kind": match o.kind { OrbitKind::Massive => "massive", OrbitKind::Massless => "massless" },
        "m": o.m,
        "chi_max": o.chi_max,
        "n_chi": o.n_chi,
        "n_sphere": o.n_sphere,
    })
}

pub fn orbit_from_value(v: &Value, path: &str) -> Result<OrbitParams> {
    let obj = object(v, path)?;
    reject_unknown(obj, path, &["kind", "m", "chi_max", "n_chi", "n_sphere"])?;
    let kp = format!("{path}.kind");
    let kind = match field(obj, path, "kind")?.as_str() {
        Some("massive") => OrbitKind::Massive,
        Some("massless") => OrbitKind::Massless,
        _ => return Err(Error::schema(kp, "expected \"massive\" or \"massless\"")),
    };
    let p = OrbitParams {
        kind,
        m: number(field(obj, path, "m")?, &format!("{path}.m"))?,
        chi_max: number(field(obj, path, "chi_max")?, &format!("{path}.chi_max"))?,
        n_chi: uint(field(obj, path, "n_chi")?, &format!("{path}.n_chi"))?,
        n_sphere: uint(field(obj, path, "n_sphere")?, &format!("{path}.n_sphere"))?,
    };
    OrbitQuadrature::from_params(&p).map_err(|e| Error::schema(path, e.to_string()))?;
    Ok(p)
}

pub fn field_to_value(orbit: &OrbitParams, f: &InducedField) -> Value {
    json!({
        "orbit": orbit_to_value(orbit),
        "values": f.values.iter().map(|c| complex_value(*c)).collect::<Vec<_>>(),
    })
}

pub fn field_from_value(v: &Value, path: &str) -> Result<(OrbitParams, InducedField)> {
    let obj = object(v, path)?;
    reject_unknown(obj, path, &["orbit", "values"])?;
    let orbit = orbit_from_value(field(obj, path, "orbit")?, &format!("{path}.orbit"))?;
    let vp = format!("{path}.values");
    let values = array(field(obj, path, "values")?, &vp)?
        .iter()
        .enumerate()
        .map(|(i, x)| complex(x, &format!("{vp}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let n = OrbitQuadrature::from_params(&orbit)?.len();
    if values.len() != n {
        return Err(Error::schema(vp, format!("expected {n} values, found {}", values.len())));
    }
    Ok((orbit, InducedField { values }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(doc: &Document) -> Document {
        let back = Document::parse(&doc.to_string_pretty()).unwrap();
        assert!(doc.bit_identical(&back));
        back
    }

    #[test]
    fn sphere_and_supermomentum() {
        let mut f = SphereFunction::zeros(3);
        f.set(2, -1, 0.1 + 0.2);
        f.set(3, 3, -1e-300);
        f.set(0, 0, -0.0);
        let back = rt(&Document::Sphere(f.clone()));
        assert_eq!(back, Document::Sphere(f.clone()));
        let b = Supermomentum::from_function(&f);
        assert!(matches!(rt(&Document::Super(b)), Document::Super(_)));
    }

    #[test]
    fn hermite_with_complex_coefficients() {
        let d = Arc::new(DirectionSet::with_st(&[(2, 0), (3, 1)], 2.5).unwrap());
        let h = HermiteSeries::from_terms(
            d.clone(),
            4,
            [
                (MultiIndex::from_slice(&[1, 0, 0, 0, 2, 1]).unwrap(), C::new(1.0 / 3.0, -2.0)),
                (MultiIndex::zero(), C::new(0.0, std::f64::consts::PI)),
            ],
        )
        .unwrap();
        assert_eq!(rt(&Document::Hermite(h.clone())), Document::Hermite(h));
    }

    #[test]
    fn schema_errors_name_the_path() {
        let e = Document::parse(r#"{"L_max": 2, "coeffs": [[1, 0, "x"]]}"#).unwrap_err();
        assert_eq!(e.to_string(), "schema error at $.coeffs[0][2]: expected a number");
        let e = Document::parse(r#"{"L_max": 1, "coeffs": [[2, 0, 1.0]]}"#).unwrap_err();
        assert!(e.to_string().contains("$.coeffs[0]"));
        let e = Document::parse(r#"{"N": 2, "directions": [[0,0],[1,-1],[1,0],[1,1]], "k": 2, "coeffs": [[[1,0,0], 1, 0]]}"#)
            .unwrap_err();
        assert!(e.to_string().contains("$.coeffs[0][0]"));
        assert!(Document::parse(r#"{"L_max": 2, "coeffs": [[1, 0, 1.0]"#).is_err());
        let e = Document::parse(r#"{"lambda": [[1,0],[0,0],[0,0]], "f": {"L_max": 0, "coeffs": []}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("$.lambda"));
    }

    #[test]
    fn orbit_and_field() {
        let p = OrbitParams {
            kind: OrbitKind::Massless,
            m: 1.0,
            chi_max: 1.5,
            n_chi: 3,
            n_sphere: 2,
        };
        rt(&Document::Orbit(p));
        let o = OrbitQuadrature::from_params(&p).unwrap();
        let field = InducedField::from_fn(&o, |q| C::new(q[0], -q[3]));
        rt(&Document::Field { orbit: p, field });
    }
}
