//! JSON wire format. Complex numbers are [re, im] pairs; floats print with 17 significant digits.

use crate::error::{QspError, Result};
use crate::functionals::{HankelDets, MomentTable, ToeplitzDets};
use crate::polycore::{BivarPoly, ComplexPoly, LaurentPoly};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyWire {
    coeffs: Vec<[f64; 2]>,
    #[serde(default)]
    min_exp: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermWire {
    i: usize,
    j: usize,
    c: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BivarWire {
    terms: Vec<TermWire>,
}

fn bad(what: &str, e: impl std::fmt::Display) -> QspError {
    QspError::InvalidInput(format!("{what}: {e}"))
}

fn pair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

fn check_finite(cs: &[[f64; 2]]) -> Result<()> {
    if cs.iter().flatten().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(QspError::InvalidInput("non-finite coefficient".into()))
    }
}

pub fn laurent_from_json(v: &Value) -> Result<LaurentPoly> {
    let w: PolyWire = serde_json::from_value(v.clone()).map_err(|e| bad("polynomial", e))?;
    check_finite(&w.coeffs)?;
    Ok(LaurentPoly::new(w.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect(), w.min_exp))
}

/// Ordinary polynomial; a nonzero `min_exp` is rejected.
pub fn poly_from_json(v: &Value) -> Result<ComplexPoly> {
    let l = laurent_from_json(v)?;
    if l.min_exp != 0 {
        return Err(QspError::InvalidInput(format!("expected a polynomial, got min_exp = {}", l.min_exp)));
    }
    Ok(ComplexPoly::new(l.coeffs))
}

pub fn poly_to_json(p: &ComplexPoly) -> Value {
    json!({ "coeffs": p.coeffs().iter().map(|c| pair(*c)).collect::<Vec<_>>() })
}

pub fn laurent_to_json(l: &LaurentPoly) -> Value {
    json!({ "coeffs": l.coeffs.iter().map(|c| pair(*c)).collect::<Vec<_>>(), "min_exp": l.min_exp })
}

pub fn bivar_from_json(v: &Value) -> Result<BivarPoly> {
    let w: BivarWire = serde_json::from_value(v.clone()).map_err(|e| bad("bivariate polynomial", e))?;
    let mut p = BivarPoly::new();
    for t in &w.terms {
        check_finite(&[t.c])?;
        p.add_term(t.i, t.j, C64::new(t.c[0], t.c[1]));
    }
    Ok(p)
}

pub fn bivar_to_json(p: &BivarPoly) -> Value {
    let terms: Vec<TermWire> = p.terms().map(|(&(i, j), c)| TermWire { i, j, c: pair(*c) }).collect();
    json!({ "terms": terms })
}

pub fn moments_to_json(m: &MomentTable) -> Value {
    Value::Array(m.entries().into_iter().map(|(k, c)| json!({ "k": k, "c": pair(c) })).collect())
}

pub fn hankel_dets_to_json(d: &HankelDets) -> Value {
    json!({
        "order": d.order,
        "h": d.h.map(pair),
        "hk": d.hk.iter().map(|c| pair(*c)).collect::<Vec<_>>(),
        "quasi_definite": d.quasi_definite,
    })
}

pub fn toeplitz_dets_to_json(d: &ToeplitzDets) -> Value {
    json!({
        "order": d.order,
        "h": pair(d.h),
        "h_plus": pair(d.h_plus),
        "h_minus": pair(d.h_minus),
        "quasi_definite": d.quasi_definite,
    })
}

/// Parses a JSON argument given inline or as a path to a file holding it.
pub fn load_json_arg(s: &str) -> Result<Value> {
    let t = s.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| bad(s, e))?
    };
    serde_json::from_str(&text).map_err(|e| bad("JSON", e))
}

/// Prints every float as `{:.16e}`; non-finite values become null upstream.
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(v: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    v.serialize(&mut ser).expect("serializing to memory");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}
