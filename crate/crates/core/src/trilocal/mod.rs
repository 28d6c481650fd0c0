//! Discrete trilocal models: three independent sources with finite alphabets
//! and one response table per party giving `P(output = +1)`.
//!
//! Party A sees sources (beta, gamma), B sees (alpha, gamma) and C sees
//! (alpha, beta). Response tables are indexed in that order:
//! `resp_a[beta][gamma]`, `resp_b[alpha][gamma]`, `resp_c[alpha][beta]`.

mod models;
mod roots;
mod search;

pub use models::{
    binary_pqr_behavior, binary_pqr_model, depolarize, depolarize_model, model_e1e3_zero,
    model_e2_minus_third, model_max_e1, random_rational_model, uniform_bits_model, Resolution,
};
pub use roots::{bisect, real_roots};
pub use search::{search, search_with, SearchConfig, SearchOutcome, SearchTarget};

use serde_json::{json, Value};

use crate::correlators::{
    rational_from_json, Sign, TriangleBehavior, TriangleDistribution, TriangleOutcome,
};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, Rational, Scalar};

pub const MAX_ALPHABET: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct TrilocalModel<T = Rational> {
    pub d: usize,
    /// Source distributions in the order alpha, beta, gamma.
    pub dists: [Vec<T>; 3],
    pub resp_a: Vec<Vec<T>>,
    pub resp_b: Vec<Vec<T>>,
    pub resp_c: Vec<Vec<T>>,
}

impl<T: Scalar> TrilocalModel<T> {
    pub fn new(
        dists: [Vec<T>; 3],
        resp_a: Vec<Vec<T>>,
        resp_b: Vec<Vec<T>>,
        resp_c: Vec<Vec<T>>,
    ) -> Result<Self> {
        let model = Self {
            d: dists[0].len(),
            dists,
            resp_a,
            resp_b,
            resp_c,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 || d > MAX_ALPHABET {
            return Err(Error::InvalidModel(format!(
                "alphabet size {d} outside 1..={MAX_ALPHABET}"
            )));
        }
        let tol = T::tolerance();
        for (name, dist) in ["alpha", "beta", "gamma"].iter().zip(&self.dists) {
            if dist.len() != d {
                return Err(Error::InvalidModel(format!(
                    "{name} has {} entries, expected {d}",
                    dist.len()
                )));
            }
            if dist.iter().any(|p| *p < -tol.clone()) {
                return Err(Error::InvalidModel(format!("{name} has a negative weight")));
            }
            let total = dist.iter().cloned().fold(T::zero(), |a, b| a + b);
            if (total.clone() - T::one()).magnitude() > tol {
                return Err(Error::InvalidModel(format!("{name} sums to {total:?}")));
            }
        }
        for (name, table) in [
            ("respA", &self.resp_a),
            ("respB", &self.resp_b),
            ("respC", &self.resp_c),
        ] {
            if table.len() != d || table.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidModel(format!("{name} must be {d}x{d}")));
            }
            let unit = |v: &T| *v >= -tol.clone() && *v <= T::one() + tol.clone();
            if !table.iter().flatten().all(unit) {
                return Err(Error::InvalidModel(format!(
                    "{name} has an entry outside [0,1]"
                )));
            }
        }
        Ok(())
    }

    /// The output distribution, summing over all hidden-variable triples.
    pub fn evaluate(&self) -> TriangleDistribution<T> {
        let mut probs: [T; 8] = std::array::from_fn(|_| T::zero());
        let [mu, nu, om] = &self.dists;
        let pick = |p: &T, s: Sign| match s {
            Sign::Plus => p.clone(),
            Sign::Minus => T::one() - p.clone(),
        };
        for (al, wa) in mu.iter().enumerate() {
            for (be, wb) in nu.iter().enumerate() {
                for (ga, wc) in om.iter().enumerate() {
                    let w = wa.clone() * wb.clone() * wc.clone();
                    if w.is_zero() {
                        continue;
                    }
                    let (fa, fb, fc) = (
                        &self.resp_a[be][ga],
                        &self.resp_b[al][ga],
                        &self.resp_c[al][be],
                    );
                    for (i, slot) in probs.iter_mut().enumerate() {
                        let o = TriangleOutcome::from_index(i);
                        *slot = slot.clone()
                            + w.clone() * pick(fa, o.a) * pick(fb, o.b) * pick(fc, o.c);
                    }
                }
            }
        }
        TriangleDistribution { probs }
    }

    /// Correlators computed directly from `2 f - 1` products.
    pub fn behavior(&self) -> TriangleBehavior<T> {
        let two = T::from_int(2);
        let m = |f: &T| two.clone() * f.clone() - T::one();
        let mut acc: [T; 7] = std::array::from_fn(|_| T::zero());
        let [mu, nu, om] = &self.dists;
        for (al, wa) in mu.iter().enumerate() {
            for (be, wb) in nu.iter().enumerate() {
                for (ga, wc) in om.iter().enumerate() {
                    let w = wa.clone() * wb.clone() * wc.clone();
                    if w.is_zero() {
                        continue;
                    }
                    let a = m(&self.resp_a[be][ga]);
                    let b = m(&self.resp_b[al][ga]);
                    let c = m(&self.resp_c[al][be]);
                    let terms = [
                        a.clone(),
                        b.clone(),
                        c.clone(),
                        a.clone() * b.clone(),
                        b.clone() * c.clone(),
                        a.clone() * c.clone(),
                        a * b * c,
                    ];
                    for (s, t) in acc.iter_mut().zip(terms) {
                        *s = s.clone() + w.clone() * t;
                    }
                }
            }
        }
        TriangleBehavior::from_fields(acc)
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> TrilocalModel<U> {
        let table = |t: &Vec<Vec<T>>| t.iter().map(|r| r.iter().map(&f).collect()).collect();
        TrilocalModel {
            d: self.d,
            dists: std::array::from_fn(|i| self.dists[i].iter().map(&f).collect()),
            resp_a: table(&self.resp_a),
            resp_b: table(&self.resp_b),
            resp_c: table(&self.resp_c),
        }
    }

    pub fn to_json(&self, fmt: impl Fn(&T) -> Value) -> Value {
        let row = |r: &Vec<T>| Value::Array(r.iter().map(&fmt).collect());
        let table = |t: &Vec<Vec<T>>| Value::Array(t.iter().map(row).collect());
        json!({
            "d": self.d,
            "dist": self.dists.iter().map(row).collect::<Vec<_>>(),
            "respA": table(&self.resp_a),
            "respB": table(&self.resp_b),
            "respC": table(&self.resp_c),
        })
    }
}

impl TrilocalModel<Rational> {
    pub fn to_f64(&self) -> TrilocalModel<f64> {
        self.map(Scalar::to_f64)
    }

    pub fn to_json_exact(&self) -> Value {
        self.to_json(|v| Value::String(format_rational(v)))
    }

    /// Reads `{"d", "dist", "respA", "respB", "respC"}` with exact entries.
    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| {
            v.get(k)
                .ok_or_else(|| Error::Parse(format!("model is missing '{k}'")))
        };
        let vector = |v: &Value| -> Result<Vec<Rational>> {
            v.as_array()
                .ok_or_else(|| Error::Parse("expected an array".into()))?
                .iter()
                .map(rational_from_json)
                .collect()
        };
        let matrix = |v: &Value| -> Result<Vec<Vec<Rational>>> {
            v.as_array()
                .ok_or_else(|| Error::Parse("expected an array of arrays".into()))?
                .iter()
                .map(vector)
                .collect()
        };
        let d = field("d")?
            .as_u64()
            .ok_or_else(|| Error::Parse("'d' must be a positive integer".into()))?
            as usize;
        let dists = matrix(field("dist")?)?;
        let dists: [Vec<Rational>; 3] = dists
            .try_into()
            .map_err(|_| Error::Parse("'dist' must have three rows".into()))?;
        let model = Self {
            d,
            dists,
            resp_a: matrix(field("respA")?)?,
            resp_b: matrix(field("respB")?)?,
            resp_c: matrix(field("respC")?)?,
        };
        model.validate()?;
        Ok(model)
    }
}

impl TrilocalModel<f64> {
    pub fn to_json_f64(&self) -> Value {
        self.to_json(|v| json!(v))
    }
}

/// Correlators `[EA, EB, EC, EAB, EBC, EAC, EABC]` of a floating model,
/// without allocation.
pub fn correlators_f64(m: &TrilocalModel<f64>) -> [f64; 7] {
    let mut acc = [0.0; 7];
    let [mu, nu, om] = &m.dists;
    for (al, &wa) in mu.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        for (be, &wb) in nu.iter().enumerate() {
            let wab = wa * wb;
            if wab == 0.0 {
                continue;
            }
            let c = 2.0 * m.resp_c[al][be] - 1.0;
            for (ga, &wc) in om.iter().enumerate() {
                let w = wab * wc;
                let a = 2.0 * m.resp_a[be][ga] - 1.0;
                let b = 2.0 * m.resp_b[al][ga] - 1.0;
                let ab = a * b;
                acc[0] += w * a;
                acc[1] += w * b;
                acc[2] += w * c;
                acc[3] += w * ab;
                acc[4] += w * b * c;
                acc[5] += w * a * c;
                acc[6] += w * ab * c;
            }
        }
    }
    acc
}

/// A one-letter model that outputs `+1` with the given probabilities.
pub fn constant_model<T: Scalar>(pa: T, pb: T, pc: T) -> TrilocalModel<T> {
    TrilocalModel {
        d: 1,
        dists: std::array::from_fn(|_| vec![T::one()]),
        resp_a: vec![vec![pa]],
        resp_b: vec![vec![pb]],
        resp_c: vec![vec![pc]],
    }
}
