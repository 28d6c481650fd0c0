//! Explicit trilocal constructions and local depolarizing noise.

use rand::Rng;

use super::roots::{poly_eval, real_roots};
use super::TrilocalModel;
use crate::correlators::TriangleBehavior;
use crate::error::{Error, Result};
use crate::scalar::{int, rat, Rational, Scalar};

fn table<T: Clone>(rows: &[&[T]]) -> Vec<Vec<T>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

fn ints(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| int(v)).collect())
        .collect()
}

/// Each source sends a uniform bit; every party outputs `+1` when its two
/// bits agree.
pub fn uniform_bits_model() -> TrilocalModel {
    let half = vec![rat(1, 2), rat(1, 2)];
    let eq = ints(&[&[1, 0], &[0, 1]]);
    TrilocalModel {
        d: 2,
        dists: [half.clone(), half.clone(), half],
        resp_a: eq.clone(),
        resp_b: eq.clone(),
        resp_c: eq,
    }
}

/// Binary sources `alpha ~ (r, 1-r)`, `beta ~ (q, 1-q)`, `gamma ~ (p, 1-p)`;
/// each party outputs `+1` only when both of its sources take the first
/// value. Gives `EA = 2pq - 1`, `EB = 2pr - 1`, `EC = 2qr - 1`.
pub fn binary_pqr_model<T: Scalar>(p: T, q: T, r: T) -> Result<TrilocalModel<T>> {
    let bern = |x: T| vec![x.clone(), T::one() - x];
    let and = table(&[&[T::one(), T::zero()], &[T::zero(), T::zero()]]);
    TrilocalModel::new([bern(r), bern(q), bern(p)], and.clone(), and.clone(), and)
}

/// Closed-form correlators of [`binary_pqr_model`].
pub fn binary_pqr_behavior<T: Scalar>(p: &T, q: &T, r: &T) -> TriangleBehavior<T> {
    let c = |n: i64| T::from_int(n);
    let (pq, pr, qr) = (
        p.clone() * q.clone(),
        p.clone() * r.clone(),
        q.clone() * r.clone(),
    );
    let pqr = pq.clone() * r.clone();
    TriangleBehavior {
        e_a: c(2) * pq.clone() - T::one(),
        e_b: c(2) * pr.clone() - T::one(),
        e_c: c(2) * qr.clone() - T::one(),
        e_ab: T::one() - c(2) * pq.clone() - c(2) * pr.clone() + c(4) * pqr.clone(),
        e_bc: T::one() - c(2) * pr.clone() - c(2) * qr.clone() + c(4) * pqr.clone(),
        e_ac: T::one() - c(2) * pq.clone() - c(2) * qr.clone() + c(4) * pqr.clone(),
        e_abc: c(2) * (pq + pr + qr) - T::one() - c(4) * pqr,
    }
}

/// Binary model with vanishing marginals and all pair correlators `-1/3`.
pub fn model_e2_minus_third() -> TrilocalModel {
    TrilocalModel {
        d: 2,
        dists: [
            vec![rat(1, 3), rat(2, 3)],
            vec![rat(3, 4), rat(1, 4)],
            vec![rat(2, 3), rat(1, 3)],
        ],
        resp_a: ints(&[&[1, 0], &[0, 0]]),
        resp_b: vec![vec![int(0), rat(1, 2)], vec![rat(1, 2), int(1)]],
        resp_c: ints(&[&[1, 1], &[0, 1]]),
    }
}

/// Which candidate polynomial, root and parameter formula produced a model.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub polynomial: String,
    pub root: f64,
    pub formula: String,
    /// Whether the first candidate of each kind was the one that validated.
    pub first_choice: bool,
    pub parameters: Vec<(String, f64)>,
    pub rejected: Vec<String>,
}

impl Resolution {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "polynomial": self.polynomial,
            "root": self.root,
            "formula": self.formula,
            "first_choice": self.first_choice,
            "parameters": self.parameters.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect::<serde_json::Map<_, _>>(),
            "rejected": self.rejected,
        })
    }
}

fn model_from_tables(
    dists: [Vec<f64>; 3],
    a: &[[i64; 3]; 3],
    b: &[[i64; 3]; 3],
    c: &[[i64; 3]; 3],
) -> TrilocalModel<f64> {
    let t = |m: &[[i64; 3]; 3]| {
        m.iter()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    };
    TrilocalModel {
        d: 3,
        dists,
        resp_a: t(a),
        resp_b: t(b),
        resp_c: t(c),
    }
}

const VALIDATION_TOL: f64 = 1e-9;

type XFormula = (&'static str, fn(f64) -> f64);

/// The ternary model maximizing `E1` at `E2 = -1/3`.
///
/// The parameter `y` is a root of a quartic and `x` a cubic in `y`. Several
/// candidate quartics and sign conventions for `x` are tried in a fixed
/// order; the first that yields a valid model with equal marginals, all pair
/// correlators `-1/3` and `E1 = (3y^3 + y^2 + y - 1)/4` is returned along
/// with a record of the choice.
pub fn model_max_e1() -> Result<(TrilocalModel<f64>, Resolution)> {
    let quartics: [(&str, [f64; 5]); 2] = [
        ("9z^4 + 12z^3 - 12z + 1", [9.0, 12.0, 0.0, -12.0, 1.0]),
        (
            "9z^4 + 12z^3 + 6z^2 - 12z + 1",
            [9.0, 12.0, 6.0, -12.0, 1.0],
        ),
    ];
    let x_formulas: [XFormula; 3] = [
        ("x = (-9y^3 - 15y^2 - 7y - 15)/8", |y| {
            (-9.0 * y.powi(3) - 15.0 * y * y - 7.0 * y - 15.0) / 8.0
        }),
        ("x = (-9y^3 - 15y^2 - 7y + 15)/8", |y| {
            (-9.0 * y.powi(3) - 15.0 * y * y - 7.0 * y + 15.0) / 8.0
        }),
        ("x = (9y^3 + 15y^2 + 7y + 15)/8", |y| {
            (9.0 * y.powi(3) + 15.0 * y * y + 7.0 * y + 15.0) / 8.0
        }),
    ];
    let fa = [[1, 0, 1], [0, 0, 0], [1, 1, 1]];
    let fb = [[1, 1, 0], [0, 1, 0], [0, 0, 0]];
    let fc = [[0, 1, 0], [1, 1, 0], [0, 0, 0]];

    let mut rejected = Vec::new();
    for (qi, (qname, coeffs)) in quartics.iter().enumerate() {
        let mut roots = real_roots(coeffs, -10.0, 10.0, 20_000);
        roots.reverse();
        for (ri, &y) in roots.iter().enumerate() {
            for (xi, (xname, xf)) in x_formulas.iter().enumerate() {
                let x = xf(y);
                let tag = format!("{qname} root {y:.6}, {xname} -> x = {x:.6}");
                let dists = [
                    vec![x, 1.0 - x, 0.0],
                    vec![y, (1.0 - y) / 2.0, (1.0 - y) / 2.0],
                    vec![1.0 - x, x, 0.0],
                ];
                let m = model_from_tables(dists, &fa, &fb, &fc);
                if let Err(e) = m.validate() {
                    rejected.push(format!("{tag}: {e}"));
                    continue;
                }
                let b = m.behavior();
                let e1 = (3.0 * y.powi(3) + y * y + y - 1.0) / 4.0;
                let ok = [&b.e_ab, &b.e_bc, &b.e_ac]
                    .iter()
                    .all(|e| (**e + 1.0 / 3.0).abs() < VALIDATION_TOL)
                    && [&b.e_a, &b.e_b, &b.e_c]
                        .iter()
                        .all(|e| (**e - e1).abs() < VALIDATION_TOL);
                if !ok {
                    rejected.push(format!(
                        "{tag}: correlators ({:.6}, {:.6}, {:.6}; {:.6}, {:.6}, {:.6}) do not match",
                        b.e_a, b.e_b, b.e_c, b.e_ab, b.e_bc, b.e_ac
                    ));
                    continue;
                }
                let resolution = Resolution {
                    polynomial: qname.to_string(),
                    root: y,
                    formula: xname.to_string(),
                    first_choice: qi == 0 && ri == 0 && xi == 0,
                    parameters: vec![("x".into(), x), ("y".into(), y), ("E1".into(), e1)],
                    rejected,
                };
                return Ok((m, resolution));
            }
        }
    }
    Err(Error::NoValidRoot(format!(
        "no root/sign combination gives a valid max-E1 model: {}",
        rejected.join("; ")
    )))
}

/// The symmetric ternary model with `E1 = E3 = 0` and `E2 ~ 0.3621`.
///
/// All sources share `(x, y, z)` with `x = 2/3 - z^3/3 - z/2` and
/// `y = 1/3 + z^3/3 - z/2`; `z` is the root in `(0, 1)` of the first
/// candidate quartic for which the single-party and three-party
/// correlators vanish.
pub fn model_e1e3_zero() -> Result<(TrilocalModel<f64>, Resolution)> {
    let quartics: [(&str, [f64; 5]); 2] = [
        ("z^4 - 8z + 3", [1.0, 0.0, 0.0, -8.0, 3.0]),
        ("4z^4 - 8z + 3", [4.0, 0.0, 0.0, -8.0, 3.0]),
    ];
    let f = [[0, 0, 1], [0, 0, 0], [1, 0, 1]];
    let mut rejected = Vec::new();
    for (qi, (qname, coeffs)) in quartics.iter().enumerate() {
        let roots: Vec<f64> = real_roots(coeffs, 0.0, 1.0, 10_000)
            .into_iter()
            .filter(|&z| z > 0.0 && z < 1.0)
            .collect();
        for (ri, &z) in roots.iter().enumerate() {
            let x = 2.0 / 3.0 - z.powi(3) / 3.0 - z / 2.0;
            let y = 1.0 / 3.0 + z.powi(3) / 3.0 - z / 2.0;
            let dist = vec![x, y, z];
            let m = model_from_tables([dist.clone(), dist.clone(), dist], &f, &f, &f);
            let tag = format!("{qname} root {z:.6}");
            if let Err(e) = m.validate() {
                rejected.push(format!("{tag}: {e}"));
                continue;
            }
            let b = m.behavior();
            let ok = [&b.e_a, &b.e_b, &b.e_c, &b.e_abc]
                .iter()
                .all(|e| e.abs() < VALIDATION_TOL);
            if !ok {
                rejected.push(format!("{tag}: E1 = {:.3e}, E3 = {:.3e}", b.e_a, b.e_abc));
                continue;
            }
            let e2_closed = poly_eval(
                &[
                    4.0 / 9.0,
                    0.0,
                    -8.0 / 3.0,
                    8.0 / 9.0,
                    -1.0,
                    16.0 / 3.0,
                    -32.0 / 9.0,
                    1.0,
                ],
                z,
            );
            let resolution = Resolution {
                polynomial: qname.to_string(),
                root: z,
                formula: "x = 2/3 - z^3/3 - z/2, y = 1/3 + z^3/3 - z/2".into(),
                first_choice: qi == 0 && ri == 0,
                parameters: vec![
                    ("x".into(), x),
                    ("y".into(), y),
                    ("z".into(), z),
                    ("E2".into(), b.e_ab),
                    ("E2_closed_form".into(), e2_closed),
                ],
                rejected,
            };
            return Ok((m, resolution));
        }
    }
    Err(Error::NoValidRoot(format!(
        "no root gives E1 = E3 = 0: {}",
        rejected.join("; ")
    )))
}

/// Scales k-body correlators by `eta^k`.
pub fn depolarize<T: Scalar>(b: &TriangleBehavior<T>, eta: &T) -> TriangleBehavior<T> {
    let e2 = eta.clone() * eta.clone();
    let e3 = e2.clone() * eta.clone();
    TriangleBehavior {
        e_a: eta.clone() * b.e_a.clone(),
        e_b: eta.clone() * b.e_b.clone(),
        e_c: eta.clone() * b.e_c.clone(),
        e_ab: e2.clone() * b.e_ab.clone(),
        e_bc: e2.clone() * b.e_bc.clone(),
        e_ac: e2 * b.e_ac.clone(),
        e_abc: e3 * b.e_abc.clone(),
    }
}

/// Each party replaces its output by a fair coin with probability
/// `1 - eta`: every response `f` becomes `eta f + (1 - eta)/2`.
pub fn depolarize_model<T: Scalar>(m: &TrilocalModel<T>, eta: &T) -> Result<TrilocalModel<T>> {
    if *eta < T::zero() || *eta > T::one() {
        return Err(Error::InvalidConfig(format!("eta = {eta:?} outside [0,1]")));
    }
    let noise = (T::one() - eta.clone()) * T::from_ratio(1, 2);
    let f = |t: &Vec<Vec<T>>| -> Vec<Vec<T>> {
        t.iter()
            .map(|r| {
                r.iter()
                    .map(|v| eta.clone() * v.clone() + noise.clone())
                    .collect()
            })
            .collect()
    };
    Ok(TrilocalModel {
        d: m.d,
        dists: m.dists.clone(),
        resp_a: f(&m.resp_a),
        resp_b: f(&m.resp_b),
        resp_c: f(&m.resp_c),
    })
}

/// A model with alphabet `d` whose weights and responses are multiples of
/// `1/den`.
pub fn random_rational_model<R: Rng>(rng: &mut R, d: usize, den: i64) -> TrilocalModel {
    let dist = |rng: &mut R| {
        let mut w: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=den)).collect();
        if w.iter().all(|&v| v == 0) {
            w[rng.gen_range(0..d)] = 1;
        }
        let total: i64 = w.iter().sum();
        w.into_iter().map(|v| rat(v, total)).collect::<Vec<_>>()
    };
    let resp = |rng: &mut R| {
        (0..d)
            .map(|_| (0..d).map(|_| rat(rng.gen_range(0..=den), den)).collect())
            .collect::<Vec<Vec<Rational>>>()
    };
    let dists = [dist(rng), dist(rng), dist(rng)];
    TrilocalModel {
        d,
        dists,
        resp_a: resp(rng),
        resp_b: resp(rng),
        resp_c: resp(rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::behavior_from_distribution;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pqr_closed_form_matches_enumeration() {
        for p in 0..=3 {
            for q in 0..=3 {
                for r in 0..=3 {
                    let (p, q, r) = (rat(p, 3), rat(q, 3), rat(r, 3));
                    let m = binary_pqr_model(p.clone(), q.clone(), r.clone()).unwrap();
                    let enumerated = behavior_from_distribution(&m.evaluate()).unwrap();
                    assert_eq!(enumerated, binary_pqr_behavior(&p, &q, &r));
                }
            }
        }
        let one = binary_pqr_model(int(1), int(1), int(1)).unwrap().behavior();
        assert_eq!(one, TriangleBehavior::symmetric(int(1), int(1), int(1)));
    }

    #[test]
    fn e2_minus_third_is_exact() {
        let m = model_e2_minus_third();
        m.validate().unwrap();
        let d = m.evaluate();
        assert_eq!(d.total(), int(1));
        let b = behavior_from_distribution(&d).unwrap();
        assert_eq!([&b.e_a, &b.e_b, &b.e_c], [&int(0); 3]);
        assert_eq!([&b.e_ab, &b.e_bc, &b.e_ac], [&rat(-1, 3); 3]);
    }

    #[test]
    fn max_e1_model_validates() {
        let (m, res) = model_max_e1().unwrap();
        let b = m.behavior();
        assert!((b.e_ab + 1.0 / 3.0).abs() < 1e-9);
        assert!((b.e_a - 0.1753).abs() < 5e-4);
        assert!(m
            .dists
            .iter()
            .all(|d| (d.iter().sum::<f64>() - 1.0).abs() < 1e-12));
        assert!(!res.first_choice);
        assert!(!res.rejected.is_empty());
    }

    #[test]
    fn e1e3_zero_model_validates() {
        let (m, res) = model_e1e3_zero().unwrap();
        let b = m.behavior();
        assert!(b.e_a.abs() < 1e-9 && b.e_abc.abs() < 1e-9);
        assert!((b.e_ab - 0.3621).abs() < 5e-4);
        assert!((res.root - 0.3861).abs() < 1e-4);
        let sum: f64 = m.dists[0].iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn depolarization() {
        let b = binary_pqr_behavior(&rat(2, 3), &rat(3, 4), &rat(1, 5));
        assert_eq!(depolarize(&b, &int(1)), b);
        assert_eq!(depolarize(&b, &int(0)), TriangleBehavior::zero());
        let m = binary_pqr_model(rat(2, 3), rat(3, 4), rat(1, 5)).unwrap();
        for eta in [rat(1, 2), rat(1, 7), rat(5, 6)] {
            let noisy = depolarize_model(&m, &eta).unwrap();
            noisy.validate().unwrap();
            assert_eq!(noisy.behavior(), depolarize(&b, &eta));
        }
        assert!(depolarize_model(&m, &int(2)).is_err());
    }

    #[test]
    fn random_models_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=3 {
            for _ in 0..20 {
                let m = random_rational_model(&mut rng, d, 6);
                m.validate().unwrap();
                assert_eq!(m.evaluate().total(), int(1));
            }
        }
    }
}
