//! Closed-form NSI inequalities on triangle correlators and the Finner
//! inequality on triangle distributions.
//!
//! Every check is phrased as `lhs <= rhs` and reports `margin = rhs - lhs`.
//! All checks are generic over [`Scalar`], so exact rational, exact
//! `Q(sqrt 2)` and floating inputs share one implementation.

use serde::Serialize;

use crate::correlators::{TriangleBehavior, TriangleDistribution, TriangleOutcome};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Proven,
    /// Evaluated for reference only; never used on its own to exclude a
    /// behavior.
    Conjectured,
    /// The inequality is proven only for vanishing single-party marginals
    /// and the input has a nonzero one.
    #[serde(rename = "out-of-scope")]
    OutOfScope,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IneqReport<T = crate::scalar::Rational> {
    pub name: String,
    pub lhs: T,
    pub rhs: T,
    pub margin: T,
    pub satisfied: bool,
    pub status: Status,
}

impl<T: Scalar> IneqReport<T> {
    /// `satisfied` is `margin >= -tolerance`, exact for exact scalars.
    pub fn new(name: impl Into<String>, lhs: T, rhs: T, status: Status) -> Self {
        let margin = rhs.clone() - lhs.clone();
        let satisfied = margin >= -T::tolerance();
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            satisfied,
            status,
        }
    }

    pub fn to_json(&self, fmt: impl Fn(&T) -> String) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "lhs": fmt(&self.lhs),
            "rhs": fmt(&self.rhs),
            "margin": fmt(&self.margin),
            "margin_f64": self.margin.to_f64(),
            "satisfied": self.satisfied,
            "status": self.status,
        })
    }
}

fn sq<T: Scalar>(x: T) -> T {
    x.clone() * x
}

/// The pair correlators in the order AB, BC, AC with their labels.
fn pairs<T: Scalar>(b: &TriangleBehavior<T>) -> [(&'static str, T); 3] {
    [
        ("AB", b.e_ab.clone()),
        ("BC", b.e_bc.clone()),
        ("AC", b.e_ac.clone()),
    ]
}

/// Status of a check that holds only at zero marginals.
fn zero_marginal_status<T: Scalar>(b: &TriangleBehavior<T>) -> Status {
    if [&b.e_a, &b.e_b, &b.e_c].iter().all(|e| e.is_zero()) {
        Status::Proven
    } else {
        Status::OutOfScope
    }
}

/// `(1 + s E_XY)^2 - E_YZ^2 - E_XZ^2 >= 0` for each pair `XY` and sign `s`.
/// Proven for vanishing marginals; other inputs are reported as out of scope.
pub fn check_single_family<T: Scalar>(b: &TriangleBehavior<T>) -> Vec<IneqReport<T>> {
    let status = zero_marginal_status(b);
    let p = pairs(b);
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        let others = (0..3)
            .filter(|&j| j != i)
            .fold(T::zero(), |acc, j| acc + sq(p[j].1.clone()));
        for (sign, s) in [("+", T::one()), ("-", -T::one())] {
            let rhs = sq(T::one() + s * p[i].1.clone());
            out.push(IneqReport::new(
                format!("single[{sign}{}]", p[i].0),
                others.clone(),
                rhs,
                status,
            ));
        }
    }
    out
}

/// `(1+E_AB)^2 + (1+E_BC)^2 + (1+E_AC)^2 <= 6`, proven for vanishing marginals.
pub fn check_nice<T: Scalar>(b: &TriangleBehavior<T>) -> IneqReport<T> {
    let lhs = pairs(b)
        .into_iter()
        .fold(T::zero(), |acc, (_, e)| acc + sq(T::one() + e));
    IneqReport::new("nice", lhs, T::from_int(6), zero_marginal_status(b))
}

/// `(1 + 2|E1| + E2)^2 <= 2 (1 + |E1|)^3` for symmetric behaviors.
pub fn check_nice2<T: Scalar>(e1: &T, e2: &T) -> IneqReport<T> {
    let a = e1.magnitude();
    let lhs = sq(T::one() + T::from_int(2) * a.clone() + e2.clone());
    let rhs = T::from_int(2) * (T::one() + a).powu(3);
    IneqReport::new("nice2", lhs, rhs, Status::Proven)
}

/// `sum over pairs XY of (1 + |E_X| + |E_Y| + E_XY)^2 <= 6 prod_X (1 + |E_X|)`,
/// with the pair correlator entering without absolute value.
pub fn check_conjecture<T: Scalar>(b: &TriangleBehavior<T>) -> IneqReport<T> {
    let [ma, mb, mc] = [b.e_a.magnitude(), b.e_b.magnitude(), b.e_c.magnitude()];
    let term = |x: &T, y: &T, e: &T| sq(T::one() + x.clone() + y.clone() + e.clone());
    let lhs = term(&ma, &mb, &b.e_ab) + term(&mb, &mc, &b.e_bc) + term(&ma, &mc, &b.e_ac);
    let rhs = T::from_int(6) * (T::one() + ma) * (T::one() + mb) * (T::one() + mc);
    IneqReport::new("conjecture", lhs, rhs, Status::Conjectured)
}

/// `E_AB + E_BC + E_AC >= -1`, from `p(+++) + p(---) >= 0`.
pub fn check_pair_sum<T: Scalar>(b: &TriangleBehavior<T>) -> IneqReport<T> {
    let sum = b.e_ab.clone() + b.e_bc.clone() + b.e_ac.clone();
    IneqReport::new("pair-sum", -sum, T::one(), Status::Proven)
}

/// `p(abc) <= sqrt(pA(a) pB(b) pC(c))` for every outcome, compared after
/// squaring both sides: `lhs = p(abc)^2`, `rhs = pA pB pC`.
pub fn finner_check<T: Scalar>(d: &TriangleDistribution<T>) -> Result<Vec<IneqReport<T>>> {
    if !d.is_normalized() {
        return Err(Error::NotNormalized {
            total: format!("{:?}", d.total()),
        });
    }
    let plus = d.marginals(crate::correlators::Sign::Plus);
    let minus = d.marginals(crate::correlators::Sign::Minus);
    let pick = |party: usize, s: crate::correlators::Sign| match s {
        crate::correlators::Sign::Plus => plus[party].clone(),
        crate::correlators::Sign::Minus => minus[party].clone(),
    };
    Ok(TriangleOutcome::all()
        .map(|o| {
            let lhs = sq(d.get(o).clone());
            let rhs = pick(0, o.a) * pick(1, o.b) * pick(2, o.c);
            IneqReport::new(format!("finner[{o}]"), lhs, rhs, Status::Proven)
        })
        .collect())
}

/// Weights of `p P_+++ + q P_--- + (1-p-q) P_diff`.
#[derive(Clone, Debug, PartialEq)]
pub struct FinnerFamilyPoint<T = crate::scalar::Rational> {
    p: T,
    q: T,
}

impl<T: Scalar> FinnerFamilyPoint<T> {
    pub fn new(p: T, q: T) -> Result<Self> {
        let unit = |x: &T| *x >= T::zero() && *x <= T::one();
        if !unit(&p) || !unit(&q) || p.clone() + q.clone() > T::one() + T::tolerance() {
            return Err(Error::InvalidConfig(format!(
                "finner point needs p, q in [0,1] with p + q <= 1, got ({p:?}, {q:?})"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &T {
        &self.p
    }

    pub fn q(&self) -> &T {
        &self.q
    }

    /// Closed-form correlators `(E1, E2, E3) = (p-q, (4(p+q)-1)/3, p-q)`.
    pub fn correlators(&self) -> (T, T, T) {
        let d = self.p.clone() - self.q.clone();
        let e2 =
            (T::from_int(4) * (self.p.clone() + self.q.clone()) - T::one()) * T::from_ratio(1, 3);
        (d.clone(), e2, d)
    }
}

/// `P_diff` spreads its weight evenly over the six mixed-sign outcomes.
pub fn finner_pq_distribution<T: Scalar>(pt: &FinnerFamilyPoint<T>) -> TriangleDistribution<T> {
    let rest = (T::one() - pt.p.clone() - pt.q.clone()) * T::from_ratio(1, 6);
    let probs = std::array::from_fn(|i| {
        let o = TriangleOutcome::from_index(i);
        let plus = [o.a, o.b, o.c]
            .iter()
            .filter(|s| **s == crate::correlators::Sign::Plus)
            .count();
        match plus {
            3 => pt.p.clone(),
            0 => pt.q.clone(),
            _ => rest.clone(),
        }
    });
    TriangleDistribution { probs }
}

/// Largest `q` at which the Finner inequality holds for `p_{p,q}`:
/// `1 + p - 2 p^(2/3)`.
pub fn finner_q_bound(p: f64) -> f64 {
    1.0 + p - 2.0 * p.powf(2.0 / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IneqSelection {
    Single,
    Nice,
    Nice2,
    Conjecture,
    Finner,
    All,
}

impl std::str::FromStr for IneqSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "single" => Self::Single,
            "nice" => Self::Nice,
            "nice2" => Self::Nice2,
            "conjecture" => Self::Conjecture,
            "finner" => Self::Finner,
            "all" => Self::All,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown inequality '{other}'"
                )))
            }
        })
    }
}

/// Runs the selected checks. `nice2` needs a symmetric behavior and
/// `finner` a nonnegative distribution; under `all` they are skipped when
/// inapplicable, and requested alone they are reported as errors.
pub fn run_checks<T: Scalar>(
    b: &TriangleBehavior<T>,
    sel: IneqSelection,
) -> Result<Vec<IneqReport<T>>> {
    let mut out = Vec::new();
    let want = |s: IneqSelection| sel == s || sel == IneqSelection::All;
    if want(IneqSelection::Single) {
        out.extend(check_single_family(b));
    }
    if want(IneqSelection::Nice) {
        out.push(check_nice(b));
    }
    if want(IneqSelection::Nice2) {
        let symmetric = b.e_a == b.e_b && b.e_b == b.e_c && b.e_ab == b.e_bc && b.e_bc == b.e_ac;
        if symmetric {
            out.push(check_nice2(&b.e_a, &b.e_ab));
        } else if sel == IneqSelection::Nice2 {
            return Err(Error::InvalidConfig(
                "nice2 applies to symmetric behaviors only".into(),
            ));
        }
    }
    if want(IneqSelection::Conjecture) {
        out.push(check_conjecture(b));
    }
    if want(IneqSelection::Finner) {
        let d = crate::correlators::distribution_from_behavior(b);
        if d.is_nonnegative() {
            out.extend(finner_check(&d)?);
        } else if sel == IneqSelection::Finner {
            return Err(Error::InvalidConfig(
                "finner applies to nonnegative distributions only".into(),
            ));
        }
    }
    Ok(out)
}
