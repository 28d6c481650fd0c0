//! NSI compatibility of a triangle behavior via the hexagon-inflation
//! linear program, with exact witnesses and Farkas certificates.

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::correlators::{
    hexagon_prob, hexagon_terms, triangle_prob, FreeVar, HexagonFreeVars, HexagonOutcome,
    TriangleBehavior, TriangleOutcome,
};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, int, Rational};
use crate::simplex::{Problem, Relation, Solution, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOrigin {
    Hexagon(HexagonOutcome),
    Triangle(TriangleOutcome),
}

/// One constraint `coeffs . F >= rhs`.
#[derive(Clone, Debug)]
pub struct LpRow {
    pub origin: RowOrigin,
    pub coeffs: [Rational; 10],
    pub rhs: Rational,
}

/// Feasibility program over the ten free hexagon correlators: 64 hexagon
/// positivity rows followed by the 8 triangle positivity rows.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub rows: Vec<LpRow>,
}

impl LinearProgram {
    fn to_problem(&self) -> Problem {
        let mut p = Problem::new(vec![VarKind::Free; 10]);
        for row in &self.rows {
            p.push(row.coeffs.to_vec(), Relation::Ge, row.rhs.clone());
        }
        p
    }

    pub fn is_satisfied_by(&self, free: &HexagonFreeVars) -> bool {
        self.rows.iter().all(|row| {
            let lhs: Rational = row
                .coeffs
                .iter()
                .zip(&free.values)
                .map(|(a, f)| a * f)
                .sum();
            lhs >= row.rhs
        })
    }

    /// True iff `y >= 0`, `y^T A = 0` and `y^T b > 0`.
    pub fn certifies_infeasibility(&self, y: &[Rational]) -> bool {
        self.to_problem().verify_farkas(y)
    }
}

/// Builds the program: `64 p(o) = constant + coeffs . F >= 0` becomes
/// `coeffs . F >= -constant`; triangle rows have zero coefficients.
pub fn build_lp(behavior: &TriangleBehavior) -> LinearProgram {
    let mut rows = Vec::with_capacity(72);
    for o in HexagonOutcome::all() {
        let (constant, coeffs) = hexagon_terms(behavior, o);
        rows.push(LpRow {
            origin: RowOrigin::Hexagon(o),
            coeffs,
            rhs: -constant,
        });
    }
    for o in TriangleOutcome::all() {
        rows.push(LpRow {
            origin: RowOrigin::Triangle(o),
            coeffs: std::array::from_fn(|_| Rational::zero()),
            rhs: -triangle_prob(behavior, o) * int(8),
        });
    }
    LinearProgram { rows }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeasibilityResult {
    Feasible {
        witness: HexagonFreeVars,
    },
    /// Nonnegative multipliers, one per LP row.
    Infeasible {
        certificate: Vec<Rational>,
    },
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            FeasibilityResult::Feasible { witness } => {
                let w: serde_json::Map<String, serde_json::Value> = FreeVar::ALL
                    .iter()
                    .map(|v| {
                        (
                            v.name().to_string(),
                            json!(format_rational(witness.get(*v))),
                        )
                    })
                    .collect();
                json!({"status": "feasible", "witness": w})
            }
            FeasibilityResult::Infeasible { certificate } => {
                let rows: Vec<serde_json::Value> = certificate
                    .iter()
                    .enumerate()
                    .filter(|(_, y)| !y.is_zero())
                    .map(|(i, y)| {
                        let origin = if i < 64 {
                            format!("hexagon {}", HexagonOutcome::from_index(i))
                        } else {
                            format!("triangle {}", TriangleOutcome::from_index(i - 64))
                        };
                        json!({"row": i, "origin": origin, "multiplier": format_rational(y)})
                    })
                    .collect();
                json!({"status": "infeasible", "certificate": rows})
            }
        }
    }
}

/// Decides hexagon compatibility exactly.
///
/// Behaviors whose triangle rows are violated are rejected with
/// [`Error::PositivityViolation`]; classify those upstream.
pub fn nsi_feasible(behavior: &TriangleBehavior) -> Result<FeasibilityResult> {
    if let Some(outcome) =
        TriangleOutcome::all().find(|&o| triangle_prob(behavior, o).is_negative())
    {
        return Err(Error::PositivityViolation { outcome });
    }
    let lp = build_lp(behavior);
    let result = match lp.to_problem().feasibility() {
        Solution::Optimal { x, .. } => {
            let witness = HexagonFreeVars {
                values: std::array::from_fn(|k| x[k].clone()),
            };
            debug_assert!(
                HexagonOutcome::all().all(|o| !hexagon_prob(behavior, &witness, o).is_negative())
            );
            FeasibilityResult::Feasible { witness }
        }
        Solution::Infeasible { farkas } => {
            debug_assert!(lp.certifies_infeasibility(&farkas));
            FeasibilityResult::Infeasible {
                certificate: farkas,
            }
        }
        Solution::Unbounded => unreachable!("feasibility problems have a zero objective"),
    };
    Ok(result)
}

/// `E_ABC` maximizing the smallest triangle probability for the given
/// one- and two-body correlators, or `None` when no `E_ABC` in `[-1, 1]`
/// makes every probability nonnegative.
///
/// Each `8 p(abc)` is affine in `E_ABC` with slope `abc`, so the optimum is at
/// an endpoint or where an increasing and a decreasing line cross.
pub fn best_three_body(behavior: &TriangleBehavior) -> Option<Rational> {
    let mut base = behavior.clone();
    base.e_abc = Rational::zero();
    let lines: Vec<(Rational, i64)> = TriangleOutcome::all()
        .map(|o| {
            let slope = o.a.value() * o.b.value() * o.c.value();
            (triangle_prob(&base, o) * int(8), slope)
        })
        .collect();
    let min_at = |t: &Rational| {
        lines
            .iter()
            .map(|(c, s)| c + t * int(*s))
            .min()
            .expect("eight lines")
    };
    let mut candidates = vec![-Rational::one(), Rational::one()];
    for (cu, su) in &lines {
        for (cd, sd) in &lines {
            if *su == 1 && *sd == -1 {
                // cu + t = cd - t
                let t = (cd - cu) / int(2);
                if t >= -Rational::one() && t <= Rational::one() {
                    candidates.push(t);
                }
            }
        }
    }
    candidates.sort();
    candidates.dedup();
    let mut best: Option<(Rational, Rational)> = None;
    for t in candidates {
        let m = min_at(&t);
        if best.as_ref().is_none_or(|(bm, _)| m > *bm) {
            best = Some((m, t));
        }
    }
    best.filter(|(m, _)| !m.is_negative()).map(|(_, t)| t)
}

/// Symmetric behavior `(e1, e2)` completed with the slack-maximizing
/// three-body correlator, if one exists.
pub fn symmetric_with_best_three_body(e1: &Rational, e2: &Rational) -> Option<TriangleBehavior> {
    let mut b = TriangleBehavior::symmetric(e1.clone(), e2.clone(), Rational::zero());
    let e3 = best_three_body(&b)?;
    b.e_abc = e3;
    Some(b)
}

fn symmetric_feasible(e1: &Rational, e2: &Rational) -> bool {
    match symmetric_with_best_three_body(e1, e2) {
        Some(b) => nsi_feasible(&b).map(|r| r.is_feasible()).unwrap_or(false),
        None => false,
    }
}

/// Largest symmetric `E_2` for which the program is feasible at `E_1 = e1`,
/// by bisection to within `tol`; returns the midpoint of the final bracket.
///
/// The lower end of the bracket is `e1^2`, the correlation of independent
/// parties with bias `e1`, which is trilocal and therefore feasible.
pub fn max_feasible_e2(e1: &Rational, tol: &Rational) -> Result<Rational> {
    if e1.abs() > Rational::one() {
        return Err(Error::InvalidConfig(format!(
            "|e1| = {} exceeds 1",
            e1.abs()
        )));
    }
    if !tol.is_positive() {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let mut lo = e1 * e1;
    let mut hi = Rational::one();
    if symmetric_feasible(e1, &hi) {
        return Ok(hi);
    }
    debug_assert!(symmetric_feasible(e1, &lo));
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) / int(2);
        if symmetric_feasible(e1, &mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / int(2))
}

/// Closed-form upper bound `sqrt(2 (1+|e1|)^3) - 1 - 2|e1|`.
pub fn nice2_bound(e1: f64) -> f64 {
    let a = e1.abs();
    (2.0 * (1.0 + a).powi(3)).sqrt() - 1.0 - 2.0 * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Scalar};

    #[test]
    fn zero_behavior_rows() {
        let lp = build_lp(&TriangleBehavior::zero());
        assert_eq!(lp.rows.len(), 72);
        for row in &lp.rows[..64] {
            assert_eq!(row.rhs, int(-1));
            assert!(row.coeffs.iter().all(|c| c.abs() <= int(2)));
        }
        for row in &lp.rows[64..] {
            assert_eq!(row.rhs, int(-1));
            assert!(row.coeffs.iter().all(Zero::is_zero));
        }
        assert_eq!(
            nsi_feasible(&TriangleBehavior::zero()).unwrap(),
            FeasibilityResult::Feasible {
                witness: HexagonFreeVars::zero()
            }
        );
    }

    #[test]
    fn global_flip_negates_odd_degree_coefficients() {
        let b = TriangleBehavior::symmetric(rat(1, 5), rat(-1, 7), rat(1, 3));
        let lp = build_lp(&b);
        for o in HexagonOutcome::all() {
            let row = &lp.rows[o.index()];
            let flipped = &lp.rows[o.flipped().index()];
            for v in FreeVar::ALL {
                let (x, y) = (&row.coeffs[v.index()], &flipped.coeffs[v.index()]);
                // F3-type columns also pick up even E_X F3 couplings
                match v.degree() {
                    3 => {}
                    5 => assert_eq!(x, &-y.clone()),
                    _ => assert_eq!(x, y),
                }
            }
        }
        let zero_marg = TriangleBehavior::zero_marginal(rat(1, 5), rat(-1, 7), rat(2, 9), int(0));
        let lp = build_lp(&zero_marg);
        for o in HexagonOutcome::all() {
            for v in FreeVar::ALL {
                let x = &lp.rows[o.index()].coeffs[v.index()];
                let y = &lp.rows[o.flipped().index()].coeffs[v.index()];
                if v.degree() % 2 == 1 {
                    assert_eq!(x, &-y.clone());
                } else {
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn symmetric_rows_match_direct_substitution() {
        let e1 = rat(1, 3);
        let e2 = rat(1, 4);
        let b = TriangleBehavior::symmetric(e1.clone(), e2.clone(), int(0));
        let lp = build_lp(&b);
        // outcome all +1: every character is +1
        let row = &lp.rows[0];
        let expected_constant = int(1)
            + int(6) * &e1
            + int(6) * &e1 * &e1
            + int(3) * &e1 * &e1
            + int(2) * &e1 * &e1 * &e1
            + int(6) * &e2
            + int(12) * &e1 * &e2
            + int(3) * &e2 * &e2;
        assert_eq!(row.rhs, -expected_constant);
        assert_eq!(row.coeffs[FreeVar::F3.index()], int(2) + int(2) * &e1);
        assert_eq!(row.coeffs[FreeVar::F6.index()], int(1));
    }

    #[test]
    fn e2_bound_at_zero_marginals() {
        let infeasible = TriangleBehavior::symmetric(int(0), rat(42, 100), int(0));
        match nsi_feasible(&infeasible).unwrap() {
            FeasibilityResult::Infeasible { certificate } => {
                assert!(build_lp(&infeasible).certifies_infeasibility(&certificate));
            }
            other => panic!("{other:?}"),
        }
        let feasible = TriangleBehavior::symmetric(int(0), rat(41, 100), int(0));
        match nsi_feasible(&feasible).unwrap() {
            FeasibilityResult::Feasible { witness } => {
                assert!(build_lp(&feasible).is_satisfied_by(&witness));
                for o in HexagonOutcome::all() {
                    assert!(hexagon_prob(&feasible, &witness, o) >= int(0));
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn positivity_violation_is_an_error() {
        let b = TriangleBehavior::zero_marginal(rat(-1, 2), rat(-1, 2), rat(-1, 2), int(0));
        assert!(matches!(
            nsi_feasible(&b),
            Err(Error::PositivityViolation { .. })
        ));
    }

    #[test]
    fn best_three_body_choice() {
        // E1 = 0, E2 = -1/3: p(+++) = (E3)/8 and p(---) = -E3/8 force E3 = 0
        let b = TriangleBehavior::symmetric(int(0), rat(-1, 3), int(0));
        assert_eq!(best_three_body(&b), Some(int(0)));
        let bad = TriangleBehavior::symmetric(int(0), rat(-1, 2), int(0));
        assert_eq!(best_three_body(&bad), None);
        let det = TriangleBehavior::symmetric(int(1), int(1), int(0));
        assert_eq!(best_three_body(&det), Some(int(1)));
    }

    #[test]
    fn max_e2_endpoints() {
        assert_eq!(max_feasible_e2(&int(1), &rat(1, 1000)).unwrap(), int(1));
        assert_eq!(max_feasible_e2(&int(-1), &rat(1, 1000)).unwrap(), int(1));
        let v = max_feasible_e2(&int(0), &rat(1, 1000)).unwrap();
        assert!((v.to_f64() - (2f64.sqrt() - 1.0)).abs() < 1e-3);
        assert!(max_feasible_e2(&int(2), &rat(1, 10)).is_err());
        assert!(max_feasible_e2(&int(0), &int(0)).is_err());
    }
}
