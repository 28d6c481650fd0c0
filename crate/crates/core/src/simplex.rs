//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Problems are stated as `minimize c.x` subject to rows `a.x >= b` or
//! `a.x = b`, with each variable either free or nonnegative. Infeasible
//! problems come back with a Farkas certificate `y`: `y_i >= 0` on `>=` rows,
//! `sum_i y_i a_ij` is `<= 0` on nonnegative columns and `= 0` on free
//! columns, and `sum_i y_i b_i > 0`.

use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNegative,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub vars: Vec<VarKind>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible { farkas: Vec<Rational> },
    Unbounded,
}

impl Problem {
    pub fn new(vars: Vec<VarKind>) -> Self {
        Self {
            vars,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        debug_assert_eq!(coeffs.len(), self.vars.len());
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn feasibility(&self) -> Solution {
        solve(self, None)
    }

    pub fn minimize(&self, objective: &[Rational]) -> Solution {
        solve(self, Some(objective))
    }

    /// Exact check that `y` certifies infeasibility of this problem.
    pub fn verify_farkas(&self, y: &[Rational]) -> bool {
        if y.len() != self.constraints.len() {
            return false;
        }
        for (yi, c) in y.iter().zip(&self.constraints) {
            if c.relation == Relation::Ge && yi.is_negative() {
                return false;
            }
        }
        for (j, kind) in self.vars.iter().enumerate() {
            let s: Rational = y
                .iter()
                .zip(&self.constraints)
                .map(|(yi, c)| yi * &c.coeffs[j])
                .sum();
            let ok = match kind {
                VarKind::Free => s.is_zero(),
                VarKind::NonNegative => !s.is_positive(),
            };
            if !ok {
                return false;
            }
        }
        let value: Rational = y
            .iter()
            .zip(&self.constraints)
            .map(|(yi, c)| yi * &c.rhs)
            .sum();
        value.is_positive()
    }

    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        if x.len() != self.vars.len() {
            return false;
        }
        let sign_ok = self
            .vars
            .iter()
            .zip(x)
            .all(|(k, v)| *k == VarKind::Free || !v.is_negative());
        sign_ok
            && self.constraints.iter().all(|c| {
                let lhs: Rational = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
                match c.relation {
                    Relation::Ge => lhs >= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                }
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// reduced costs; the last entry holds minus the objective value
    z: Vec<Rational>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let inv = Rational::one() / &self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let support: Vec<usize> = (0..self.rows[r].len())
            .filter(|&k| !self.rows[r][k].is_zero())
            .collect();
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for &k in &support {
                let delta = &f * &pivot_row[k];
                row[k] -= delta;
            }
        }
        if !self.z[col].is_zero() {
            let f = self.z[col].clone();
            for &k in &support {
                let delta = &f * &pivot_row[k];
                self.z[k] -= delta;
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = col;
    }

    /// Runs Bland's rule until optimal. Returns false if unbounded.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool) -> bool {
        let rhs = self.rhs();
        loop {
            let entering = (0..rhs).find(|&j| allowed(j) && self.z[j].is_negative());
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[col];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
    }

    fn set_objective(&mut self, costs: &[Rational]) {
        let rhs = self.rhs();
        let mut z: Vec<Rational> = costs.to_vec();
        z.push(Rational::zero());
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &costs[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for k in 0..=rhs {
                if !row[k].is_zero() {
                    z[k] -= cb * &row[k];
                }
            }
        }
        self.z = z;
    }
}

fn solve(problem: &Problem, objective: Option<&[Rational]>) -> Solution {
    let m = problem.constraints.len();

    // structural columns: free variables are split into (plus, minus)
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(problem.vars.len());
    let mut ncols = 0;
    for kind in &problem.vars {
        match kind {
            VarKind::NonNegative => {
                var_cols.push((ncols, None));
                ncols += 1;
            }
            VarKind::Free => {
                var_cols.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let n_struct = ncols;
    let mut slack_col = vec![None; m];
    for (i, c) in problem.constraints.iter().enumerate() {
        if c.relation == Relation::Ge {
            slack_col[i] = Some(ncols);
            ncols += 1;
        }
    }
    // rows are scaled by sigma so that the right-hand side is nonnegative;
    // `>=` rows with rhs <= 0 start with their slack basic
    let mut sigma = vec![Rational::one(); m];
    let mut needs_artificial = vec![false; m];
    for (i, c) in problem.constraints.iter().enumerate() {
        match c.relation {
            Relation::Ge => {
                if c.rhs.is_positive() {
                    needs_artificial[i] = true;
                } else {
                    sigma[i] = -Rational::one();
                }
            }
            Relation::Eq => {
                needs_artificial[i] = true;
                if c.rhs.is_negative() {
                    sigma[i] = -Rational::one();
                }
            }
        }
    }
    let mut art_col = vec![None; m];
    for i in 0..m {
        if needs_artificial[i] {
            art_col[i] = Some(ncols);
            ncols += 1;
        }
    }

    let mut kinds = vec![ColumnKind::Structural; n_struct];
    kinds.resize(ncols, ColumnKind::Slack);
    for col in art_col.iter().flatten() {
        kinds[*col] = ColumnKind::Artificial;
    }

    let rhs = ncols;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut unit_col = Vec::with_capacity(m);
    for (i, c) in problem.constraints.iter().enumerate() {
        let mut row = vec![Rational::zero(); ncols + 1];
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let a = a * &sigma[i];
            let (plus, minus) = var_cols[j];
            if let Some(minus) = minus {
                row[minus] = -a.clone();
            }
            row[plus] = a;
        }
        if let Some(s) = slack_col[i] {
            row[s] = -sigma[i].clone();
        }
        if let Some(a) = art_col[i] {
            row[a] = Rational::one();
        }
        row[rhs] = &c.rhs * &sigma[i];
        let start = art_col[i]
            .or(slack_col[i])
            .expect("row without a starting column");
        basis.push(start);
        unit_col.push(start);
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        z: Vec::new(),
        basis,
        kinds,
    };

    // phase 1
    let phase1_costs: Vec<Rational> = tab
        .kinds
        .iter()
        .map(|k| match k {
            ColumnKind::Artificial => Rational::one(),
            _ => Rational::zero(),
        })
        .collect();
    tab.set_objective(&phase1_costs);
    tab.optimize(|_| true);
    let infeasibility = -tab.z[rhs].clone();
    if infeasibility.is_positive() {
        let farkas = (0..m)
            .map(|i| {
                let u = unit_col[i];
                &sigma[i] * (&phase1_costs[u] - &tab.z[u])
            })
            .collect();
        return Solution::Infeasible { farkas };
    }

    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if tab.kinds[tab.basis[r]] != ColumnKind::Artificial {
            continue;
        }
        if let Some(col) =
            (0..rhs).find(|&j| tab.kinds[j] != ColumnKind::Artificial && !tab.rows[r][j].is_zero())
        {
            tab.pivot(r, col);
        }
    }

    let not_artificial = |kinds: &[ColumnKind], j: usize| kinds[j] != ColumnKind::Artificial;
    let value_of = |tab: &Tableau| {
        let mut col_val = vec![Rational::zero(); rhs];
        for (i, &b) in tab.basis.iter().enumerate() {
            col_val[b] = tab.rows[i][rhs].clone();
        }
        var_cols
            .iter()
            .map(|&(p, mi)| match mi {
                Some(mi) => &col_val[p] - &col_val[mi],
                None => col_val[p].clone(),
            })
            .collect::<Vec<_>>()
    };

    let Some(objective) = objective else {
        return Solution::Optimal {
            x: value_of(&tab),
            value: Rational::zero(),
        };
    };

    let mut costs = vec![Rational::zero(); ncols];
    for (j, &(p, mi)) in var_cols.iter().enumerate() {
        costs[p] = objective[j].clone();
        if let Some(mi) = mi {
            costs[mi] = -objective[j].clone();
        }
    }
    tab.set_objective(&costs);
    let kinds = tab.kinds.clone();
    if !tab.optimize(|j| not_artificial(&kinds, j)) {
        return Solution::Unbounded;
    }
    let x = value_of(&tab);
    let value = -tab.z[rhs].clone();
    Solution::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn small_optimum() {
        // min -x - y  s.t.  x + 2y <= 4, 3x + y <= 6, x, y >= 0  -> (8/5, 6/5)
        let mut p = Problem::new(vec![VarKind::NonNegative; 2]);
        p.push(v(&[-1, -2]), Relation::Ge, int(-4));
        p.push(v(&[-3, -1]), Relation::Ge, int(-6));
        match p.minimize(&v(&[-1, -1])) {
            Solution::Optimal { x, value } => {
                assert_eq!(x, vec![rat(8, 5), rat(6, 5)]);
                assert_eq!(value, rat(-14, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn free_variables_and_equalities() {
        // x free, y free: x + y = 1, x - y >= 3, minimize x  -> x = 2, y = -1
        let mut p = Problem::new(vec![VarKind::Free; 2]);
        p.push(v(&[1, 1]), Relation::Eq, int(1));
        p.push(v(&[1, -1]), Relation::Ge, int(3));
        match p.minimize(&v(&[1, 0])) {
            Solution::Optimal { x, value } => {
                assert_eq!(value, int(2));
                assert_eq!(x, v(&[2, -1]));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(p.minimize(&v(&[0, 1])), Solution::Unbounded);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = Problem::new(vec![VarKind::Free]);
        p.push(v(&[1]), Relation::Ge, int(0));
        assert_eq!(
            p.minimize(&v(&[1])),
            Solution::Optimal {
                x: v(&[0]),
                value: int(0)
            }
        );
        assert_eq!(p.minimize(&v(&[-1])), Solution::Unbounded);
    }

    #[test]
    fn infeasible_yields_verified_certificate() {
        // x >= 1, -x >= 0 (x <= 0)
        let mut p = Problem::new(vec![VarKind::Free]);
        p.push(v(&[1]), Relation::Ge, int(1));
        p.push(v(&[-1]), Relation::Ge, int(0));
        match p.feasibility() {
            Solution::Infeasible { farkas } => assert!(p.verify_farkas(&farkas)),
            other => panic!("{other:?}"),
        }

        // x + y = 3, x >= 0, y >= 0, x + y <= 2
        let mut q = Problem::new(vec![VarKind::NonNegative; 2]);
        q.push(v(&[1, 1]), Relation::Eq, int(3));
        q.push(v(&[-1, -1]), Relation::Ge, int(-2));
        match q.feasibility() {
            Solution::Infeasible { farkas } => assert!(q.verify_farkas(&farkas)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example (Beale) under Bland's rule
        let mut p = Problem::new(vec![VarKind::NonNegative; 4]);
        p.push(
            vec![rat(-1, 4), int(8), int(1), int(-9)],
            Relation::Ge,
            int(0),
        );
        p.push(
            vec![rat(-1, 2), int(12), rat(1, 2), int(-3)],
            Relation::Ge,
            int(0),
        );
        p.push(vec![int(0), int(0), int(-1), int(0)], Relation::Ge, int(-1));
        let obj = vec![rat(-3, 4), int(20), rat(-1, 2), int(6)];
        match p.minimize(&obj) {
            Solution::Optimal { value, x } => {
                assert_eq!(value, rat(-5, 4));
                assert!(p.is_satisfied_by(&x));
            }
            other => panic!("{other:?}"),
        }
    }
}
