//! Exact Fourier-Motzkin elimination over rational inequality systems, and
//! the derivation of the correlator constraints implied by the hexagon
//! inflation when all single-party marginals vanish.
//!
//! Rows are read as `coeffs . x + constant >= 0`. Squared correlators are
//! ordinary variables during elimination; `EAB_sq` stands for `EAB^2`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::correlators::{FreeVar, HexagonOutcome, Known, HEXAGON_TERMS};
use crate::error::{Error, Result};
use crate::scalar::{int, rat, Rational, Scalar};
use crate::simplex::{Problem, Relation, Solution, VarKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl Inequality {
    pub fn new(coeffs: Vec<Rational>, constant: Rational) -> Self {
        Self { coeffs, constant }
    }

    pub fn evaluate(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.constant.clone(), |acc, (a, v)| acc + a * v)
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Positive rescaling to a primitive integer row.
    pub fn normalized(&self) -> Self {
        let all = self.coeffs.iter().chain(std::iter::once(&self.constant));
        let mut lcm = BigInt::one();
        for v in all.clone() {
            lcm = lcm.lcm(v.denom());
        }
        let scaled: Vec<BigInt> = all
            .map(|v| (v * Rational::from(lcm.clone())).to_integer())
            .collect();
        let gcd = scaled.iter().fold(BigInt::zero(), |g, v| g.gcd(v));
        if gcd.is_zero() {
            return self.clone();
        }
        let mut out: Vec<Rational> = scaled
            .into_iter()
            .map(|v| Rational::from(v / &gcd))
            .collect();
        let constant = out.pop().expect("row has a constant");
        Self::new(out, constant)
    }

    fn scale(&self, f: &Rational) -> Self {
        Self::new(
            self.coeffs.iter().map(|c| c * f).collect(),
            &self.constant * f,
        )
    }

    fn add(&self, other: &Self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            &self.constant + &other.constant,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearInequalitySystem {
    variables: Vec<String>,
    rows: Vec<Inequality>,
}

impl LinearInequalitySystem {
    pub fn new<S: Into<String>>(variables: impl IntoIterator<Item = S>) -> Result<Self> {
        let variables: Vec<String> = variables.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.as_str()) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        Ok(Self {
            variables,
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, row: Inequality) -> Result<()> {
        if row.coeffs.len() != self.variables.len() {
            return Err(Error::DimensionMismatch {
                row: self.rows.len(),
                expected: self.variables.len(),
                found: row.coeffs.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn with_rows(mut self, rows: impl IntoIterator<Item = Inequality>) -> Result<Self> {
        for row in rows {
            self.push(row)?;
        }
        Ok(self)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn rows(&self) -> &[Inequality] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        self.rows.iter().all(|r| !r.evaluate(x).is_negative())
    }

    /// Renders a row as `c + a*X + ... >= 0`, writing `X_sq` as `X^2`.
    pub fn format_row(&self, row: &Inequality) -> String {
        let mut out = String::new();
        if !row.constant.is_zero() || row.is_constant() {
            out.push_str(&row.constant.to_string());
        }
        for (c, name) in row.coeffs.iter().zip(&self.variables) {
            if c.is_zero() {
                continue;
            }
            let name = match name.strip_suffix("_sq") {
                Some(base) => format!("{base}^2"),
                None => name.clone(),
            };
            let sign = if c.is_negative() { '-' } else { '+' };
            let mag = c.abs();
            if out.is_empty() {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                out.push_str(&format!(" {sign} "));
            }
            if mag.is_one() {
                out.push_str(&name);
            } else {
                out.push_str(&format!("{mag}*{name}"));
            }
        }
        out.push_str(" >= 0");
        out
    }
}

impl fmt::Display for LinearInequalitySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{}", self.format_row(row))?;
        }
        Ok(())
    }
}

/// Textbook elimination of `var`: rows without `var` pass through, then every
/// row with a positive coefficient is paired with every row with a negative
/// one.
pub fn fm_eliminate(system: &LinearInequalitySystem, var: &str) -> Result<LinearInequalitySystem> {
    let (out, _) = eliminate_tracked(system, var, None)?;
    Ok(out)
}

type History = u128;

fn eliminate_tracked(
    system: &LinearInequalitySystem,
    var: &str,
    history: Option<&[History]>,
) -> Result<(LinearInequalitySystem, Vec<History>)> {
    let k = system
        .index_of(var)
        .ok_or_else(|| Error::UnknownVariable(var.to_string()))?;
    let drop_k = |r: &Inequality| {
        let mut coeffs = r.coeffs.clone();
        coeffs.remove(k);
        Inequality::new(coeffs, r.constant.clone())
    };
    let hist = |i: usize| history.map_or(0, |h| h[i]);

    let mut variables = system.variables.clone();
    variables.remove(k);
    let mut rows = Vec::new();
    let mut hists = Vec::new();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (i, r) in system.rows.iter().enumerate() {
        if r.coeffs[k].is_positive() {
            pos.push(i);
        } else if r.coeffs[k].is_negative() {
            neg.push(i);
        } else {
            rows.push(drop_k(r));
            hists.push(hist(i));
        }
    }
    for &p in &pos {
        for &n in &neg {
            let rp = &system.rows[p];
            let rn = &system.rows[n];
            let combined = rp
                .scale(&-rn.coeffs[k].clone())
                .add(&rn.scale(&rp.coeffs[k]));
            rows.push(drop_k(&combined));
            hists.push(hist(p) | hist(n));
        }
    }
    Ok((LinearInequalitySystem { variables, rows }, hists))
}

/// Nonnegative multipliers `lambda` (one per row of `system`) and slack
/// `mu >= 0` with `target = sum lambda_i row_i + mu`, if they exist.
pub fn certify_implied(
    system: &LinearInequalitySystem,
    target: &Inequality,
) -> Option<Vec<Rational>> {
    implied_by(&system.rows, target, system.variables.len())
}

fn implied_by(rows: &[Inequality], target: &Inequality, nvars: usize) -> Option<Vec<Rational>> {
    if target.is_constant() && !target.constant.is_negative() {
        return Some(vec![Rational::zero(); rows.len()]);
    }
    let mut lp = Problem::new(vec![VarKind::NonNegative; rows.len()]);
    for v in 0..nvars {
        lp.push(
            rows.iter().map(|r| r.coeffs[v].clone()).collect(),
            Relation::Eq,
            target.coeffs[v].clone(),
        );
    }
    lp.push(
        rows.iter().map(|r| -r.constant.clone()).collect(),
        Relation::Ge,
        -target.constant.clone(),
    );
    match lp.feasibility() {
        Solution::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// Normalizes rows, drops duplicates and trivially true rows, then removes
/// every row implied by the remaining ones. Survivors keep input order.
pub fn remove_redundant(system: &LinearInequalitySystem) -> LinearInequalitySystem {
    let (rows, _) = prune(system, None, false);
    LinearInequalitySystem {
        variables: system.variables.clone(),
        rows,
    }
}

fn prune(
    system: &LinearInequalitySystem,
    history: Option<&[History]>,
    screen: bool,
) -> (Vec<Inequality>, Vec<History>) {
    let nvars = system.variables.len();
    // Among rows with equal coefficients only the smallest constant matters.
    let mut best: HashMap<Vec<Rational>, usize> = HashMap::new();
    let mut rows: Vec<Inequality> = Vec::new();
    let mut hists = Vec::new();
    for (i, r) in system.rows.iter().enumerate() {
        let r = r.normalized();
        if r.is_constant() && !r.constant.is_negative() {
            continue;
        }
        let h = history.map_or(0, |h| h[i]);
        match best.get(&r.coeffs) {
            Some(&j) if rows[j].constant <= r.constant => {}
            Some(&j) => {
                rows[j] = r;
                hists[j] = h;
            }
            None => {
                best.insert(r.coeffs.clone(), rows.len());
                rows.push(r);
                hists.push(h);
            }
        }
    }
    let mut keep = vec![true; rows.len()];
    let float_rows: Vec<(Vec<f64>, f64)> = rows.iter().map(to_float_row).collect();
    for i in 0..rows.len() {
        let others: Vec<usize> = (0..rows.len()).filter(|&j| j != i && keep[j]).collect();
        let support = if screen && others.len() > EXACT_SCREEN_LIMIT {
            match float_support(&float_rows, &others, i) {
                Some(s) => s,
                None => continue,
            }
        } else {
            others
        };
        let subset: Vec<Inequality> = support.iter().map(|&j| rows[j].clone()).collect();
        if implied_by(&subset, &rows[i], nvars).is_some() {
            keep[i] = false;
        }
    }
    let rows = rows
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r)
        .collect();
    let hists = hists
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(h, _)| h)
        .collect();
    (rows, hists)
}

/// Above this many candidate rows a redundancy test is screened in floating
/// point first; only removals confirmed by an exact certificate are applied.
const EXACT_SCREEN_LIMIT: usize = 40;

fn to_float_row(r: &Inequality) -> (Vec<f64>, f64) {
    let coeffs: Vec<f64> = r.coeffs.iter().map(Scalar::to_f64).collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
    (
        coeffs.iter().map(|c| c / norm).collect(),
        r.constant.to_f64() / norm,
    )
}

/// Minimizes row `i` over the region cut out by `others` in floating point,
/// generating constraints lazily from a bounding box. Every variable is an
/// expectation of a +-1 valued product, so the box never cuts the region.
/// If the minimum looks nonnegative, returns the rows that are nearly tight
/// at the minimizer: the support an exact certificate should need.
fn float_support(rows: &[(Vec<f64>, f64)], others: &[usize], i: usize) -> Option<Vec<usize>> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem as FloatLp};
    let (target, t0) = &rows[i];
    let mut lp = FloatLp::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = target.iter().map(|&c| lp.add_var(c, (-BOX, BOX))).collect();
    let mut solution = lp.solve().ok()?.into_solution().ok()?;
    let mut added = vec![false; rows.len()];
    loop {
        let x: Vec<f64> = vars.iter().map(|v| solution.var_value(*v)).collect();
        let slack =
            |j: usize| rows[j].0.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() + rows[j].1;
        // the relaxation already bounds the target from below
        if solution.objective() + t0 >= -1e-9 {
            return Some(
                others
                    .iter()
                    .copied()
                    .filter(|&j| added[j] && slack(j) < 1e-7)
                    .collect(),
            );
        }
        let mut violated: Vec<(f64, usize)> = others
            .iter()
            .filter(|&&j| !added[j])
            .map(|&j| (slack(j), j))
            .filter(|(s, _)| *s < -1e-10)
            .collect();
        if violated.is_empty() {
            return None;
        }
        violated.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(_, j) in violated.iter().take(CUTS_PER_ROUND) {
            added[j] = true;
            let expr: Vec<_> = vars
                .iter()
                .zip(&rows[j].0)
                .filter(|(_, v)| **v != 0.0)
                .map(|(x, v)| (*x, *v))
                .collect();
            solution = solution
                .add_constraint(expr, ComparisonOp::Ge, -rows[j].1)
                .ok()?
                .into_solution()
                .ok()?;
        }
    }
}

const BOX: f64 = 1.5;
const CUTS_PER_ROUND: usize = 4;

/// Eliminates `vars` in order, discarding rows that fail the Chernikov
/// history bound and pruning redundancy after each step. Intermediate
/// pruning is screened in floating point; the final system gets a purely
/// exact pass, so the result is irredundant whatever the screen missed.
pub fn eliminate_all(
    system: &LinearInequalitySystem,
    vars: &[&str],
) -> Result<LinearInequalitySystem> {
    let tracked = system.len() <= History::BITS as usize;
    let mut current = system.clone();
    let mut hist: Vec<History> = (0..system.len())
        .map(|i| if tracked { 1 << i } else { 0 })
        .collect();
    for (step, v) in vars.iter().enumerate() {
        let (next, next_hist) = eliminate_tracked(&current, v, Some(&hist))?;
        let bound = step as u32 + 2;
        let (rows, h): (Vec<_>, Vec<_>) = next
            .rows
            .into_iter()
            .zip(next_hist)
            .filter(|(_, h)| !tracked || h.count_ones() <= bound)
            .unzip();
        let filtered = LinearInequalitySystem {
            variables: next.variables,
            rows,
        };
        let (rows, h) = prune(&filtered, Some(&h), true);
        current = LinearInequalitySystem {
            variables: filtered.variables,
            rows,
        };
        hist = h;
    }
    Ok(remove_redundant(&current))
}

pub const CORRELATOR_VARIABLES: [&str; 6] = ["EAB", "EBC", "EAC", "EAB_sq", "EBC_sq", "EAC_sq"];

/// Chosen to keep intermediate systems small: eliminating the degree-six
/// correlator first makes them grow into the thousands of rows.
pub const ELIMINATION_ORDER: [FreeVar; 10] = [
    FreeVar::F3,
    FreeVar::F3p,
    FreeVar::F3pp,
    FreeVar::F5,
    FreeVar::F5p,
    FreeVar::F4,
    FreeVar::F4p,
    FreeVar::F4pp,
    FreeVar::F5pp,
    FreeVar::F6,
];

fn pair_index(k: Known) -> Option<usize> {
    match k {
        Known::AB => Some(0),
        Known::BC => Some(1),
        Known::AC => Some(2),
        _ => None,
    }
}

/// `64 p(o)` at zero single-party marginals, as a row over
/// [`CORRELATOR_VARIABLES`] followed by the ten free correlators.
pub fn zero_marginal_row(o: HexagonOutcome) -> Inequality {
    let mut coeffs = vec![Rational::zero(); 16];
    let mut constant = Rational::zero();
    for term in HEXAGON_TERMS {
        let s = term.sign_sum(o);
        if s == 0 {
            continue;
        }
        let pairs: Option<Vec<usize>> = term.known.iter().map(|&k| pair_index(k)).collect();
        let Some(pairs) = pairs else {
            continue;
        };
        let slot = match (pairs.as_slice(), term.free) {
            ([], None) => None,
            ([p], None) => Some(*p),
            ([p, q], None) if p == q => Some(3 + *p),
            ([], Some(f)) => Some(6 + f.index()),
            _ => unreachable!("hexagon term outside the zero-marginal monomials"),
        };
        match slot {
            None => constant += int(s),
            Some(j) => coeffs[j] += int(s),
        }
    }
    Inequality::new(coeffs, constant)
}

/// Positivity of the 64 hexagon probabilities with zero single-party
/// marginals.
pub fn hexagon_zero_marginal_system() -> LinearInequalitySystem {
    let names = CORRELATOR_VARIABLES
        .iter()
        .copied()
        .chain(FreeVar::ALL.iter().map(|f| f.name()));
    LinearInequalitySystem::new(names)
        .and_then(|s| s.with_rows(HexagonOutcome::all().map(zero_marginal_row)))
        .expect("hexagon system is well formed")
}

/// Projects the hexagon system onto the pair correlators and their squares.
pub fn derive_random_marginal_inequalities() -> LinearInequalitySystem {
    let order: Vec<&str> = ELIMINATION_ORDER.iter().map(|f| f.name()).collect();
    eliminate_all(&hexagon_zero_marginal_system(), &order).expect("elimination variables exist")
}

/// The four outcomes whose probabilities sum to the square-difference
/// inequality, as `(a, b, c, a', b', c')`.
pub const SUM4_OUTCOMES: [[i64; 6]; 4] = [
    [1, 1, 1, -1, -1, 1],
    [-1, -1, -1, 1, 1, -1],
    [1, 1, -1, 1, 1, 1],
    [-1, -1, 1, -1, -1, -1],
];

pub fn verify_sum4_identity() -> bool {
    verify_sum4_with(&SUM4_OUTCOMES)
}

/// Whether `16 * sum p(o)` over `outcomes` equals
/// `1 + 2 EAB + EAB^2 - EBC^2 - EAC^2` coefficient by coefficient.
pub fn verify_sum4_with(outcomes: &[[i64; 6]]) -> bool {
    let mut total = Inequality::new(vec![Rational::zero(); 16], Rational::zero());
    for &o in outcomes {
        let Ok(o) = HexagonOutcome::from_values(o) else {
            return false;
        };
        total = total.add(&zero_marginal_row(o).scale(&rat(16, 64)));
    }
    let mut expected = square_difference_row().coeffs;
    expected.extend(std::iter::repeat_with(Rational::zero).take(10));
    total == Inequality::new(expected, Rational::one())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    /// `(1 + EAB)^2 - EBC^2 - EAC^2 >= 0`
    SquareDifference,
    /// `(1 + EAB)^2 + EBC^2 + EAC^2 >= 0`
    SquareSum,
    /// `1 + EAB + EBC + EAC^2 >= 0`
    MixedLinear,
    Other,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::SquareDifference => "square-difference",
            FamilyKind::SquareSum => "square-sum",
            FamilyKind::MixedLinear => "mixed-linear",
            FamilyKind::Other => "other",
        }
    }
}

fn row6(lin: [i64; 3], sq: [i64; 3]) -> Inequality {
    Inequality::new(
        lin.iter().chain(&sq).map(|&v| int(v)).collect(),
        Rational::one(),
    )
}

pub fn square_difference_row() -> Inequality {
    row6([2, 0, 0], [1, -1, -1])
}

pub fn square_sum_row() -> Inequality {
    row6([2, 0, 0], [1, 1, 1])
}

pub fn mixed_linear_row() -> Inequality {
    row6([1, 1, 0], [0, 0, 1])
}

/// A party permutation followed by per-party output flips. `flips` bit `x`
/// set means party `x` (A = 0, B = 1, C = 2) flips its output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symmetry {
    pub perm: [usize; 3],
    pub flips: u8,
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

fn pair_of(x: usize, y: usize) -> usize {
    PAIRS
        .iter()
        .position(|&(p, q)| (p, q) == (x, y) || (q, p) == (x, y))
        .expect("distinct parties")
}

impl Symmetry {
    pub fn all() -> Vec<Symmetry> {
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        PERMS
            .iter()
            .flat_map(|&perm| (0..8u8).map(move |flips| Symmetry { perm, flips }))
            .collect()
    }

    /// Action on a row over [`CORRELATOR_VARIABLES`].
    pub fn apply(&self, row: &Inequality) -> Inequality {
        let mut coeffs = vec![Rational::zero(); 6];
        for (p, &(x, y)) in PAIRS.iter().enumerate() {
            let q = pair_of(self.perm[x], self.perm[y]);
            let flipped = ((self.flips >> x) ^ (self.flips >> y)) & 1 == 1;
            coeffs[q] = if flipped {
                -row.coeffs[p].clone()
            } else {
                row.coeffs[p].clone()
            };
            coeffs[3 + q] = row.coeffs[3 + p].clone();
        }
        Inequality::new(coeffs, row.constant.clone())
    }
}

/// Distinct images of `row` under all symmetries, in a fixed order.
pub fn orbit(row: &Inequality) -> Vec<Inequality> {
    let mut out: Vec<Inequality> = Vec::new();
    for g in Symmetry::all() {
        let image = g.apply(row).normalized();
        if !out.contains(&image) {
            out.push(image);
        }
    }
    out
}

fn orbit_key(row: &Inequality) -> Vec<Rational> {
    orbit(row)
        .into_iter()
        .map(|r| {
            let mut k = r.coeffs;
            k.push(r.constant);
            k
        })
        .min()
        .expect("orbit is nonempty")
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityFamily {
    pub kind: FamilyKind,
    pub representative: Inequality,
    pub members: Vec<Inequality>,
}

/// Groups the rows of a system over [`CORRELATOR_VARIABLES`] into symmetry
/// orbits, ordered by first appearance.
pub fn reduce_by_symmetry(system: &LinearInequalitySystem) -> Result<Vec<InequalityFamily>> {
    if system.variables() != CORRELATOR_VARIABLES {
        return Err(Error::InvalidConfig(format!(
            "symmetry reduction needs variables {:?}, got {:?}",
            CORRELATOR_VARIABLES,
            system.variables()
        )));
    }
    let known = [
        (FamilyKind::SquareDifference, square_difference_row()),
        (FamilyKind::SquareSum, square_sum_row()),
        (FamilyKind::MixedLinear, mixed_linear_row()),
    ];
    let known_keys: Vec<_> = known
        .iter()
        .map(|(k, r)| (*k, orbit_key(r), r.clone()))
        .collect();
    let mut families: Vec<(Vec<Rational>, InequalityFamily)> = Vec::new();
    for row in system.rows() {
        let row = row.normalized();
        let key = orbit_key(&row);
        if let Some((_, fam)) = families.iter_mut().find(|(k, _)| *k == key) {
            fam.members.push(row);
            continue;
        }
        let (kind, representative) = known_keys
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|(kind, _, r)| (*kind, r.clone()))
            .unwrap_or((FamilyKind::Other, row.clone()));
        families.push((
            key,
            InequalityFamily {
                kind,
                representative,
                members: vec![row],
            },
        ));
    }
    Ok(families.into_iter().map(|(_, f)| f).collect())
}

/// Checks `target - sum w_i source_i` is a constant `>= 0` plus nonnegative
/// multiples of squared variables only, so `target` holds whenever the
/// sources do. All weights must be nonnegative.
pub fn certify_with_squares(target: &Inequality, sources: &[(Rational, Inequality)]) -> bool {
    if sources.iter().any(|(w, _)| w.is_negative()) {
        return false;
    }
    let combo = sources.iter().fold(
        Inequality::new(vec![Rational::zero(); 6], Rational::zero()),
        |acc, (w, r)| acc.add(&r.scale(w)),
    );
    let rest = target.add(&combo.scale(&-Rational::one()));
    rest.coeffs[..3].iter().all(Zero::is_zero)
        && rest.coeffs[3..].iter().all(|c| !c.is_negative())
        && !rest.constant.is_negative()
}

/// The mixed-linear representative is half the square-difference row for
/// the pair AB plus half the one for BC, plus `2 EAC^2`.
pub fn mixed_linear_subsumed() -> bool {
    let swap_ac = Symmetry {
        perm: [2, 1, 0],
        flips: 0,
    };
    let half = rat(1, 2);
    certify_with_squares(
        &mixed_linear_row(),
        &[
            (half.clone(), square_difference_row()),
            (half, swap_ac.apply(&square_difference_row())),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(coeffs: &[i64], constant: i64) -> Inequality {
        Inequality::new(coeffs.iter().map(|&c| int(c)).collect(), int(constant))
    }

    fn sys(vars: &[&str], rows: &[(&[i64], i64)]) -> LinearInequalitySystem {
        LinearInequalitySystem::new(vars.iter().copied())
            .unwrap()
            .with_rows(rows.iter().map(|(c, k)| row(c, *k)))
            .unwrap()
    }

    #[test]
    fn textbook_elimination() {
        // y >= 0, 1 - y >= 0, y - x >= 0 over (x, y)
        let s = sys(&["x", "y"], &[(&[0, 1], 0), (&[0, -1], 1), (&[-1, 1], 0)]);
        let out = fm_eliminate(&s, "y").unwrap();
        assert_eq!(out.variables(), ["x"]);
        assert_eq!(out.rows(), [row(&[0], 1), row(&[-1], 1)]);
    }

    #[test]
    fn absent_variable_only_drops_the_column() {
        let s = sys(&["x", "y"], &[(&[1, 0], 0), (&[-1, 0], 2)]);
        let out = fm_eliminate(&s, "y").unwrap();
        assert_eq!(out.rows(), [row(&[1], 0), row(&[-1], 2)]);
        assert!(matches!(
            fm_eliminate(&s, "z"),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            LinearInequalitySystem::new(["x", "x"]),
            Err(Error::DuplicateVariable(_))
        ));
        let mut s = LinearInequalitySystem::new(["x"]).unwrap();
        assert!(matches!(
            s.push(row(&[1, 2], 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn redundancy_examples() {
        let s = sys(&["x"], &[(&[1], 0), (&[2], 0)]);
        assert_eq!(remove_redundant(&s).rows(), [row(&[1], 0)]);
        let s = sys(&["x"], &[(&[1], 0), (&[-1], 1), (&[1], 1)]);
        assert_eq!(remove_redundant(&s).rows(), [row(&[1], 0), row(&[-1], 1)]);
    }

    #[test]
    fn normalization_keeps_orientation() {
        let r = Inequality::new(vec![rat(-2, 3), rat(4, 3)], rat(2, 1));
        assert_eq!(r.normalized(), row(&[-1, 2], 3));
    }

    #[test]
    fn formatting() {
        let s = LinearInequalitySystem::new(CORRELATOR_VARIABLES).unwrap();
        assert_eq!(
            s.format_row(&square_difference_row()),
            "1 + 2*EAB + EAB^2 - EBC^2 - EAC^2 >= 0"
        );
    }

    #[test]
    fn sum4_identity_and_perturbation() {
        assert!(verify_sum4_identity());
        let mut bad = SUM4_OUTCOMES;
        bad[3] = [1, 1, 1, 1, 1, 1];
        assert!(!verify_sum4_with(&bad));
    }

    #[test]
    fn sum4_numeric_spot_check() {
        let total: Rational = SUM4_OUTCOMES
            .iter()
            .map(|&o| zero_marginal_row(HexagonOutcome::from_values(o).unwrap()).constant / int(64))
            .sum();
        assert_eq!(total, rat(1, 16));
    }

    #[test]
    fn symmetry_group_orbits() {
        assert_eq!(Symmetry::all().len(), 48);
        assert_eq!(orbit(&square_difference_row()).len(), 6);
        assert_eq!(orbit(&square_sum_row()).len(), 6);
        assert_eq!(orbit(&mixed_linear_row()).len(), 12);
    }

    #[test]
    fn subsumption_certificate() {
        assert!(mixed_linear_subsumed());
        // the square-sum row is not a combination of square-difference rows
        // with a square-only remainder unless the weights are zero
        assert!(!certify_with_squares(
            &mixed_linear_row(),
            &[(int(1), square_difference_row())]
        ));
    }

    /// Vertices of a bounded system in two or three variables by brute force
    /// over all row subsets of size `n`.
    fn vertices(s: &LinearInequalitySystem) -> Vec<Vec<Rational>> {
        let n = s.variables().len();
        let rows = s.rows();
        let mut out: Vec<Vec<Rational>> = Vec::new();
        let idx: Vec<usize> = (0..rows.len()).collect();
        for combo in combinations(&idx, n) {
            let a: Vec<Vec<Rational>> = combo.iter().map(|&i| rows[i].coeffs.clone()).collect();
            let b: Vec<Rational> = combo.iter().map(|&i| -rows[i].constant.clone()).collect();
            if let Some(x) = solve_square(a, b) {
                if s.is_satisfied_by(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        out
    }

    fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for (i, &first) in items.iter().enumerate() {
            for mut rest in combinations(&items[i + 1..], k - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, piv);
            b.swap(col, piv);
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = &a[r][col] / &a[col][col];
                    for c in 0..n {
                        let d = &f * &a[col][c];
                        a[r][c] -= d;
                    }
                    let d = &f * &b[col];
                    b[r] -= d;
                }
            }
        }
        Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
    }

    /// Whether some `z` extends `(x, y)` to a point of the three-variable
    /// system.
    fn extends(s: &LinearInequalitySystem, xy: &[Rational]) -> bool {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for r in s.rows() {
            let rest = &r.constant + &r.coeffs[0] * &xy[0] + &r.coeffs[1] * &xy[1];
            let c = &r.coeffs[2];
            if c.is_zero() {
                if rest.is_negative() {
                    return false;
                }
            } else {
                let bound = -rest / c;
                if c.is_positive() {
                    lo = Some(lo.map_or(bound.clone(), |l| l.max(bound)));
                } else {
                    hi = Some(hi.map_or(bound.clone(), |h| h.min(bound)));
                }
            }
        }
        match (lo, hi) {
            (Some(l), Some(h)) => l <= h,
            _ => true,
        }
    }

    fn small_system() -> impl Strategy<Value = LinearInequalitySystem> {
        let extra =
            proptest::collection::vec((proptest::array::uniform3(-3i64..=3), 0i64..=4), 1..5);
        extra.prop_map(|extra| {
            // the unit box keeps the polytope bounded and nonempty
            let mut rows: Vec<Inequality> = Vec::new();
            for v in 0..3 {
                let mut c = [0i64; 3];
                c[v] = 1;
                rows.push(row(&c, 1));
                c[v] = -1;
                rows.push(row(&c, 1));
            }
            rows.extend(extra.into_iter().map(|(c, k)| row(&c, k)));
            LinearInequalitySystem::new(["x", "y", "z"])
                .unwrap()
                .with_rows(rows)
                .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn projection_matches_vertex_oracle(s in small_system()) {
            let proj = fm_eliminate(&s, "z").unwrap();
            let verts = vertices(&s);
            // projected vertices satisfy the projection
            for v in &verts {
                prop_assert!(proj.is_satisfied_by(&v[..2]));
            }
            // vertices of the projection lift back into the original
            if !verts.is_empty() {
                for v in vertices(&proj) {
                    prop_assert!(extends(&s, &v));
                }
            }
        }

        #[test]
        fn elimination_is_sound(s in small_system(), pts in proptest::collection::vec(proptest::array::uniform3(-4i64..=4), 20)) {
            let proj = fm_eliminate(&s, "z").unwrap();
            for p in pts {
                let x: Vec<Rational> = p.iter().map(|&v| rat(v, 4)).collect();
                if s.is_satisfied_by(&x) {
                    prop_assert!(proj.is_satisfied_by(&x[..2]));
                }
            }
        }

        #[test]
        fn redundancy_removal_is_idempotent_and_preserves_the_set(s in small_system()) {
            let once = remove_redundant(&s);
            let twice = remove_redundant(&once);
            prop_assert_eq!(&once, &twice);
            for r in s.rows() {
                prop_assert!(certify_implied(&once, r).is_some());
            }
        }
    }
}
