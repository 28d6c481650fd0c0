//! Probability tables and correlator parameterizations for the triangle
//! network and its hexagon inflation.
//!
//! Outcome ordering: outcomes are iterated lexicographically over
//! `(a, b, c)` (resp. `(a, b, c, a', b', c')`) with `+1` before `-1`, so the
//! outcome with index `i` has party `k` equal to `-1` iff bit `n-1-k` of `i`
//! is set.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn from_bit(bit: usize) -> Self {
        if bit == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriangleOutcome {
    pub a: Sign,
    pub b: Sign,
    pub c: Sign,
}

impl TriangleOutcome {
    pub fn new(a: Sign, b: Sign, c: Sign) -> Self {
        Self { a, b, c }
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(
            Sign::from_bit((i >> 2) & 1),
            Sign::from_bit((i >> 1) & 1),
            Sign::from_bit(i & 1),
        )
    }

    pub fn index(self) -> usize {
        let bit = |s: Sign| usize::from(s == Sign::Minus);
        (bit(self.a) << 2) | (bit(self.b) << 1) | bit(self.c)
    }

    pub fn all() -> impl Iterator<Item = TriangleOutcome> {
        (0..8).map(Self::from_index)
    }

    /// Product of the outputs of the parties selected by `mask`
    /// (bit 2 = A, bit 1 = B, bit 0 = C).
    fn character(self, mask: usize) -> i64 {
        let mut v = 1;
        if mask & 4 != 0 {
            v *= self.a.value();
        }
        if mask & 2 != 0 {
            v *= self.b.value();
        }
        if mask & 1 != 0 {
            v *= self.c.value();
        }
        v
    }
}

impl fmt::Display for TriangleOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.a.as_char(),
            self.b.as_char(),
            self.c.as_char()
        )
    }
}

/// The seven correlators of a binary-output triangle distribution.
///
/// Candidate (possibly invalid) behaviors are representable; validity is
/// queried with [`triangle_positivity`].
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleBehavior<T = Rational> {
    pub e_a: T,
    pub e_b: T,
    pub e_c: T,
    pub e_ab: T,
    pub e_bc: T,
    pub e_ac: T,
    pub e_abc: T,
}

impl<T: Scalar> TriangleBehavior<T> {
    pub fn zero() -> Self {
        Self::symmetric(T::zero(), T::zero(), T::zero())
    }

    /// `E_A = E_B = E_C = e1`, all pairwise correlators `e2`, `E_ABC = e3`.
    pub fn symmetric(e1: T, e2: T, e3: T) -> Self {
        Self {
            e_a: e1.clone(),
            e_b: e1.clone(),
            e_c: e1,
            e_ab: e2.clone(),
            e_bc: e2.clone(),
            e_ac: e2,
            e_abc: e3,
        }
    }

    /// Behavior with vanishing single-party marginals.
    pub fn zero_marginal(e_ab: T, e_bc: T, e_ac: T, e_abc: T) -> Self {
        Self {
            e_a: T::zero(),
            e_b: T::zero(),
            e_c: T::zero(),
            e_ab,
            e_bc,
            e_ac,
            e_abc,
        }
    }

    /// Fields in the order `EA, EB, EC, EAB, EBC, EAC, EABC`.
    pub fn fields(&self) -> [&T; 7] {
        [
            &self.e_a,
            &self.e_b,
            &self.e_c,
            &self.e_ab,
            &self.e_bc,
            &self.e_ac,
            &self.e_abc,
        ]
    }

    pub fn from_fields(f: [T; 7]) -> Self {
        let [e_a, e_b, e_c, e_ab, e_bc, e_ac, e_abc] = f;
        Self {
            e_a,
            e_b,
            e_c,
            e_ab,
            e_bc,
            e_ac,
            e_abc,
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> TriangleBehavior<U> {
        TriangleBehavior {
            e_a: f(&self.e_a),
            e_b: f(&self.e_b),
            e_c: f(&self.e_c),
            e_ab: f(&self.e_ab),
            e_bc: f(&self.e_bc),
            e_ac: f(&self.e_ac),
            e_abc: f(&self.e_abc),
        }
    }

    pub fn in_range(&self) -> bool {
        let one = T::one();
        self.fields()
            .iter()
            .all(|&v| *v <= one && *v >= -one.clone())
    }

    /// Value of the correlator for the parties selected by `mask`
    /// (bit 2 = A, bit 1 = B, bit 0 = C); the empty product is 1.
    fn correlator(&self, mask: usize) -> T {
        match mask {
            0 => T::one(),
            4 => self.e_a.clone(),
            2 => self.e_b.clone(),
            1 => self.e_c.clone(),
            6 => self.e_ab.clone(),
            3 => self.e_bc.clone(),
            5 => self.e_ac.clone(),
            7 => self.e_abc.clone(),
            _ => unreachable!(),
        }
    }
}

pub const BEHAVIOR_KEYS: [&str; 7] = ["EA", "EB", "EC", "EAB", "EBC", "EAC", "EABC"];

impl Serialize for TriangleBehavior<Rational> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(7))?;
        for (key, value) in BEHAVIOR_KEYS.iter().zip(self.fields()) {
            map.serialize_entry(key, &format_rational(value))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for TriangleBehavior<Rational> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        behavior_from_json(&value).map_err(serde::de::Error::custom)
    }
}

/// Reads a number given either as a JSON number (decimal literal, read
/// exactly) or as a `"num/den"` / decimal string.
pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::Number(n) => parse_rational(&n.to_string()),
        serde_json::Value::String(s) => parse_rational(s),
        other => Err(Error::Parse(format!("expected a number, found {other}"))),
    }
}

/// Parses the `{"EA": .., "EB": .., ...}` form. Missing keys default to 0.
pub fn behavior_from_json(v: &serde_json::Value) -> Result<TriangleBehavior> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("behavior must be a JSON object".into()))?;
    if let Some(key) = obj.keys().find(|k| !BEHAVIOR_KEYS.contains(&k.as_str())) {
        return Err(Error::Parse(format!("unknown behavior key `{key}`")));
    }
    let mut fields: [Rational; 7] = std::array::from_fn(|_| Rational::zero());
    for (slot, key) in fields.iter_mut().zip(BEHAVIOR_KEYS) {
        if let Some(value) = obj.get(key) {
            *slot = rational_from_json(value)?;
        }
    }
    Ok(TriangleBehavior::from_fields(fields))
}

/// Probability table over the eight outcomes, indexed by
/// [`TriangleOutcome::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleDistribution<T = Rational> {
    pub probs: [T; 8],
}

impl<T: Scalar> TriangleDistribution<T> {
    pub fn new(probs: [T; 8]) -> Self {
        Self { probs }
    }

    pub fn uniform() -> Self {
        Self::new(std::array::from_fn(|_| T::from_ratio(1, 8)))
    }

    pub fn point_mass(o: TriangleOutcome) -> Self {
        let mut probs: [T; 8] = std::array::from_fn(|_| T::zero());
        probs[o.index()] = T::one();
        Self::new(probs)
    }

    pub fn get(&self, o: TriangleOutcome) -> &T {
        &self.probs[o.index()]
    }

    pub fn total(&self) -> T {
        self.probs.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - T::one()).magnitude() <= T::tolerance()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.probs.iter().all(|p| !p.below_zero())
    }

    /// Marginal probabilities `(p_A(s), p_B(s), p_C(s))` of output `s`.
    pub fn marginals(&self, s: Sign) -> [T; 3] {
        let mut out: [T; 3] = std::array::from_fn(|_| T::zero());
        for o in TriangleOutcome::all() {
            let p = self.get(o).clone();
            if o.a == s {
                out[0] = out[0].clone() + p.clone();
            }
            if o.b == s {
                out[1] = out[1].clone() + p.clone();
            }
            if o.c == s {
                out[2] = out[2].clone() + p;
            }
        }
        out
    }
}

/// `p(a,b,c) = (1 + a E_A + b E_B + c E_C + ab E_AB + ac E_AC + bc E_BC + abc E_ABC) / 8`.
/// Negative for invalid behaviors.
pub fn triangle_prob<T: Scalar>(behavior: &TriangleBehavior<T>, o: TriangleOutcome) -> T {
    let sum = (0..8).fold(T::zero(), |acc, mask| {
        acc + T::from_int(o.character(mask)) * behavior.correlator(mask)
    });
    sum * T::from_ratio(1, 8)
}

pub fn distribution_from_behavior<T: Scalar>(
    behavior: &TriangleBehavior<T>,
) -> TriangleDistribution<T> {
    TriangleDistribution::new(std::array::from_fn(|i| {
        triangle_prob(behavior, TriangleOutcome::from_index(i))
    }))
}

/// Inverse of [`distribution_from_behavior`]: `E_X = sum_o chi_X(o) p(o)`.
pub fn behavior_from_distribution<T: Scalar>(
    d: &TriangleDistribution<T>,
) -> Result<TriangleBehavior<T>> {
    if !d.is_normalized() {
        return Err(Error::NotNormalized {
            total: format!("{:?}", d.total()),
        });
    }
    let corr = |mask: usize| {
        TriangleOutcome::all().fold(T::zero(), |acc, o| {
            acc + T::from_int(o.character(mask)) * d.get(o).clone()
        })
    };
    Ok(TriangleBehavior {
        e_a: corr(4),
        e_b: corr(2),
        e_c: corr(1),
        e_ab: corr(6),
        e_bc: corr(3),
        e_ac: corr(5),
        e_abc: corr(7),
    })
}

/// Outcomes whose reconstructed probability is negative; empty iff the
/// behavior is a valid distribution.
pub fn triangle_positivity<T: Scalar>(behavior: &TriangleBehavior<T>) -> Vec<TriangleOutcome> {
    TriangleOutcome::all()
        .filter(|&o| triangle_prob(behavior, o).below_zero())
        .collect()
}

// ---------------------------------------------------------------------------
// Hexagon inflation
// ---------------------------------------------------------------------------

/// Parties of the hexagon ring `a - b - c - a' - b' - c' - a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    A,
    B,
    C,
    Ap,
    Bp,
    Cp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HexagonOutcome {
    pub a: Sign,
    pub b: Sign,
    pub c: Sign,
    pub ap: Sign,
    pub bp: Sign,
    pub cp: Sign,
}

impl HexagonOutcome {
    pub fn from_index(i: usize) -> Self {
        let s = |k: usize| Sign::from_bit((i >> (5 - k)) & 1);
        Self {
            a: s(0),
            b: s(1),
            c: s(2),
            ap: s(3),
            bp: s(4),
            cp: s(5),
        }
    }

    pub fn index(self) -> usize {
        self.signs()
            .iter()
            .fold(0, |acc, &s| (acc << 1) | usize::from(s == Sign::Minus))
    }

    pub fn from_values(v: [i64; 6]) -> Result<Self> {
        let sign = |x: i64| match x {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::Parse(format!(
                "hexagon output must be +1 or -1, got {other}"
            ))),
        };
        Ok(Self {
            a: sign(v[0])?,
            b: sign(v[1])?,
            c: sign(v[2])?,
            ap: sign(v[3])?,
            bp: sign(v[4])?,
            cp: sign(v[5])?,
        })
    }

    pub fn all() -> impl Iterator<Item = HexagonOutcome> {
        (0..64).map(Self::from_index)
    }

    pub fn signs(self) -> [Sign; 6] {
        [self.a, self.b, self.c, self.ap, self.bp, self.cp]
    }

    pub fn flipped(self) -> Self {
        Self {
            a: self.a.flip(),
            b: self.b.flip(),
            c: self.c.flip(),
            ap: self.ap.flip(),
            bp: self.bp.flip(),
            cp: self.cp.flip(),
        }
    }

    pub fn site(self, site: Site) -> Sign {
        match site {
            Site::A => self.a,
            Site::B => self.b,
            Site::C => self.c,
            Site::Ap => self.ap,
            Site::Bp => self.bp,
            Site::Cp => self.cp,
        }
    }

    pub fn product(self, sites: &[Site]) -> i64 {
        sites.iter().map(|&s| self.site(s).value()).product()
    }
}

impl fmt::Display for HexagonOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.signs() {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

/// Triangle correlators appearing as known factors in the hexagon expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Known {
    A,
    B,
    C,
    AB,
    BC,
    AC,
}

/// The ten hexagon correlators not fixed by the triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FreeVar {
    F3,
    F3p,
    F3pp,
    F4,
    F4p,
    F4pp,
    F5,
    F5p,
    F5pp,
    F6,
}

impl FreeVar {
    pub const ALL: [FreeVar; 10] = [
        FreeVar::F3,
        FreeVar::F3p,
        FreeVar::F3pp,
        FreeVar::F4,
        FreeVar::F4p,
        FreeVar::F4pp,
        FreeVar::F5,
        FreeVar::F5p,
        FreeVar::F5pp,
        FreeVar::F6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FreeVar::F3 => "F3",
            FreeVar::F3p => "F3p",
            FreeVar::F3pp => "F3pp",
            FreeVar::F4 => "F4",
            FreeVar::F4p => "F4p",
            FreeVar::F4pp => "F4pp",
            FreeVar::F5 => "F5",
            FreeVar::F5p => "F5p",
            FreeVar::F5pp => "F5pp",
            FreeVar::F6 => "F6",
        }
    }

    /// Number of hexagon parties the correlator involves.
    pub fn degree(self) -> usize {
        match self {
            FreeVar::F3 | FreeVar::F3p | FreeVar::F3pp => 3,
            FreeVar::F4 | FreeVar::F4p | FreeVar::F4pp => 4,
            FreeVar::F5 | FreeVar::F5p | FreeVar::F5pp => 5,
            FreeVar::F6 => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HexagonFreeVars<T = Rational> {
    pub values: [T; 10],
}

impl<T: Scalar> HexagonFreeVars<T> {
    pub fn zero() -> Self {
        Self {
            values: std::array::from_fn(|_| T::zero()),
        }
    }

    pub fn get(&self, v: FreeVar) -> &T {
        &self.values[v.index()]
    }

    pub fn in_range(&self) -> bool {
        self.values
            .iter()
            .all(|v| *v <= T::one() && *v >= -T::one())
    }
}

/// One monomial family of the hexagon expansion: a sum of output characters
/// times a product of known correlators times at most one free variable.
#[derive(Clone, Copy, Debug)]
pub struct HexagonTerm {
    pub characters: &'static [&'static [Site]],
    pub known: &'static [Known],
    pub free: Option<FreeVar>,
}

impl HexagonTerm {
    pub fn sign_sum(&self, o: HexagonOutcome) -> i64 {
        self.characters.iter().map(|c| o.product(c)).sum()
    }
}

macro_rules! term {
    ([$([$($s:ident),*]),*], [$($k:ident),*], $f:expr) => {
        HexagonTerm {
            characters: &[$(&[$(Site::$s),*]),*],
            known: &[$(Known::$k),*],
            free: $f,
        }
    };
}

/// The hexagon distribution `64 p(a,b,c,a',b',c')` for arbitrary marginals,
/// as a table of monomials. Primed sites are `Ap`, `Bp`, `Cp`.
pub const HEXAGON_TERMS: &[HexagonTerm] = &[
    term!([[]], [], None),
    // single-party marginals
    term!([[A], [Ap]], [A], None),
    term!([[B], [Bp]], [B], None),
    term!([[C], [Cp]], [C], None),
    // independent pairs at distance two
    term!([[A, Bp], [Ap, B]], [A, B], None),
    term!([[B, Cp], [Bp, C]], [B, C], None),
    term!([[A, C], [Ap, Cp]], [A, C], None),
    // opposite pairs
    term!([[A, Ap]], [A, A], None),
    term!([[B, Bp]], [B, B], None),
    term!([[C, Cp]], [C, C], None),
    term!([[A, Bp, C], [Ap, B, Cp]], [A, B, C], None),
    // adjacent pairs
    term!([[A, B], [Ap, Bp]], [AB], None),
    term!([[B, C], [Bp, Cp]], [BC], None),
    term!([[C, Ap], [Cp, A]], [AC], None),
    // adjacent pair times an isolated party
    term!([[A, Ap, B], [A, Ap, Bp]], [A, AB], None),
    term!([[A, Ap, C], [A, Ap, Cp]], [A, AC], None),
    term!([[B, Bp, A], [B, Bp, Ap]], [B, AB], None),
    term!([[B, Bp, C], [B, Bp, Cp]], [B, BC], None),
    term!([[C, Cp, A], [C, Cp, Ap]], [C, AC], None),
    term!([[C, Cp, B], [C, Cp, Bp]], [C, BC], None),
    // two separated adjacent pairs
    term!([[A, Ap, B, Bp]], [AB, AB], None),
    term!([[B, Bp, C, Cp]], [BC, BC], None),
    term!([[A, Ap, C, Cp]], [AC, AC], None),
    // consecutive triple times an isolated party
    term!([[A, Ap, C, Bp], [A, Ap, B, Cp]], [A], Some(FreeVar::F3pp)),
    term!([[B, Bp, A, C], [B, Bp, Ap, Cp]], [B], Some(FreeVar::F3)),
    term!([[C, Cp, B, Ap], [C, Cp, Bp, A]], [C], Some(FreeVar::F3p)),
    // consecutive runs
    term!([[A, B, C], [Ap, Bp, Cp]], [], Some(FreeVar::F3)),
    term!([[B, C, Ap], [Bp, Cp, A]], [], Some(FreeVar::F3p)),
    term!([[C, Ap, Bp], [Cp, A, B]], [], Some(FreeVar::F3pp)),
    term!([[A, Ap, B, C], [A, Ap, Bp, Cp]], [], Some(FreeVar::F4)),
    term!([[B, Bp, C, Ap], [B, Bp, Cp, A]], [], Some(FreeVar::F4p)),
    term!([[C, Cp, A, B], [C, Cp, Ap, Bp]], [], Some(FreeVar::F4pp)),
    term!(
        [[A, Ap, B, Bp, C], [A, Ap, B, Bp, Cp]],
        [],
        Some(FreeVar::F5)
    ),
    term!(
        [[B, Bp, C, Cp, A], [B, Bp, C, Cp, Ap]],
        [],
        Some(FreeVar::F5p)
    ),
    term!(
        [[A, Ap, C, Cp, B], [A, Ap, C, Cp, Bp]],
        [],
        Some(FreeVar::F5pp)
    ),
    term!([[A, Ap, B, Bp, C, Cp]], [], Some(FreeVar::F6)),
];

fn known_value<T: Scalar>(b: &TriangleBehavior<T>, k: Known) -> T {
    match k {
        Known::A => b.e_a.clone(),
        Known::B => b.e_b.clone(),
        Known::C => b.e_c.clone(),
        Known::AB => b.e_ab.clone(),
        Known::BC => b.e_bc.clone(),
        Known::AC => b.e_ac.clone(),
    }
}

/// `64 p(o)` split into its behavior-only part and the coefficient of each
/// free variable: `64 p(o) = constant + sum_k coeffs[k] * F_k`.
pub fn hexagon_terms<T: Scalar>(behavior: &TriangleBehavior<T>, o: HexagonOutcome) -> (T, [T; 10]) {
    let mut constant = T::zero();
    let mut coeffs: [T; 10] = std::array::from_fn(|_| T::zero());
    for term in HEXAGON_TERMS {
        let signs = term.sign_sum(o);
        if signs == 0 {
            continue;
        }
        let known = term
            .known
            .iter()
            .fold(T::from_int(signs), |acc, &k| acc * known_value(behavior, k));
        match term.free {
            None => constant = constant + known,
            Some(f) => coeffs[f.index()] = coeffs[f.index()].clone() + known,
        }
    }
    (constant, coeffs)
}

pub fn hexagon_prob<T: Scalar>(
    behavior: &TriangleBehavior<T>,
    free: &HexagonFreeVars<T>,
    o: HexagonOutcome,
) -> T {
    let (constant, coeffs) = hexagon_terms(behavior, o);
    let total = coeffs
        .into_iter()
        .zip(free.values.iter())
        .fold(constant, |acc, (c, f)| acc + c * f.clone());
    total * T::from_ratio(1, 64)
}
