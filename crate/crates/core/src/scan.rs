//! Grid sweeps over two-dimensional slices of correlator space. Every cell is
//! labeled by the first test that settles it: triangle positivity, then the
//! network (NSI) constraints, then a search for a trilocal model. Cells that
//! pass both exclusion tests but defeat the search are reported as gaps.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::correlators::{triangle_positivity, TriangleBehavior};
use crate::error::{Error, Result};
use crate::inequalities::{
    check_nice2, check_single_family, finner_check, finner_pq_distribution, FinnerFamilyPoint,
};
use crate::lpfeas::{best_three_body, nsi_feasible, FeasibilityResult};
use crate::scalar::{int, rational_from_f64, Rational, Scalar};
use crate::trilocal::{depolarize_model, search_with, SearchConfig, SearchTarget, TrilocalModel};

#[derive(Clone, Debug, PartialEq)]
pub enum Plane {
    /// Symmetric behaviors, `E_1` against `E_2`, with `E_ABC` free.
    E1E2,
    /// Symmetric behaviors with `E_1 = 0`, `E_2` against `E_3`.
    E2E3,
    /// Zero single-party marginals, `E_AB` against `E_BC` at fixed `E_AC`.
    Pairwise { eac: Rational },
    /// The mixture `p P_+++ + q P_--- + (1-p-q) P_diff`, `p` against `q`.
    Finner,
}

impl Plane {
    pub fn name(&self) -> &'static str {
        match self {
            Plane::E1E2 => "e1e2",
            Plane::E2E3 => "e2e3",
            Plane::Pairwise { .. } => "pairwise",
            Plane::Finner => "finner",
        }
    }

    /// Axis range shared by both coordinates.
    fn range(&self) -> (Rational, Rational) {
        match self {
            Plane::Finner => (Rational::zero(), Rational::one()),
            _ => (-Rational::one(), Rational::one()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    PositivityExcluded,
    NsiExcluded,
    Trilocal,
    Gap,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::PositivityExcluded => "positivity",
            Label::NsiExcluded => "nsi",
            Label::Trilocal => "trilocal",
            Label::Gap => "gap",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Label::PositivityExcluded,
            Label::NsiExcluded,
            Label::Trilocal,
            Label::Gap,
        ]
        .into_iter()
        .find(|l| l.as_str() == s)
        .ok_or_else(|| Error::Parse(format!("unknown label '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct RegionClassification {
    pub x: Rational,
    pub y: Rational,
    pub label: Label,
    /// Violated outcome, certificate summary, or search residual.
    pub evidence: String,
    pub positivity_ok: bool,
    pub nsi_ok: bool,
    /// Best search residual, when a search ran.
    pub residual: Option<f64>,
    pub model: Option<TrilocalModel<f64>>,
    /// Finner plane only: whether the Finner inequality excludes the cell.
    pub finner_excluded: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub plane: Plane,
    /// Grid points per axis.
    pub res: usize,
    /// Source alphabet size for the trilocal search.
    pub d: usize,
    pub seed: u64,
    pub budget: usize,
    pub restarts: usize,
    /// Largest summed squared correlator error accepted as a model.
    pub threshold: f64,
    /// Worker cap; `None` defers to `NETBOUND_THREADS`, then to rayon.
    pub threads: Option<usize>,
}

impl ScanConfig {
    pub fn new(plane: Plane) -> Self {
        Self {
            plane,
            res: 201,
            d: 3,
            seed: 0,
            budget: 20_000,
            restarts: 50,
            threshold: 1e-7,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.res < 2 {
            return bad(format!("resolution {} < 2", self.res));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return bad(format!("threshold {} must be positive", self.threshold));
        }
        if self.d == 0 || self.d > crate::trilocal::MAX_ALPHABET {
            return bad(format!(
                "alphabet size {} outside 1..={}",
                self.d,
                crate::trilocal::MAX_ALPHABET
            ));
        }
        if self.budget == 0 || self.restarts == 0 {
            return bad("budget and restarts must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive".into());
        }
        if let Plane::Pairwise { eac } = &self.plane {
            if eac.abs() > Rational::one() {
                return bad(format!("E_AC = {eac} outside [-1, 1]"));
            }
        }
        Ok(())
    }

    fn coordinate(&self, i: usize) -> Rational {
        let (lo, hi) = self.plane.range();
        &lo + (hi - &lo) * Rational::new(i.into(), (self.res - 1).into())
    }

    fn search_config(&self, cell: usize) -> SearchConfig {
        SearchConfig {
            restarts: self.restarts,
            budget: self.budget,
            seed: self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ cell as u64,
            stop_below: self.threshold * 1e-3,
        }
    }
}

fn thread_count(cfg: &ScanConfig) -> Result<Option<usize>> {
    if let Some(n) = cfg.threads {
        return Ok(Some(n));
    }
    match std::env::var("NETBOUND_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!(
                "NETBOUND_THREADS='{v}' is not a positive integer"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// One exclusion verdict: `Err(evidence)` when the test excludes the cell.
type Verdict = std::result::Result<(), String>;

fn positivity_verdict(b: &TriangleBehavior) -> Verdict {
    match triangle_positivity(b).first() {
        Some(o) => Err(format!("p({o})<0")),
        None => Ok(()),
    }
}

fn lp_verdict(b: &TriangleBehavior) -> Verdict {
    match nsi_feasible(b) {
        Ok(FeasibilityResult::Feasible { .. }) => Ok(()),
        Ok(FeasibilityResult::Infeasible { certificate }) => {
            let support = certificate.iter().filter(|y| !y.is_zero()).count();
            Err(format!("farkas:{support}rows"))
        }
        Err(Error::PositivityViolation { outcome }) => Err(format!("p({outcome})<0")),
        Err(e) => Err(e.to_string()),
    }
}

fn family_verdict(b: &TriangleBehavior) -> Verdict {
    match check_single_family(b).into_iter().find(|r| !r.satisfied) {
        Some(r) => Err(r.name),
        None => Ok(()),
    }
}

/// The slice point as a behavior, after positivity has been settled.
struct Point {
    behavior: TriangleBehavior,
    target: SearchTarget,
    /// Index of the cell whose search result this cell shares.
    search_cell: usize,
    finner_excluded: Option<bool>,
}

/// Applies the plane's positivity test; on success returns the behavior on
/// which the later tests run.
fn settle_positivity(
    cfg: &ScanConfig,
    i: usize,
    j: usize,
    x: &Rational,
    y: &Rational,
) -> Result<std::result::Result<Point, String>> {
    let cell = i * cfg.res + j;
    let f = |r: &Rational| r.to_f64();
    Ok(match &cfg.plane {
        Plane::E1E2 => {
            let mut b = TriangleBehavior::symmetric(x.clone(), y.clone(), Rational::zero());
            match best_three_body(&b) {
                Some(e3) => {
                    b.e_abc = e3;
                    Ok(Point {
                        target: SearchTarget::symmetric(f(x), f(y), None)?,
                        behavior: b,
                        search_cell: cell,
                        finner_excluded: None,
                    })
                }
                None => Err(positivity_verdict(&b)
                    .err()
                    .unwrap_or_else(|| "no E_ABC".into())),
            }
        }
        Plane::E2E3 => {
            let b = TriangleBehavior::symmetric(Rational::zero(), x.clone(), y.clone());
            positivity_verdict(&b).map(|()| Point {
                target: SearchTarget::symmetric(0.0, f(x), Some(f(y))).expect("finite target"),
                behavior: b,
                search_cell: cell,
                finner_excluded: None,
            })
        }
        Plane::Pairwise { eac } => {
            let mut b = TriangleBehavior::zero_marginal(
                x.clone(),
                y.clone(),
                eac.clone(),
                Rational::zero(),
            );
            // (x, y) and (-x, -y) differ by relabeling B's output; both
            // share the search of the lexicographically larger one
            let mirror = (cfg.res - 1 - i) * cfg.res + (cfg.res - 1 - j);
            let canonical = (x, y) < (&-x, &-y);
            let (cx, cy) = if canonical {
                (-x, -y)
            } else {
                (x.clone(), y.clone())
            };
            match best_three_body(&b) {
                Some(e3) => {
                    b.e_abc = e3;
                    let target = SearchTarget::new([
                        Some(0.0),
                        Some(0.0),
                        Some(0.0),
                        Some(f(&cx)),
                        Some(f(&cy)),
                        Some(f(eac)),
                        None,
                    ])?;
                    Ok(Point {
                        behavior: b,
                        target,
                        search_cell: if canonical { mirror } else { cell },
                        finner_excluded: None,
                    })
                }
                None => Err(positivity_verdict(&b)
                    .err()
                    .unwrap_or_else(|| "no E_ABC".into())),
            }
        }
        Plane::Finner => {
            let pt = FinnerFamilyPoint::new(x.clone(), y.clone())?;
            let dist = finner_pq_distribution(&pt);
            let finner_excluded = finner_check(&dist)?.iter().any(|r| !r.satisfied);
            let (e1, e2, e3) = pt.correlators();
            let b = TriangleBehavior::symmetric(e1.clone(), e2.clone(), e3.clone());
            positivity_verdict(&b).map(|()| Point {
                target: SearchTarget::symmetric(f(&e1), f(&e2), Some(f(&e3)))
                    .expect("finite target"),
                behavior: b,
                search_cell: cell,
                finner_excluded: Some(finner_excluded),
            })
        }
    })
}

fn nsi_verdict(plane: &Plane, b: &TriangleBehavior) -> Verdict {
    match plane {
        Plane::E1E2 => lp_verdict(b),
        Plane::E2E3 => {
            // E_2 <= sqrt(2) - 1, squared on the nonnegative side
            let s = int(1) + &b.e_ab;
            if s.is_negative() || &s * &s <= int(2) {
                Ok(())
            } else {
                Err("e2>sqrt2-1".into())
            }
        }
        Plane::Pairwise { .. } => family_verdict(b),
        Plane::Finner => {
            let r = check_nice2(&b.e_a, &b.e_ab);
            if r.satisfied {
                Ok(())
            } else {
                Err(r.name)
            }
        }
    }
}

fn classify(cfg: &ScanConfig, i: usize, j: usize) -> Result<Option<RegionClassification>> {
    let (x, y) = (cfg.coordinate(i), cfg.coordinate(j));
    if cfg.plane == Plane::Finner && &x + &y > Rational::one() {
        return Ok(None);
    }
    let mut cell = RegionClassification {
        x: x.clone(),
        y: y.clone(),
        label: Label::PositivityExcluded,
        evidence: String::new(),
        positivity_ok: false,
        nsi_ok: false,
        residual: None,
        model: None,
        finner_excluded: None,
    };
    let point = match settle_positivity(cfg, i, j, &x, &y)? {
        Ok(p) => p,
        Err(evidence) => {
            cell.evidence = evidence;
            return Ok(Some(cell));
        }
    };
    cell.positivity_ok = true;
    cell.finner_excluded = point.finner_excluded;
    let finner_note = |e: String| match point.finner_excluded {
        Some(v) => format!("{e};finner={}", if v { "violated" } else { "ok" }),
        None => e,
    };
    if let Err(evidence) = nsi_verdict(&cfg.plane, &point.behavior) {
        cell.label = Label::NsiExcluded;
        cell.evidence = finner_note(evidence);
        return Ok(Some(cell));
    }
    cell.nsi_ok = true;
    let outcome = search_with(&point.target, cfg.d, &cfg.search_config(point.search_cell))?;
    let residual = outcome.residual;
    cell.residual = Some(residual);
    if residual < cfg.threshold {
        cell.label = Label::Trilocal;
        cell.evidence = finner_note(format!("residual={residual:.3e}"));
        cell.model = Some(outcome.model);
    } else {
        cell.label = Label::Gap;
        cell.evidence = finner_note(format!("search-failed;residual={residual:.3e}"));
    }
    Ok(Some(cell))
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub config: ScanConfig,
    /// Row-major: `x` index outer, `y` index inner.
    pub cells: Vec<RegionClassification>,
}

/// Runs the sweep for `cfg.plane`. Cells are independent and evaluated in
/// parallel; output order is fixed by the grid.
pub fn scan(cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let n = cfg.res;
    let work = || -> Result<Vec<RegionClassification>> {
        let cells: Vec<Option<RegionClassification>> = (0..n * n)
            .into_par_iter()
            .map(|k| classify(cfg, k / n, k % n))
            .collect::<Result<_>>()?;
        Ok(cells.into_iter().flatten().collect())
    };
    let cells = match thread_count(cfg)? {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok(ScanResult {
        config: cfg.clone(),
        cells,
    })
}

fn require(cfg: &ScanConfig, ok: bool, want: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "expected plane {want}, got {}",
            cfg.plane.name()
        )))
    }
}

pub fn scan_e1_e2(cfg: &ScanConfig) -> Result<ScanResult> {
    require(cfg, cfg.plane == Plane::E1E2, "e1e2")?;
    scan(cfg)
}

pub fn scan_e2_e3(cfg: &ScanConfig) -> Result<ScanResult> {
    require(cfg, cfg.plane == Plane::E2E3, "e2e3")?;
    scan(cfg)
}

pub fn scan_eab_ebc(cfg: &ScanConfig) -> Result<ScanResult> {
    require(cfg, matches!(cfg.plane, Plane::Pairwise { .. }), "pairwise")?;
    scan(cfg)
}

pub fn scan_finner(cfg: &ScanConfig) -> Result<ScanResult> {
    require(cfg, cfg.plane == Plane::Finner, "finner")?;
    scan(cfg)
}

/// Decimal rendering with nine significant digits.
pub fn format_coordinate(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with("-") && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

impl ScanResult {
    pub fn count(&self, label: Label) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }

    /// Share of emitted cells labeled [`Label::Gap`].
    pub fn gap_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.count(Label::Gap) as f64 / self.cells.len() as f64
    }

    pub fn find(&self, x: &Rational, y: &Rational) -> Option<&RegionClassification> {
        self.cells.iter().find(|c| &c.x == x && &c.y == y)
    }

    /// Cells whose label contradicts the nesting
    /// trilocal => NSI-feasible => positivity-valid.
    pub fn audit_nesting(&self) -> Vec<String> {
        let t = self.config.threshold;
        self.cells
            .iter()
            .filter(|c| match c.label {
                Label::Trilocal => {
                    !(c.nsi_ok && c.positivity_ok && c.residual.is_some_and(|r| r < t))
                }
                Label::Gap => !(c.nsi_ok && c.positivity_ok && c.residual.is_some_and(|r| r >= t)),
                Label::NsiExcluded => !c.positivity_ok || c.nsi_ok,
                Label::PositivityExcluded => c.positivity_ok,
            })
            .map(|c| format!("({}, {}) labeled {}", c.x, c.y, c.label))
            .collect()
    }

    /// For up to `samples` trilocal cells, depolarizes the found model at
    /// visibilities 1/4, 1/2 and 3/4 and checks that every point on the path
    /// still passes triangle positivity and the hexagon program. Returns the
    /// failures.
    pub fn audit_depolarization(&self, samples: usize) -> Result<Vec<String>> {
        let trilocal: Vec<&RegionClassification> = self
            .cells
            .iter()
            .filter(|c| c.label == Label::Trilocal)
            .collect();
        if trilocal.is_empty() || samples == 0 {
            return Ok(Vec::new());
        }
        let stride = trilocal.len().div_ceil(samples);
        let mut failures = Vec::new();
        for c in trilocal.iter().step_by(stride) {
            let model = c.model.as_ref().expect("trilocal cells keep their model");
            for eta in [0.25, 0.5, 0.75] {
                let m = depolarize_model(model, &eta)?;
                let e = crate::trilocal::correlators_f64(&m);
                let fields: [Rational; 7] =
                    std::array::from_fn(|k| rational_from_f64(e[k], 1 << 30).expect("finite"));
                let b = TriangleBehavior::from_fields(fields);
                if let Err(ev) = positivity_verdict(&b).and_then(|()| lp_verdict(&b)) {
                    failures.push(format!("({}, {}) at eta={eta}: {ev}", c.x, c.y));
                }
            }
        }
        Ok(failures)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,label,evidence")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{}",
                format_coordinate(c.x.to_f64()),
                format_coordinate(c.y.to_f64()),
                c.label,
                c.evidence
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let counts: serde_json::Map<String, Value> = [
            Label::PositivityExcluded,
            Label::NsiExcluded,
            Label::Trilocal,
            Label::Gap,
        ]
        .into_iter()
        .map(|l| (l.as_str().to_string(), json!(self.count(l))))
        .collect();
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                json!({
                    "x": c.x.to_f64(),
                    "y": c.y.to_f64(),
                    "label": c.label.as_str(),
                    "evidence": c.evidence,
                    "residual": c.residual,
                    "finner_excluded": c.finner_excluded,
                })
            })
            .collect();
        let mut plane = json!({"name": self.config.plane.name()});
        if let Plane::Pairwise { eac } = &self.config.plane {
            plane["eac"] = json!(crate::scalar::format_rational(eac));
        }
        json!({
            "plane": plane,
            "res": self.config.res,
            "d": self.config.d,
            "seed": self.config.seed,
            "counts": counts,
            "gap_fraction": self.gap_fraction(),
            "nesting_violations": self.audit_nesting(),
            "cells": cells,
        })
    }
}

/// Writes the grid as CSV. The grid must be nonempty.
pub fn emit_csv(result: &ScanResult, path: &Path) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::InvalidConfig("cannot emit an empty grid".into()));
    }
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    result.write_csv(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

/// Cells excluded by the Finner inequality but not by the NSI bound.
pub fn finner_only_cells(result: &ScanResult) -> impl Iterator<Item = &RegionClassification> {
    result.cells.iter().filter(|c| {
        c.finner_excluded == Some(true) && c.label != Label::NsiExcluded && c.positivity_ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn quick(plane: Plane, res: usize) -> ScanConfig {
        ScanConfig {
            res,
            budget: 4_000,
            restarts: 6,
            ..ScanConfig::new(plane)
        }
    }

    #[test]
    fn config_validation() {
        let mut c = ScanConfig::new(Plane::E1E2);
        c.res = 1;
        assert!(c.validate().is_err());
        let mut c = ScanConfig::new(Plane::E1E2);
        c.threshold = 0.0;
        assert!(c.validate().is_err());
        let c = ScanConfig::new(Plane::Pairwise { eac: rat(3, 2) });
        assert!(c.validate().is_err());
        assert!(scan_e2_e3(&ScanConfig::new(Plane::E1E2)).is_err());
    }

    #[test]
    fn coordinates_are_exact() {
        let c = quick(Plane::E1E2, 5);
        let xs: Vec<Rational> = (0..5).map(|i| c.coordinate(i)).collect();
        assert_eq!(xs, vec![int(-1), rat(-1, 2), int(0), rat(1, 2), int(1)]);
        let f = quick(Plane::Finner, 3);
        assert_eq!(f.coordinate(1), rat(1, 2));
    }

    #[test]
    fn coordinate_format() {
        assert_eq!(format_coordinate(0.0), "0");
        assert_eq!(format_coordinate(0.5), "0.500000000");
        assert_eq!(format_coordinate(-1.0), "-1.00000000");
        assert_eq!(format_coordinate(1.0 / 3.0), "0.333333333");
        assert_eq!(format_coordinate(12.5), "12.5000000");
    }

    #[test]
    fn small_e1e2_grid() {
        let r = scan(&quick(Plane::E1E2, 5)).unwrap();
        assert_eq!(r.cells.len(), 25);
        assert_eq!(r.find(&int(0), &int(0)).unwrap().label, Label::Trilocal);
        assert_eq!(r.find(&int(0), &int(1)).unwrap().label, Label::NsiExcluded);
        assert_eq!(
            r.find(&int(0), &int(-1)).unwrap().label,
            Label::PositivityExcluded
        );
        assert_eq!(
            r.find(&int(0), &rat(1, 2)).unwrap().label,
            Label::NsiExcluded
        );
        assert!(r.audit_nesting().is_empty());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("x,y,label,evidence\n-1.00000000,-1.00000000,"));
    }

    #[test]
    fn finner_grid_skips_the_upper_triangle() {
        let r = scan(&quick(Plane::Finner, 3)).unwrap();
        assert_eq!(r.cells.len(), 6);
        assert!(r.cells.iter().all(|c| c.finner_excluded.is_some()));
    }

    #[test]
    fn labels_round_trip() {
        for l in [
            Label::PositivityExcluded,
            Label::NsiExcluded,
            Label::Trilocal,
            Label::Gap,
        ] {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
        }
        assert!("red".parse::<Label>().is_err());
    }
}
