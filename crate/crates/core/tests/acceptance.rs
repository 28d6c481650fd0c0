//! Acceptance suite. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any criterion fails. Tolerances are fixed here.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use sha2::{Digest, Sha256};

use netbound::correlators::{TriangleBehavior, TriangleOutcome};
use netbound::fme::{
    derive_random_marginal_inequalities, mixed_linear_subsumed, reduce_by_symmetry,
    verify_sum4_identity, FamilyKind,
};
use netbound::inequalities::{
    check_nice, check_nice2, check_pair_sum, check_single_family, finner_check,
    finner_pq_distribution, finner_q_bound, FinnerFamilyPoint,
};
use netbound::lpfeas::{max_feasible_e2, nice2_bound, nsi_feasible};
use netbound::scalar::{int, rat, Rational, Scalar, Surd2};
use netbound::scan::{finner_only_cells, scan, Label, Plane, ScanConfig};
use netbound::trilocal::{
    binary_pqr_behavior, binary_pqr_model, model_e1e3_zero, model_e2_minus_third, model_max_e1,
    random_rational_model,
};

const MAXE2_TOL: f64 = 1e-4;
const MAXE2_SECONDS: u64 = 10;
const DERIVE_SECONDS: u64 = 60;
const BOUNDARY_MARGIN: f64 = 1e-12;
const EXPLICIT_EXACT: f64 = 1e-9;
const EXPLICIT_PRINTED: f64 = 5e-4;
const RANDOM_MODELS: usize = 1000;
const FINNER_OFFSET: f64 = 1e-3;
const FINNER_RES: usize = 101;
const PAIRWISE_RES: usize = 21;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cli(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_netbound"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!(
            "netbound {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ),
    )?;
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn lp_boundary() -> Outcome {
    let t = Instant::now();
    let v = cli(&["maxe2", "--e1", "0", "--tol", "1e-4"])?;
    let elapsed = t.elapsed();
    let e2 = v["e2"].as_f64().ok_or("no e2 in output")?;
    let target = std::f64::consts::SQRT_2 - 1.0;
    ensure((e2 - target).abs() < MAXE2_TOL, format!("maxe2(0) = {e2}"))?;
    ensure(
        elapsed < Duration::from_secs(MAXE2_SECONDS),
        format!("took {elapsed:?}"),
    )?;
    let mut worst: f64 = 0.0;
    for e1 in [rat(0, 1), rat(1, 4), rat(1, 2)] {
        let lp = max_feasible_e2(&e1, &rat(1, 10_000))
            .map_err(|e| e.to_string())?
            .to_f64();
        let closed = nice2_bound(e1.to_f64());
        worst = worst.max((lp - closed).abs());
        ensure(
            (lp - closed).abs() < MAXE2_TOL,
            format!("e1 = {e1}: LP {lp} vs closed form {closed}"),
        )?;
    }
    Ok(format!(
        "maxe2(0) = {e2:.6} in {elapsed:.2?}; worst LP/closed-form gap {worst:.1e}"
    ))
}

fn fm_derivation() -> Outcome {
    let t = Instant::now();
    let system = derive_random_marginal_inequalities();
    let elapsed = t.elapsed();
    ensure(system.len() == 24, format!("{} rows", system.len()))?;
    ensure(
        elapsed < Duration::from_secs(DERIVE_SECONDS),
        format!("took {elapsed:?}"),
    )?;
    let families = reduce_by_symmetry(&system).map_err(|e| e.to_string())?;
    let mut kinds: Vec<(FamilyKind, usize)> =
        families.iter().map(|f| (f.kind, f.members.len())).collect();
    kinds.sort_by_key(|(k, _)| k.name());
    ensure(
        kinds
            == vec![
                (FamilyKind::MixedLinear, 12),
                (FamilyKind::SquareDifference, 6),
                (FamilyKind::SquareSum, 6),
            ],
        format!("families {kinds:?}"),
    )?;
    let sd = families
        .iter()
        .find(|f| f.kind == FamilyKind::SquareDifference)
        .expect("checked above");
    let r = &sd.representative;
    // over (1, EAB, EAB^2, EBC^2, EAC^2)
    let got = [
        &r.constant,
        &r.coeffs[0],
        &r.coeffs[3],
        &r.coeffs[4],
        &r.coeffs[5],
    ];
    let want = [int(1), int(2), int(1), int(-1), int(-1)];
    ensure(
        got.iter().zip(&want).all(|(a, b)| *a == b),
        format!("representative {got:?}"),
    )?;
    ensure(
        r.coeffs[1] == int(0) && r.coeffs[2] == int(0),
        "representative has stray linear terms",
    )?;
    ensure(
        sd.members.contains(&r.normalized()),
        "representative is not itself a derived row",
    )?;
    Ok(format!("24 rows in {elapsed:.1?}; families 6 + 6 + 12"))
}

fn subsumption() -> Outcome {
    ensure(mixed_linear_subsumed(), "mixed-linear row not certified")?;
    ensure(verify_sum4_identity(), "four-outcome identity fails")?;
    Ok("mixed-linear = 1/2 SD(AB) + 1/2 SD(BC) + 2 EAC^2; identity holds".into())
}

fn witness_points() -> Outcome {
    let b = TriangleBehavior::zero_marginal(rat(1, 2), rat(-3, 5), int(0), int(0));
    let flagged: Vec<String> = check_single_family(&b)
        .into_iter()
        .filter(|r| !r.satisfied)
        .map(|r| r.name)
        .collect();
    ensure(!flagged.is_empty(), "family does not flag (1/2, -3/5, 0)")?;
    ensure(
        check_nice(&b).satisfied,
        "sum-of-squares bound flags (1/2, -3/5, 0)",
    )?;

    let e = Surd2::new(int(1), int(-1));
    let s = TriangleBehavior::zero_marginal(
        e.clone(),
        e.clone(),
        e.clone(),
        Surd2::from_rational(int(0)),
    );
    let family = check_single_family(&s);
    ensure(
        family.iter().all(|r| r.satisfied),
        "family flags (1-r2, 1-r2, 1-r2)",
    )?;
    ensure(
        !check_pair_sum(&s).satisfied,
        "pair-sum bound passes (1-r2, 1-r2, 1-r2)",
    )?;
    Ok(format!(
        "(1/2,-3/5,0) flagged by {flagged:?}; (1-r2)^3 point violates pair-sum only"
    ))
}

fn trilocal_closed_forms() -> Outcome {
    let grid: Vec<Rational> = (0..5).map(|k| rat(k, 4)).collect();
    let mut checked = 0;
    for p in &grid {
        for q in &grid {
            for r in &grid {
                let m =
                    binary_pqr_model(p.clone(), q.clone(), r.clone()).map_err(|e| e.to_string())?;
                ensure(
                    m.behavior() == binary_pqr_behavior(p, q, r),
                    format!("closed form differs from enumeration at ({p}, {q}, {r})"),
                )?;
                checked += 1;
            }
        }
    }
    let (lo, hi) = (0.7072, 1.0);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let t = lo + (hi - lo) * k as f64 / 49.0;
        let b = binary_pqr_behavior(&t, &t, &t);
        let margin = check_nice2(&b.e_a, &b.e_ab).margin;
        worst = worst.max(margin.abs());
    }
    ensure(
        worst < BOUNDARY_MARGIN,
        format!("largest |margin| {worst:e}"),
    )?;
    Ok(format!(
        "{checked} grid points exact; largest boundary |margin| {worst:.1e}"
    ))
}

fn explicit_models() -> Outcome {
    let b = model_e2_minus_third().behavior();
    ensure(
        [&b.e_a, &b.e_b, &b.e_c].iter().all(|v| **v == int(0))
            && [&b.e_ab, &b.e_bc, &b.e_ac]
                .iter()
                .all(|v| **v == rat(-1, 3)),
        format!("minus-third model gives {b:?}"),
    )?;

    let (m, res) = model_e1e3_zero().map_err(|e| e.to_string())?;
    let e = netbound::trilocal::correlators_f64(&m);
    ensure(
        e[..3].iter().all(|v| v.abs() < EXPLICIT_EXACT),
        format!("E1 = {:?}", &e[..3]),
    )?;
    ensure(e[6].abs() < EXPLICIT_EXACT, format!("E3 = {}", e[6]))?;
    ensure(
        (e[3] - 0.3621).abs() < EXPLICIT_PRINTED,
        format!("E2 = {}", e[3]),
    )?;
    println!("      e1e3-zero resolution: {}", res.to_json());

    let (m, res) = model_max_e1().map_err(|e| e.to_string())?;
    let c = netbound::trilocal::correlators_f64(&m);
    ensure(
        c[3..6]
            .iter()
            .all(|v| (v + 1.0 / 3.0).abs() < EXPLICIT_EXACT),
        format!("E2 = {:?}", &c[3..6]),
    )?;
    ensure(
        c[..3].iter().all(|v| (v - 0.1753).abs() < EXPLICIT_PRINTED),
        format!("E1 = {:?}", &c[..3]),
    )?;
    println!("      max-e1 resolution: {}", res.to_json());
    Ok(format!(
        "E2(e1e3-zero) = {:.6}; E1(max-e1) = {:.6}",
        e[3], c[0]
    ))
}

fn trilocal_inside_nsi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = 0;
    for k in 0..RANDOM_MODELS {
        let d = 1 + k % 3;
        let m = random_rational_model(&mut rng, d, 6);
        let feasible = nsi_feasible(&m.behavior())
            .map(|r| r.is_feasible())
            .unwrap_or(false);
        if !feasible {
            failures += 1;
        }
    }
    ensure(
        failures == 0,
        format!("{failures} of {RANDOM_MODELS} models rejected"),
    )?;
    Ok(format!(
        "{RANDOM_MODELS} random models with d <= 3 all feasible"
    ))
}

fn finner_comparison() -> Outcome {
    for k in 1..=9 {
        let p = k as f64 / 10.0;
        let q = finner_q_bound(p);
        let plus = |q: f64| -> Result<bool, String> {
            let pt = FinnerFamilyPoint::new(p, q).map_err(|e| e.to_string())?;
            let reports = finner_check(&finner_pq_distribution(&pt)).map_err(|e| e.to_string())?;
            let name = format!("finner[{}]", TriangleOutcome::from_index(0));
            Ok(reports
                .into_iter()
                .find(|r| r.name == name)
                .ok_or("no all-plus report")?
                .satisfied)
        };
        ensure(
            plus(q - FINNER_OFFSET)?,
            format!("p = {p}: violated below the curve"),
        )?;
        ensure(
            !plus(q + FINNER_OFFSET)?,
            format!("p = {p}: satisfied above the curve"),
        )?;
    }
    let cfg = ScanConfig {
        res: FINNER_RES,
        budget: 3_000,
        restarts: 2,
        ..ScanConfig::new(Plane::Finner)
    };
    let result = scan(&cfg).map_err(|e| e.to_string())?;
    let half = rat(1, 2);
    let band = |v: &Rational| *v >= rat(1, 5) && *v <= rat(3, 5);
    let cells: Vec<_> = finner_only_cells(&result).collect();
    let near_p = cells.iter().filter(|c| c.x > half).count();
    let near_q = cells.iter().filter(|c| c.y > half).count();
    let central = cells.iter().filter(|c| band(&c.x) && band(&c.y)).count();
    let nsi_only = result
        .cells
        .iter()
        .filter(|c| c.label == Label::NsiExcluded && c.finner_excluded == Some(false))
        .count();
    ensure(
        near_p > 0 && near_q > 0,
        format!("finner-only cells near corners: {near_p}, {near_q}"),
    )?;
    ensure(
        central == 0,
        format!("{central} finner-only cells in the central band"),
    )?;
    ensure(
        nsi_only > cells.len(),
        "NSI bound is not the stronger one overall",
    )?;
    Ok(format!(
        "curve flips at 9 values of p; finner-only cells {near_p} near (1,0), {near_q} near (0,1), 0 central; nsi-only {nsi_only}"
    ))
}

fn pairwise_landmarks() -> Outcome {
    let quick = |eac: Rational| ScanConfig {
        res: PAIRWISE_RES,
        budget: 4_000,
        restarts: 4,
        ..ScanConfig::new(Plane::Pairwise { eac })
    };
    let one = scan(&quick(int(1))).map_err(|e| e.to_string())?;
    let open: Vec<_> = one
        .cells
        .iter()
        .filter(|c| !matches!(c.label, Label::PositivityExcluded | Label::NsiExcluded))
        .collect();
    ensure(
        open.len() == 1 && open[0].x == int(0) && open[0].y == int(0),
        format!("{} non-excluded cells on the E_AC = 1 slice", open.len()),
    )?;
    let mut checked = 0;
    for eac in [int(1), rat(2, 5), int(0), rat(-3, 5)] {
        let r = if eac == int(1) {
            one.clone()
        } else {
            scan(&quick(eac.clone())).map_err(|e| e.to_string())?
        };
        for c in &r.cells {
            let m = r
                .find(&-c.x.clone(), &-c.y.clone())
                .ok_or("grid is not symmetric")?;
            ensure(
                m.label == c.label,
                format!(
                    "E_AC = {eac}: ({}, {}) is {} but its mirror is {}",
                    c.x, c.y, c.label, m.label
                ),
            )?;
            checked += 1;
        }
    }
    Ok(format!(
        "E_AC = 1 leaves only the origin; {checked} cells match their rotation"
    ))
}

fn determinism() -> Outcome {
    let hash = |threads: usize| -> Result<String, String> {
        let cfg = ScanConfig {
            res: 9,
            budget: 3_000,
            restarts: 3,
            seed: 17,
            threads: Some(threads),
            ..ScanConfig::new(Plane::E1E2)
        };
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("grid.csv");
        netbound::scan::emit_csv(&scan(&cfg).map_err(|e| e.to_string())?, &path)
            .map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        Ok(format!("{:x}", Sha256::digest(bytes)))
    };
    let a = hash(1)?;
    let b = hash(1)?;
    let c = hash(3)?;
    ensure(a == b, "two identical runs differ")?;
    ensure(a == c, "output depends on the worker count")?;
    Ok(format!("sha256 {}", &a[..16]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("LP boundary", lp_boundary),
        ("FM derivation", fm_derivation),
        ("subsumption", subsumption),
        ("witness points", witness_points),
        ("trilocal closed forms", trilocal_closed_forms),
        ("explicit models", explicit_models),
        ("trilocal inside NSI", trilocal_inside_nsi),
        ("finner comparison", finner_comparison),
        ("pairwise landmarks", pairwise_landmarks),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = t.elapsed();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({elapsed:.1?})", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why} ({elapsed:.1?})", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
