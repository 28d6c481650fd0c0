//! Multistart derivative-free search for trilocal models with prescribed
//! correlators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use super::{correlators_f64, TrilocalModel, MAX_ALPHABET};
use crate::correlators::BEHAVIOR_KEYS;
use crate::error::{Error, Result};

/// Target values for any subset of `[EA, EB, EC, EAB, EBC, EAC, EABC]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchTarget {
    pub values: [Option<f64>; 7],
    pub weights: [f64; 7],
}

impl SearchTarget {
    pub fn new(values: [Option<f64>; 7]) -> Result<Self> {
        Self::with_weights(values, [1.0; 7])
    }

    pub fn with_weights(values: [Option<f64>; 7], weights: [f64; 7]) -> Result<Self> {
        if values.iter().all(Option::is_none) {
            return Err(Error::InvalidConfig(
                "search target specifies no correlator".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig(
                "search weights must be finite and nonnegative".into(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "search target values must be finite".into(),
            ));
        }
        Ok(Self { values, weights })
    }

    /// `E_A = E_B = E_C = e1`, pairs `e2`, and optionally `E_ABC = e3`.
    pub fn symmetric(e1: f64, e2: f64, e3: Option<f64>) -> Result<Self> {
        Self::new([
            Some(e1),
            Some(e1),
            Some(e1),
            Some(e2),
            Some(e2),
            Some(e2),
            e3,
        ])
    }

    /// Reads `{"EA": .., ..., "weights": {"EA": ..}}`; absent keys are free.
    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("search target must be a JSON object".into()))?;
        let mut values = [None; 7];
        let mut weights = [1.0; 7];
        for (k, val) in obj {
            if k == "weights" {
                let w = val
                    .as_object()
                    .ok_or_else(|| Error::Parse("'weights' must be an object".into()))?;
                for (wk, wv) in w {
                    let i = key_index(wk)?;
                    weights[i] = number(wv)?;
                }
                continue;
            }
            values[key_index(k)?] = Some(number(val)?);
        }
        Self::with_weights(values, weights)
    }

    pub fn residual(&self, e: &[f64; 7]) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .zip(e)
            .filter_map(|((t, w), v)| t.map(|t| w * (v - t) * (v - t)))
            .sum()
    }
}

fn key_index(k: &str) -> Result<usize> {
    BEHAVIOR_KEYS
        .iter()
        .position(|b| *b == k)
        .ok_or_else(|| Error::Parse(format!("unknown correlator key '{k}'")))
}

fn number(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .to_string()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {n}"))),
        Value::String(s) => {
            crate::scalar::parse_rational(s).map(|r| crate::scalar::Scalar::to_f64(&r))
        }
        other => Err(Error::Parse(format!("expected a number, got {other}"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub budget: usize,
    pub seed: u64,
    /// Restarts stop early once a residual below this is found.
    pub stop_below: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            budget: 20_000,
            seed: 0,
            stop_below: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub model: TrilocalModel<f64>,
    pub residual: f64,
    pub restart: usize,
    pub evaluations: usize,
    pub warning: Option<String>,
}

impl SearchOutcome {
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "residual": self.residual,
            "restart": self.restart,
            "evaluations": self.evaluations,
            "warning": self.warning,
            "model": self.model.to_json_f64(),
            "correlators": correlators_f64(&self.model),
        })
    }
}

/// Parameter vector layout: `3d` source angles, then the three `d x d`
/// response tables row by row. Source weights are `sin^2` of the angles,
/// renormalized; responses are `sin^2` of theirs. Every box constraint is
/// thereby built in, and both ends of `[0,1]` are reachable.
struct Layout {
    d: usize,
}

impl Layout {
    fn len(&self) -> usize {
        3 * self.d + 3 * self.d * self.d
    }

    fn fill(&self, x: &[f64], m: &mut TrilocalModel<f64>) {
        let d = self.d;
        for s in 0..3 {
            let raw = &x[s * d..(s + 1) * d];
            let total: f64 = raw.iter().map(|t| t.sin().powi(2)).sum();
            for (dst, t) in m.dists[s].iter_mut().zip(raw) {
                *dst = if total > 0.0 {
                    t.sin().powi(2) / total
                } else {
                    1.0 / d as f64
                };
            }
        }
        let mut k = 3 * d;
        for table in [&mut m.resp_a, &mut m.resp_b, &mut m.resp_c] {
            for row in table.iter_mut() {
                for v in row.iter_mut() {
                    *v = x[k].sin().powi(2);
                    k += 1;
                }
            }
        }
    }

    fn blank(&self) -> TrilocalModel<f64> {
        let d = self.d;
        TrilocalModel {
            d,
            dists: std::array::from_fn(|_| vec![0.0; d]),
            resp_a: vec![vec![0.0; d]; d],
            resp_b: vec![vec![0.0; d]; d],
            resp_c: vec![vec![0.0; d]; d],
        }
    }
}

struct Run {
    x: Vec<f64>,
    residual: f64,
    evaluations: usize,
}

/// Levenberg-Marquardt on the weighted residual vector with a central
/// difference Jacobian. With at most seven residuals the damped normal
/// equations are solved in their small `m x m` dual form.
fn least_squares(
    target: &SearchTarget,
    layout: &Layout,
    mut x: Vec<f64>,
    cfg: &SearchConfig,
) -> Run {
    let active: Vec<(usize, f64, f64)> = (0..7)
        .filter_map(|k| target.values[k].map(|t| (k, t, target.weights[k].sqrt())))
        .collect();
    let m = active.len();
    let n = x.len();
    let mut scratch = layout.blank();
    let mut evals = 0usize;
    let mut residuals = |x: &[f64], evals: &mut usize| -> Vec<f64> {
        *evals += 1;
        layout.fill(x, &mut scratch);
        let e = correlators_f64(&scratch);
        active.iter().map(|&(k, t, w)| w * (e[k] - t)).collect()
    };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut r = residuals(&x, &mut evals);
    let mut best = norm(&r);
    let mut lambda = 1e-3;
    let h = 1e-6;
    let mut jac = vec![vec![0.0; n]; m];
    while evals + 2 * n < cfg.budget && best > cfg.stop_below && lambda < 1e12 {
        for j in 0..n {
            let old = x[j];
            x[j] = old + h;
            let up = residuals(&x, &mut evals);
            x[j] = old - h;
            let down = residuals(&x, &mut evals);
            x[j] = old;
            for i in 0..m {
                jac[i][j] = (up[i] - down[i]) / (2.0 * h);
            }
        }
        let gram: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| (0..n).map(|j| jac[i][j] * jac[k][j]).sum())
                    .collect()
            })
            .collect();
        loop {
            let mut a = gram.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * (1.0 + row[i]);
            }
            let Some(y) = solve(a, r.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = (0..n)
                .map(|j| x[j] - (0..m).map(|i| jac[i][j] * y[i]).sum::<f64>())
                .collect();
            let tr = residuals(&trial, &mut evals);
            let v = norm(&tr);
            if v < best {
                x = trial;
                r = tr;
                best = v;
                lambda = (lambda * 0.3).max(1e-15);
                break;
            }
            lambda *= 10.0;
            if lambda >= 1e12 || evals >= cfg.budget {
                break;
            }
        }
    }
    Run {
        x,
        residual: best,
        evaluations: evals,
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for i in c + 1..m {
            let f = a[i][c] / a[c][c];
            for k in c..m {
                a[i][k] -= f * a[c][k];
            }
            b[i] -= f * b[c];
        }
    }
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|k| a[c][k] * b[k]).sum();
        b[c] = (b[c] - s) / a[c][c];
    }
    Some(b)
}

/// Batch size, fixed so results do not depend on the worker count.
const RESTART_BATCH: usize = 4;

/// Restarts run in parallel batches of [`RESTART_BATCH`]; the search stops
/// after the first batch whose best residual is below `stop_below`.
/// Selection is the lowest residual, ties broken by restart index, so the
/// result does not depend on thread scheduling.
pub fn search_with(target: &SearchTarget, d: usize, cfg: &SearchConfig) -> Result<SearchOutcome> {
    if d == 0 || d > MAX_ALPHABET {
        return Err(Error::InvalidConfig(format!(
            "alphabet size {d} outside 1..={MAX_ALPHABET}"
        )));
    }
    if cfg.budget == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidConfig(
            "budget and restarts must be positive".into(),
        ));
    }
    let layout = Layout { d };
    let mut best: Option<(usize, Run)> = None;
    let mut evaluations = 0;
    let mut start = 0;
    while start < cfg.restarts {
        let end = (start + RESTART_BATCH).min(cfg.restarts);
        let runs: Vec<(usize, Run)> = (start..end)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(k as u64);
                let x0: Vec<f64> = (0..layout.len())
                    .map(|_| rng.gen::<f64>() * std::f64::consts::FRAC_PI_2)
                    .collect();
                (k, least_squares(target, &layout, x0, cfg))
            })
            .collect();
        for (k, run) in runs {
            evaluations += run.evaluations;
            let better = best.as_ref().is_none_or(|(_, b)| run.residual < b.residual);
            if better {
                best = Some((k, run));
            }
        }
        if best
            .as_ref()
            .is_some_and(|(_, b)| b.residual <= cfg.stop_below)
        {
            break;
        }
        start = end;
    }
    let (restart, run) = best.expect("at least one restart");
    let mut model = layout.blank();
    layout.fill(&run.x, &mut model);
    let warning = (d > 3).then(|| {
        format!("alphabet size {d} > 3: a failed search does not rule out a trilocal model")
    });
    Ok(SearchOutcome {
        model,
        residual: run.residual,
        restart,
        evaluations,
        warning,
    })
}

pub fn search(target: &SearchTarget, d: usize, budget: usize, seed: u64) -> Result<SearchOutcome> {
    search_with(
        target,
        d,
        &SearchConfig {
            budget,
            seed,
            ..SearchConfig::default()
        },
    )
}
