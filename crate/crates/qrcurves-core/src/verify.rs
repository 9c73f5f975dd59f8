//! Independent brute-force oracles and randomized verification suites.
//!
//! The determinant, operator-norm, and sup routines here are written
//! from scratch (Laplace expansion, power iteration, spherical-angle
//! grids) rather than calling the main-path code, so agreement between
//! a suite and the library is evidence of correctness instead of a
//! tautology. Every suite is deterministic given its seed: per-trial
//! RNGs are derived by a counter-based scheme, and violations are
//! collected and sorted by trial index so thread count cannot change
//! any output.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{CurveError, CurveField};
use crate::exterior::NForm;
use crate::linmap::{
    classify_near_calibrated, complex_dilatation_check, random_near_calibrated, BlockLinearMap,
    LinmapError,
};
use crate::plmesh::mobius_bounds_check;
use crate::sampling::{random_rotation, trial_rng, unit_vector};

// ---------------------------------------------------------------
// independent numerical oracles
// ---------------------------------------------------------------

/// Determinant by Laplace expansion along the first row. Exponential,
/// fine for the n <= 6 sizes used here, and entirely separate from the
/// LU path in the main library.
pub fn laplace_det(a: &[f64], n: usize) -> f64 {
    if n == 1 {
        return a[0];
    }
    let mut det = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let mut minor = Vec::with_capacity((n - 1) * (n - 1));
        for r in 1..n {
            for c in 0..n {
                if c != col {
                    minor.push(a[r * n + c]);
                }
            }
        }
        det += sign * a[col] * laplace_det(&minor, n - 1);
        sign = -sign;
    }
    det
}

/// Operator norm by power iteration on A^T A with a deterministic
/// start vector; independent of the eigenvalue solvers in `mat`.
pub fn power_iteration_norm(a: &[f64], rows: usize, cols: usize) -> f64 {
    let mut v: Vec<f64> = (0..cols).map(|i| 1.0 + (i as f64) * 0.37).collect();
    let norm = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>().sqrt();
    let nv = norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut sigma = 0.0;
    for _ in 0..600 {
        // w = A v, u = A^T w
        let mut w = vec![0.0; rows];
        for r in 0..rows {
            for c in 0..cols {
                w[r] += a[r * cols + c] * v[c];
            }
        }
        let mut u = vec![0.0; cols];
        for c in 0..cols {
            for r in 0..rows {
                u[c] += a[r * cols + c] * w[r];
            }
        }
        let nu = norm(&u);
        if nu == 0.0 {
            return 0.0;
        }
        for (x, y) in v.iter_mut().zip(&u) {
            *x = y / nu;
        }
        let next = nu.sqrt();
        if (next - sigma).abs() <= 1e-14 * next.max(1.0) {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// Pullback of vol^x computed with the oracle determinant.
pub fn oracle_pullback_volx(l: &BlockLinearMap) -> f64 {
    (0..l.k).map(|i| laplace_det(l.block(i), l.n)).sum()
}

// ---------------------------------------------------------------
// brute-force comass
// ---------------------------------------------------------------

/// Exhaustive comass lower bound over a discretized product of unit
/// spheres. The first frame vector is maximized in closed form (the
/// form is linear in it), the remaining n-1 vectors run over nested
/// dyadic angle grids, and each level adds a local refinement pass
/// around its best point. The result is a running maximum over a
/// sample family that only grows with the resolution, so it is
/// monotone non-decreasing in `resolution` (on dyadic values) and
/// converges to the comass from below.
pub fn brute_force_comass(form: &NForm, resolution: usize) -> Result<f64, CurveError> {
    let n = form.degree();
    let m = form.ambient_dim();
    if n > 3 || m > 6 {
        return Err(CurveError::BadParameter(format!(
            "cost guard: brute force limited to degree <= 3 and ambient <= 6, got ({n}, {m})"
        )));
    }
    if resolution < 2 {
        return Err(CurveError::BadParameter("resolution must be >= 2".into()));
    }
    // closed form for the first vector: sup over |v|=1 of
    // omega(v, rest) = |g| with g_j = omega(e_j, rest)
    let score = |rest: &[Vec<f64>]| -> f64 {
        let mut g2 = 0.0;
        for j in 0..m {
            let mut frame = Vec::with_capacity(n);
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            frame.push(e);
            frame.extend(rest.iter().cloned());
            let v = form.eval(&frame).unwrap_or(0.0);
            g2 += v * v;
        }
        g2.sqrt()
    };
    if n == 1 {
        return Ok(score(&[]));
    }
    let free = n - 1;
    let angles_per_vector = m - 1;
    let total_angles = free * angles_per_vector;
    let mut best = 0.0f64;
    // axis anchors: all frames of distinct standard basis vectors
    let mut anchor = vec![0usize; free];
    loop {
        let rest: Vec<Vec<f64>> = anchor
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                e
            })
            .collect();
        best = best.max(score(&rest));
        let mut a = free;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            anchor[a] += 1;
            if anchor[a] < m {
                break;
            }
            anchor[a] = 0;
        }
        if anchor.iter().all(|&i| i == 0) {
            break;
        }
    }
    // nested dyadic levels up to the requested resolution
    let mut level = 2usize;
    while level <= resolution {
        let (lv_best, lv_arg) = angle_grid_scan(&score, total_angles, angles_per_vector, m, level);
        best = best.max(lv_best);
        // local refinement around the level's best angles
        let mut center = lv_arg;
        let mut width = std::f64::consts::PI / level as f64;
        for _ in 0..12 {
            let (rb, ra) =
                refine_scan(&score, &center, width, angles_per_vector, m);
            best = best.max(rb);
            center = ra;
            width *= 0.5;
        }
        level *= 2;
    }
    Ok(best)
}

fn angles_to_vector(angles: &[f64], m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    let mut sin_prod = 1.0;
    for (i, &th) in angles.iter().enumerate() {
        v[i] = sin_prod * th.cos();
        sin_prod *= th.sin();
    }
    v[m - 1] = sin_prod;
    v
}

fn frame_from_angles(all: &[f64], per: usize, m: usize) -> Vec<Vec<f64>> {
    all.chunks(per).map(|ch| angles_to_vector(ch, m)).collect()
}

fn angle_grid_scan(
    score: &(dyn Fn(&[Vec<f64>]) -> f64 + Sync),
    total: usize,
    per: usize,
    m: usize,
    level: usize,
) -> (f64, Vec<f64>) {
    let combos = (level + 1).pow(total as u32);
    let results: Vec<(f64, usize)> = (0..combos)
        .into_par_iter()
        .map(|flat| {
            let mut rest = flat;
            let mut angles = vec![0.0; total];
            for a in (0..total).rev() {
                let i = rest % (level + 1);
                rest /= level + 1;
                // dyadic grids include their endpoints, so level 2L
                // contains every level-L angle
                angles[a] = std::f64::consts::PI * i as f64 / level as f64;
            }
            (score(&frame_from_angles(&angles, per, m)), flat)
        })
        .collect();
    let &(best, arg_flat) = results
        .iter()
        .max_by(|(a, ia), (b, ib)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
        .unwrap();
    let mut rest = arg_flat;
    let mut angles = vec![0.0; total];
    for a in (0..total).rev() {
        let i = rest % (level + 1);
        rest /= level + 1;
        angles[a] = std::f64::consts::PI * i as f64 / level as f64;
    }
    (best, angles)
}

fn refine_scan(
    score: &dyn Fn(&[Vec<f64>]) -> f64,
    center: &[f64],
    width: f64,
    per: usize,
    m: usize,
) -> (f64, Vec<f64>) {
    let total = center.len();
    let steps = 3usize; // -w, 0, +w per angle
    let combos = steps.pow(total as u32);
    let mut best = f64::NEG_INFINITY;
    let mut arg = center.to_vec();
    for flat in 0..combos {
        let mut rest = flat;
        let mut angles = center.to_vec();
        for a in 0..total {
            let i = rest % steps;
            rest /= steps;
            angles[a] += (i as f64 - 1.0) * width;
        }
        let v = score(&frame_from_angles(&angles, per, m));
        if v > best {
            best = v;
            arg = angles;
        }
    }
    (best, arg)
}

// ---------------------------------------------------------------
// randomized suites
// ---------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// Prop. 8.1 epsilon; must be below 1/(100k).
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Perturbation sizes for the stability suite.
    #[serde(default)]
    pub nus: Vec<f64>,
    /// Distortion bounds for the dilatation suite.
    #[serde(default)]
    pub k_bounds: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
}

fn default_tol() -> f64 {
    1e-9
}

impl SuiteConfig {
    pub fn new(n: usize, k: usize, trials: usize, seed: u64) -> Self {
        SuiteConfig {
            n,
            k,
            trials,
            seed,
            epsilon: None,
            nus: vec![],
            k_bounds: vec![],
            tolerance: 1e-9,
        }
    }

    fn validate(&self) -> Result<(), CurveError> {
        if self.trials == 0 {
            return Err(CurveError::BadParameter("trial count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub trial: u64,
    pub trial_seed: u64,
    pub margin: f64,
    pub what: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub trials_run: usize,
    /// Hypothesis-class sampling failures; reported, not violations.
    pub sampling_failures: usize,
    pub violations: Vec<Violation>,
    pub worst_margin: f64,
    pub seed: u64,
    pub runtime_ms: u128,
    /// Suite-specific measured summaries (max constants etc).
    pub stats: BTreeMap<String, f64>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// CSV rows of the violations (header + one line each).
    pub fn violations_csv(&self) -> String {
        let mut out = String::from("trial,trial_seed,margin,what\n");
        for v in &self.violations {
            out.push_str(&format!("{},{},{},{}\n", v.trial, v.trial_seed, v.margin, v.what));
        }
        out
    }
}

struct TrialOutcome {
    violations: Vec<Violation>,
    sampling_failure: bool,
    stat: Option<(String, f64)>,
}

fn run_suite<F>(name: &str, cfg: &SuiteConfig, trial: F) -> Result<SuiteResult, CurveError>
where
    F: Fn(u64, u64) -> Result<TrialOutcome, CurveError> + Sync,
{
    cfg.validate()?;
    let start = std::time::Instant::now();
    let outcomes: Vec<(u64, TrialOutcome)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let ts = crate::sampling::mix_seed(cfg.seed, t);
            trial(t, ts).map(|o| (t, o))
        })
        .collect::<Result<_, CurveError>>()?;
    let mut violations = vec![];
    let mut sampling_failures = 0;
    let mut stats: BTreeMap<String, f64> = BTreeMap::new();
    for (_, o) in &outcomes {
        violations.extend(o.violations.iter().cloned());
        if o.sampling_failure {
            sampling_failures += 1;
        }
        if let Some((k, v)) = &o.stat {
            let e = stats.entry(k.clone()).or_insert(f64::NEG_INFINITY);
            if *v > *e {
                *e = *v;
            }
        }
    }
    violations.sort_by_key(|v| v.trial);
    let worst_margin = violations.iter().map(|v| v.margin).fold(f64::INFINITY, f64::min);
    Ok(SuiteResult {
        suite: name.into(),
        trials_run: cfg.trials,
        sampling_failures,
        violations,
        worst_margin: if worst_margin.is_finite() { worst_margin } else { 0.0 },
        seed: cfg.seed,
        runtime_ms: start.elapsed().as_millis(),
        stats,
    })
}

/// Prop. 8.1: every accepted near-calibrated sample must satisfy the
/// three dominating-block conclusions. Conclusion checks recompute the
/// block norms and determinants with the oracle routines.
pub fn prop81_suite(cfg: &SuiteConfig) -> Result<SuiteResult, CurveError> {
    let eps = cfg
        .epsilon
        .ok_or_else(|| CurveError::BadParameter("prop81 suite needs epsilon".into()))?;
    let eps_max = 1.0 / (100.0 * cfg.k as f64);
    if !(eps > 0.0 && eps < eps_max) {
        return Err(CurveError::BadParameter(format!(
            "epsilon = {eps} outside (0, 1/(100k)) = (0, {eps_max})"
        )));
    }
    let (n, k) = (cfg.n, cfg.k);
    let tol = cfg.tolerance;
    run_suite("prop81", cfg, |t, ts| {
        let (l, _) = match random_near_calibrated(n, k, eps, ts) {
            Ok(v) => v,
            Err(LinmapError::SamplerExhausted { .. }) => {
                return Ok(TrialOutcome {
                    violations: vec![],
                    sampling_failure: true,
                    stat: None,
                })
            }
            Err(e) => return Err(CurveError::BadParameter(e.to_string())),
        };
        let res = classify_near_calibrated(&l, eps)
            .map_err(|e| CurveError::BadParameter(format!("trial {t}: {e}")))?;
        let rep = &res.normalized;
        let i0 = rep.dominating_index.unwrap();
        // independent recomputation on the normalized map
        let ln = l.orientation_normalized();
        let op = power_iteration_norm(
            &(0..n * k).flat_map(|r| ln.block(r / n)[(r % n) * n..(r % n + 1) * n].to_vec())
                .collect::<Vec<_>>(),
            n * k,
            n,
        );
        let norms: Vec<f64> = (0..k).map(|i| power_iteration_norm(ln.block(i), n, n)).collect();
        let dets: Vec<f64> = (0..k).map(|i| laplace_det(ln.block(i), n)).collect();
        let scale = op.powi(n as i32).max(op).max(1e-300);
        let mut violations = vec![];
        let mut push = |what: &str, margin: f64| {
            if margin < -tol {
                violations.push(Violation {
                    trial: t,
                    trial_seed: ts,
                    margin,
                    what: what.into(),
                });
            }
        };
        // (a) near-conformality of the dominating block
        push(
            "a_almost_conformal",
            ((1.0 + 7.0 * k as f64 * eps.sqrt()) * dets[i0] - norms[i0].powi(n as i32)) / scale,
        );
        // (b) the dominating block carries the norm
        push("b_dominant_norm", (norms[i0] - op / (1.0 + eps)) / op.max(1e-300));
        // (c) all other blocks are small
        for (i, &ni) in norms.iter().enumerate() {
            if i != i0 {
                push(
                    "c_others_small",
                    (5.0 * (k as f64).sqrt() * eps.powf(0.25) * op - ni) / op.max(1e-300),
                );
            }
        }
        Ok(TrialOutcome { violations, sampling_failure: false, stat: None })
    })
}

/// Lemma 8.2: calibrated maps are stable under columnwise
/// perturbation. Each trial builds a calibrated conformal block map,
/// perturbs its columns within nu |L| / sqrt(n), and checks both
/// conclusions with oracle norms and determinants.
pub fn lemma82_suite(cfg: &SuiteConfig) -> Result<SuiteResult, CurveError> {
    if cfg.nus.is_empty() {
        return Err(CurveError::BadParameter("lemma82 suite needs nu values".into()));
    }
    let nu_max = 0.5f64.powi(cfg.n as i32);
    for &nu in &cfg.nus {
        if !(nu > 0.0 && nu < nu_max) {
            return Err(CurveError::BadParameter(format!(
                "nu = {nu} outside (0, 2^-n) = (0, {nu_max})"
            )));
        }
    }
    let (n, k) = (cfg.n, cfg.k);
    let nus = cfg.nus.clone();
    let tol = cfg.tolerance;
    run_suite("lemma82", cfg, move |t, ts| {
        let mut rng = trial_rng(ts, 0);
        let mut violations = vec![];
        for (ni, &nu) in nus.iter().enumerate() {
            let i0 = rand::Rng::random_range(&mut rng, 0..k);
            let lambda: f64 = 0.5 + 1.5 * rand::Rng::random::<f64>(&mut rng);
            let q = random_rotation(&mut rng, n);
            let mut entries = vec![0.0; n * k * n];
            for r in 0..n {
                for c in 0..n {
                    entries[(i0 * n + r) * n + c] = lambda * q[r * n + c];
                }
            }
            let l = BlockLinearMap::new(n, k, entries.clone()).unwrap();
            // perturb each column by exactly a random fraction of the
            // allowed budget
            let col_bound = nu * lambda / (n as f64).sqrt();
            let mut r_entries = entries;
            for j in 0..n {
                let dir = unit_vector(&mut rng, n * k);
                let mag: f64 = rand::Rng::random::<f64>(&mut rng) * col_bound;
                for row in 0..n * k {
                    r_entries[row * n + j] += mag * dir[row];
                }
            }
            let r = BlockLinearMap::new(n, k, r_entries.clone()).unwrap();
            let rep = crate::linmap::perturbation_bound_check(&l, &r, nu)
                .map_err(|e| CurveError::BadParameter(format!("trial {t}: {e}")))?;
            // oracle recomputation
            let op_l = lambda; // conformal block: norm is the scale
            let op_r = power_iteration_norm(&r_entries, n * k, n);
            let pull_r = oracle_pullback_volx(&r);
            let norm_margin = ((1.0 + nu) * op_l - op_r) / op_l;
            let kr = if pull_r > 0.0 {
                op_r.powi(n as i32) / pull_r
            } else {
                f64::INFINITY
            };
            let k_bound = (1.0 + nu).powi(n as i32) / (1.0 - 2f64.powi(n as i32) * nu);
            let dist_margin = k_bound - kr;
            for (what, margin, lib_holds) in [
                ("norm_bound", norm_margin, rep.norm_holds),
                ("distortion_bound", dist_margin, rep.distortion_holds),
            ] {
                if margin < -tol || !lib_holds {
                    violations.push(Violation {
                        trial: t,
                        trial_seed: ts,
                        margin,
                        what: format!("{what}_nu{ni}"),
                    });
                }
            }
        }
        Ok(TrialOutcome { violations, sampling_failure: false, stat: None })
    })
}

/// Lemma 3.2: planar maps satisfying the dilatation premise for K obey
/// |L|^2 <= K * pullback(omega_sym). Trials sample the premise class
/// directly in Wirtinger coordinates.
pub fn lemma32_suite(cfg: &SuiteConfig) -> Result<SuiteResult, CurveError> {
    if cfg.k_bounds.is_empty() {
        return Err(CurveError::BadParameter("lemma32 suite needs K values".into()));
    }
    for &kb in &cfg.k_bounds {
        if kb < 1.0 {
            return Err(CurveError::BadParameter(format!("K = {kb} below 1")));
        }
    }
    let k = cfg.k;
    let k_bounds = cfg.k_bounds.clone();
    let tol = cfg.tolerance;
    run_suite("lemma32", cfg, move |t, ts| {
        let mut rng = trial_rng(ts, 0);
        let mut violations = vec![];
        for (ki, &kb) in k_bounds.iter().enumerate() {
            // sample dz in C^k, then dzbar with |dzbar| <= ratio |dz|
            let dz: Vec<f64> = unit_vector(&mut rng, 2 * k)
                .iter()
                .map(|v| v * (0.2 + 3.0 * rand::Rng::random::<f64>(&mut rng)))
                .collect();
            let dz_abs = dz.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ratio = (kb - 1.0) / (kb + 1.0) * rand::Rng::random::<f64>(&mut rng);
            let dir = unit_vector(&mut rng, 2 * k);
            let dzbar: Vec<f64> = dir.iter().map(|v| v * ratio * dz_abs).collect();
            // real 2x2 blocks from the Wirtinger pairs
            let mut entries = vec![0.0; 2 * k * 2];
            for i in 0..k {
                let (a, b) = (dz[2 * i], dz[2 * i + 1]);
                let (c, d) = (dzbar[2 * i], dzbar[2 * i + 1]);
                // block = [[re(dz+dzbar), im(dzbar-dz)], [im(dz+dzbar), re(dz-dzbar)]]
                entries[(2 * i) * 2] = a + c;
                entries[(2 * i) * 2 + 1] = d - b;
                entries[(2 * i + 1) * 2] = b + d;
                entries[(2 * i + 1) * 2 + 1] = a - c;
            }
            let l = BlockLinearMap::new(2, k, entries.clone()).unwrap();
            let rep = complex_dilatation_check(&l, kb)
                .map_err(|e| CurveError::BadParameter(format!("trial {t}: {e}")))?;
            if !rep.premise_holds {
                // construction error, not a lemma violation
                return Err(CurveError::BadParameter(format!(
                    "trial {t}: sampled map misses its own premise"
                )));
            }
            let op = power_iteration_norm(&entries, 2 * k, 2);
            let pull = oracle_pullback_volx(&l);
            let margin = (kb * pull - op * op) / (op * op).max(1e-300);
            if margin < -tol || !rep.conclusion_holds {
                violations.push(Violation {
                    trial: t,
                    trial_seed: ts,
                    margin,
                    what: format!("dilatation_K{ki}"),
                });
            }
        }
        Ok(TrialOutcome { violations, sampling_failure: false, stat: None })
    })
}

/// Lemma 9.2 sandwich for random Moebius maps with pole outside the
/// closed unit ball; also tracks the empirical Lemma 9.3 second-order
/// constant (its max over the suite lands in `stats`).
pub fn mobius_suite(cfg: &SuiteConfig) -> Result<SuiteResult, CurveError> {
    let n = cfg.n;
    if n < 2 {
        return Err(CurveError::BadParameter("mobius suite needs n >= 2".into()));
    }
    run_suite("mobius", cfg, move |t, ts| {
        let mut rng = trial_rng(ts, 0);
        let mut a = random_rotation(&mut rng, n);
        if rand::Rng::random::<f64>(&mut rng) < 0.5 {
            for j in 0..n {
                a[j] = -a[j]; // half the samples get a reflection
            }
        }
        let pnorm: f64 = 1.05 + 2.0 * rand::Rng::random::<f64>(&mut rng);
        let p: Vec<f64> = unit_vector(&mut rng, n).iter().map(|v| v * pnorm).collect();
        let b: Vec<f64> = (0..n).map(|_| 2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0).collect();
        let c: f64 = 0.3 + 2.7 * rand::Rng::random::<f64>(&mut rng);
        let m = crate::curves::MobiusMap::new(n, a, b, p, c, 2)
            .map_err(|e| CurveError::BadParameter(format!("trial {t}: {e}")))?;
        let rep = mobius_bounds_check(&m, ts)?;
        let mut violations = vec![];
        if !rep.lower_ok {
            violations.push(Violation {
                trial: t,
                trial_seed: ts,
                margin: rep.sup_half_ball - rep.dphi0_norm / 3.0,
                what: "lower_sandwich".into(),
            });
        }
        if !rep.upper_ok {
            violations.push(Violation {
                trial: t,
                trial_seed: ts,
                margin: rep.dphi0_norm - rep.sup_half_ball,
                what: "upper_sandwich".into(),
            });
        }
        Ok(TrialOutcome {
            violations,
            sampling_failure: false,
            stat: Some(("max_second_order_constant".into(), rep.second_order_constant)),
        })
    })
}

/// Liouville-type witness: a calibrated curve sampled over a box must
/// have exactly one non-constant block, and that block's differential
/// must be conformal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiouvilleReport {
    pub active_blocks: Vec<usize>,
    pub max_conformal_defect: f64,
    pub passes: bool,
    pub findings: Vec<String>,
}

pub fn liouville_witness(
    f: &CurveField,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    tol: f64,
) -> Result<LiouvilleReport, CurveError> {
    let dim = f.domain_dim();
    let total = resolution.pow(dim as u32);
    let mut active = vec![false; f.k];
    let mut defect = 0.0f64;
    let mut findings = vec![];
    for flat in 0..total {
        let mut p = vec![0.0; dim];
        let mut rest = flat;
        for a in (0..dim).rev() {
            let i = rest % resolution;
            rest /= resolution;
            p[a] = lo[a] + (hi[a] - lo[a]) * (i as f64 + 0.5) / resolution as f64;
        }
        let l = crate::numdiff::differential(f, &p, 1e-5)?;
        let norms = l.block_norms();
        let op = l.op_norm();
        if op == 0.0 {
            continue;
        }
        for (i, &ni) in norms.iter().enumerate() {
            if ni > tol * op {
                active[i] = true;
            }
        }
        // conformal defect of the strongest block: |B^T B - s Id|
        let i0 = norms
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
            .unwrap()
            .0;
        let blk = l.block(i0);
        let g = crate::mat::gram(blk, f.n, f.n);
        let s = (0..f.n).map(|i| g[i * f.n + i]).sum::<f64>() / f.n as f64;
        for r in 0..f.n {
            for c in 0..f.n {
                let expect = if r == c { s } else { 0.0 };
                defect = defect.max((g[r * f.n + c] - expect).abs() / s.max(1e-300));
            }
        }
    }
    let active_blocks: Vec<usize> =
        active.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
    if active_blocks.len() > 1 {
        findings.push(format!("multiple active blocks: {active_blocks:?}"));
    }
    if defect > tol {
        findings.push(format!("dominating block not conformal: defect {defect:.3e}"));
    }
    let passes = findings.is_empty() && active_blocks.len() <= 1;
    Ok(LiouvilleReport { active_blocks, max_conformal_defect: defect, passes, findings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{mobius_component_curve, MobiusMap};
    use crate::exterior::{make_vol, make_vol_cross};

    #[test]
    fn oracle_det_and_norm_agree_with_main_path() {
        let a = vec![2.0, 1.0, 0.0, -1.0, 3.0, 0.5, 0.2, 0.0, 1.0];
        assert!((laplace_det(&a, 3) - crate::mat::det(&a, 3)).abs() < 1e-12);
        assert!(
            (power_iteration_norm(&a, 3, 3) - crate::mat::op_norm(&a, 3, 3)).abs() < 1e-9
        );
    }

    #[test]
    fn brute_force_planar_volume() {
        let vol = make_vol(2);
        let v = brute_force_comass(&vol, 8).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "vol_R2 comass {v}");
    }

    #[test]
    fn brute_force_volx22_converges() {
        let form = make_vol_cross(2, 2).unwrap();
        let v16 = brute_force_comass(&form, 16).unwrap();
        let v64 = brute_force_comass(&form, 64).unwrap();
        assert!(v64 >= v16 - 1e-15, "monotonicity {v16} -> {v64}");
        assert!(v64 >= 0.999, "comass estimate {v64}");
        assert!(v64 <= 1.0 + 1e-9);
    }

    #[test]
    fn brute_force_ones_form() {
        let form = make_vol_cross(1, 4).unwrap();
        let v = brute_force_comass(&form, 4).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "1-form comass {v}");
    }

    #[test]
    fn brute_force_cost_guard() {
        let form = make_vol_cross(3, 3).unwrap(); // ambient 9 > 6
        assert!(brute_force_comass(&form, 8).is_err());
    }

    #[test]
    fn prop81_small_run_clean() {
        let mut cfg = SuiteConfig::new(3, 2, 300, 42);
        cfg.epsilon = Some(1e-3);
        let res = prop81_suite(&cfg).unwrap();
        assert!(res.passed(), "violations: {:?}", res.violations);
        assert_eq!(res.trials_run, 300);
    }

    #[test]
    fn prop81_rejects_bad_epsilon() {
        let mut cfg = SuiteConfig::new(3, 2, 10, 1);
        cfg.epsilon = Some(1.0 / 50.0);
        assert!(prop81_suite(&cfg).is_err());
    }

    #[test]
    fn lemma82_small_run_clean() {
        let mut cfg = SuiteConfig::new(3, 2, 300, 7);
        cfg.nus = vec![0.01, 0.05, 0.1];
        let res = lemma82_suite(&cfg).unwrap();
        assert!(res.passed(), "violations: {:?}", res.violations);
    }

    #[test]
    fn lemma32_small_run_clean() {
        let mut cfg = SuiteConfig::new(2, 3, 500, 11);
        cfg.k_bounds = vec![1.1, 2.0, 5.0];
        let res = lemma32_suite(&cfg).unwrap();
        assert!(res.passed(), "violations: {:?}", res.violations);
    }

    #[test]
    fn mobius_small_run_clean_and_deterministic() {
        let mut cfg = SuiteConfig::new(3, 1, 40, 23);
        cfg.n = 3;
        let r1 = mobius_suite(&cfg).unwrap();
        let r2 = mobius_suite(&cfg).unwrap();
        assert!(r1.passed(), "violations: {:?}", r1.violations);
        assert_eq!(
            r1.stats["max_second_order_constant"],
            r2.stats["max_second_order_constant"]
        );
    }

    #[test]
    fn liouville_passes_on_mobius_component() {
        let (c1, s1) = (0.6f64, 0.8f64);
        let a = vec![c1, -s1, 0.0, s1, c1, 0.0, 0.0, 0.0, 1.0];
        let m = MobiusMap::new(3, a, vec![0.0; 3], vec![2.0, 1.0, -1.0], 1.0, 2).unwrap();
        let f = mobius_component_curve(3, 3, 1, &m).unwrap();
        let rep = liouville_witness(&f, &[-0.2; 3], &[0.2; 3], 4, 1e-8).unwrap();
        assert!(rep.passes, "{rep:?}");
        assert_eq!(rep.active_blocks, vec![1]);
    }

    #[test]
    fn liouville_flags_ivv_f() {
        let maps = crate::curves::IvvMaps::new().unwrap();
        let f = crate::curves::ivv_f(&maps);
        // structured distortion shows two active block types on any
        // strip; the materialized field refuses huge k, so probe the
        // structured reports directly
        let d = maps.f_distortion(&[0.3, 0.4], 0.7).unwrap();
        assert!(d.distortion > 1.0 + 1e-6, "ivv_F is not calibrated: K = {}", d.distortion);
        assert!(f.k as u64 <= crate::curves::ivv::MATERIALIZE_CAP);
    }

    #[test]
    fn violations_reproduce_with_seed() {
        // force violations by checking an intentionally wrong bound:
        // instead, verify determinism of a clean suite's full output
        let mut cfg = SuiteConfig::new(3, 2, 100, 99);
        cfg.epsilon = Some(1e-3);
        let a = serde_json::to_string(&prop81_suite(&cfg).unwrap().violations).unwrap();
        let b = serde_json::to_string(&prop81_suite(&cfg).unwrap().violations).unwrap();
        assert_eq!(a, b);
    }
}
