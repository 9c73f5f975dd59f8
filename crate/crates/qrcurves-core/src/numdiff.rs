//! Numerical differential analysis of curve fields: finite-difference
//! Jacobians, distortion scans over regions, Hoelder exponents, and the
//! growth/Harnack/metric-ratio inequality checkers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{CurveError, CurveField, RosayCurve};
use crate::exterior::NForm;
use crate::linmap::{distortion_volx, BlockLinearMap, DistortionReport};
use crate::sampling::{inf_on_sphere, sup_on_ball, sup_on_sphere};

/// Values of a curve field sampled on an axis-aligned lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridField {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
    pub n: usize,
    pub k: usize,
    pub order: usize,
    /// Row-major node values, each of length n*k.
    pub values: Vec<Vec<f64>>,
}

impl GridField {
    pub fn from_curve(
        f: &CurveField,
        origin: &[f64],
        spacing: &[f64],
        shape: &[usize],
        order: usize,
    ) -> Result<Self, CurveError> {
        if order != 2 && order != 4 {
            return Err(CurveError::BadParameter(format!("stencil order {order} not in {{2, 4}}")));
        }
        if spacing.iter().any(|h| !(*h > 0.0)) {
            return Err(CurveError::BadParameter("grid spacing must be positive".into()));
        }
        let dim = origin.len();
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let p: Vec<f64> =
                (0..dim).map(|a| origin[a] + idx[a] as f64 * spacing[a]).collect();
            let v = f.eval(&p)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CurveError::BadParameter(format!("non-finite value at {p:?}")));
            }
            values.push(v);
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(GridField {
            origin: origin.to_vec(),
            spacing: spacing.to_vec(),
            shape: shape.to_vec(),
            n: f.n,
            k: f.k,
            order,
            values,
        })
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for (a, &i) in idx.iter().enumerate() {
            f = f * self.shape[a] + i;
        }
        f
    }

    /// Central-difference Jacobian at an interior node.
    pub fn jacobian_at(&self, idx: &[usize]) -> Result<BlockLinearMap, CurveError> {
        let dim = self.shape.len();
        let clearance = self.order / 2;
        for a in 0..dim {
            if idx[a] < clearance || idx[a] + clearance >= self.shape[a] {
                return Err(CurveError::OutsideDomain);
            }
        }
        let rows = self.n * self.k;
        let mut entries = vec![0.0; rows * dim];
        for a in 0..dim {
            let h = self.spacing[a];
            let mut im = idx.to_vec();
            let mut ip = idx.to_vec();
            im[a] -= 1;
            ip[a] += 1;
            let (vm, vp) = (&self.values[self.flat(&im)], &self.values[self.flat(&ip)]);
            if self.order == 2 {
                for r in 0..rows {
                    entries[r * dim + a] = (vp[r] - vm[r]) / (2.0 * h);
                }
            } else {
                let mut im2 = idx.to_vec();
                let mut ip2 = idx.to_vec();
                im2[a] -= 2;
                ip2[a] += 2;
                let (vm2, vp2) = (&self.values[self.flat(&im2)], &self.values[self.flat(&ip2)]);
                for r in 0..rows {
                    entries[r * dim + a] =
                        (-vp2[r] + 8.0 * vp[r] - 8.0 * vm[r] + vm2[r]) / (12.0 * h);
                }
            }
        }
        BlockLinearMap::new(self.n, self.k, entries)
            .map_err(|e| CurveError::BadParameter(e.to_string()))
    }
}

/// Finite-difference differential of a curve field at x. Central
/// stencils of order 2 or 4; within a stencil width of a declared seam
/// the stencil switches to one-sided on the side with more clearance.
pub fn jacobian_fd(
    f: &CurveField,
    x: &[f64],
    h: f64,
    order: usize,
) -> Result<BlockLinearMap, CurveError> {
    if order != 2 && order != 4 {
        return Err(CurveError::BadParameter(format!("stencil order {order} not in {{2, 4}}")));
    }
    if !(h > 0.0) {
        return Err(CurveError::BadParameter(format!("step h = {h} must be positive")));
    }
    let dim = f.domain_dim();
    let rows = f.n * f.k;
    let reach = (order / 2) as f64 * h;
    let mut entries = vec![0.0; rows * dim];
    let seam = f.seam_distance(x);
    for a in 0..dim {
        let probe = |s: f64| -> Result<Vec<f64>, CurveError> {
            let mut p = x.to_vec();
            p[a] += s;
            f.eval(&p)
        };
        let col: Vec<f64> = if seam > reach * 1.5 {
            match order {
                2 => {
                    let (vm, vp) = (probe(-h)?, probe(h)?);
                    (0..rows).map(|r| (vp[r] - vm[r]) / (2.0 * h)).collect()
                }
                _ => {
                    let (vm2, vm, vp, vp2) = (probe(-2.0 * h)?, probe(-h)?, probe(h)?, probe(2.0 * h)?);
                    (0..rows)
                        .map(|r| (-vp2[r] + 8.0 * vp[r] - 8.0 * vm[r] + vm2[r]) / (12.0 * h))
                        .collect()
                }
            }
        } else {
            // one-sided second-order stencil pointing away from the seam
            let mut plus = x.to_vec();
            plus[a] += h;
            let mut minus = x.to_vec();
            minus[a] -= h;
            let side = if f.seam_distance(&plus) >= f.seam_distance(&minus) { 1.0 } else { -1.0 };
            let (v0, v1, v2) = (probe(0.0)?, probe(side * h)?, probe(side * 2.0 * h)?);
            (0..rows)
                .map(|r| side * (-3.0 * v0[r] + 4.0 * v1[r] - v2[r]) / (2.0 * h))
                .collect()
        };
        for r in 0..rows {
            entries[r * dim + a] = col[r];
        }
    }
    BlockLinearMap::new(f.n, f.k, entries).map_err(|e| CurveError::BadParameter(e.to_string()))
}

/// Differential at x: analytic when the construction carries one,
/// finite differences otherwise.
pub fn differential(f: &CurveField, x: &[f64], h: f64) -> Result<BlockLinearMap, CurveError> {
    match f.analytic_diff(x) {
        Some(d) => d,
        None => jacobian_fd(f, x, h, 2),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldPoint {
    pub point: Vec<f64>,
    pub report: DistortionReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSummary {
    pub points: usize,
    pub max_distortion: f64,
    pub argmax: Vec<f64>,
    pub min_pullback: f64,
    pub constant_points: usize,
    pub infinite_points: usize,
    /// Count of points per dominating block index.
    pub dominating_histogram: BTreeMap<usize, usize>,
}

/// Distortion reports over a uniform grid of an axis-aligned box
/// inside the curve domain. `resolution` cells per axis; the samples
/// sit at cell midpoints. Deterministic regardless of thread count.
pub fn distortion_field(
    f: &CurveField,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    fd_h: f64,
) -> Result<(Vec<FieldPoint>, FieldSummary), CurveError> {
    let dim = f.domain_dim();
    if lo.len() != dim || hi.len() != dim {
        return Err(CurveError::BadParameter("box dimension mismatch".into()));
    }
    let total = resolution.pow(dim as u32);
    let pts: Vec<Vec<f64>> = (0..total)
        .map(|mut flat| {
            let mut p = vec![0.0; dim];
            for a in (0..dim).rev() {
                let i = flat % resolution;
                flat /= resolution;
                p[a] = lo[a] + (hi[a] - lo[a]) * (i as f64 + 0.5) / resolution as f64;
            }
            p
        })
        .collect();
    let reports: Vec<FieldPoint> = pts
        .par_iter()
        .map(|p| {
            let l = differential(f, p, fd_h)?;
            let mut rep = distortion_volx(&l);
            rep.dominating_index = dominating_index(&rep.block_norms);
            Ok(FieldPoint { point: p.clone(), report: rep })
        })
        .collect::<Result<_, CurveError>>()?;
    let summary = summarize(&reports);
    Ok((reports, summary))
}

fn dominating_index(block_norms: &[f64]) -> Option<usize> {
    block_norms
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

fn summarize(reports: &[FieldPoint]) -> FieldSummary {
    let mut max_distortion = f64::NEG_INFINITY;
    let mut argmax = vec![];
    let mut min_pullback = f64::INFINITY;
    let mut constant_points = 0;
    let mut infinite_points = 0;
    let mut hist = BTreeMap::new();
    for fp in reports {
        let r = &fp.report;
        if r.constant {
            constant_points += 1;
            continue;
        }
        match r.distortion {
            Some(k) => {
                if k > max_distortion {
                    max_distortion = k;
                    argmax = fp.point.clone();
                }
            }
            None => infinite_points += 1,
        }
        min_pullback = min_pullback.min(r.pullback);
        if let Some(i) = r.dominating_index {
            *hist.entry(i).or_insert(0) += 1;
        }
    }
    FieldSummary {
        points: reports.len(),
        max_distortion,
        argmax,
        min_pullback,
        constant_points,
        infinite_points,
        dominating_histogram: hist,
    }
}

/// Hoelder exponent ||omega|| / (K |omega|_l1) of K-quasiregular
/// omega-curves. The comass of a product volume form is known in
/// closed form (1 for n >= 2, sqrt k for n = 1); other forms fall back
/// to the numerical comass.
pub fn holder_exponent(k_dist: f64, form: &NForm) -> Result<f64, CurveError> {
    if !(k_dist >= 1.0) {
        return Err(CurveError::BadParameter(format!("K = {k_dist} must be >= 1")));
    }
    let l1 = form.l1_norm();
    if l1 == 0.0 {
        return Err(CurveError::BadParameter("zero form has no Hoelder exponent".into()));
    }
    let comass = match volx_structure(form) {
        Some((n, k)) => {
            if n >= 2 {
                1.0
            } else {
                (k as f64).sqrt()
            }
        }
        None => crate::exterior::comass(form, &crate::exterior::ComassOptions::default()).value,
    };
    Ok(comass / (k_dist * l1))
}

/// Detect whether a form is vol^x(n, k): k unit terms, each the full
/// increasing multi-index of one n-block of R^(nk).
fn volx_structure(form: &NForm) -> Option<(usize, usize)> {
    let n = form.degree();
    let m = form.ambient_dim();
    if n == 0 || m % n != 0 {
        return None;
    }
    let k = m / n;
    let mut seen = vec![false; k];
    let mut count = 0;
    for (idx, c) in form.terms() {
        if (c - 1.0).abs() > 1e-15 {
            return None;
        }
        let first = idx[0];
        if (first - 1) % n != 0 {
            return None;
        }
        let b = (first - 1) / n;
        for (j, &i) in idx.iter().enumerate() {
            if i != b * n + j + 1 {
                return None;
            }
        }
        if seen[b] {
            return None;
        }
        seen[b] = true;
        count += 1;
    }
    if count == k {
        Some((n, k))
    } else {
        None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub params: BTreeMap<String, f64>,
}

impl InequalityReport {
    fn new(lhs: f64, rhs: f64, tol: f64, params: BTreeMap<String, f64>) -> Self {
        let margin = rhs - lhs;
        InequalityReport { lhs, rhs, margin, holds: margin >= -tol, params }
    }
}

const SUP_SAMPLES: usize = 4000;
const INEQ_TOL: f64 = 1e-9;

fn ball_params(center: &[f64], r: f64) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    for (i, c) in center.iter().enumerate() {
        p.insert(format!("center_{i}"), *c);
    }
    p.insert("radius".into(), r);
    p
}

/// Harnack-type bound for small-distortion curves:
/// sup over (1/2)B of |F| against 2^((4-4 rho)/rho) sup over rho B.
/// The caller asserts the gauge hypothesis; it holds with tau = 0 for
/// calibrated curves.
pub fn harnack_check(
    f: &CurveField,
    center: &[f64],
    r: f64,
    rho: f64,
    seed: u64,
) -> Result<InequalityReport, CurveError> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(CurveError::BadParameter(format!("rho = {rho} outside (0, 1/2]")));
    }
    let norm_or_nan =
        |p: &[f64]| f.value_norm(p).unwrap_or(f64::NAN);
    let lhs = sup_on_ball(center, 0.5 * r, SUP_SAMPLES, seed, &norm_or_nan);
    let sup_rho = sup_on_ball(center, rho * r, SUP_SAMPLES, seed.wrapping_add(1), &norm_or_nan);
    let factor = ((4.0 - 4.0 * rho) / rho).exp2();
    let mut params = ball_params(center, r);
    params.insert("rho".into(), rho);
    params.insert("factor".into(), factor);
    finite_report(lhs, factor * sup_rho, params)
}

/// Growth bound sup_{(4/5)B}|F| <= 8 sup_{(2/5)B}|F| + 19 tau sup_B|F|.
pub fn growth_check(
    f: &CurveField,
    center: &[f64],
    r: f64,
    tau: f64,
    seed: u64,
) -> Result<InequalityReport, CurveError> {
    if tau < 0.0 {
        return Err(CurveError::BadParameter(format!("tau = {tau} must be nonnegative")));
    }
    let norm_or_nan = |p: &[f64]| f.value_norm(p).unwrap_or(f64::NAN);
    let lhs = sup_on_ball(center, 0.8 * r, SUP_SAMPLES, seed, &norm_or_nan);
    let s2 = sup_on_ball(center, 0.4 * r, SUP_SAMPLES, seed.wrapping_add(1), &norm_or_nan);
    let sb = if tau > 0.0 {
        sup_on_ball(center, r, SUP_SAMPLES, seed.wrapping_add(2), &norm_or_nan)
    } else {
        0.0
    };
    let mut params = ball_params(center, r);
    params.insert("tau".into(), tau);
    finite_report(lhs, 8.0 * s2 + 19.0 * tau * sb, params)
}

fn finite_report(
    lhs: f64,
    rhs: f64,
    params: BTreeMap<String, f64>,
) -> Result<InequalityReport, CurveError> {
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(CurveError::OutsideDomain);
    }
    Ok(InequalityReport::new(lhs, rhs, INEQ_TOL, params))
}

/// Caccioppoli-type diagnostic: the paper bounds the n-energy of a
/// K-quasiregular curve on (1/2)B by C(n) K diam(F B) with C(n) never
/// made explicit, so this reports the empirical ratio and a refinement
/// study instead of a pass/fail verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    pub energy_root: f64,
    pub diam_image: f64,
    /// energy_root / (K diam); a lower bound for C(n).
    pub empirical_constant: f64,
    /// (resolution, empirical constant) over refinements.
    pub refinement: Vec<(usize, f64)>,
}

pub fn caccioppoli_check(
    f: &CurveField,
    center: &[f64],
    r: f64,
    k_dist: f64,
    resolution: usize,
    fd_h: f64,
    seed: u64,
) -> Result<CaccioppoliReport, CurveError> {
    let mut refinement = Vec::new();
    let mut last = (0.0, 0.0, 0.0);
    for res in [resolution, resolution * 2] {
        let energy = energy_half_ball(f, center, r, res, fd_h)?;
        let diam = image_diameter(f, center, r, seed)?;
        let root = energy.powf(1.0 / f.n as f64);
        let c = if diam > 0.0 { root / (k_dist * diam) } else { 0.0 };
        refinement.push((res, c));
        last = (root, diam, c);
    }
    Ok(CaccioppoliReport {
        energy_root: last.0,
        diam_image: last.1,
        empirical_constant: last.2,
        refinement,
    })
}

fn energy_half_ball(
    f: &CurveField,
    center: &[f64],
    r: f64,
    res: usize,
    fd_h: f64,
) -> Result<f64, CurveError> {
    let dim = f.domain_dim();
    let half = 0.5 * r;
    let cell = 2.0 * half / res as f64;
    let total = res.pow(dim as u32);
    let cells: Vec<usize> = (0..total).collect();
    let sum: f64 = cells
        .par_iter()
        .map(|&flat| {
            let mut p = vec![0.0; dim];
            let mut rest = flat;
            for a in (0..dim).rev() {
                let i = rest % res;
                rest /= res;
                p[a] = center[a] - half + cell * (i as f64 + 0.5);
            }
            let d2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
            if d2 > half * half {
                return Ok(0.0);
            }
            let l = differential(f, &p, fd_h)?;
            Ok(l.op_norm().powi(f.n as i32) * cell.powi(dim as i32))
        })
        .collect::<Result<Vec<f64>, CurveError>>()?
        .iter()
        .sum();
    Ok(sum)
}

fn image_diameter(f: &CurveField, center: &[f64], r: f64, seed: u64) -> Result<f64, CurveError> {
    let mut rng = crate::sampling::trial_rng(seed, 0xd1a);
    let mut pts = Vec::with_capacity(256);
    pts.push(f.eval(center)?);
    for _ in 0..255 {
        let p = crate::sampling::ball_point(&mut rng, center, r);
        pts.push(f.eval(&p)?);
    }
    let mut diam = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d: f64 =
                pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            diam = diam.max(d);
        }
    }
    Ok(diam)
}

/// Sup/inf ratio of |F(y) - F(x)| over spheres |y - x| = r: the metric
/// definition of quasiconformality, tabulated over the given radii.
pub fn metric_qc_ratio(
    f: &CurveField,
    x: &[f64],
    radii: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>, CurveError> {
    let fx = f.eval(x)?;
    let dist = |p: &[f64]| -> f64 {
        match f.eval(p) {
            Ok(v) => v.iter().zip(&fx).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Err(_) => f64::NAN,
        }
    };
    let mut out = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        if !(r > 0.0) || f.domain.interior_margin(x) < r {
            return Err(CurveError::OutsideDomain);
        }
        let sup = sup_on_sphere(x, r, SUP_SAMPLES, seed.wrapping_add(2 * i as u64), &dist);
        let inf = inf_on_sphere(x, r, SUP_SAMPLES, seed.wrapping_add(2 * i as u64 + 1), &dist);
        if !sup.is_finite() || !inf.is_finite() {
            return Err(CurveError::OutsideDomain);
        }
        out.push((r, if inf > 0.0 { sup / inf } else { f64::INFINITY }));
    }
    Ok(out)
}

/// Per-annulus sup of the Rosay dilatation ratio with a resolution
/// warning: the cutoff transitions span a quarter of the radial extent,
/// so fewer than 8 radial cells across a transition (res < 32) cannot
/// resolve them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioTable {
    pub rows: Vec<(u32, f64)>,
    pub resolution: usize,
    pub under_resolved: bool,
}

pub fn rosay_ratio_scan(
    curve: &RosayCurve,
    range: std::ops::RangeInclusive<u32>,
    resolution: usize,
) -> RatioTable {
    let rows: Vec<(u32, f64)> = range
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&n| (n, curve.ratio_scan(n, resolution)))
        .collect();
    RatioTable { rows, resolution, under_resolved: resolution / 4 < 8 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{mobius_component_curve, CurveField, Domain, MobiusMap};
    use crate::exterior::{make_vol, make_vol_cross};
    use std::sync::Arc;

    fn affine_field() -> CurveField {
        // x -> (2x1 + x2, x2 - x3, x3, 0.5x1, x2, x3 + 1) as (R^3)^2
        CurveField::new(
            "affine_test",
            Domain::All { dim: 3 },
            3,
            2,
            Arc::new(|p: &[f64]| {
                Ok(vec![
                    2.0 * p[0] + p[1],
                    p[1] - p[2],
                    p[2],
                    0.5 * p[0],
                    p[1],
                    p[2] + 1.0,
                ])
            }),
        )
    }

    fn standard_mobius() -> CurveField {
        let (c1, s1) = (0.6f64, 0.8f64);
        let a = vec![c1, -s1, 0.0, s1, c1, 0.0, 0.0, 0.0, 1.0];
        let m = MobiusMap::new(3, a, vec![0.1, -0.2, 0.3], vec![1.6, 1.2, -1.1], 1.5, 2).unwrap();
        mobius_component_curve(3, 2, 0, &m).unwrap()
    }

    #[test]
    fn affine_jacobian_exact() {
        let f = affine_field();
        for h in [1e-2, 1e-4, 1e-6] {
            let l = jacobian_fd(&f, &[0.3, -0.7, 1.1], h, 2).unwrap();
            let expect = [2.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0];
            for (i, e) in expect.iter().enumerate() {
                assert!((l.block(0)[i] - e).abs() < 1e-9, "h = {h}");
            }
        }
    }

    #[test]
    fn fd_matches_analytic_mobius() {
        let f = standard_mobius();
        let x = [0.2, -0.3, 0.1];
        let analytic = f.analytic_diff(&x).unwrap().unwrap();
        let fd2 = jacobian_fd(&f, &x, 1e-4, 2).unwrap();
        let fd4 = jacobian_fd(&f, &x, 1e-3, 4).unwrap();
        let err = |a: &BlockLinearMap, b: &BlockLinearMap| {
            a.block(0)
                .iter()
                .chain(a.block(1))
                .zip(b.block(0).iter().chain(b.block(1)))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max)
        };
        assert!(err(&fd2, &analytic) < 1e-7);
        assert!(err(&fd4, &analytic) < 1e-9);
        // order 4 at the same step beats order 2
        let fd2c = jacobian_fd(&f, &x, 1e-3, 2).unwrap();
        assert!(err(&fd4, &analytic) < err(&fd2c, &analytic));
    }

    #[test]
    fn distortion_field_of_calibrated_curve() {
        let f = standard_mobius();
        let (_, summary) =
            distortion_field(&f, &[-0.4; 3], &[0.4; 3], 6, 1e-5).unwrap();
        assert!(summary.max_distortion <= 1.0 + 1e-8, "max K {}", summary.max_distortion);
        assert_eq!(summary.dominating_histogram.len(), 1);
        assert!(summary.dominating_histogram.contains_key(&0));
    }

    #[test]
    fn holder_exponents() {
        let volx = make_vol_cross(3, 2).unwrap();
        assert!((holder_exponent(2.0, &volx).unwrap() - 1.0 / 4.0).abs() < 1e-12);
        let vol = make_vol(3);
        assert!((holder_exponent(1.0, &vol).unwrap() - 1.0).abs() < 1e-12);
        let omega = crate::exterior::make_omega_sym(3).unwrap();
        assert!((holder_exponent(2.0, &omega).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        let ones = make_vol_cross(1, 4).unwrap();
        assert!((holder_exponent(1.0, &ones).unwrap() - 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn harnack_on_calibrated_curve() {
        let f = standard_mobius();
        let rep = harnack_check(&f, &[0.0; 3], 0.4, 0.5, 11).unwrap();
        assert!(rep.holds, "lhs {} rhs {}", rep.lhs, rep.rhs);
        assert!((rep.params["factor"] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn growth_on_calibrated_curve() {
        let f = standard_mobius();
        let rep = growth_check(&f, &[0.1, 0.0, -0.1], 0.5, 0.0, 17).unwrap();
        assert!(rep.holds, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn caccioppoli_scale_invariance_and_stability() {
        let f = standard_mobius();
        let rep = caccioppoli_check(&f, &[0.0; 3], 0.3, 1.0, 8, 1e-5, 3).unwrap();
        assert!(rep.empirical_constant.is_finite() && rep.empirical_constant > 0.0);
        let (r1, r2) = (rep.refinement[0].1, rep.refinement[1].1);
        assert!((r1 - r2).abs() / r2 < 0.05, "refinement drift {r1} vs {r2}");
    }

    #[test]
    fn metric_ratio_of_conformal_map() {
        let f = standard_mobius();
        let rows = metric_qc_ratio(&f, &[0.0; 3], &[0.2, 0.1, 0.05], 29).unwrap();
        // ratio decreases toward 1 as r shrinks
        assert!(rows.last().unwrap().1 < 1.05);
        // calibrated-curve bound (1 + 2 rho)/(1 - 2 rho) at rho <= 1/4
        for &(r, ratio) in &rows {
            let rho: f64 = r; // unit-ball domain, B = B(0,1) effectively
            if rho <= 0.25 {
                assert!(ratio <= (1.0 + 2.0 * rho) / (1.0 - 2.0 * rho) + 1e-6);
            }
        }
    }

    #[test]
    fn metric_ratio_of_stretch_map() {
        // affine with singular values (2, 1, 1)
        let f = CurveField::new(
            "stretch",
            Domain::All { dim: 3 },
            3,
            1,
            Arc::new(|p: &[f64]| Ok(vec![2.0 * p[0], p[1], p[2]])),
        );
        let rows = metric_qc_ratio(&f, &[0.0; 3], &[0.5, 0.1], 31).unwrap();
        for &(_, ratio) in &rows {
            assert!((ratio - 2.0).abs() < 0.02, "ratio {ratio}");
        }
    }

    #[test]
    fn grid_field_jacobian() {
        let f = affine_field();
        let g = GridField::from_curve(&f, &[-0.5; 3], &[0.1; 3], &[11, 11, 11], 2).unwrap();
        let l = g.jacobian_at(&[5, 5, 5]).unwrap();
        assert!((l.block(0)[0] - 2.0).abs() < 1e-10);
        assert!((l.block(1)[0] - 0.5).abs() < 1e-10);
        assert!(g.jacobian_at(&[0, 5, 5]).is_err());
    }

    #[test]
    fn rosay_scan_flags_low_resolution() {
        let c = RosayCurve::default();
        let t = rosay_ratio_scan(&c, 12..=13, 16);
        assert!(t.under_resolved);
        let t2 = rosay_ratio_scan(&c, 12..=13, 64);
        assert!(!t2.under_resolved);
        // ratio(2n) < ratio(n)
        let r12 = t2.rows.iter().find(|r| r.0 == 12).unwrap().1;
        let c24 = c.ratio_scan(24, 64);
        assert!(c24 < r12);
    }
}
