//! Dyadic cube covers, simplicial subdivision (barycentric and Kuhn),
//! piecewise-affine interpolation of curve fields, per-simplex
//! distortion, and the dominating-coordinate consistency checks.
//!
//! Vertices are stored twice: as floats for evaluation and as exact
//! integer coordinates on the 2^-(j+1) lattice, which makes vertex
//! dedup, face matching, and the corner test exact.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{CurveError, CurveField, MobiusMap};
use crate::linmap::{distortion_volx, BlockLinearMap, DistortionReport};
use crate::mat;
use crate::numdiff::InequalityReport;
use crate::sampling::{scan_extremum, sup_on_ball, Extremum, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Barycentric,
    Kuhn,
}

/// Simplicial subdivision of a set of level-j dyadic cubes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DyadicMesh {
    pub level: u32,
    pub dim: usize,
    pub scheme: Scheme,
    pub anchors: Vec<Vec<i64>>,
    /// Vertex coordinates, exact integers on the 2^-(j+1) lattice.
    pub vertices_scaled: Vec<Vec<i64>>,
    /// The same vertices as floats.
    pub vertices: Vec<Vec<f64>>,
    /// Index tuples of length dim + 1.
    pub simplices: Vec<Vec<usize>>,
    /// Cube (index into anchors) owning each simplex.
    pub cube_of: Vec<usize>,
    /// Pairs of simplices sharing a (dim-1)-face.
    pub adjacency: Vec<(usize, usize)>,
}

/// Anchors v of all level-j dyadic cubes 2^-j (v + [0,1]^n) whose
/// closure meets the closed box [lo, hi].
pub fn dyadic_cubes(lo: &[f64], hi: &[f64], j: u32) -> Result<Vec<Vec<i64>>, CurveError> {
    let n = lo.len();
    if hi.len() != n || n == 0 {
        return Err(CurveError::BadParameter("box dimension mismatch".into()));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l < h) && !(l == h)) {
        return Err(CurveError::BadParameter("box must satisfy lo <= hi".into()));
    }
    let s = (j as f64).exp2();
    let ranges: Vec<(i64, i64)> = (0..n)
        .map(|a| {
            // v <= hi * 2^j and v + 1 >= lo * 2^j
            let min = (lo[a] * s - 1.0).ceil() as i64;
            let max = (hi[a] * s).floor() as i64;
            (min, max)
        })
        .collect();
    let mut anchors = vec![];
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        anchors.push(idx.clone());
        let mut a = n;
        loop {
            if a == 0 {
                return Ok(anchors);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] <= ranges[a].1 {
                break;
            }
            idx[a] = ranges[a].0;
        }
    }
}

/// Subdivide cubes into simplices: barycentric face flags
/// (2^n n! simplices per cube, vertices on the half-step lattice) or
/// Kuhn paths (n! per cube).
pub fn subdivide(anchors: &[Vec<i64>], j: u32, scheme: Scheme) -> Result<DyadicMesh, CurveError> {
    let n = anchors.first().map(|a| a.len()).unwrap_or(0);
    if n == 0 {
        return Err(CurveError::BadParameter("empty cube set".into()));
    }
    let scale = ((j + 1) as f64).exp2();
    let perms = permutations(n);
    let mut key_to_id: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut vertices_scaled: Vec<Vec<i64>> = vec![];
    let mut simplices = vec![];
    let mut cube_of = vec![];
    let mut intern = |key: Vec<i64>| -> usize {
        if let Some(&id) = key_to_id.get(&key) {
            return id;
        }
        let id = vertices_scaled.len();
        key_to_id.insert(key.clone(), id);
        vertices_scaled.push(key);
        id
    };
    for (ci, anchor) in anchors.iter().enumerate() {
        // vertex coordinates on the doubled lattice: anchor*2 + offset
        let base: Vec<i64> = anchor.iter().map(|v| 2 * v).collect();
        match scheme {
            Scheme::Kuhn => {
                for perm in &perms {
                    let mut v = base.clone();
                    let mut ids = vec![intern(v.clone())];
                    for &axis in perm {
                        v[axis] += 2;
                        ids.push(intern(v.clone()));
                    }
                    simplices.push(ids);
                    cube_of.push(ci);
                }
            }
            Scheme::Barycentric => {
                for corner in 0..(1u32 << n) {
                    let corner_off: Vec<i64> =
                        (0..n).map(|a| if corner >> a & 1 == 1 { 2 } else { 0 }).collect();
                    for perm in &perms {
                        // flag barycenters: free one axis at a time;
                        // freed axes sit at the half step (offset 1)
                        let mut off = corner_off.clone();
                        let mut ids = Vec::with_capacity(n + 1);
                        let mut key: Vec<i64> =
                            base.iter().zip(&off).map(|(b, o)| b + o).collect();
                        ids.push(intern(key));
                        for &axis in perm {
                            off[axis] = 1;
                            key = base.iter().zip(&off).map(|(b, o)| b + o).collect();
                            ids.push(intern(key));
                        }
                        simplices.push(ids);
                        cube_of.push(ci);
                    }
                }
            }
        }
    }
    let vertices: Vec<Vec<f64>> = vertices_scaled
        .iter()
        .map(|v| v.iter().map(|&c| c as f64 / scale).collect())
        .collect();
    // degeneracy check: every simplex must have positive volume
    let cube_vol = (-(j as f64) * n as f64).exp2();
    for (si, s) in simplices.iter().enumerate() {
        if simplex_volume(&vertices, s, n).abs() < 1e-14 * cube_vol {
            return Err(CurveError::BadParameter(format!("degenerate simplex {si}")));
        }
    }
    let adjacency = build_adjacency(&simplices);
    Ok(DyadicMesh {
        level: j,
        dim: n,
        scheme,
        anchors: anchors.to_vec(),
        vertices_scaled,
        vertices,
        simplices,
        cube_of,
        adjacency,
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = vec![];
        for p in &out {
            for a in 0..n {
                if !p.contains(&a) {
                    let mut q = p.clone();
                    q.push(a);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

fn simplex_volume(vertices: &[Vec<f64>], ids: &[usize], n: usize) -> f64 {
    let v0 = &vertices[ids[0]];
    let mut m = vec![0.0; n * n];
    for (c, &id) in ids[1..].iter().enumerate() {
        for r in 0..n {
            m[r * n + c] = vertices[id][r] - v0[r];
        }
    }
    mat::det(&m, n) / (1..=n as u64).product::<u64>() as f64
}

fn build_adjacency(simplices: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut faces: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (si, s) in simplices.iter().enumerate() {
        for drop in 0..s.len() {
            let mut face: Vec<usize> =
                s.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &v)| v).collect();
            face.sort_unstable();
            faces.entry(face).or_default().push(si);
        }
    }
    let mut adj = vec![];
    for (_, owners) in faces {
        if owners.len() == 2 {
            let (a, b) = (owners[0].min(owners[1]), owners[0].max(owners[1]));
            adj.push((a, b));
        }
    }
    adj.sort_unstable();
    adj.dedup();
    adj
}

impl DyadicMesh {
    /// Sum of simplex volumes per cube; the partition invariant says
    /// each equals 2^-(j n).
    pub fn cube_volume_defect(&self) -> f64 {
        let expect = (-(self.level as f64) * self.dim as f64).exp2();
        let mut sums = vec![0.0f64; self.anchors.len()];
        for (si, s) in self.simplices.iter().enumerate() {
            sums[self.cube_of[si]] += simplex_volume(&self.vertices, s, self.dim).abs();
        }
        sums.iter().map(|v| (v - expect).abs()).fold(0.0, f64::max)
    }
}

/// Piecewise-affine interpolant of a curve field on a mesh.
#[derive(Debug, Clone)]
pub struct PLCurve {
    pub mesh: DyadicMesh,
    pub n: usize,
    pub k: usize,
    pub vertex_values: Vec<Vec<f64>>,
    /// Per-simplex linear part and translation.
    pub affine: Vec<(BlockLinearMap, Vec<f64>)>,
    cube_index: HashMap<Vec<i64>, Vec<usize>>,
}

pub fn pl_interpolant(f: &CurveField, mesh: &DyadicMesh) -> Result<PLCurve, CurveError> {
    let (n, k) = (f.n, f.k);
    let dim = mesh.dim;
    if f.domain_dim() != dim {
        return Err(CurveError::BadParameter("mesh/domain dimension mismatch".into()));
    }
    let vertex_values: Vec<Vec<f64>> =
        mesh.vertices.iter().map(|v| f.eval(v)).collect::<Result<_, _>>()?;
    let affine: Vec<(BlockLinearMap, Vec<f64>)> = mesh
        .simplices
        .par_iter()
        .map(|ids| {
            let v0 = &mesh.vertices[ids[0]];
            let f0 = &vertex_values[ids[0]];
            // edge matrix (columns are v_i - v_0); invert once
            let mut e = vec![0.0; dim * dim];
            for (c, &id) in ids[1..].iter().enumerate() {
                for r in 0..dim {
                    e[r * dim + c] = mesh.vertices[id][r] - v0[r];
                }
            }
            // L = dF * E^-1, solved row by row via E^T x = dF_row
            let et = mat::transpose(&e, dim, dim);
            let rows = n * k;
            let mut entries = vec![0.0; rows * dim];
            for r in 0..rows {
                let rhs: Vec<f64> =
                    ids[1..].iter().map(|&id| vertex_values[id][r] - f0[r]).collect();
                let row = mat::solve(&et, &rhs, dim)
                    .ok_or_else(|| CurveError::BadParameter("degenerate simplex".into()))?;
                entries[r * dim..(r + 1) * dim].copy_from_slice(&row);
            }
            let l = BlockLinearMap::new(n, k, entries)
                .map_err(|e| CurveError::BadParameter(e.to_string()))?;
            let lx = l.apply(v0);
            let t: Vec<f64> = f0.iter().zip(&lx).map(|(a, b)| a - b).collect();
            Ok((l, t))
        })
        .collect::<Result<_, CurveError>>()?;
    let mut cube_index: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (si, &ci) in mesh.cube_of.iter().enumerate() {
        cube_index.entry(mesh.anchors[ci].clone()).or_default().push(si);
    }
    Ok(PLCurve { mesh: mesh.clone(), n, k, vertex_values, affine, cube_index })
}

impl PLCurve {
    /// Index of a simplex containing p, if any.
    pub fn locate(&self, p: &[f64]) -> Option<usize> {
        let dim = self.mesh.dim;
        let s = (self.mesh.level as f64).exp2();
        // a point on a cube boundary may belong to several cubes
        let mut candidates = vec![];
        let anchor: Vec<i64> = p.iter().map(|x| (x * s).floor() as i64).collect();
        for mask in 0..(1u32 << dim) {
            let mut a = anchor.clone();
            let mut on_boundary = true;
            for b in 0..dim {
                if mask >> b & 1 == 1 {
                    if (p[b] * s - anchor[b] as f64).abs() < 1e-9 {
                        a[b] -= 1;
                    } else {
                        on_boundary = false;
                        break;
                    }
                }
            }
            if on_boundary {
                if let Some(sims) = self.cube_index.get(&a) {
                    candidates.extend_from_slice(sims);
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        candidates.into_iter().find(|&si| self.barycentric(si, p).is_some())
    }

    /// Barycentric coordinates of p in simplex si when p lies inside
    /// (within tolerance).
    fn barycentric(&self, si: usize, p: &[f64]) -> Option<Vec<f64>> {
        let dim = self.mesh.dim;
        let ids = &self.mesh.simplices[si];
        let v0 = &self.mesh.vertices[ids[0]];
        let mut e = vec![0.0; dim * dim];
        for (c, &id) in ids[1..].iter().enumerate() {
            for r in 0..dim {
                e[r * dim + c] = self.mesh.vertices[id][r] - v0[r];
            }
        }
        let rhs: Vec<f64> = (0..dim).map(|r| p[r] - v0[r]).collect();
        let lam = mat::solve(&e, &rhs, dim)?;
        let tol = 1e-9;
        let sum: f64 = lam.iter().sum();
        if lam.iter().all(|&l| l >= -tol) && sum <= 1.0 + tol {
            let mut full = vec![1.0 - sum];
            full.extend(lam);
            Some(full)
        } else {
            None
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, CurveError> {
        let si = self.locate(p).ok_or(CurveError::OutsideDomain)?;
        Ok(self.eval_in(si, p))
    }

    pub fn eval_in(&self, si: usize, p: &[f64]) -> Vec<f64> {
        let (l, t) = &self.affine[si];
        l.apply(p).iter().zip(t).map(|(a, b)| a + b).collect()
    }

    /// Max interpolation defect at the simplex's own vertices.
    pub fn vertex_reproduction_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (si, ids) in self.mesh.simplices.iter().enumerate() {
            for &id in ids {
                let got = self.eval_in(si, &self.mesh.vertices[id]);
                for (g, w) in got.iter().zip(&self.vertex_values[id]) {
                    worst = worst.max((g - w).abs());
                }
            }
        }
        worst
    }
}

/// Sup of |F - F_hat| over deterministically sampled points of the
/// meshed region.
pub fn approximation_error(
    f: &CurveField,
    pl: &PLCurve,
    samples_per_cube: usize,
    seed: u64,
) -> Result<f64, CurveError> {
    let dim = pl.mesh.dim;
    let s = (pl.mesh.level as f64).exp2();
    let errs: Vec<f64> = pl
        .mesh
        .anchors
        .par_iter()
        .enumerate()
        .map(|(ci, anchor)| {
            let mut rng = crate::sampling::trial_rng(seed, ci as u64);
            let mut worst = 0.0f64;
            for _ in 0..samples_per_cube {
                let p: Vec<f64> = (0..dim)
                    .map(|a| (anchor[a] as f64 + rand::Rng::random::<f64>(&mut rng)) / s)
                    .collect();
                let fv = f.eval(&p)?;
                let gv = pl.eval(&p)?;
                let d = fv.iter().zip(&gv).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                worst = worst.max(d);
            }
            Ok(worst)
        })
        .collect::<Result<_, CurveError>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlSummary {
    pub simplices: usize,
    pub max_distortion: f64,
    pub constant_simplices: usize,
    pub dominating_histogram: BTreeMap<usize, usize>,
    /// Fraction of adjacent pairs whose dominating indices agree
    /// (constant simplices excluded).
    pub adjacent_agreement: f64,
}

/// Distortion of each simplex's linear part plus a mesh summary.
pub fn pl_distortion_report(pl: &PLCurve) -> (Vec<DistortionReport>, PlSummary) {
    let reports: Vec<DistortionReport> = pl
        .affine
        .par_iter()
        .map(|(l, _)| {
            let mut rep = distortion_volx(l);
            rep.dominating_index = argmax(&rep.block_norms);
            rep
        })
        .collect();
    let mut max_distortion = f64::NEG_INFINITY;
    let mut constant = 0;
    let mut hist = BTreeMap::new();
    for r in &reports {
        if r.constant {
            constant += 1;
            continue;
        }
        if let Some(k) = r.distortion {
            max_distortion = max_distortion.max(k);
        } else {
            max_distortion = f64::INFINITY;
        }
        if let Some(i) = r.dominating_index {
            *hist.entry(i).or_insert(0) += 1;
        }
    }
    let mut pairs = 0usize;
    let mut agree = 0usize;
    for &(a, b) in &pl.mesh.adjacency {
        if reports[a].constant || reports[b].constant {
            continue;
        }
        pairs += 1;
        if reports[a].dominating_index == reports[b].dominating_index {
            agree += 1;
        }
    }
    let summary = PlSummary {
        simplices: reports.len(),
        max_distortion,
        constant_simplices: constant,
        dominating_histogram: hist,
        adjacent_agreement: if pairs > 0 { agree as f64 / pairs as f64 } else { 1.0 },
    };
    (reports, summary)
}

fn argmax(v: &[f64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
            Some((_, bv)) if bv >= x => best,
            _ => Some((i, x)),
        })
        .map(|(i, _)| i)
}

/// Largest eps with (1+eps)(1+7k sqrt(eps)) < 3/2 and
/// 5 sqrt(k) eps^(1/4) < 1/2, found by bisection.
pub fn default_consistency_epsilon(k: usize) -> f64 {
    let kf = k as f64;
    let ok = |e: f64| {
        (1.0 + e) * (1.0 + 7.0 * kf * e.sqrt()) < 1.5 && 5.0 * kf.sqrt() * e.powf(0.25) < 0.5
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub epsilon: f64,
    /// Simplices failing the precondition (constant linear part or
    /// distortion above 1 + eps).
    pub precondition_failures: Vec<usize>,
    /// Adjacent pairs with differing dominating indices.
    pub inconsistent_pairs: Vec<(usize, usize)>,
    /// Simplices violating the per-block norm bounds of the
    /// dominating-coordinate conclusion.
    pub bound_violations: Vec<usize>,
    pub consistent: bool,
}

/// Checks that adjacent simplices of a small-distortion PL curve share
/// their dominating index, and that each simplex obeys
/// ||L_(i0)|| >= ||L||/(1+eps) and ||L_i|| <= 5 sqrt(k) eps^(1/4) ||L||
/// for i != i0.
pub fn adjacent_index_consistency(pl: &PLCurve, epsilon: Option<f64>) -> ConsistencyReport {
    let eps = epsilon.unwrap_or_else(|| default_consistency_epsilon(pl.k));
    let mut precondition_failures = vec![];
    let mut bound_violations = vec![];
    let mut dom = vec![None; pl.affine.len()];
    let tol = 1e-9;
    for (si, (l, _)) in pl.affine.iter().enumerate() {
        if l.is_zero() {
            precondition_failures.push(si);
            continue;
        }
        let rep = distortion_volx(l);
        match rep.distortion {
            Some(kd) if kd <= 1.0 + eps + tol => {}
            _ => {
                precondition_failures.push(si);
                continue;
            }
        }
        let norms = l.block_norms();
        let i0 = argmax(&norms).unwrap();
        dom[si] = Some(i0);
        let op = l.op_norm();
        let mut ok = norms[i0] >= op / (1.0 + eps) - tol * op;
        let small = 5.0 * (pl.k as f64).sqrt() * eps.powf(0.25) * op;
        for (i, &ni) in norms.iter().enumerate() {
            if i != i0 && ni > small + tol * op {
                ok = false;
            }
        }
        if !ok {
            bound_violations.push(si);
        }
    }
    let mut inconsistent_pairs = vec![];
    for &(a, b) in &pl.mesh.adjacency {
        if let (Some(da), Some(db)) = (dom[a], dom[b]) {
            if da != db {
                inconsistent_pairs.push((a, b));
            }
        }
    }
    let consistent = precondition_failures.is_empty()
        && inconsistent_pairs.is_empty()
        && bound_violations.is_empty();
    ConsistencyReport {
        epsilon: eps,
        precondition_failures,
        inconsistent_pairs,
        bound_violations,
        consistent,
    }
}

/// Fraction of simplices having a vertex v_(i0) whose other vertices
/// are exactly v_(i0) +/- 2^-(j+1) e_(sigma(i)) for a bijection sigma
/// onto the axes.
pub fn corner_simplex_check(mesh: &DyadicMesh) -> f64 {
    let n = mesh.dim;
    let mut pass = 0usize;
    for s in &mesh.simplices {
        let found = s.iter().any(|&apex| {
            let av = &mesh.vertices_scaled[apex];
            let mut axes_seen = vec![false; n];
            for &other in s {
                if other == apex {
                    continue;
                }
                let ov = &mesh.vertices_scaled[other];
                let mut diff_axis = None;
                let mut good = true;
                for a in 0..n {
                    match (ov[a] - av[a]).abs() {
                        0 => {}
                        1 => {
                            if diff_axis.is_some() {
                                good = false;
                                break;
                            }
                            diff_axis = Some(a);
                        }
                        _ => {
                            good = false;
                            break;
                        }
                    }
                }
                match (good, diff_axis) {
                    (true, Some(a)) if !axes_seen[a] => axes_seen[a] = true,
                    _ => return false,
                }
            }
            axes_seen.iter().all(|&b| b)
        });
        if found {
            pass += 1;
        }
    }
    pass as f64 / mesh.simplices.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplexModelReport {
    pub distortion: Option<f64>,
    pub p_norm: f64,
    pub f_osc: f64,
    /// || L_P || <= 12 t0 m
    pub norm_bound: InequalityReport,
    /// sup over the standard simplex of |P(0) - P(x)| <= 12 t0 m
    pub osc_bound: InequalityReport,
}

/// The affine model P through F at the scaled standard-simplex
/// vertices: P(0) = F(base), P(e_i) interpolating F(base + t0^-1 e_i)
/// in normalized coordinates. Reports the distortion of P and the
/// norm/oscillation bounds against 12 t0 m with
/// m = sup over B(base, 1/t0) of |F - F(base)|.
pub fn simplex_model_check(
    f: &CurveField,
    base: &[f64],
    t0: f64,
    seed: u64,
) -> Result<SimplexModelReport, CurveError> {
    if !(t0 > 0.0) {
        return Err(CurveError::BadParameter(format!("t0 = {t0} must be positive")));
    }
    let dim = f.domain_dim();
    if f.domain.interior_margin(base) < 2.0 / t0 {
        return Err(CurveError::BadParameter(
            "ball B(base, 2/t0) must fit inside the domain".into(),
        ));
    }
    let f0 = f.eval(base)?;
    let rows = f.n * f.k;
    // columns of L_P: t0 (F(base + e_a / t0) - F(base))
    let mut entries = vec![0.0; rows * dim];
    for a in 0..dim {
        let mut p = base.to_vec();
        p[a] += 1.0 / t0;
        let fe = f.eval(&p)?;
        for r in 0..rows {
            entries[r * dim + a] = t0 * (fe[r] - f0[r]);
        }
    }
    let l = BlockLinearMap::new(f.n, f.k, entries)
        .map_err(|e| CurveError::BadParameter(e.to_string()))?;
    let rep = distortion_volx(&l);
    // m: sup of |F - F(base)| over B(base, 1/t0), axis points anchored
    let mut anchors = vec![];
    for a in 0..dim {
        for s in [-1.0, 1.0] {
            let mut p = base.to_vec();
            p[a] += s / t0;
            anchors.push(p);
        }
    }
    let (m, _) = scan_extremum(
        &Region::Ball { center: base, r: 1.0 / t0 },
        Extremum::Max,
        4000,
        seed,
        &anchors,
        |p| match f.eval(p) {
            Ok(v) => v.iter().zip(&f0).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Err(_) => f64::NAN,
        },
    );
    if !m.is_finite() {
        return Err(CurveError::OutsideDomain);
    }
    let bound = 12.0 * t0 * m;
    let p_norm = l.op_norm();
    // sup over the standard simplex of |L_P x|: attained at a vertex
    // by convexity
    let osc = (0..dim)
        .map(|a| {
            let mut e = vec![0.0; dim];
            e[a] = 1.0;
            let v = l.apply(&e);
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    let mut params = BTreeMap::new();
    params.insert("t0".into(), t0);
    params.insert("m".into(), m);
    let mk = |lhs: f64| InequalityReport {
        lhs,
        rhs: bound,
        margin: bound - lhs,
        holds: bound - lhs >= -1e-9 * bound.max(1.0),
        params: params.clone(),
    };
    Ok(SimplexModelReport {
        distortion: rep.distortion,
        p_norm,
        f_osc: m,
        norm_bound: mk(p_norm),
        osc_bound: mk(osc),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobiusBoundsReport {
    pub dphi0_norm: f64,
    pub sup_half_ball: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// sup |phi(x) - phi(0) - Dphi(0) x| / (||Dphi(0)|| |x|^2) over
    /// the half ball: the empirical second-order constant.
    pub second_order_constant: f64,
}

/// The (1/3, 1) oscillation sandwich around ||D phi(0)|| on B(0, 1/2),
/// plus the measured second-order constant. The lower bound's witness
/// p/(2|p|) (the point of B(0,1/2) nearest the pole) is always
/// evaluated.
pub fn mobius_bounds_check(m: &MobiusMap, seed: u64) -> Result<MobiusBoundsReport, CurveError> {
    let n = m.n;
    if m.zeta == 2 {
        let pn = m.p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if pn <= 1.0 {
            return Err(CurveError::PoleInsideBall { norm: pn });
        }
    }
    let origin = vec![0.0; n];
    let phi0 = m.eval(&origin)?;
    let dnorm = m.derivative_norm(&origin)?;
    let d0 = m.derivative(&origin)?;
    let mut anchors = vec![];
    if m.zeta == 2 {
        let pn = m.p.iter().map(|v| v * v).sum::<f64>().sqrt();
        anchors.push(m.p.iter().map(|v| v / (2.0 * pn)).collect::<Vec<f64>>());
    }
    let osc = |p: &[f64]| match m.eval(p) {
        Ok(v) => v.iter().zip(&phi0).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        Err(_) => f64::NAN,
    };
    let (sup, _) =
        scan_extremum(&Region::Ball { center: &origin, r: 0.5 }, Extremum::Max, 4000, seed, &anchors, osc);
    let second = |p: &[f64]| {
        let x2: f64 = p.iter().map(|v| v * v).sum();
        if x2 < 1e-12 {
            return 0.0;
        }
        match m.eval(p) {
            Ok(v) => {
                let lin: Vec<f64> = (0..n)
                    .map(|r| (0..n).map(|c| d0[r * n + c] * p[c]).sum::<f64>())
                    .collect();
                let err: f64 = (0..n)
                    .map(|r| (v[r] - phi0[r] - lin[r]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                err / (dnorm * x2)
            }
            Err(_) => f64::NAN,
        }
    };
    let (c2, _) = scan_extremum(
        &Region::Ball { center: &origin, r: 0.5 },
        Extremum::Max,
        4000,
        seed.wrapping_add(1),
        &anchors,
        second,
    );
    if !sup.is_finite() || !c2.is_finite() {
        return Err(CurveError::AtPole);
    }
    Ok(MobiusBoundsReport {
        dphi0_norm: dnorm,
        sup_half_ball: sup,
        lower_ok: dnorm / 3.0 <= sup + 1e-9 * dnorm,
        upper_ok: sup <= dnorm + 1e-9 * dnorm,
        second_order_constant: c2,
    })
}

/// Convenience: sup of |F| over a ball via the deterministic scanner
/// (re-exported pattern used by the verify suites).
pub fn sup_norm_on_ball(f: &CurveField, center: &[f64], r: f64, seed: u64) -> f64 {
    sup_on_ball(center, r, 4000, seed, |p| f.value_norm(p).unwrap_or(f64::NAN))
}
