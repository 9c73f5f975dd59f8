//! Block linear maps R^n -> (R^n)^k: operator/HS norms, distortion with
//! respect to a calibration, the near-calibrated block classification,
//! the calibrated-map perturbation bound, and the complex dilatation
//! checks for n = 2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exterior::NForm;
use crate::mat;
use crate::sampling::{normal, random_rotation};

/// Linear map R^n -> (R^n)^k stored as an nk x n row-major matrix,
/// viewed as k stacked n x n blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLinearMap {
    pub n: usize,
    pub k: usize,
    pub entries: Vec<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LinmapError {
    #[error("entries length {got} does not match nk*n = {want}")]
    EntriesLen { got: usize, want: usize },
    #[error("form ambient dimension {form_m} does not match nk = {nk}")]
    DimensionMismatch { form_m: usize, nk: usize },
    #[error("epsilon {eps} outside (0, 1/(100k)) = (0, {max})")]
    EpsOutOfRange { eps: f64, max: f64 },
    #[error("distortion {k:.9} exceeds 1 + epsilon = {bound:.9}")]
    DistortionTooLarge { k: f64, bound: f64 },
    #[error("map is constant (all blocks zero); classification undefined")]
    ConstantMap,
    #[error("nu {nu} outside (0, 2^-n) = (0, {max})")]
    NuOutOfRange { nu: f64, max: f64 },
    #[error("base map is not calibrated: |pullback - op_norm^n| = {defect:.3e} > 1e-9 (normalized)")]
    NotCalibrated { defect: f64 },
    #[error("column {i} perturbation {got:.6e} exceeds nu*|L|/sqrt(n) = {bound:.6e}")]
    ColumnPerturbation { i: usize, got: f64, bound: f64 },
    #[error("complex dilatation check requires n = 2, got n = {n}")]
    NotPlanar { n: usize },
    #[error("K = {k} must be >= 1")]
    BadK { k: f64 },
    #[error("sampler exhausted after {attempts} attempts")]
    SamplerExhausted { attempts: usize },
}

impl BlockLinearMap {
    pub fn new(n: usize, k: usize, entries: Vec<f64>) -> Result<Self, LinmapError> {
        if entries.len() != n * k * n {
            return Err(LinmapError::EntriesLen { got: entries.len(), want: n * k * n });
        }
        Ok(BlockLinearMap { n, k, entries })
    }

    pub fn zero(n: usize, k: usize) -> Self {
        BlockLinearMap { n, k, entries: vec![0.0; n * k * n] }
    }

    /// Assemble from k row-major n x n blocks.
    pub fn from_blocks(n: usize, blocks: &[Vec<f64>]) -> Result<Self, LinmapError> {
        let k = blocks.len();
        let mut entries = Vec::with_capacity(n * k * n);
        for b in blocks {
            if b.len() != n * n {
                return Err(LinmapError::EntriesLen { got: b.len(), want: n * n });
            }
            entries.extend_from_slice(b);
        }
        Ok(BlockLinearMap { n, k, entries })
    }

    /// The i-th n x n block (0-based), as a row-major slice.
    pub fn block(&self, i: usize) -> &[f64] {
        let sz = self.n * self.n;
        &self.entries[i * sz..(i + 1) * sz]
    }

    pub fn rows(&self) -> usize {
        self.n * self.k
    }

    /// Image of the standard basis vector e_j (0-based column).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| self.entries[r * self.n + j]).collect()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..self.rows())
            .map(|r| (0..n).map(|c| self.entries[r * n + c] * v[c]).sum())
            .collect()
    }

    pub fn op_norm(&self) -> f64 {
        mat::op_norm(&self.entries, self.rows(), self.n)
    }

    pub fn hs_norm(&self) -> f64 {
        mat::hs_norm(&self.entries)
    }

    pub fn block_norms(&self) -> Vec<f64> {
        (0..self.k).map(|i| mat::op_norm(self.block(i), self.n, self.n)).collect()
    }

    pub fn block_dets(&self) -> Vec<f64> {
        (0..self.k).map(|i| mat::det(self.block(i), self.n)).collect()
    }

    /// Pullback of vol^x: the sum of block determinants.
    pub fn pullback_volx(&self) -> f64 {
        self.block_dets().iter().sum()
    }

    pub fn pullback(&self, form: &NForm) -> Result<f64, LinmapError> {
        if form.ambient_dim() != self.rows() || form.degree() != self.n {
            return Err(LinmapError::DimensionMismatch {
                form_m: form.ambient_dim(),
                nk: self.rows(),
            });
        }
        Ok(form.pullback_eval(&self.entries).expect("dimensions checked"))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    /// Copy with every negative-determinant block composed with the
    /// coordinate reflection negating its first output coordinate.
    pub fn orientation_normalized(&self) -> Self {
        let mut out = self.clone();
        let n = self.n;
        for i in 0..self.k {
            if mat::det(self.block(i), n) < 0.0 {
                let base = i * n * n;
                for c in 0..n {
                    out.entries[base + c] = -out.entries[base + c];
                }
            }
        }
        out
    }
}

/// Flags for the three conclusions of the near-calibrated
/// classification (dominant block almost conformal; dominant block norm
/// close to the full norm; other blocks small).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationFlags {
    pub almost_conformal: bool,
    pub dominant_norm: bool,
    pub others_small: bool,
}

impl ClassificationFlags {
    pub fn all(&self) -> bool {
        self.almost_conformal && self.dominant_norm && self.others_small
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub n: usize,
    pub k: usize,
    pub op_norm: f64,
    pub hs_norm: f64,
    pub pullback: f64,
    /// op_norm^n / pullback when pullback > 0; `None` encodes +infinity.
    /// The zero map is flagged `constant` and reported with distortion 1.
    pub distortion: Option<f64>,
    pub constant: bool,
    pub block_norms: Vec<f64>,
    pub block_dets: Vec<f64>,
    pub dominating_index: Option<usize>,
    pub bound_flags: Option<ClassificationFlags>,
    /// All block indices passing the almost-conformal bound (the paper
    /// asserts existence, not uniqueness).
    pub blocks_passing_conformal_bound: Vec<usize>,
}

/// Distortion of L against a unit-comass constant form.
pub fn distortion(l: &BlockLinearMap, form: &NForm) -> Result<DistortionReport, LinmapError> {
    let pullback = l.pullback(form)?;
    Ok(report_from(l, pullback))
}

/// Distortion against vol^x without constructing the form.
pub fn distortion_volx(l: &BlockLinearMap) -> DistortionReport {
    report_from(l, l.pullback_volx())
}

fn report_from(l: &BlockLinearMap, pullback: f64) -> DistortionReport {
    let op = l.op_norm();
    let constant = l.is_zero();
    let distortion = if constant {
        Some(1.0)
    } else if pullback > 0.0 {
        Some(op.powi(l.n as i32) / pullback)
    } else {
        None
    };
    DistortionReport {
        n: l.n,
        k: l.k,
        op_norm: op,
        hs_norm: l.hs_norm(),
        pullback,
        distortion,
        constant,
        block_norms: l.block_norms(),
        block_dets: l.block_dets(),
        dominating_index: None,
        bound_flags: None,
        blocks_passing_conformal_bound: vec![],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyResult {
    /// Report of the map as given.
    pub raw: DistortionReport,
    /// Report after orientation normalization, carrying the dominating
    /// index and the conclusion flags.
    pub normalized: DistortionReport,
    pub epsilon: f64,
}

/// Near-calibrated classification: for eps < 1/(100k) and distortion at
/// most 1 + eps (after reflecting negative-determinant blocks), the
/// block of largest operator norm must be almost conformal, carry
/// almost the whole norm, and dominate every other block.
pub fn classify_near_calibrated(
    l: &BlockLinearMap,
    eps: f64,
) -> Result<ClassifyResult, LinmapError> {
    let eps_max = 1.0 / (100.0 * l.k as f64);
    if !(eps > 0.0 && eps < eps_max) {
        return Err(LinmapError::EpsOutOfRange { eps, max: eps_max });
    }
    if l.is_zero() {
        return Err(LinmapError::ConstantMap);
    }
    let raw = distortion_volx(l);
    let norm_l = l.orientation_normalized();
    let mut report = distortion_volx(&norm_l);
    let kd = match report.distortion {
        Some(v) => v,
        None => f64::INFINITY,
    };
    if kd > 1.0 + eps + 1e-12 {
        return Err(LinmapError::DistortionTooLarge { k: kd, bound: 1.0 + eps });
    }
    let op = report.op_norm;
    let n = l.n as i32;
    let kf = l.k as f64;
    // dominant block: argmax block norm, ties to the lowest index
    let mut i0 = 0;
    for (i, &bn) in report.block_norms.iter().enumerate() {
        if bn > report.block_norms[i0] {
            i0 = i;
        }
    }
    // tolerance 1e-9 between O(1) quantities after normalizing |L| = 1
    let tol = 1e-9 * op.powi(n).max(op).max(1e-300);
    let a_bound = |det: f64| (1.0 + 7.0 * kf * eps.sqrt()) * det;
    let passing: Vec<usize> = (0..l.k)
        .filter(|&i| {
            report.block_norms[i].powi(n) <= a_bound(report.block_dets[i]) + tol
        })
        .collect();
    let flags = ClassificationFlags {
        almost_conformal: passing.contains(&i0),
        dominant_norm: report.block_norms[i0] >= op / (1.0 + eps) - tol,
        others_small: (0..l.k).all(|i| {
            i == i0 || report.block_norms[i] <= 5.0 * kf.sqrt() * eps.powf(0.25) * op + tol
        }),
    };
    report.dominating_index = Some(i0);
    report.bound_flags = Some(flags);
    report.blocks_passing_conformal_bound = passing;
    Ok(ClassifyResult { raw, normalized: report, epsilon: eps })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub nu: f64,
    pub norm_lhs: f64,
    pub norm_rhs: f64,
    pub norm_holds: bool,
    pub distortion_lhs: f64,
    pub distortion_rhs: f64,
    pub distortion_holds: bool,
}

/// Perturbation stability of calibrated maps: if L is calibrated and R
/// moves each basis image by at most nu*|L|/sqrt(n) with nu < 2^-n, then
/// |R| <= (1+nu)|L| and K(R) <= (1+nu)^n / (1 - 2^n nu).
pub fn perturbation_bound_check(
    l: &BlockLinearMap,
    r: &BlockLinearMap,
    nu: f64,
) -> Result<PerturbationReport, LinmapError> {
    let n = l.n;
    let nu_max = 0.5f64.powi(n as i32);
    if !(nu > 0.0 && nu < nu_max) {
        return Err(LinmapError::NuOutOfRange { nu, max: nu_max });
    }
    let op_l = l.op_norm();
    if op_l == 0.0 {
        return Err(LinmapError::ConstantMap);
    }
    let defect = (l.pullback_volx() - op_l.powi(n as i32)).abs() / op_l.powi(n as i32);
    if defect > 1e-9 {
        return Err(LinmapError::NotCalibrated { defect });
    }
    let col_bound = nu * op_l / (n as f64).sqrt();
    for j in 0..n {
        let lc = l.column(j);
        let rc = r.column(j);
        let d: f64 = lc
            .iter()
            .zip(&rc)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d > col_bound * (1.0 + 1e-12) + 1e-300 {
            return Err(LinmapError::ColumnPerturbation { i: j, got: d, bound: col_bound });
        }
    }
    let op_r = r.op_norm();
    let norm_rhs = (1.0 + nu) * op_l;
    let pullback_r = r.pullback_volx();
    let distortion_lhs = if pullback_r > 0.0 {
        op_r.powi(n as i32) / pullback_r
    } else {
        f64::INFINITY
    };
    let distortion_rhs = (1.0 + nu).powi(n as i32) / (1.0 - 2f64.powi(n as i32) * nu);
    let tol = 1e-9;
    Ok(PerturbationReport {
        nu,
        norm_lhs: op_r,
        norm_rhs,
        norm_holds: op_r <= norm_rhs + tol * op_l,
        distortion_lhs,
        distortion_rhs,
        distortion_holds: distortion_lhs <= distortion_rhs + tol,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilatationReport {
    pub dz_abs: f64,
    pub dzbar_abs: f64,
    /// |dzbar| / |dz| (0 when dz = 0 and dzbar = 0).
    pub ratio: f64,
    pub premise_bound: f64,
    pub premise_holds: bool,
    pub conclusion_lhs: f64,
    pub conclusion_rhs: f64,
    pub conclusion_holds: bool,
    /// sqrt((2K-1)/(2K+1)): the dilatation bound implied by distortion K.
    pub converse_bound: f64,
    /// Least K whose premise the map satisfies: (1+ratio)/(1-ratio).
    pub minimal_premise_k: f64,
}

/// Complex derivatives of the i-th block of a planar map: the block
/// [[a,b],[c,d]] has dz = ((a+d) + i(c-b))/2 and dzbar = ((a-d) + i(c+b))/2.
pub fn block_complex_derivatives(l: &BlockLinearMap, i: usize) -> ((f64, f64), (f64, f64)) {
    let b = l.block(i);
    let (a, bb, c, d) = (b[0], b[1], b[2], b[3]);
    (((a + d) / 2.0, (c - bb) / 2.0), ((a - d) / 2.0, (c + bb) / 2.0))
}

/// Planar dilatation: if |dzbar F| <= ((K-1)/(K+1)) |dz F| then
/// |L|^2 <= K * (pullback of omega_sym).
pub fn complex_dilatation_check(
    l: &BlockLinearMap,
    k_bound: f64,
) -> Result<DilatationReport, LinmapError> {
    if l.n != 2 {
        return Err(LinmapError::NotPlanar { n: l.n });
    }
    if k_bound < 1.0 {
        return Err(LinmapError::BadK { k: k_bound });
    }
    let mut dz2 = 0.0;
    let mut dzbar2 = 0.0;
    for i in 0..l.k {
        let ((zr, zi), (br, bi)) = block_complex_derivatives(l, i);
        dz2 += zr * zr + zi * zi;
        dzbar2 += br * br + bi * bi;
    }
    let dz = dz2.sqrt();
    let dzbar = dzbar2.sqrt();
    let ratio = if dz > 0.0 { dzbar / dz } else if dzbar > 0.0 { f64::INFINITY } else { 0.0 };
    let premise_bound = (k_bound - 1.0) / (k_bound + 1.0);
    let premise_holds = dzbar <= premise_bound * dz + 1e-12 * dz.max(1.0);
    let conclusion_lhs = l.op_norm().powi(2);
    let conclusion_rhs = k_bound * l.pullback_volx();
    let minimal_premise_k = if ratio < 1.0 { (1.0 + ratio) / (1.0 - ratio) } else { f64::INFINITY };
    Ok(DilatationReport {
        dz_abs: dz,
        dzbar_abs: dzbar,
        ratio,
        premise_bound,
        premise_holds,
        conclusion_lhs,
        conclusion_rhs,
        conclusion_holds: !premise_holds || conclusion_lhs <= conclusion_rhs + 1e-9 * conclusion_lhs.max(1.0),
        converse_bound: ((2.0 * k_bound - 1.0) / (2.0 * k_bound + 1.0)).sqrt(),
        minimal_premise_k,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleStats {
    pub attempts: usize,
    pub nu_used: f64,
}

/// Random map with distortion at most 1 + eps: a conformal map into a
/// random block, perturbed columnwise and re-checked, rejecting until
/// the distortion bound holds after orientation normalization.
pub fn random_near_calibrated(
    n: usize,
    k: usize,
    eps: f64,
    seed: u64,
) -> Result<(BlockLinearMap, SampleStats), LinmapError> {
    let eps_max = 1.0 / (100.0 * k as f64);
    if !(eps > 0.0 && eps < eps_max) {
        return Err(LinmapError::EpsOutOfRange { eps, max: eps_max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 400;
    for attempt in 1..=budget {
        let i0 = rng.random_range(0..k);
        let lambda: f64 = 0.5 + 1.5 * rng.random::<f64>();
        let q = random_rotation(&mut rng, n);
        let mut l = BlockLinearMap::zero(n, k);
        for (idx, &v) in q.iter().enumerate() {
            l.entries[(i0 * n) * n + idx] = lambda * v;
        }
        // columnwise perturbation sized from the stability lemma so
        // most draws land inside the distortion budget
        let nu_cap = eps / (2f64.powi(n as i32) + n as f64);
        let nu: f64 = rng.random::<f64>() * 1.2 * nu_cap;
        let col_bound = nu * lambda / (n as f64).sqrt();
        let mut r = l.clone();
        for j in 0..n {
            let dir: Vec<f64> = (0..n * k).map(|_| normal(&mut rng)).collect();
            let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let mag: f64 = rng.random::<f64>() * col_bound;
            for row in 0..n * k {
                r.entries[row * n + j] += mag * dir[row] / len;
            }
        }
        let rep = distortion_volx(&r.orientation_normalized());
        if let Some(kd) = rep.distortion {
            if kd <= 1.0 + eps {
                return Ok((r, SampleStats { attempts: attempt, nu_used: nu }));
            }
        }
    }
    Err(LinmapError::SamplerExhausted { attempts: budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::make_vol_cross;

    fn stacked_identities(n: usize, k: usize) -> BlockLinearMap {
        let mut blocks = Vec::new();
        for _ in 0..k {
            let mut b = vec![0.0; n * n];
            for i in 0..n {
                b[i * n + i] = 1.0;
            }
            blocks.push(b);
        }
        BlockLinearMap::from_blocks(n, &blocks).unwrap()
    }

    #[test]
    fn norms_of_stacked_identities() {
        let l = stacked_identities(3, 2);
        assert!((l.op_norm() - 2f64.sqrt()).abs() < 1e-12);
        assert!((l.hs_norm() - 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(BlockLinearMap::zero(3, 2).op_norm(), 0.0);
    }

    #[test]
    fn block_roundtrip() {
        let l = stacked_identities(2, 3);
        let blocks: Vec<Vec<f64>> = (0..3).map(|i| l.block(i).to_vec()).collect();
        let l2 = BlockLinearMap::from_blocks(2, &blocks).unwrap();
        assert_eq!(l, l2);
    }

    #[test]
    fn distortion_examples() {
        // DF of z -> (z, z + conj z): blocks Id and [[2,0],[0,0]]
        let l = BlockLinearMap::from_blocks(
            2,
            &[vec![1.0, 0.0, 0.0, 1.0], vec![2.0, 0.0, 0.0, 0.0]],
        )
        .unwrap();
        let rep = distortion(&l, &make_vol_cross(2, 2).unwrap()).unwrap();
        assert!((rep.op_norm.powi(2) - 5.0).abs() < 1e-12);
        assert!((rep.pullback - 1.0).abs() < 1e-12);
        assert!((rep.distortion.unwrap() - 5.0).abs() < 1e-9);

        let l = stacked_identities(3, 2);
        let rep = distortion_volx(&l);
        assert!((rep.distortion.unwrap() - 2f64.sqrt()).abs() < 1e-12);

        // calibrated single block
        let mut b = vec![0.0; 9];
        for i in 0..3 {
            b[i * 3 + i] = 1.0;
        }
        let l = BlockLinearMap::from_blocks(3, &[b, vec![0.0; 9]]).unwrap();
        assert!((distortion_volx(&l).distortion.unwrap() - 1.0).abs() < 1e-12);

        let z = BlockLinearMap::zero(3, 2);
        let rep = distortion_volx(&z);
        assert!(rep.constant);
        assert_eq!(rep.distortion, Some(1.0));
    }

    #[test]
    fn classify_rejects_large_distortion() {
        let l = stacked_identities(3, 2);
        match classify_near_calibrated(&l, 0.004) {
            Err(LinmapError::DistortionTooLarge { k, .. }) => {
                assert!((k - 2f64.sqrt()).abs() < 1e-9)
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn classify_conformal_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_rotation(&mut rng, 3);
        let scaled: Vec<f64> = q.iter().map(|x| 0.7 * x).collect();
        let l = BlockLinearMap::from_blocks(3, &[vec![0.0; 9], scaled]).unwrap();
        let res = classify_near_calibrated(&l, 1e-3).unwrap();
        assert_eq!(res.normalized.dominating_index, Some(1));
        assert!(res.normalized.bound_flags.as_ref().unwrap().all());
        assert!((res.normalized.block_norms[0]).abs() < 1e-12);
    }

    #[test]
    fn orientation_normalization_reflects_negative_blocks() {
        let mut b = vec![0.0; 9];
        b[0] = -1.0;
        b[4] = 1.0;
        b[8] = 1.0; // det -1
        let l = BlockLinearMap::from_blocks(3, &[b, vec![0.0; 9]]).unwrap();
        let ln = l.orientation_normalized();
        assert!(mat::det(ln.block(0), 3) > 0.0);
        assert!((distortion_volx(&ln).distortion.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbation_bound_value() {
        let l = {
            let mut b = vec![0.0; 9];
            for i in 0..3 {
                b[i * 3 + i] = 1.0;
            }
            BlockLinearMap::from_blocks(3, &[b, vec![0.0; 9]]).unwrap()
        };
        let rep = perturbation_bound_check(&l, &l, 0.1).unwrap();
        assert!((rep.distortion_rhs - 6.655).abs() < 1e-12);
        assert!(rep.norm_holds && rep.distortion_holds);
        assert!((rep.distortion_lhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dilatation_of_rigidity_example() {
        let l = BlockLinearMap::from_blocks(
            2,
            &[vec![1.0, 0.0, 0.0, 1.0], vec![2.0, 0.0, 0.0, 0.0]],
        )
        .unwrap();
        let rep = complex_dilatation_check(&l, 5.0).unwrap();
        assert!((rep.ratio - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        let want = (2f64.sqrt() + 1.0) / (2f64.sqrt() - 1.0);
        assert!((rep.minimal_premise_k - want).abs() < 1e-9);
        // K = 5 premise: (5-1)/(5+1) = 2/3 > 1/sqrt(2)? No: 0.667 < 0.707,
        // so the Lemma premise fails at K = 5 even though distortion is 5.
        assert!(!rep.premise_holds);
        let rep = complex_dilatation_check(&l, want + 1e-6).unwrap();
        assert!(rep.premise_holds && rep.conclusion_holds);
    }

    #[test]
    fn holomorphic_block_has_k1_premise() {
        // multiplication by (1 + 2i): [[1,-2],[2,1]]
        let l = BlockLinearMap::from_blocks(2, &[vec![1.0, -2.0, 2.0, 1.0]]).unwrap();
        let rep = complex_dilatation_check(&l, 1.0).unwrap();
        assert_eq!(rep.dzbar_abs, 0.0);
        assert!(rep.premise_holds && rep.conclusion_holds);
    }

    #[test]
    fn sampler_output_is_near_calibrated_and_deterministic() {
        let (l1, _) = random_near_calibrated(3, 2, 1e-3, 42).unwrap();
        let (l2, _) = random_near_calibrated(3, 2, 1e-3, 42).unwrap();
        assert_eq!(l1, l2);
        let rep = distortion_volx(&l1.orientation_normalized());
        assert!(rep.distortion.unwrap() <= 1.0 + 1e-3);
    }

    #[test]
    fn hs_opnorm_inequality_and_conformal_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let entries: Vec<f64> = (0..6 * 3).map(|_| normal(&mut rng)).collect();
            let l = BlockLinearMap::new(3, 2, entries).unwrap();
            assert!(l.op_norm() >= l.hs_norm() / 3f64.sqrt() - 1e-12);
        }
        let q = random_rotation(&mut rng, 3);
        let scaled: Vec<f64> = q.iter().map(|x| 1.3 * x).collect();
        let l = BlockLinearMap::from_blocks(3, &[scaled]).unwrap();
        assert!((l.op_norm() - l.hs_norm() / 3f64.sqrt()).abs() < 1e-9);
        assert!((l.hs_norm() - 1.3 * 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn hadamard_block_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let entries: Vec<f64> = (0..9).map(|_| normal(&mut rng)).collect();
            let d = mat::det(&entries, 3);
            let mut prod = 1.0;
            for j in 0..3 {
                prod *= (0..3)
                    .map(|r| entries[r * 3 + j] * entries[r * 3 + j])
                    .sum::<f64>()
                    .sqrt();
            }
            assert!(d <= prod + 1e-12);
        }
    }
}
