//! Alternating n-covectors on R^m with sparse coefficient storage, the
//! product volume forms vol^x(n, k), and comass computation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mat;
use crate::sampling::{mix_seed, normal};

/// An ordered list of n vectors in R^m (the arguments of an n-form).
pub type Frame = Vec<Vec<f64>>;

/// Alternating n-covector on R^m. Coefficients are stored on strictly
/// increasing multi-indices (1-based); all other values follow by
/// antisymmetry. Terms with zero coefficient are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct NForm {
    n: usize,
    m: usize,
    terms: BTreeMap<Vec<usize>, f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormError {
    #[error("degree n={n} must satisfy 1 <= n <= m={m}")]
    BadDegree { n: usize, m: usize },
    #[error("index {idx} out of range 1..={m}")]
    IndexRange { idx: usize, m: usize },
    #[error("multi-index has {got} entries, expected {want}")]
    IndexLen { got: usize, want: usize },
    #[error("frame has {got} vectors, expected {want}")]
    FrameLen { got: usize, want: usize },
    #[error("frame vector {i} has dimension {got}, expected {want}")]
    FrameDim { i: usize, got: usize, want: usize },
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    indices: Vec<usize>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct NFormJson {
    n: usize,
    m: usize,
    terms: Vec<TermJson>,
}

impl Serialize for NForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        NFormJson {
            n: self.n,
            m: self.m,
            terms: self
                .terms
                .iter()
                .map(|(i, &c)| TermJson { indices: i.clone(), coeff: c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = NFormJson::deserialize(d)?;
        let mut form = NForm::zero(raw.n, raw.m).map_err(serde::de::Error::custom)?;
        for t in raw.terms {
            form.add_term(&t.indices, t.coeff).map_err(serde::de::Error::custom)?;
        }
        Ok(form)
    }
}

impl NForm {
    pub fn zero(n: usize, m: usize) -> Result<Self, FormError> {
        if n == 0 || n > m {
            return Err(FormError::BadDegree { n, m });
        }
        Ok(NForm { n, m, terms: BTreeMap::new() })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.terms.iter().map(|(i, &c)| (i.as_slice(), c))
    }

    /// Add `coeff` on the alternation class of `indices`. Indices are
    /// 1-based; arbitrary order is accepted and normalized with the
    /// permutation sign; repeated indices contribute nothing.
    pub fn add_term(&mut self, indices: &[usize], coeff: f64) -> Result<(), FormError> {
        if indices.len() != self.n {
            return Err(FormError::IndexLen { got: indices.len(), want: self.n });
        }
        for &idx in indices {
            if idx == 0 || idx > self.m {
                return Err(FormError::IndexRange { idx, m: self.m });
            }
        }
        let mut sorted = indices.to_vec();
        // count inversions for the sign; bail on repeats
        let mut sign = 1.0;
        for i in 0..sorted.len() {
            for j in i + 1..sorted.len() {
                if sorted[i] == sorted[j] {
                    return Ok(());
                }
            }
        }
        // insertion sort, flipping sign per swap
        for i in 1..sorted.len() {
            let mut j = i;
            while j > 0 && sorted[j - 1] > sorted[j] {
                sorted.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        let entry = self.terms.entry(sorted.clone()).or_insert(0.0);
        *entry += sign * coeff;
        if *entry == 0.0 {
            self.terms.remove(&sorted);
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        if s == 0.0 {
            self.terms.clear();
            return;
        }
        for v in self.terms.values_mut() {
            *v *= s;
        }
    }

    /// Sum of absolute values of the stored coefficients.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Evaluate on a frame of n vectors in R^m.
    pub fn eval(&self, frame: &Frame) -> Result<f64, FormError> {
        if frame.len() != self.n {
            return Err(FormError::FrameLen { got: frame.len(), want: self.n });
        }
        for (i, v) in frame.iter().enumerate() {
            if v.len() != self.m {
                return Err(FormError::FrameDim { i, got: v.len(), want: self.m });
            }
        }
        let cols = frame_to_cols(frame, self.m);
        Ok(self.eval_cols(&cols))
    }

    /// Evaluate on the columns of an m x n matrix (row-major, m rows).
    pub fn pullback_eval(&self, matrix: &[f64]) -> Result<f64, FormError> {
        if matrix.len() != self.m * self.n {
            return Err(FormError::FrameLen { got: matrix.len(), want: self.m * self.n });
        }
        Ok(self.eval_cols(matrix))
    }

    fn eval_cols(&self, cols: &[f64]) -> f64 {
        let n = self.n;
        let mut sub = vec![0.0; n * n];
        let mut total = 0.0;
        for (idx, &c) in &self.terms {
            for (a, &row) in idx.iter().enumerate() {
                let r = row - 1;
                sub[a * n..a * n + n].copy_from_slice(&cols[r * n..r * n + n]);
            }
            total += c * mat::det(&sub, n);
        }
        total
    }

    /// Gradient of eval with respect to each frame vector; returns n
    /// vectors in R^m such that grads[j] . w = omega(v1, .., w, .., vn).
    fn eval_grads(&self, cols: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut grads = vec![vec![0.0; self.m]; n];
        let mut sub = vec![0.0; n * n];
        for (idx, &c) in &self.terms {
            for (a, &row) in idx.iter().enumerate() {
                let r = row - 1;
                sub[a * n..a * n + n].copy_from_slice(&cols[r * n..r * n + n]);
            }
            let cof = mat::cofactor_matrix(&sub, n);
            for (a, &row) in idx.iter().enumerate() {
                for j in 0..n {
                    grads[j][row - 1] += c * cof[a * n + j];
                }
            }
        }
        grads
    }
}

fn frame_to_cols(frame: &Frame, m: usize) -> Vec<f64> {
    let n = frame.len();
    let mut cols = vec![0.0; m * n];
    for (j, v) in frame.iter().enumerate() {
        for (r, &x) in v.iter().enumerate() {
            cols[r * n + j] = x;
        }
    }
    cols
}

/// The volume form of R^n (single term dx_1 ^ .. ^ dx_n).
pub fn make_vol(n: usize) -> NForm {
    let mut f = NForm::zero(n, n).expect("n >= 1");
    let idx: Vec<usize> = (1..=n).collect();
    f.add_term(&idx, 1.0).unwrap();
    f
}

/// The product volume form vol^x(n, k) on R^(nk): the sum over the k
/// coordinate blocks of the block volume forms.
pub fn make_vol_cross(n: usize, k: usize) -> Result<NForm, FormError> {
    if k == 0 {
        return Err(FormError::BadDegree { n, m: 0 });
    }
    let mut f = NForm::zero(n, n * k)?;
    for b in 0..k {
        let idx: Vec<usize> = (1..=n).map(|i| b * n + i).collect();
        f.add_term(&idx, 1.0)?;
    }
    Ok(f)
}

/// The symplectic-type 2-form on R^(2k) = C^k (vol^x with n = 2).
pub fn make_omega_sym(k: usize) -> Result<NForm, FormError> {
    make_vol_cross(2, k)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComassOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ComassOptions {
    fn default() -> Self {
        ComassOptions { restarts: 32, iterations: 400, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComassResult {
    pub value: f64,
    /// Maximizing frame (n unit vectors in R^m).
    pub frame: Vec<Vec<f64>>,
    pub restarts: usize,
    pub iterations: usize,
    /// Largest pairwise |<vi,vj>| plus norm spread of the winning frame;
    /// near zero means the maximizer is an orthonormal frame.
    pub conformality_defect: f64,
}

/// Comass of an n-form: the maximum of omega over frames of vectors in
/// the unit ball. Projected gradient ascent with backtracking from
/// seeded random starts, then a cyclic best-response polish (each vector
/// replaced by the normalized contraction gradient, the exact maximizer
/// over the unit ball with the others fixed).
pub fn comass(form: &NForm, opts: &ComassOptions) -> ComassResult {
    let n = form.degree();
    let m = form.ambient_dim();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_cols = vec![0.0; m * n];
    for r in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(opts.seed, r as u64));
        let mut cols = vec![0.0; m * n];
        for j in 0..n {
            let v = random_unit(&mut rng, m);
            for row in 0..m {
                cols[row * n + j] = v[row];
            }
        }
        let val = ascend(form, &mut cols, opts.iterations);
        if val > best_val {
            best_val = val;
            best_cols = cols;
        }
    }
    let mut frame = Vec::with_capacity(n);
    for j in 0..n {
        frame.push((0..m).map(|r| best_cols[r * n + j]).collect::<Vec<f64>>());
    }
    let defect = conformality_defect(&frame);
    ComassResult {
        value: best_val,
        frame,
        restarts: opts.restarts.max(1),
        iterations: opts.iterations,
        conformality_defect: defect,
    }
}

fn conformality_defect(frame: &Frame) -> f64 {
    let n = frame.len();
    let mut max_dot = 0.0f64;
    let mut min_norm = f64::INFINITY;
    let mut max_norm = 0.0f64;
    for i in 0..n {
        let ni = norm(&frame[i]);
        min_norm = min_norm.min(ni);
        max_norm = max_norm.max(ni);
        for j in i + 1..n {
            let d: f64 = frame[i].iter().zip(&frame[j]).map(|(a, b)| a * b).sum();
            max_dot = max_dot.max(d.abs());
        }
    }
    max_dot + (max_norm - min_norm)
}

fn ascend(form: &NForm, cols: &mut Vec<f64>, iterations: usize) -> f64 {
    let n = form.degree();
    let m = form.ambient_dim();
    let mut val = form.eval_cols(cols);
    // orient the start so ascent chases the positive maximum
    if val < 0.0 {
        for r in 0..m {
            cols[r * n] = -cols[r * n];
        }
        val = -val;
    }
    let mut step = 0.5;
    for _ in 0..iterations {
        let grads = form.eval_grads(cols);
        let mut improved = false;
        for _ in 0..40 {
            let mut trial = cols.clone();
            for j in 0..n {
                let mut v: Vec<f64> =
                    (0..m).map(|r| cols[r * n + j] + step * grads[j][r]).collect();
                let nv = norm(&v);
                if nv > 1.0 {
                    for x in v.iter_mut() {
                        *x /= nv;
                    }
                }
                for r in 0..m {
                    trial[r * n + j] = v[r];
                }
            }
            let tv = form.eval_cols(&trial);
            if tv > val {
                *cols = trial;
                val = tv;
                step = (step * 1.3).min(4.0);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    // cyclic best-response polish: the exact per-vector maximizer over
    // the unit ball is the normalized contraction gradient
    for _ in 0..60 {
        let before = val;
        for j in 0..n {
            let grads = form.eval_grads(cols);
            let g = &grads[j];
            let ng = norm(g);
            if ng < 1e-300 {
                continue;
            }
            for r in 0..m {
                cols[r * n + j] = g[r] / ng;
            }
        }
        val = form.eval_cols(cols);
        if (val - before).abs() <= 1e-15 * val.abs().max(1.0) {
            break;
        }
    }
    val
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| normal(rng)).collect();
        let nv = norm(&v);
        if nv > 1e-6 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vol_cross_term_layout() {
        let f = make_vol_cross(3, 2).unwrap();
        let terms: Vec<_> = f.terms().collect();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].0, &[1, 2, 3]);
        assert_eq!(terms[1].0, &[4, 5, 6]);
        assert_eq!(f.l1_norm(), 2.0);
    }

    #[test]
    fn alternation_sign_normalization() {
        let mut f = NForm::zero(2, 3).unwrap();
        f.add_term(&[2, 1], 1.0).unwrap();
        let terms: Vec<_> = f.terms().collect();
        assert_eq!(terms[0].0, &[1, 2]);
        assert_eq!(terms[0].1, -1.0);
        // repeated index contributes nothing
        f.add_term(&[3, 3], 5.0).unwrap();
        assert_eq!(f.terms().count(), 1);
    }

    #[test]
    fn eval_on_basis_frames() {
        let f = make_vol_cross(2, 2).unwrap();
        let e = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v
        };
        assert_eq!(f.eval(&vec![e(0), e(1)]).unwrap(), 1.0);
        assert_eq!(f.eval(&vec![e(2), e(3)]).unwrap(), 1.0);
        assert_eq!(f.eval(&vec![e(1), e(0)]).unwrap(), -1.0);
        assert_eq!(f.eval(&vec![e(0), e(2)]).unwrap(), 0.0);
    }

    #[test]
    fn pullback_eval_sums_block_determinants() {
        // columns of the stacked (Id2, 2*Id2): det 1 + det 4
        let f = make_vol_cross(2, 2).unwrap();
        let m = vec![1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 2.0];
        assert_eq!(f.pullback_eval(&m).unwrap(), 5.0);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let mut f = make_vol_cross(2, 3).unwrap();
        f.add_term(&[1, 4], -3.0).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let g: NForm = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn comass_of_plane_volume_form() {
        let f = make_vol(2);
        let r = comass(&f, &ComassOptions { restarts: 4, iterations: 100, seed: 7 });
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.conformality_defect < 1e-6);
    }

    #[test]
    fn comass_one_form_is_euclidean_norm() {
        let mut f = NForm::zero(1, 3).unwrap();
        f.add_term(&[1], 3.0).unwrap();
        f.add_term(&[3], 4.0).unwrap();
        let r = comass(&f, &ComassOptions { restarts: 2, iterations: 50, seed: 1 });
        assert!((r.value - 5.0).abs() < 1e-9);
    }
}
