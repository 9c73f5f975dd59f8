//! The gluing construction of a quasiregular curve with positive-area
//! branch-like behavior: auxiliary maps s, h, the k-block map H on the
//! strip t in [2^-k, 1], its reparametrization G, and the rescaled
//! gluing F, which vanishes identically on the lower half-space.
//!
//! With the measured Lipschitz constant of the branched cover, the
//! required block count k runs into the millions, so value vectors of
//! length nk are never materialized for large k: norms, pullbacks, and
//! distortion are computed from the three distinct block types (blocks
//! below the active strip index, the active block, blocks above it)
//! with multiplicities. Deep-strip values of F carry the factor
//! (2^-k)^(l-1), which underflows to zero for l >= 2 — the true values
//! are smaller than any representable double, so zero is the honest
//! rounding.

use std::sync::Arc;

use crate::curves::branched::{a_differential, a_point, a_seam_distance, measure_cover};
use crate::curves::{CurveError, CurveField, Domain};
use crate::linmap::BlockLinearMap;
use crate::mat;

/// Largest k for which length-3k value vectors may be materialized.
pub const MATERIALIZE_CAP: u64 = 65536;

/// Least k with (k-1) (1/(2L))^(n-1) - (10L)^n >= 1.
pub fn ivv_choose_k(n: u32, l: f64) -> Result<u64, CurveError> {
    if n < 3 {
        return Err(CurveError::BadParameter(format!("n = {n} must be >= 3")));
    }
    if !(l >= 1.0) {
        return Err(CurveError::BadParameter(format!("L = {l} must be >= 1")));
    }
    let a = (0.5 / l).powi(n as i32 - 1);
    let b = (10.0 * l).powi(n as i32);
    let mut k = 1 + ((1.0 + b) / a).ceil() as u64;
    // settle exact minimality against float rounding
    while k > 2 && (k as f64 - 2.0) * a - b >= 1.0 {
        k -= 1;
    }
    while (k as f64 - 1.0) * a - b < 1.0 {
        k += 1;
    }
    Ok(k)
}

/// The strip construction, parametrized by the measured constants of
/// the branched cover.
#[derive(Debug, Clone)]
pub struct IvvMaps {
    pub k: u64,
    pub l_hat: f64,
    pub j_hat: f64,
    /// Strip window for F: evaluation needs strip index <= ell_max.
    pub ell_max: u32,
    fd_h: f64,
}

/// Dense-block summary of the differential at a strip point: the three
/// distinct 3x3 block matrices with multiplicities.
struct StripBlocks {
    ell: u64,
    /// D s(2x, t), multiplicity ell - 1.
    below: [f64; 9],
    /// D of the active blended block.
    active: [f64; 9],
    /// D s(x, t), multiplicity k - ell.
    above: [f64; 9],
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StripDistortion {
    pub op_norm: f64,
    pub pullback: f64,
    pub distortion: f64,
    pub strip: u64,
}

impl IvvMaps {
    /// Measure the branched cover and choose k from the measured
    /// Lipschitz constant.
    pub fn new() -> Result<Self, CurveError> {
        Self::with_window(12)
    }

    pub fn with_window(ell_max: u32) -> Result<Self, CurveError> {
        let stats = measure_cover(256);
        let k = ivv_choose_k(3, stats.lipschitz)?;
        Ok(IvvMaps {
            k,
            l_hat: stats.lipschitz,
            j_hat: stats.jacobian_min,
            ell_max,
            fd_h: 1e-6,
        })
    }

    /// Caller-supplied k; must not undercut the measured requirement.
    pub fn with_k(k: u64, ell_max: u32) -> Result<Self, CurveError> {
        let stats = measure_cover(256);
        let k_min = ivv_choose_k(3, stats.lipschitz)?;
        if k < k_min {
            return Err(CurveError::BadParameter(format!(
                "k = {k} below the required {k_min} for measured L = {:.4}",
                stats.lipschitz
            )));
        }
        Ok(IvvMaps { k, l_hat: stats.lipschitz, j_hat: stats.jacobian_min, ell_max, fd_h: 1e-6 })
    }

    /// s(x, t) = t A(x).
    pub fn s(&self, x: &[f64], t: f64) -> [f64; 3] {
        let a = a_point(x);
        [t * a[0], t * a[1], t * a[2]]
    }

    /// h(x, u) for u in [1/2, 1]: the blend (2u-1) 2A(x) + (2-2u) A(2x).
    pub fn h_raw(&self, x: &[f64], u: f64) -> [f64; 3] {
        let a = a_point(x);
        let a2 = a_point(&[2.0 * x[0], 2.0 * x[1]]);
        let w = 2.0 * u - 1.0;
        let mut out = [0.0; 3];
        for r in 0..3 {
            out[r] = w * 2.0 * a[r] + (1.0 - w) * a2[r];
        }
        out
    }

    /// Strip index l with t in [2^-l, 2^(-l+1)], clamped to 1..=k.
    pub fn strip_of(&self, t: f64) -> Result<u64, CurveError> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CurveError::OutsideDomain);
        }
        let ell = (-t.log2()).ceil().max(1.0) as u64;
        if ell > self.k {
            // below the strip of H; only possible for representable
            // 2^-k, i.e. small k
            return Err(CurveError::OutsideDomain);
        }
        Ok(ell)
    }

    /// The active block on strip l: 2^-l h(x, 2^(l-1) t).
    pub fn h_block(&self, x: &[f64], t: f64, ell: u64) -> [f64; 3] {
        let u = exp2i(ell as i64 - 1) * t;
        let v = self.h_raw(x, u);
        let sc = exp2i(-(ell as i64));
        [sc * v[0], sc * v[1], sc * v[2]]
    }

    /// Component i (1-based) of H at (x, t).
    pub fn h_component(&self, i: u64, x: &[f64], t: f64) -> Result<[f64; 3], CurveError> {
        let ell = self.strip_of(t)?;
        if i == 0 || i > self.k {
            return Err(CurveError::BadParameter(format!("block index {i} out of 1..={}", self.k)));
        }
        Ok(if i < ell {
            self.s(&[2.0 * x[0], 2.0 * x[1]], t)
        } else if i == ell {
            self.h_block(x, t, ell)
        } else {
            self.s(x, t)
        })
    }

    /// |H(x, t)|: all non-active blocks have |s| = t exactly.
    pub fn h_norm(&self, x: &[f64], t: f64) -> Result<f64, CurveError> {
        let ell = self.strip_of(t)?;
        let hb = self.h_block(x, t, ell);
        let hb2 = hb.iter().map(|v| v * v).sum::<f64>();
        Ok(((self.k - 1) as f64 * t * t + hb2).sqrt())
    }

    fn strip_matrices(&self, x: &[f64], t: f64) -> Result<StripBlocks, CurveError> {
        let ell = self.strip_of(t)?;
        let x2 = [2.0 * x[0], 2.0 * x[1]];
        let a = a_point(x);
        let a2 = a_point(&x2);
        let da = a_differential(x, self.fd_h);
        let da2 = a_differential(&x2, self.fd_h);
        // D s(x,t) = [t A_x | A]
        let mut above = [0.0; 9];
        // D s(2x,t): x-derivative gains the inner factor 2
        let mut below = [0.0; 9];
        for r in 0..3 {
            above[r * 3] = t * da[r * 2];
            above[r * 3 + 1] = t * da[r * 2 + 1];
            above[r * 3 + 2] = a[r];
            below[r * 3] = 2.0 * t * da2[r * 2];
            below[r * 3 + 1] = 2.0 * t * da2[r * 2 + 1];
            below[r * 3 + 2] = a2[r];
        }
        // active block: 2^-l h(x, u) with u = 2^(l-1) t;
        // d/dx_j = 2^-l [(2u-1) 2 A_xj(x) + (1-(2u-1)) 2 A_xj(2x)],
        // d/dt = (1/2) d/du h = 2A(x) - A(2x)
        let u = exp2i(ell as i64 - 1) * t;
        let w = 2.0 * u - 1.0;
        let sc = exp2i(-(ell as i64));
        let mut active = [0.0; 9];
        for r in 0..3 {
            for j in 0..2 {
                active[r * 3 + j] =
                    sc * (w * 2.0 * da[r * 2 + j] + (1.0 - w) * 2.0 * da2[r * 2 + j]);
            }
            active[r * 3 + 2] = 2.0 * a[r] - a2[r];
        }
        Ok(StripBlocks { ell, below, active, above })
    }

    /// Pullback of vol^x under H at (x, t): the sum of the k block
    /// determinants, computed from the three distinct block types.
    pub fn star_h_volx(&self, x: &[f64], t: f64) -> Result<f64, CurveError> {
        let b = self.strip_matrices(x, t)?;
        Ok((b.ell - 1) as f64 * mat::det(&b.below, 3)
            + (self.k - b.ell) as f64 * mat::det(&b.above, 3)
            + mat::det(&b.active, 3))
    }

    fn distortion_from_blocks(&self, b: &StripBlocks, t_col_scale: f64) -> StripDistortion {
        let mut mats = [b.below, b.active, b.above];
        if t_col_scale != 1.0 {
            for m in mats.iter_mut() {
                for r in 0..3 {
                    m[r * 3 + 2] *= t_col_scale;
                }
            }
        }
        let mult = [(b.ell - 1) as f64, 1.0, (self.k - b.ell) as f64];
        let mut gram = [0.0; 9];
        let mut pullback = 0.0;
        for (m, &w) in mats.iter().zip(&mult) {
            let g = mat::gram(m, 3, 3);
            for i in 0..9 {
                gram[i] += w * g[i];
            }
            pullback += w * mat::det(m, 3);
        }
        let ev = mat::sym_eigvals(&gram, 3);
        let op = ev[2].max(0.0).sqrt();
        StripDistortion {
            op_norm: op,
            pullback,
            distortion: if pullback > 0.0 { op.powi(3) / pullback } else { f64::INFINITY },
            strip: b.ell,
        }
    }

    /// Pointwise distortion of H at (x, t).
    pub fn h_distortion(&self, x: &[f64], t: f64) -> Result<StripDistortion, CurveError> {
        let b = self.strip_matrices(x, t)?;
        Ok(self.distortion_from_blocks(&b, 1.0))
    }

    /// Affine strip reparametrization xi: [1/2, 1] -> [2^-k, 1] in t.
    pub fn xi_t(&self, t: f64) -> f64 {
        let floor = exp2i(-(self.k as i64));
        (2.0 * t - 1.0) + (2.0 - 2.0 * t) * floor
    }

    pub fn xi_slope(&self) -> f64 {
        2.0 - 2.0 * exp2i(-(self.k as i64))
    }

    /// Component i of G = H o xi on t in [1/2, 1].
    pub fn g_component(&self, i: u64, x: &[f64], t: f64) -> Result<[f64; 3], CurveError> {
        if !(0.5..=1.0).contains(&t) {
            return Err(CurveError::OutsideDomain);
        }
        let u = self.xi_t(t);
        if u <= 0.0 {
            // 2^-k underflowed: the exact value 2^-k A(2x) rounds to 0
            return Ok([0.0; 3]);
        }
        self.h_component(i, x, u)
    }

    pub fn g_norm(&self, x: &[f64], t: f64) -> Result<f64, CurveError> {
        if !(0.5..=1.0).contains(&t) {
            return Err(CurveError::OutsideDomain);
        }
        let u = self.xi_t(t);
        if u <= 0.0 {
            return Ok(0.0);
        }
        self.h_norm(x, u)
    }

    pub fn g_distortion(&self, x: &[f64], t: f64) -> Result<StripDistortion, CurveError> {
        let u = self.xi_t(t);
        if u <= 0.0 {
            return Err(CurveError::OutsideDomain);
        }
        let b = self.strip_matrices(x, u)?;
        Ok(self.distortion_from_blocks(&b, self.xi_slope()))
    }

    /// Strip index of F at t > 0 and the within-window check.
    pub fn f_strip(&self, t: f64) -> Result<u32, CurveError> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CurveError::OutsideDomain);
        }
        let ell = (-t.log2()).ceil().max(1.0) as u32;
        if ell > self.ell_max {
            return Err(CurveError::OutOfWindow { t, ell_max: self.ell_max });
        }
        Ok(ell)
    }

    /// |F(x, t)|; exactly 0 for t <= 0.
    pub fn f_norm(&self, x: &[f64], t: f64) -> Result<f64, CurveError> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let ell = self.f_strip(t)?;
        let sc = exp2i(-((self.k as i64) * (ell as i64 - 1)));
        let y = [exp2i(ell as i64 - 1) * x[0], exp2i(ell as i64 - 1) * x[1]];
        let u = exp2i(ell as i64 - 1) * t;
        Ok(sc * self.g_norm(&y, u.min(1.0))?)
    }

    /// Distortion of F at (x, t > 0): DF is a positive scalar multiple
    /// of DG at the reduced point, so the distortion transfers exactly
    /// (no underflowing prefactor involved).
    pub fn f_distortion(&self, x: &[f64], t: f64) -> Result<StripDistortion, CurveError> {
        let ell = self.f_strip(t)?;
        let y = [exp2i(ell as i64 - 1) * x[0], exp2i(ell as i64 - 1) * x[1]];
        let u = (exp2i(ell as i64 - 1) * t).min(1.0).max(0.5);
        self.g_distortion(&y, u)
    }

    /// Distance to the nearest strip boundary or cover seam, used for
    /// one-sided finite differencing.
    pub fn seam_distance(&self, x: &[f64], t: f64) -> f64 {
        let cover = a_seam_distance(x).min(a_seam_distance(&[2.0 * x[0], 2.0 * x[1]]) / 2.0);
        if t <= 0.0 {
            return cover.min(-t);
        }
        let ell = (-t.log2()).ceil().max(1.0);
        let hi = exp2i(1 - ell as i64);
        let lo = exp2i(-(ell as i64));
        cover.min((t - lo).min(hi - t))
    }

    fn materialize_guard(&self) -> Result<usize, CurveError> {
        if self.k > MATERIALIZE_CAP {
            return Err(CurveError::TooManyBlocks { k: self.k });
        }
        Ok(self.k as usize)
    }

    pub fn eval_h(&self, x: &[f64], t: f64) -> Result<Vec<f64>, CurveError> {
        let k = self.materialize_guard()?;
        let mut out = Vec::with_capacity(3 * k);
        for i in 1..=k as u64 {
            out.extend_from_slice(&self.h_component(i, x, t)?);
        }
        Ok(out)
    }

    pub fn eval_g(&self, x: &[f64], t: f64) -> Result<Vec<f64>, CurveError> {
        let k = self.materialize_guard()?;
        let mut out = Vec::with_capacity(3 * k);
        for i in 1..=k as u64 {
            out.extend_from_slice(&self.g_component(i, x, t)?);
        }
        Ok(out)
    }

    pub fn eval_f(&self, x: &[f64], t: f64) -> Result<Vec<f64>, CurveError> {
        let k = self.materialize_guard()?;
        if t <= 0.0 {
            return Ok(vec![0.0; 3 * k]);
        }
        let ell = self.f_strip(t)?;
        let sc = exp2i(-((self.k as i64) * (ell as i64 - 1)));
        let y = [exp2i(ell as i64 - 1) * x[0], exp2i(ell as i64 - 1) * x[1]];
        let u = (exp2i(ell as i64 - 1) * t).min(1.0);
        let mut v = self.eval_g(&y, u)?;
        for e in v.iter_mut() {
            *e *= sc;
        }
        Ok(v)
    }
}

pub(crate) fn exp2i(e: i64) -> f64 {
    (e as f64).exp2()
}

fn field_params(maps: &IvvMaps) -> Vec<(&'static str, f64)> {
    vec![
        ("k", maps.k as f64),
        ("lipschitz", maps.l_hat),
        ("jacobian_min", maps.j_hat),
        ("ell_max", maps.ell_max as f64),
    ]
}

fn attach_params(mut f: CurveField, maps: &IvvMaps) -> CurveField {
    for (k, v) in field_params(maps) {
        f = f.with_param(k, v);
    }
    f
}

/// s(x, t) = t A(x) as a curve field on the strip t in [0, 1].
pub fn ivv_s(maps: &IvvMaps) -> CurveField {
    let m = maps.clone();
    let md = maps.clone();
    let ms = maps.clone();
    let f = CurveField::new(
        "ivv_s",
        Domain::Strip { x_dim: 2, t_min: 0.0, t_max: 1.0 },
        3,
        1,
        Arc::new(move |p: &[f64]| Ok(m.s(&p[..2], p[2]).to_vec())),
    )
    .with_diff(Arc::new(move |p: &[f64]| {
        let a = a_point(&p[..2]);
        let da = a_differential(&p[..2], md.fd_h);
        let t = p[2];
        let mut e = vec![0.0; 9];
        for r in 0..3 {
            e[r * 3] = t * da[r * 2];
            e[r * 3 + 1] = t * da[r * 2 + 1];
            e[r * 3 + 2] = a[r];
        }
        Ok(BlockLinearMap::new(3, 1, e).expect("3x3"))
    }))
    .with_seam(Arc::new(move |p: &[f64]| ms.seam_distance(&p[..2], p[2])));
    attach_params(f, maps)
}

/// The blend h(x, t) on t in [1/2, 1] as a single-block curve field.
pub fn ivv_h(maps: &IvvMaps) -> CurveField {
    let m = maps.clone();
    let md = maps.clone();
    let f = CurveField::new(
        "ivv_h",
        Domain::Strip { x_dim: 2, t_min: 0.5, t_max: 1.0 },
        3,
        1,
        Arc::new(move |p: &[f64]| Ok(m.h_raw(&p[..2], p[2]).to_vec())),
    )
    .with_diff(Arc::new(move |p: &[f64]| {
        let x = &p[..2];
        let x2 = [2.0 * p[0], 2.0 * p[1]];
        let a = a_point(x);
        let a2 = a_point(&x2);
        let da = a_differential(x, md.fd_h);
        let da2 = a_differential(&x2, md.fd_h);
        let w = 2.0 * p[2] - 1.0;
        let mut e = vec![0.0; 9];
        for r in 0..3 {
            for j in 0..2 {
                e[r * 3 + j] = w * 2.0 * da[r * 2 + j] + (1.0 - w) * 2.0 * da2[r * 2 + j];
            }
            e[r * 3 + 2] = 4.0 * a[r] - 2.0 * a2[r];
        }
        Ok(BlockLinearMap::new(3, 1, e).expect("3x3"))
    }))
    .with_seam(Arc::new(|p: &[f64]| {
        a_seam_distance(&p[..2]).min(a_seam_distance(&[2.0 * p[0], 2.0 * p[1]]) / 2.0)
    }));
    attach_params(f, maps)
}

/// The k-block map H on its strip. Value vectors materialize only for
/// k below the cap; the structured accessors on IvvMaps handle the
/// realistic (huge-k) regime.
pub fn ivv_h_map(maps: &IvvMaps) -> CurveField {
    let m = maps.clone();
    let ms = maps.clone();
    let t_min = exp2i(-(maps.k as i64)).max(f64::MIN_POSITIVE);
    let f = CurveField::new(
        "ivv_H",
        Domain::Strip { x_dim: 2, t_min, t_max: 1.0 },
        3,
        maps.k.min(MATERIALIZE_CAP) as usize,
        Arc::new(move |p: &[f64]| m.eval_h(&p[..2], p[2])),
    )
    .with_seam(Arc::new(move |p: &[f64]| ms.seam_distance(&p[..2], p[2])));
    attach_params(f, maps)
}

/// G = H o xi on t in [1/2, 1].
pub fn ivv_g(maps: &IvvMaps) -> CurveField {
    let m = maps.clone();
    let ms = maps.clone();
    let f = CurveField::new(
        "ivv_G",
        Domain::Strip { x_dim: 2, t_min: 0.5, t_max: 1.0 },
        3,
        maps.k.min(MATERIALIZE_CAP) as usize,
        Arc::new(move |p: &[f64]| m.eval_g(&p[..2], p[2])),
    )
    .with_seam(Arc::new(move |p: &[f64]| ms.seam_distance(&p[..2], m_xi(&ms, p[2]))));
    attach_params(f, maps)
}

fn m_xi(maps: &IvvMaps, t: f64) -> f64 {
    maps.xi_t(t).max(f64::MIN_POSITIVE)
}

/// The rescaled gluing F: zero for t <= 0, strip-rescaled copies of G
/// for t in (0, 1].
pub fn ivv_f(maps: &IvvMaps) -> CurveField {
    let m = maps.clone();
    let ms = maps.clone();
    let f = CurveField::new(
        "ivv_F",
        Domain::Strip { x_dim: 2, t_min: -f64::INFINITY, t_max: 1.0 },
        3,
        maps.k.min(MATERIALIZE_CAP) as usize,
        Arc::new(move |p: &[f64]| m.eval_f(&p[..2], p[2])),
    )
    .with_seam(Arc::new(move |p: &[f64]| ms.seam_distance(&p[..2], p[2])));
    attach_params(f, maps)
}
