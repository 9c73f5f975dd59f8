//! Explicit evaluable curve constructions: the branched cover and
//! Zorich map, the infinite-distortion gluing construction, the Rosay
//! curve with smooth cutoffs, and Moebius transformations with analytic
//! derivatives.

pub mod branched;
pub mod ivv;
pub mod mobius;
pub mod rosay;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linmap::BlockLinearMap;

pub use branched::{branched_cover_a, zorich, CoverStats};
pub use ivv::{ivv_choose_k, ivv_f, ivv_g, ivv_h, ivv_h_map, ivv_s, IvvMaps};
pub use mobius::{mobius_component_curve, MobiusMap};
pub use rosay::{rosay_f, rosay_u, CutoffProfile, RosayCurve, RosayF};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Domain {
    /// Axis-aligned box [lo_i, hi_i].
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, r: f64 },
    /// Points (x, t) with x free and t in [t_min, t_max].
    Strip { x_dim: usize, t_min: f64, t_max: f64 },
    /// Planar annulus r_min <= |z| <= r_max.
    Annulus { r_min: f64, r_max: f64 },
    All { dim: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::Strip { x_dim, .. } => x_dim + 1,
            Domain::Annulus { .. } => 2,
            Domain::All { dim } => *dim,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Box { lo, hi } => {
                p.iter().zip(lo).all(|(x, l)| x >= l) && p.iter().zip(hi).all(|(x, h)| x <= h)
            }
            Domain::Ball { center, r } => {
                let d2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                d2 <= r * r * (1.0 + 1e-12)
            }
            Domain::Strip { x_dim, t_min, t_max } => {
                let t = p[*x_dim];
                t >= *t_min && t <= *t_max
            }
            Domain::Annulus { r_min, r_max } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                r >= *r_min && r <= *r_max
            }
            Domain::All { .. } => true,
        }
    }

    /// Distance from p to the complement (how deep inside the domain).
    pub fn interior_margin(&self, p: &[f64]) -> f64 {
        match self {
            Domain::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| (x - l).min(h - x))
                .fold(f64::INFINITY, f64::min),
            Domain::Ball { center, r } => {
                let d: f64 =
                    p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>().sqrt();
                r - d
            }
            Domain::Strip { x_dim, t_min, t_max } => {
                let t = p[*x_dim];
                (t - t_min).min(t_max - t)
            }
            Domain::Annulus { r_min, r_max } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                (r - r_min).min(r_max - r)
            }
            Domain::All { .. } => f64::INFINITY,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("point outside the curve domain")]
    OutsideDomain,
    #[error("dimension n = {n} not supported ({reason})")]
    UnsupportedN { n: usize, reason: &'static str },
    #[error("evaluation at the pole of a Moebius map")]
    AtPole,
    #[error("k = {k} blocks is too large to materialize value vectors; use the structured accessors")]
    TooManyBlocks { k: u64 },
    #[error("t = {t} outside the strip window [2^-{ell_max}, 1]")]
    OutOfWindow { t: f64, ell_max: u32 },
    #[error("no admissible even n0 <= {cap} for K = {k}: measured C-hat = {c_hat:.6}")]
    NoAdmissibleN0 { k: f64, c_hat: f64, cap: u32 },
    #[error("matrix is not orthogonal: max deviation {defect:.3e}")]
    NotOrthogonal { defect: f64 },
    #[error("pole must lie outside the closed unit ball for zeta = 2 (|p| = {norm})")]
    PoleInsideBall { norm: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

type EvalFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, CurveError> + Send + Sync>;
type DiffFn = Arc<dyn Fn(&[f64]) -> Result<BlockLinearMap, CurveError> + Send + Sync>;
type SeamFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An evaluable map from a domain in R^d into (R^n)^k with optional
/// analytic differential and a distance-to-seam hint used by finite
/// differencing to switch to one-sided stencils.
#[derive(Clone)]
pub struct CurveField {
    pub name: String,
    pub domain: Domain,
    pub n: usize,
    pub k: usize,
    /// Measured construction constants (Lipschitz estimates, cutoff
    /// calibration, block counts) keyed by name.
    pub params: BTreeMap<String, f64>,
    eval: EvalFn,
    diff: Option<DiffFn>,
    seam: Option<SeamFn>,
}

impl std::fmt::Debug for CurveField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurveField")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("params", &self.params)
            .field("has_diff", &self.diff.is_some())
            .finish()
    }
}

impl CurveField {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        n: usize,
        k: usize,
        eval: EvalFn,
    ) -> Self {
        CurveField {
            name: name.into(),
            domain,
            n,
            k,
            params: BTreeMap::new(),
            eval,
            diff: None,
            seam: None,
        }
    }

    pub fn with_diff(mut self, diff: DiffFn) -> Self {
        self.diff = Some(diff);
        self
    }

    pub fn with_seam(mut self, seam: SeamFn) -> Self {
        self.seam = Some(seam);
        self
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, CurveError> {
        (self.eval)(p)
    }

    pub fn has_analytic_diff(&self) -> bool {
        self.diff.is_some()
    }

    /// Analytic differential when the construction provides one.
    pub fn analytic_diff(&self, p: &[f64]) -> Option<Result<BlockLinearMap, CurveError>> {
        self.diff.as_ref().map(|d| d(p))
    }

    /// Distance from p to the nearest declared non-smooth seam
    /// (infinite for globally smooth constructions).
    pub fn seam_distance(&self, p: &[f64]) -> f64 {
        self.seam.as_ref().map(|s| s(p)).unwrap_or(f64::INFINITY)
    }

    /// |F(p)| (Euclidean norm of the value vector).
    pub fn value_norm(&self, p: &[f64]) -> Result<f64, CurveError> {
        Ok(self.eval(p)?.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_membership() {
        let b = Domain::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 2.0] };
        assert!(b.contains(&[0.5, 1.5]));
        assert!(!b.contains(&[1.5, 0.5]));
        let s = Domain::Strip { x_dim: 2, t_min: 0.5, t_max: 1.0 };
        assert!(s.contains(&[9.0, -3.0, 0.75]));
        assert!(!s.contains(&[0.0, 0.0, 0.25]));
        let a = Domain::Annulus { r_min: 0.5, r_max: 1.0 };
        assert!(a.contains(&[0.6, 0.0]));
        assert!(!a.contains(&[0.1, 0.1]));
    }

    #[test]
    fn interior_margin_box() {
        let b = Domain::Box { lo: vec![0.0], hi: vec![1.0] };
        assert!((b.interior_margin(&[0.25]) - 0.25).abs() < 1e-15);
    }
}
