//! Moebius transformations with closed-form derivatives, and the
//! exactly calibrated component curve that embeds one into a block of
//! a product-target map.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curves::{CurveError, CurveField, Domain};
use crate::linmap::BlockLinearMap;
use crate::mat;

/// y -> b + c A (y - p) / |y - p|^zeta with A orthogonal and
/// zeta in {0, 2} (affine or sphere-inverting).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub p: Vec<f64>,
    pub c: f64,
    pub zeta: u32,
    pub n: usize,
}

impl MobiusMap {
    pub fn new(
        n: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        p: Vec<f64>,
        c: f64,
        zeta: u32,
    ) -> Result<Self, CurveError> {
        if a.len() != n * n || b.len() != n || p.len() != n {
            return Err(CurveError::BadParameter("dimension mismatch".into()));
        }
        if !(c > 0.0) {
            return Err(CurveError::BadParameter(format!("scale c = {c} must be positive")));
        }
        if zeta != 0 && zeta != 2 {
            return Err(CurveError::BadParameter(format!("zeta = {zeta} must be 0 or 2")));
        }
        let defect = orthogonality_defect(&a, n);
        if defect > 1e-12 {
            return Err(CurveError::NotOrthogonal { defect });
        }
        Ok(MobiusMap { a, b, p, c, zeta, n })
    }

    pub fn identity(n: usize) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        MobiusMap { a, b: vec![0.0; n], p: vec![0.0; n], c: 1.0, zeta: 0, n }
    }

    pub fn det_a(&self) -> f64 {
        mat::det(&self.a, self.n)
    }

    /// Flip the sign of the first row of A; used to fix orientation.
    pub fn flipped(&self) -> Self {
        let mut m = self.clone();
        for j in 0..self.n {
            m.a[j] = -m.a[j];
        }
        m
    }

    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>, CurveError> {
        let n = self.n;
        let d: Vec<f64> = (0..n).map(|i| y[i] - self.p[i]).collect();
        let scale = match self.zeta {
            0 => self.c,
            _ => {
                let r2: f64 = d.iter().map(|x| x * x).sum();
                if r2 == 0.0 {
                    return Err(CurveError::AtPole);
                }
                self.c / r2
            }
        };
        let mut out = self.b.clone();
        for i in 0..n {
            for j in 0..n {
                out[i] += scale * self.a[i * n + j] * d[j];
            }
        }
        Ok(out)
    }

    /// D phi(y): c A for zeta = 0, and
    /// c A (Id - 2 u u^T) / |y-p|^2 for zeta = 2.
    pub fn derivative(&self, y: &[f64]) -> Result<Vec<f64>, CurveError> {
        let n = self.n;
        if self.zeta == 0 {
            return Ok(self.a.iter().map(|v| self.c * v).collect());
        }
        let d: Vec<f64> = (0..n).map(|i| y[i] - self.p[i]).collect();
        let r2: f64 = d.iter().map(|x| x * x).sum();
        if r2 == 0.0 {
            return Err(CurveError::AtPole);
        }
        let mut refl = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                refl[i * n + j] = (if i == j { 1.0 } else { 0.0 }) - 2.0 * d[i] * d[j] / r2;
            }
        }
        let prod = mat::matmul(&self.a, &refl, n, n, n);
        Ok(prod.iter().map(|v| self.c * v / r2).collect())
    }

    /// Operator norm of the derivative; every Moebius derivative is a
    /// positive multiple of an orthogonal matrix, so this is just the
    /// conformal factor.
    pub fn derivative_norm(&self, y: &[f64]) -> Result<f64, CurveError> {
        match self.zeta {
            0 => Ok(self.c),
            _ => {
                let r2: f64 = (0..self.n).map(|i| (y[i] - self.p[i]).powi(2)).sum();
                if r2 == 0.0 {
                    return Err(CurveError::AtPole);
                }
                Ok(self.c / r2)
            }
        }
    }
}

fn orthogonality_defect(a: &[f64], n: usize) -> f64 {
    let at = mat::transpose(a, n, n);
    let g = mat::matmul(&at, a, n, n, n);
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((g[i * n + j] - expect).abs());
        }
    }
    defect
}

/// Embed phi into block i0 (0-based) of a map into (R^n)^k, constant
/// zero elsewhere. The result is exactly calibrated: its differential
/// has distortion 1 wherever phi is defined.
///
/// Calibration needs det D phi > 0, which pins the sign of det A
/// (+1 for zeta = 0, -1 for zeta = 2 because the reflection part
/// contributes a -1). A map handed in with the wrong orientation is
/// silently corrected by flipping one row of A; the flip is recorded
/// in the field parameters.
pub fn mobius_component_curve(
    n: usize,
    k: usize,
    i0: usize,
    m: &MobiusMap,
) -> Result<CurveField, CurveError> {
    if m.n != n {
        return Err(CurveError::BadParameter("Moebius dimension differs from n".into()));
    }
    if i0 >= k {
        return Err(CurveError::BadParameter(format!("block index {i0} out of 0..{k}")));
    }
    let want = if m.zeta == 2 { -1.0 } else { 1.0 };
    let (m, flipped) = if m.det_a() * want < 0.0 { (m.flipped(), true) } else { (m.clone(), false) };
    if m.zeta == 2 {
        let pnorm = m.p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if pnorm <= 1.0 {
            return Err(CurveError::PoleInsideBall { norm: pnorm });
        }
    }
    let me = m.clone();
    let md = m.clone();
    let domain = if m.zeta == 2 {
        Domain::Ball { center: vec![0.0; n], r: 1.0 }
    } else {
        Domain::All { dim: n }
    };
    Ok(CurveField::new(
        "mobius_component",
        domain,
        n,
        k,
        Arc::new(move |p: &[f64]| {
            let v = me.eval(p)?;
            let mut out = vec![0.0; n * k];
            out[n * i0..n * (i0 + 1)].copy_from_slice(&v);
            Ok(out)
        }),
    )
    .with_diff(Arc::new(move |p: &[f64]| {
        let d = md.derivative(p)?;
        let mut e = vec![0.0; n * n * k];
        e[n * n * i0..n * n * (i0 + 1)].copy_from_slice(&d);
        Ok(BlockLinearMap::new(n, k, e).expect("nk x n entries"))
    }))
    .with_param("zeta", m.zeta as f64)
    .with_param("scale", m.c)
    .with_param("block", i0 as f64)
    .with_param("orientation_flipped", if flipped { 1.0 } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmap::distortion_volx;

    fn rot3() -> Vec<f64> {
        // product of plane rotations, det +1
        let (c1, s1) = (0.6f64, 0.8f64);
        let (c2, s2) = ((0.5f64).cos(), (0.5f64).sin());
        let r1 = vec![c1, -s1, 0.0, s1, c1, 0.0, 0.0, 0.0, 1.0];
        let r2 = vec![1.0, 0.0, 0.0, 0.0, c2, -s2, 0.0, s2, c2];
        mat::matmul(&r1, &r2, 3, 3, 3)
    }

    #[test]
    fn identity_derivative() {
        let m = MobiusMap::identity(3);
        let d = m.derivative(&[0.2, -0.1, 0.4]).unwrap();
        assert_eq!(d, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_non_orthogonal() {
        let mut a = rot3();
        a[0] += 1e-6;
        match MobiusMap::new(3, a, vec![0.0; 3], vec![0.0; 3], 1.0, 0) {
            Err(CurveError::NotOrthogonal { defect }) => assert!(defect > 1e-7),
            other => panic!("expected orthogonality error, got {other:?}"),
        }
    }

    #[test]
    fn derivative_norm_at_origin() {
        let p = vec![2.0, -1.0, 0.5];
        let c = 3.7;
        let m = MobiusMap::new(3, rot3(), vec![1.0, 0.0, 0.0], p.clone(), c, 2).unwrap();
        let pn2: f64 = p.iter().map(|v| v * v).sum();
        assert!((m.derivative_norm(&[0.0; 3]).unwrap() - c / pn2).abs() < 1e-15);
        // matches the operator norm of the explicit derivative matrix
        let d = m.derivative(&[0.0; 3]).unwrap();
        assert!((mat::op_norm(&d, 3, 3) - c / pn2).abs() < 1e-12);
    }

    #[test]
    fn component_curve_is_calibrated() {
        let m = MobiusMap::new(3, rot3(), vec![0.3, 0.0, -0.2], vec![1.4, 1.1, -0.9], 2.0, 2)
            .unwrap();
        let f = mobius_component_curve(3, 4, 1, &m).unwrap();
        assert_eq!(f.params["orientation_flipped"], 1.0); // rot3 has det +1
        for q in [[0.1, 0.2, -0.3], [0.0, 0.0, 0.0], [-0.5, 0.4, 0.1]] {
            let l = f.analytic_diff(&q).unwrap().unwrap();
            let rep = distortion_volx(&l);
            assert!((rep.distortion.unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pole_inside_ball_rejected() {
        let m = MobiusMap::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2], vec![0.5, 0.0], 1.0, 2)
            .unwrap();
        match mobius_component_curve(2, 3, 0, &m) {
            Err(CurveError::PoleInsideBall { norm }) => assert!((norm - 0.5).abs() < 1e-15),
            other => panic!("expected pole error, got {other:?}"),
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let m = MobiusMap::new(3, rot3(), vec![0.1, 0.2, 0.3], vec![1.5, -1.2, 0.8], 1.3, 2)
            .unwrap();
        let y = [0.25, -0.15, 0.35];
        let d = m.derivative(&y).unwrap();
        let h = 1e-5;
        for j in 0..3 {
            let mut yp = y;
            let mut ym = y;
            yp[j] += h;
            ym[j] -= h;
            let fp = m.eval(&yp).unwrap();
            let fm = m.eval(&ym).unwrap();
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - d[i * 3 + j]).abs() < 1e-8);
            }
        }
    }
}
