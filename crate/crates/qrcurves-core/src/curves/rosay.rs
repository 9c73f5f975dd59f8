//! Rosay's non-discrete map u = (u1, u2): B^2 -> C^2 with vanishing
//! complex dilatation at the origin, and the curve F = (f1, f2, 0, ...)
//! assembled from it for a prescribed distortion bound K.
//!
//! On the annulus 2^-n <= |z| <= 2^(-n+1) one coordinate is the
//! polynomial 2^(n^2/2) z^(n-1) (z - a_n) with a_n = (3/2) 2^-n, and
//! the other blends the neighboring annuli's polynomials with radial
//! cutoffs. Which coordinate carries which role alternates with the
//! parity of n. All per-annulus computations rescale z = 2^-n w with
//! |w| in [1, 2] and pull the common factor 2^(-n^2/2) out, so ratios
//! and dilatations stay exact long after the raw values underflow
//! (which they do, honestly, from n = 47 on).

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::curves::{CurveError, CurveField, Domain};
use crate::linmap::BlockLinearMap;

/// Minimal complex arithmetic for the Wirtinger calculus here.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cpx {
    pub re: f64,
    pub im: f64,
}

impl Cpx {
    pub const ZERO: Cpx = Cpx { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Cpx { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(self) -> Self {
        Cpx { re: self.re, im: -self.im }
    }

    pub fn scale(self, s: f64) -> Self {
        Cpx { re: s * self.re, im: s * self.im }
    }

    pub fn mul(self, o: Cpx) -> Self {
        Cpx { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    pub fn add(self, o: Cpx) -> Self {
        Cpx { re: self.re + o.re, im: self.im + o.im }
    }

    pub fn sub(self, o: Cpx) -> Self {
        Cpx { re: self.re - o.re, im: self.im - o.im }
    }

    pub fn inv(self) -> Self {
        let d = self.re * self.re + self.im * self.im;
        Cpx { re: self.re / d, im: -self.im / d }
    }

    /// Integer power; negative exponents allowed for nonzero base.
    pub fn powi(self, e: i64) -> Self {
        if e < 0 {
            return self.inv().powi(-e);
        }
        let mut acc = Cpx::new(1.0, 0.0);
        let mut base = self;
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }
}

/// Shape of the radial cutoffs. The cubic smoothstep has slope at most
/// 6 * 2^n over the quarter-width transitions, exactly the bound the
/// construction asks for; the quintic variant peaks at 7.5 * 2^n and is
/// kept only for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CutoffProfile {
    #[default]
    Cubic,
    Quintic,
}

impl CutoffProfile {
    /// Monotone ramp [0,1] -> [0,1], clamped outside.
    pub fn ramp(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            CutoffProfile::Cubic => s * s * (3.0 - 2.0 * s),
            CutoffProfile::Quintic => s * s * s * (10.0 + s * (-15.0 + 6.0 * s)),
        }
    }

    pub fn ramp_deriv(self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            CutoffProfile::Cubic => 6.0 * s * (1.0 - s),
            CutoffProfile::Quintic => 30.0 * s * s * (1.0 - s) * (1.0 - s),
        }
    }
}

/// Per-annulus scaled values and Wirtinger derivatives: the common
/// factor 2^(-n^2/2) is left out of the values and the derivative
/// carries no 2^n chain factor (it is taken in the rescaled variable).
#[derive(Debug, Clone, Copy)]
pub struct ScaledDerivs {
    pub u: [Cpx; 2],
    pub dw: [Cpx; 2],
    pub dwbar: [Cpx; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RosayCurve {
    pub profile: CutoffProfile,
    /// Annuli deeper than this are refused index queries; values there
    /// are exactly 0 in double precision anyway.
    pub annulus_cap: u32,
}

impl Default for RosayCurve {
    fn default() -> Self {
        RosayCurve { profile: CutoffProfile::Cubic, annulus_cap: 500 }
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

impl RosayCurve {
    /// Index n of the annulus 2^-n <= |z| <= 2^(-n+1) containing z.
    pub fn annulus_of(&self, z: Cpx) -> Result<u32, CurveError> {
        let r = z.abs();
        if !(r > 0.0) || r > 1.0 {
            return Err(CurveError::OutsideDomain);
        }
        let n = (-r.log2()).ceil().max(1.0) as u32;
        if n > self.annulus_cap {
            return Err(CurveError::BadParameter(format!(
                "annulus index {n} exceeds the cap {}",
                self.annulus_cap
            )));
        }
        Ok(n)
    }

    /// Decreasing cutoff: 1 for |w| <= 1, 0 for |w| >= 5/4.
    fn psi(&self, rho: f64) -> (f64, f64) {
        let s = (rho - 1.0) * 4.0;
        (1.0 - self.profile.ramp(s), -4.0 * self.profile.ramp_deriv(s))
    }

    /// Increasing cutoff: 0 for |w| <= 7/4, 1 for |w| >= 2.
    fn chi(&self, rho: f64) -> (f64, f64) {
        let s = (rho - 1.75) * 4.0;
        (self.profile.ramp(s), 4.0 * self.profile.ramp_deriv(s))
    }

    /// Scaled values and derivatives on annulus n at w = 2^n z.
    pub fn scaled_at(&self, n: u32, w: Cpx) -> ScaledDerivs {
        let ni = n as i64;
        let nf = n as f64;
        // main role: p(w) = w^(n-1) (w - 3/2)
        let p = w.powi(ni - 1).mul(w.sub(Cpx::new(1.5, 0.0)));
        let dp = w.powi(ni - 2).mul(w.scale(nf).sub(Cpx::new(1.5 * (nf - 1.0), 0.0)));
        // blended role: sqrt 2 (chi q + psi r) with
        // q(w) = w^(n-2) (w - 3) from annulus n-1,
        // r(w) = w^n (w - 3/4) from annulus n+1
        let q = w.powi(ni - 2).mul(w.sub(Cpx::new(3.0, 0.0)));
        let dq = w.powi(ni - 3).mul(w.scale(nf - 1.0).sub(Cpx::new(3.0 * (nf - 2.0), 0.0)));
        let r = w.powi(ni).mul(w.sub(Cpx::new(0.75, 0.0)));
        let dr = w.powi(ni - 1).mul(w.scale(nf + 1.0).sub(Cpx::new(0.75 * nf, 0.0)));
        let rho = w.abs();
        let (psi, dpsi) = self.psi(rho);
        let (chi, dchi) = self.chi(rho);
        let blend = q.scale(chi).add(r.scale(psi)).scale(SQRT2);
        // d|w|/dw = conj(w)/(2|w|), d|w|/dwbar = w/(2|w|)
        let radial = q.scale(dchi).add(r.scale(dpsi)).scale(SQRT2);
        let dblend_w = dq.scale(chi).add(dr.scale(psi)).scale(SQRT2)
            .add(radial.mul(w.conj().scale(0.5 / rho)));
        let dblend_wbar = radial.mul(w.scale(0.5 / rho));
        if n % 2 == 0 {
            ScaledDerivs { u: [p, blend], dw: [dp, dblend_w], dwbar: [Cpx::ZERO, dblend_wbar] }
        } else {
            ScaledDerivs { u: [blend, p], dw: [dblend_w, dp], dwbar: [dblend_wbar, Cpx::ZERO] }
        }
    }

    /// u(z) as (u1, u2) in C^2; u(0) = 0.
    pub fn eval(&self, z: Cpx) -> Result<[Cpx; 2], CurveError> {
        if z.abs() == 0.0 {
            return Ok([Cpx::ZERO; 2]);
        }
        let n = self.annulus_of(z)?;
        let w = z.scale((n as f64).exp2());
        let sd = self.scaled_at(n, w);
        let sn = (-(n as f64) * (n as f64) / 2.0).exp2();
        Ok([sd.u[0].scale(sn), sd.u[1].scale(sn)])
    }

    /// Raw Wirtinger derivatives (d_z u_i, d_zbar u_i) of u at z != 0.
    pub fn wirtinger(&self, z: Cpx) -> Result<([Cpx; 2], [Cpx; 2]), CurveError> {
        let n = self.annulus_of(z)?;
        let nf = n as f64;
        let w = z.scale(nf.exp2());
        let sd = self.scaled_at(n, w);
        // d/dz = 2^n d/dw, and the value carries 2^(-n^2/2)
        let f = (nf - nf * nf / 2.0).exp2();
        Ok((
            [sd.dw[0].scale(f), sd.dw[1].scale(f)],
            [sd.dwbar[0].scale(f), sd.dwbar[1].scale(f)],
        ))
    }

    /// Scale-free dilatation ratio |d_zbar u| / |d_z u| at w on annulus
    /// n (vector norms over both coordinates).
    pub fn ratio_at(&self, n: u32, w: Cpx) -> f64 {
        let sd = self.scaled_at(n, w);
        let num = sd.dwbar[0].abs().hypot(sd.dwbar[1].abs());
        let den = sd.dw[0].abs().hypot(sd.dw[1].abs());
        if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            num / den
        }
    }

    /// Max dilatation ratio over a res x res polar grid of annulus n.
    pub fn ratio_scan(&self, n: u32, res: usize) -> f64 {
        let mut max = 0.0f64;
        for i in 0..res {
            let rho = 1.0 + (i as f64 + 0.5) / res as f64;
            for j in 0..res {
                let th = std::f64::consts::TAU * (j as f64 + 0.5) / res as f64;
                let w = Cpx::new(rho * th.cos(), rho * th.sin());
                max = max.max(self.ratio_at(n, w));
            }
        }
        max
    }

    /// The calibration constant: max of n * ratio(n) over the range.
    pub fn c_hat(&self, range: std::ops::RangeInclusive<u32>, res: usize) -> f64 {
        use rayon::prelude::*;
        range
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&n| n as f64 * self.ratio_scan(n, res))
            .reduce(|| 0.0, f64::max)
    }

    /// |u(a_n)| computed in the rescaled variable (at w = 3/2), exact
    /// regardless of how deep the annulus sits.
    pub fn zero_defect(&self, n: u32) -> f64 {
        let sd = self.scaled_at(n, Cpx::new(1.5, 0.0));
        sd.u[0].abs().hypot(sd.u[1].abs())
    }

    /// Distance from z to the nearest cutoff or annulus seam radius.
    pub fn seam_distance(&self, z: Cpx) -> f64 {
        let r = z.abs();
        if r == 0.0 {
            return 0.0;
        }
        let n = (-r.log2()).ceil().max(1.0);
        let base = (-n).exp2();
        [1.0, 1.25, 1.75, 2.0]
            .iter()
            .map(|m| (r - m * base).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Real 2x2 Jacobian block of one complex coordinate from its
/// Wirtinger pair, row-major.
fn jacobian_block(dz: Cpx, dzbar: Cpx) -> [f64; 4] {
    // f_x = dz + dzbar, f_y = i (dz - dzbar)
    [
        dz.re + dzbar.re,
        dzbar.im - dz.im,
        dz.im + dzbar.im,
        dz.re - dzbar.re,
    ]
}

/// Rosay's map u as a curve field on the unit disk (two C-blocks read
/// as R^2-blocks), with the analytic differential.
pub fn rosay_u(profile: CutoffProfile) -> CurveField {
    let c = RosayCurve { profile, ..RosayCurve::default() };
    let ce = c.clone();
    let cd = c.clone();
    let cs = c.clone();
    CurveField::new(
        "rosay_u",
        Domain::Ball { center: vec![0.0, 0.0], r: 1.0 },
        2,
        2,
        Arc::new(move |p: &[f64]| {
            let v = ce.eval(Cpx::new(p[0], p[1]))?;
            Ok(vec![v[0].re, v[0].im, v[1].re, v[1].im])
        }),
    )
    .with_diff(Arc::new(move |p: &[f64]| {
        let (dz, dzbar) = cd.wirtinger(Cpx::new(p[0], p[1]))?;
        let mut e = Vec::with_capacity(8);
        for i in 0..2 {
            e.extend_from_slice(&jacobian_block(dz[i], dzbar[i]));
        }
        Ok(BlockLinearMap::new(2, 2, e).expect("4x2 entries"))
    }))
    .with_seam(Arc::new(move |p: &[f64]| cs.seam_distance(Cpx::new(p[0], p[1]))))
    .with_param("annulus_cap", c.annulus_cap as f64)
}

/// The assembled K-quasiregular curve F = (f1, f2, 0, ..., 0): Rosay's
/// map inside the disk of radius a_(n0), an analytic polynomial tail
/// outside.
#[derive(Debug, Clone)]
pub struct RosayF {
    pub big_k: f64,
    pub k: usize,
    pub n0: u32,
    pub c_hat: f64,
    pub curve: RosayCurve,
}

/// Build F for distortion bound K > 1 with k >= 2 blocks. The cutoff
/// constant C-hat is measured on a polar grid over the calibration
/// annuli, and n0 is the smallest even index with
/// C-hat / n0 <= (K - 1)/(K + 1). Whether such an n0 exists below the
/// cap depends on K; the error reports the measured constant.
pub fn rosay_f(big_k: f64, k: usize) -> Result<RosayF, CurveError> {
    rosay_f_with(big_k, k, CutoffProfile::Cubic, 200, 10..=30, 400)
}

pub fn rosay_f_with(
    big_k: f64,
    k: usize,
    profile: CutoffProfile,
    n0_cap: u32,
    calib: std::ops::RangeInclusive<u32>,
    calib_res: usize,
) -> Result<RosayF, CurveError> {
    if !(big_k > 1.0) {
        return Err(CurveError::BadParameter(format!("K = {big_k} must exceed 1")));
    }
    if k < 2 {
        return Err(CurveError::BadParameter(format!("k = {k} must be >= 2")));
    }
    let curve = RosayCurve { profile, ..RosayCurve::default() };
    let c_hat = curve.c_hat(calib, calib_res);
    let target = (big_k - 1.0) / (big_k + 1.0);
    let mut n0 = (c_hat / target).ceil().max(2.0) as u32;
    if n0 % 2 == 1 {
        n0 += 1;
    }
    if n0 > n0_cap {
        return Err(CurveError::NoAdmissibleN0 { k: big_k, c_hat, cap: n0_cap });
    }
    Ok(RosayF { big_k, k, n0, c_hat, curve })
}

impl RosayF {
    /// Radius a_(n0) of the disk where F follows Rosay's map.
    pub fn inner_radius(&self) -> f64 {
        1.5 * (-(self.n0 as f64)).exp2()
    }

    /// (f1, f2) at z; the remaining k - 2 blocks are identically 0.
    pub fn head(&self, z: Cpx) -> Result<[Cpx; 2], CurveError> {
        if z.abs() <= self.inner_radius() {
            self.curve.eval(z)
        } else {
            Ok([self.tail(z), Cpx::ZERO])
        }
    }

    // The gluing constant that makes head and tail match exactly at
    // |z| = a_(n0) is 2^(n0^2/2), which overflows f64 for every
    // reachable n0. The curve is only meaningful up to global scale
    // (distortion, premise, and zeros are all scale-invariant), so the
    // tail is kept at unit scale; the head then underflows to 0 at the
    // gluing radius, where the unit-scale tail also rounds to 0.
    fn tail(&self, z: Cpx) -> Cpx {
        let a = Cpx::new(self.inner_radius(), 0.0);
        z.powi(self.n0 as i64 - 1).mul(z.sub(a))
    }

    fn tail_dz(&self, z: Cpx) -> Cpx {
        let n0 = self.n0 as f64;
        let a = self.inner_radius();
        z.powi(self.n0 as i64 - 2).mul(z.scale(n0).sub(Cpx::new(a * (n0 - 1.0), 0.0)))
    }

    /// Wirtinger derivatives of the two head coordinates.
    pub fn wirtinger(&self, z: Cpx) -> Result<([Cpx; 2], [Cpx; 2]), CurveError> {
        if z.abs() <= self.inner_radius() {
            self.curve.wirtinger(z)
        } else {
            Ok(([self.tail_dz(z), Cpx::ZERO], [Cpx::ZERO, Cpx::ZERO]))
        }
    }

    /// Margin of the dilatation premise at z:
    /// ((K-1)/(K+1)) |d_z F| - |d_zbar F| (nonnegative when satisfied).
    pub fn premise_margin(&self, z: Cpx) -> Result<f64, CurveError> {
        let (dz, dzbar) = self.wirtinger(z)?;
        let num = dzbar[0].abs().hypot(dzbar[1].abs());
        let den = dz[0].abs().hypot(dz[1].abs());
        Ok((self.big_k - 1.0) / (self.big_k + 1.0) * den - num)
    }

    pub fn field(&self) -> CurveField {
        let me = self.clone();
        let md = self.clone();
        let ms = self.curve.clone();
        let k = self.k;
        CurveField::new(
            "rosay_F",
            Domain::All { dim: 2 },
            2,
            k,
            Arc::new(move |p: &[f64]| {
                let h = me.head(Cpx::new(p[0], p[1]))?;
                let mut out = vec![0.0; 2 * k];
                out[0] = h[0].re;
                out[1] = h[0].im;
                out[2] = h[1].re;
                out[3] = h[1].im;
                Ok(out)
            }),
        )
        .with_diff(Arc::new(move |p: &[f64]| {
            let (dz, dzbar) = md.wirtinger(Cpx::new(p[0], p[1]))?;
            let mut e = vec![0.0; 4 * k];
            e[..4].copy_from_slice(&jacobian_block(dz[0], dzbar[0]));
            e[4..8].copy_from_slice(&jacobian_block(dz[1], dzbar[1]));
            Ok(BlockLinearMap::new(2, k, e).expect("2k x 2 entries"))
        }))
        .with_seam(Arc::new(move |p: &[f64]| ms.seam_distance(Cpx::new(p[0], p[1]))))
        .with_param("K", self.big_k)
        .with_param("n0", self.n0 as f64)
        .with_param("c_hat", self.c_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_isolated_zero_sequence() {
        let c = RosayCurve::default();
        for n in [1u32, 2, 5, 20, 100, 400] {
            assert_eq!(c.zero_defect(n), 0.0, "u(a_{n}) != 0");
        }
        assert_eq!(c.eval(Cpx::ZERO).unwrap(), [Cpx::ZERO; 2]);
    }

    #[test]
    fn annulus_gluing_continuity() {
        let c = RosayCurve::default();
        // boundary |z| = 2^(-n+1) between annuli n and n-1
        for n in [2u32, 3, 5, 9] {
            let r = ((1 - n as i64) as f64).exp2();
            for th in [0.3f64, 1.7, 4.1] {
                let dir = Cpx::new(th.cos(), th.sin());
                let inner = c.eval(dir.scale(r * (1.0 - 1e-13))).unwrap();
                let outer = c.eval(dir.scale(r * (1.0 + 1e-13))).unwrap();
                for i in 0..2 {
                    let scale = inner[i].abs().max(1e-300);
                    assert!(
                        inner[i].sub(outer[i]).abs() <= 1e-10 * scale.max(1e-12),
                        "discontinuity on annulus {n} coordinate {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn cutoff_slopes_match_stated_bound() {
        // max cubic ramp slope over the quarter-width transition is
        // exactly 6 * 2^n in the original variable
        let cubic = CutoffProfile::Cubic;
        let quintic = CutoffProfile::Quintic;
        let max_c = (0..=1000).map(|i| cubic.ramp_deriv(i as f64 / 1000.0)).fold(0.0, f64::max);
        let max_q = (0..=1000).map(|i| quintic.ramp_deriv(i as f64 / 1000.0)).fold(0.0, f64::max);
        assert!((max_c * 4.0 - 6.0).abs() < 1e-9);
        assert!(max_q * 4.0 > 6.0 + 1e-9); // quintic exceeds the bound
    }

    #[test]
    fn ratio_decays_like_one_over_n() {
        let c = RosayCurve::default();
        let vals: Vec<f64> =
            (10..=30).step_by(5).map(|n| n as f64 * c.ratio_scan(n, 120)).collect();
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 4.0, "n*ratio spread {min}..{max}");
    }

    #[test]
    fn analytic_tail_has_zero_dzbar() {
        let f = rosay_f_with(3.0, 4, CutoffProfile::Cubic, 200, 10..=14, 60).unwrap();
        let z = Cpx::new(0.4, -0.3);
        assert!(z.abs() > f.inner_radius());
        let (_, dzbar) = f.wirtinger(z).unwrap();
        assert_eq!(dzbar[0], Cpx::ZERO);
        assert_eq!(dzbar[1], Cpx::ZERO);
    }

    #[test]
    fn premise_holds_inside_and_outside() {
        let f = rosay_f_with(3.0, 4, CutoffProfile::Cubic, 200, 10..=14, 120).unwrap();
        assert!(f.n0 % 2 == 0 && f.n0 >= 2);
        // outside: analytic, margin is (K-1)/(K+1)|dz| >= 0
        assert!(f.premise_margin(Cpx::new(0.5, 0.1)).unwrap() >= 0.0);
        // inside, on deep annuli where n >= n0 the measured ratio bound
        // applies
        let base = f.inner_radius() * 0.9;
        for m in 0..24 {
            let th = 0.26 * m as f64;
            let z = Cpx::new(th.cos(), th.sin()).scale(base * (0.55f64).powi(m % 5));
            let margin = f.premise_margin(z).unwrap();
            assert!(margin >= -1e-12, "premise fails at |z| = {}: {margin}", z.abs());
        }
    }

    #[test]
    fn wirtinger_matches_value_scaling() {
        // raw values agree with scaled ones for shallow annuli
        let c = RosayCurve::default();
        let z = Cpx::new(0.11, 0.07); // |z| ~ 0.13, annulus 3
        let n = c.annulus_of(z).unwrap();
        assert_eq!(n, 3);
        let v = c.eval(z).unwrap();
        let sd = c.scaled_at(n, z.scale(8.0));
        let sn = (-(n as f64) * (n as f64) / 2.0).exp2();
        for i in 0..2 {
            assert!(v[i].sub(sd.u[i].scale(sn)).abs() < 1e-15);
        }
    }

    #[test]
    fn deep_values_underflow_to_zero() {
        let c = RosayCurve::default();
        let z = Cpx::new((-60.5f64).exp2(), 0.0);
        let v = c.eval(z).unwrap();
        assert_eq!(v[0], Cpx::ZERO);
        // but the scale-free ratio there is still meaningful
        let n = c.annulus_of(z).unwrap();
        assert!(c.ratio_at(n, Cpx::new(1.3, 0.4)).is_finite());
    }
}
