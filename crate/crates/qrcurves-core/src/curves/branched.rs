//! Concrete branched cover A: R^2 -> S^2 and the Zorich-type map
//! (x, t) -> e^t A(x).
//!
//! The fundamental square [0,1]^2 is mapped onto the upper hemisphere
//! by a radial-angular blend: the sup-norm radius from the square
//! center becomes the polar angle, the direction becomes the azimuth.
//! The map extends to the plane by reflections across square edges,
//! mirrored on the sphere by reflection across the equatorial plane;
//! the square boundary lands on the equator, so the extension is
//! continuous and periodic with period 2 in each variable. The
//! Lipschitz constant and the lower Jacobian bound are measured, not
//! assumed; all downstream constants use the measured values.

use std::sync::Arc;

use crate::curves::{CurveError, CurveField, Domain};
use crate::linmap::BlockLinearMap;
use crate::mat;

/// Fold a coordinate into [0,1] with reflection parity.
fn fold_axis(x: f64) -> (f64, bool) {
    let mut u = x.rem_euclid(2.0);
    if u > 1.0 {
        u = 2.0 - u;
        (u, true)
    } else {
        (u, false)
    }
}

/// Square-to-hemisphere blend on [0,1]^2: sup-norm radius -> polar
/// angle, direction -> azimuth.
fn hemi(u: [f64; 2]) -> [f64; 3] {
    let d = [u[0] - 0.5, u[1] - 0.5];
    let rho = 2.0 * d[0].abs().max(d[1].abs());
    if rho < 1e-300 {
        return [0.0, 0.0, 1.0];
    }
    let phi = rho * std::f64::consts::FRAC_PI_2;
    let theta = d[1].atan2(d[0]);
    [phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()]
}

/// The branched cover A at a point of R^2.
pub fn a_point(x: &[f64]) -> [f64; 3] {
    let (u0, p0) = fold_axis(x[0]);
    let (u1, p1) = fold_axis(x[1]);
    let mut y = hemi([u0, u1]);
    if p0 ^ p1 {
        y[2] = -y[2];
    }
    y
}

/// Distance to the nearest non-smooth seam of A: the reflection
/// lattice x_i in Z, the sup-norm diagonals of the folded square, and
/// the square center (branch point).
pub fn a_seam_distance(x: &[f64]) -> f64 {
    let mut dist = f64::INFINITY;
    let mut u = [0.0; 2];
    for i in 0..2 {
        let (ui, _) = fold_axis(x[i]);
        u[i] = ui;
        let frac = x[i] - x[i].floor();
        dist = dist.min(frac.min(1.0 - frac));
    }
    let d = [u[0] - 0.5, u[1] - 0.5];
    let diag = (d[0].abs() - d[1].abs()).abs() / std::f64::consts::SQRT_2;
    let center = (d[0] * d[0] + d[1] * d[1]).sqrt();
    dist.min(diag).min(center)
}

/// Finite-difference 3x2 differential of A (row-major, rows = output
/// coordinates). The step shrinks near seams so the stencil never
/// crosses one.
pub fn a_differential(x: &[f64], h: f64) -> [f64; 6] {
    let seam = a_seam_distance(x);
    let step = if seam > 2.0 * h { h } else { (seam / 2.0).max(1e-9).min(h) };
    let mut out = [0.0; 6];
    for j in 0..2 {
        let mut xp = [x[0], x[1]];
        let mut xm = [x[0], x[1]];
        xp[j] += step;
        xm[j] -= step;
        let fp = a_point(&xp);
        let fm = a_point(&xm);
        for r in 0..3 {
            out[r * 2 + j] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    out
}

/// Spherical Jacobian of A at x: det [A_x1, A_x2, A], the density of
/// the pullback of the sphere volume form.
pub fn a_spherical_jacobian(x: &[f64], h: f64) -> f64 {
    let da = a_differential(x, h);
    let a = a_point(x);
    let m = [da[0], da[1], a[0], da[2], da[3], a[1], da[4], da[5], a[2]];
    mat::det(&m, 3)
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CoverStats {
    /// Empirical Lipschitz constant: max operator norm of DA.
    pub lipschitz: f64,
    /// Empirical lower bound on the spherical Jacobian.
    pub jacobian_min: f64,
    pub grid: usize,
}

/// Measure the Lipschitz constant and the Jacobian lower bound over a
/// grid on the fundamental domain [0,2]^2. Sample points carry
/// irrational-ish offsets so they miss the seam lines, where the
/// one-sided derivatives are attained anyway by piecewise smoothness.
pub fn measure_cover(grid: usize) -> CoverStats {
    use rayon::prelude::*;
    let h = 1e-6;
    let (lip, jmin) = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut lip = 0.0f64;
            let mut jmin = f64::INFINITY;
            let xi = 2.0 * (i as f64 + 0.381966) / grid as f64;
            for j in 0..grid {
                let xj = 2.0 * (j as f64 + 0.618034) / grid as f64;
                let p = [xi, xj];
                let da = a_differential(&p, h);
                lip = lip.max(mat::op_norm(&da, 3, 2));
                jmin = jmin.min(a_spherical_jacobian(&p, h));
            }
            (lip, jmin)
        })
        .reduce(|| (0.0, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)));
    CoverStats { lipschitz: lip, jacobian_min: jmin, grid }
}

/// The branched cover as a curve field (domain R^2, values on S^2).
/// Only n = 3 has a concrete construction.
pub fn branched_cover_a(n: usize) -> Result<CurveField, CurveError> {
    if n != 3 {
        return Err(CurveError::UnsupportedN {
            n,
            reason: "only the square-to-hemisphere construction (n = 3) is implemented",
        });
    }
    let stats = measure_cover(256);
    let field = CurveField::new(
        "branched_cover_a",
        Domain::All { dim: 2 },
        3,
        1,
        Arc::new(|p: &[f64]| Ok(a_point(p).to_vec())),
    )
    .with_seam(Arc::new(|p: &[f64]| a_seam_distance(p)))
    .with_param("lipschitz", stats.lipschitz)
    .with_param("jacobian_min", stats.jacobian_min)
    .with_param("measure_grid", stats.grid as f64);
    Ok(field)
}

/// Zorich-type map (x, t) -> e^t A(x) on R^3, with the differential
/// e^t [DA(x) | A(x)] assembled from the grid-differentiated A.
pub fn zorich(n: usize) -> Result<CurveField, CurveError> {
    if n != 3 {
        return Err(CurveError::UnsupportedN { n, reason: "requires branched_cover_a(3)" });
    }
    let stats = measure_cover(256);
    let field = CurveField::new(
        "zorich",
        Domain::All { dim: 3 },
        3,
        1,
        Arc::new(|p: &[f64]| {
            let a = a_point(&p[..2]);
            let e = p[2].exp();
            Ok(vec![e * a[0], e * a[1], e * a[2]])
        }),
    )
    .with_diff(Arc::new(|p: &[f64]| {
        let a = a_point(&p[..2]);
        let da = a_differential(&p[..2], 1e-6);
        let e = p[2].exp();
        let mut entries = vec![0.0; 9];
        for r in 0..3 {
            entries[r * 3] = e * da[r * 2];
            entries[r * 3 + 1] = e * da[r * 2 + 1];
            entries[r * 3 + 2] = e * a[r];
        }
        Ok(BlockLinearMap::new(3, 1, entries).expect("3x3"))
    }))
    .with_seam(Arc::new(|p: &[f64]| a_seam_distance(&p[..2])))
    .with_param("lipschitz", stats.lipschitz)
    .with_param("jacobian_min", stats.jacobian_min);
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_on_the_sphere() {
        for i in 0..100 {
            let x = [0.002 + 1.996 * (i as f64) / 100.0, 0.37 + (i as f64) * 0.013];
            let a = a_point(&x);
            let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodicity_and_reflection_symmetry() {
        let pts = [[0.3, 0.7], [1.4, 0.2], [-0.6, 3.3], [0.81, -1.17]];
        for p in pts {
            let base = a_point(&p);
            let shifted = a_point(&[p[0] + 2.0, p[1]]);
            let shifted2 = a_point(&[p[0], p[1] - 2.0]);
            for r in 0..3 {
                assert!((base[r] - shifted[r]).abs() < 1e-12);
                assert!((base[r] - shifted2[r]).abs() < 1e-12);
            }
            // reflection across x1 = 1 flips the hemisphere
            let refl = a_point(&[2.0 - p[0], p[1]]);
            assert!((base[0] - refl[0]).abs() < 1e-12);
            assert!((base[1] - refl[1]).abs() < 1e-12);
            assert!((base[2] + refl[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_lands_on_equator() {
        for i in 0..50 {
            let t = i as f64 / 50.0;
            let a = a_point(&[1.0, t]);
            assert!(a[2].abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_positive_and_lipschitz_finite() {
        let stats = measure_cover(64);
        assert!(stats.lipschitz > 1.0 && stats.lipschitz < 10.0, "L = {}", stats.lipschitz);
        assert!(stats.jacobian_min > 0.0, "Jmin = {}", stats.jacobian_min);
        // the paper's standing assumption J_A >= (1/L)^(n-1)
        let bound = (1.0 / stats.lipschitz).powi(2);
        assert!(
            stats.jacobian_min >= bound - 1e-6,
            "Jmin = {} < {}",
            stats.jacobian_min,
            bound
        );
    }

    #[test]
    fn zorich_radial_norm() {
        let z = zorich(3).unwrap();
        for p in [[0.3, 0.4, 0.0], [0.9, 1.3, -0.7], [0.1, 0.2, 1.1]] {
            let v = z.eval(&p).unwrap();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - p[2].exp()).abs() < 1e-12);
        }
        // Z(x, 0) = A(x)
        let v = z.eval(&[0.27, 0.64, 0.0]).unwrap();
        let a = a_point(&[0.27, 0.64]);
        for r in 0..3 {
            assert!((v[r] - a[r]).abs() < 1e-15);
        }
    }
}
