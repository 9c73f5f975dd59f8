//! Deterministic sampling utilities: counter-based seed derivation,
//! seeded quasi-uniform point streams on balls and spheres, and
//! running-extremum estimators whose value is monotone in the sample
//! count (every new sample can only improve the running max/min).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 seed mixing: derive a stream seed from a master seed and a
/// counter so independent trials get decorrelated, reproducible streams.
pub fn mix_seed(master: u64, counter: u64) -> u64 {
    let mut z = master
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(counter.wrapping_mul(0xBF58476D1CE4E5B9))
        .wrapping_add(0x94D049BB133111EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(master, trial))
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-9 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Uniform point in the ball B(center, r).
pub fn ball_point(rng: &mut ChaCha8Rng, center: &[f64], r: f64) -> Vec<f64> {
    let n = center.len();
    let dir = unit_vector(rng, n);
    let u: f64 = rng.random();
    let rho = r * u.powf(1.0 / n as f64);
    center.iter().zip(dir).map(|(c, d)| c + rho * d).collect()
}

pub fn sphere_point(rng: &mut ChaCha8Rng, center: &[f64], r: f64) -> Vec<f64> {
    let dir = unit_vector(rng, center.len());
    center.iter().zip(dir).map(|(c, d)| c + r * d).collect()
}

/// Random rotation (orthogonal, det +1) as an n x n row-major matrix,
/// built by Gram-Schmidt on a Gaussian matrix.
pub fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        if let Some(q) = try_orthogonalize(rng, n) {
            return q;
        }
    }
}

fn try_orthogonalize(rng: &mut ChaCha8Rng, n: usize) -> Option<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        for prev in &rows {
            let d: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= d * p;
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len < 1e-9 {
            return None;
        }
        rows.push(v.into_iter().map(|x| x / len).collect());
    }
    let mut q: Vec<f64> = rows.into_iter().flatten().collect();
    if crate::mat::det(&q, n) < 0.0 {
        for x in q[(n - 1) * n..].iter_mut() {
            *x = -*x;
        }
    }
    Some(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

/// Region over which `scan_extremum` draws its base stream.
pub enum Region<'a> {
    Ball { center: &'a [f64], r: f64 },
    Sphere { center: &'a [f64], r: f64 },
}

/// Deterministic adaptive scan for the extremum of `f` over a region.
///
/// The sequence interleaves a fixed quasi-uniform base stream with local
/// refinement bursts around the running argmax/argmin (scale shrinking
/// with progress). The result is the running extremum over the evaluated
/// prefix, so it is monotone in `samples`. `anchors` are always evaluated
/// first (useful for known witness points).
pub fn scan_extremum(
    region: &Region,
    which: Extremum,
    samples: usize,
    seed: u64,
    anchors: &[Vec<f64>],
    mut f: impl FnMut(&[f64]) -> f64,
) -> (f64, Vec<f64>) {
    let (center, r, on_sphere) = match region {
        Region::Ball { center, r } => (*center, *r, false),
        Region::Sphere { center, r } => (*center, *r, true),
    };
    let _n = center.len();
    let mut base = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5ca1e));
    let mut refine = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x0ef1));
    let sign = match which {
        Extremum::Max => 1.0,
        Extremum::Min => -1.0,
    };
    let mut best = f64::NEG_INFINITY;
    let mut arg = center.to_vec();
    let consider = |p: Vec<f64>, best: &mut f64, arg: &mut Vec<f64>, f: &mut dyn FnMut(&[f64]) -> f64| {
        let v = sign * f(&p);
        if v > *best {
            *best = v;
            *arg = p;
        }
    };
    for a in anchors {
        consider(a.clone(), &mut best, &mut arg, &mut f);
    }
    for i in 0..samples {
        let p = if i % 4 == 3 && best > f64::NEG_INFINITY {
            // refinement burst: perturb the running argbest, project back
            let scale = r / (2.0 + (i as f64).sqrt());
            let mut p: Vec<f64> =
                arg.iter().map(|x| x + scale * normal(&mut refine)).collect();
            if on_sphere {
                project_sphere(&mut p, center, r);
            } else {
                clamp_ball(&mut p, center, r);
            }
            p
        } else if on_sphere {
            sphere_point(&mut base, center, r)
        } else {
            ball_point(&mut base, center, r)
        };
        consider(p, &mut best, &mut arg, &mut f);
    }
    (sign * best, arg)
}

fn project_sphere(p: &mut [f64], center: &[f64], r: f64) {
    let mut len = 0.0;
    for (x, c) in p.iter().zip(center) {
        len += (x - c) * (x - c);
    }
    let len = len.sqrt();
    if len < 1e-12 {
        p[0] = center[0] + r;
        for (i, x) in p.iter_mut().enumerate().skip(1) {
            *x = center[i];
        }
        return;
    }
    for (x, c) in p.iter_mut().zip(center) {
        *x = c + (*x - c) * r / len;
    }
}

fn clamp_ball(p: &mut [f64], center: &[f64], r: f64) {
    let mut len = 0.0;
    for (x, c) in p.iter().zip(center) {
        len += (x - c) * (x - c);
    }
    let len = len.sqrt();
    if len > r {
        for (x, c) in p.iter_mut().zip(center) {
            *x = c + (*x - c) * r / len;
        }
    }
}

/// Convenience wrappers.
pub fn sup_on_ball(
    center: &[f64],
    r: f64,
    samples: usize,
    seed: u64,
    f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    scan_extremum(&Region::Ball { center, r }, Extremum::Max, samples, seed, &[], f).0
}

pub fn sup_on_sphere(
    center: &[f64],
    r: f64,
    samples: usize,
    seed: u64,
    f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    scan_extremum(&Region::Sphere { center, r }, Extremum::Max, samples, seed, &[], f).0
}

pub fn inf_on_sphere(
    center: &[f64],
    r: f64,
    samples: usize,
    seed: u64,
    f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    scan_extremum(&Region::Sphere { center, r }, Extremum::Min, samples, seed, &[], f).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_mixing_decorrelates_counters() {
        assert_ne!(mix_seed(1, 0), mix_seed(1, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(2, 0));
        assert_eq!(mix_seed(42, 7), mix_seed(42, 7));
    }

    #[test]
    fn sup_estimate_monotone_in_samples() {
        let c = [0.3, -0.1];
        let f = |p: &[f64]| p[0] * p[0] - p[1];
        let mut prev = f64::NEG_INFINITY;
        for n in [8, 32, 128, 512] {
            let v = sup_on_ball(&c, 1.0, n, 9, f);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn sphere_scan_finds_linear_max() {
        // sup of x . e over the unit sphere is 1
        let c = [0.0, 0.0, 0.0];
        let v = sup_on_sphere(&c, 1.0, 4000, 3, |p| p[2]);
        assert!((v - 1.0).abs() < 1e-3, "got {v}");
        let lo = inf_on_sphere(&c, 1.0, 4000, 3, |p| p[2]);
        assert!((lo + 1.0).abs() < 1e-3, "got {lo}");
    }

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = trial_rng(5, 0);
        for n in 2..=4 {
            let q = random_rotation(&mut rng, n);
            let g = crate::mat::gram(&q, n, n);
            for r in 0..n {
                for c in 0..n {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!((g[r * n + c] - want).abs() < 1e-10);
                }
            }
            assert!((crate::mat::det(&q, n) - 1.0).abs() < 1e-10);
        }
    }
}
