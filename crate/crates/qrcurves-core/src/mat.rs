//! Small dense matrix helpers.
//!
//! Everything in this crate works with matrices no larger than nk x n for
//! n <= 4 and small k, stored row-major in a flat slice. Determinants use
//! LU with partial pivoting; symmetric eigenvalues use closed forms for
//! n <= 3 and cyclic Jacobi above that.

/// Row-major dense matrix view helpers. `a` has `rows * cols` entries.
pub fn at(a: &[f64], cols: usize, r: usize, c: usize) -> f64 {
    a[r * cols + c]
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}

pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += ail * b[l * n + j];
            }
        }
    }
    out
}

/// Gram matrix A^T A of an m x n matrix: n x n, symmetric PSD.
pub fn gram(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut g = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in i..cols {
            let mut s = 0.0;
            for r in 0..rows {
                s += a[r * cols + i] * a[r * cols + j];
            }
            g[i * cols + j] = s;
            g[j * cols + i] = s;
        }
    }
    g
}

/// Determinant of an n x n matrix by LU with partial pivoting.
pub fn det(a: &[f64], n: usize) -> f64 {
    match n {
        0 => return 1.0,
        1 => return a[0],
        2 => return a[0] * a[3] - a[1] * a[2],
        3 => {
            return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6]);
        }
        _ => {}
    }
    let mut m = a.to_vec();
    let mut sign = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            sign = -sign;
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
        }
    }
    let mut d = sign;
    for i in 0..n {
        d *= m[i * n + i];
    }
    d
}

/// Solve A x = b for square A (n x n) by LU with partial pivoting.
/// Returns None when A is (numerically) singular.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for c in r + 1..n {
            s -= m[r * n + c] * x[c];
        }
        x[r] = s / m[r * n + r];
    }
    Some(x)
}

/// Eigenvalues of a symmetric n x n matrix, ascending.
/// Closed form for n <= 3, cyclic Jacobi otherwise.
pub fn sym_eigvals(a: &[f64], n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a[0]],
        2 => {
            let (p, q, r) = (a[0], a[1], a[3]);
            let tr = p + r;
            let disc = (((p - r) / 2.0).powi(2) + q * q).sqrt();
            vec![tr / 2.0 - disc, tr / 2.0 + disc]
        }
        3 => sym_eigvals3(a),
        _ => jacobi_eigvals(a, n),
    }
}

// Trigonometric closed form for symmetric 3x3 eigenvalues.
fn sym_eigvals3(a: &[f64]) -> Vec<f64> {
    let p1 = a[1] * a[1] + a[2] * a[2] + a[5] * a[5];
    let q = (a[0] + a[4] + a[8]) / 3.0;
    if p1 == 0.0 {
        let mut d = vec![a[0], a[4], a[8]];
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return d;
    }
    let p2 = (a[0] - q).powi(2) + (a[4] - q).powi(2) + (a[8] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [0.0; 9];
    for i in 0..9 {
        b[i] = a[i] / p;
    }
    for i in [0, 4, 8] {
        b[i] -= q / p;
    }
    let r = (det(&b, 3) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut v = vec![e1, e2, e3];
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

fn jacobi_eigvals(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                off += m[r * n + c] * m[r * n + c];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (mip, miq) = (m[i * n + p], m[i * n + q]);
                    m[i * n + p] = c * mip - s * miq;
                    m[i * n + q] = s * mip + c * miq;
                }
                for i in 0..n {
                    let (mpi, mqi) = (m[p * n + i], m[q * n + i]);
                    m[p * n + i] = c * mpi - s * mqi;
                    m[q * n + i] = s * mpi + c * mqi;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// Largest singular value of an m x n matrix via its Gram matrix.
pub fn op_norm(a: &[f64], rows: usize, cols: usize) -> f64 {
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let g = gram(a, rows, cols);
    let ev = sym_eigvals(&g, cols);
    ev[cols - 1].max(0.0).sqrt()
}

/// Smallest singular value of an m x n matrix (rows >= cols).
pub fn min_singular(a: &[f64], rows: usize, cols: usize) -> f64 {
    let g = gram(a, rows, cols);
    let ev = sym_eigvals(&g, cols);
    ev[0].max(0.0).sqrt()
}

pub fn hs_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Adjugate-transpose entries: d(det M)/dM[r][c] = cofactor(r, c).
pub fn cofactor_matrix(a: &[f64], n: usize) -> Vec<f64> {
    let mut cof = vec![0.0; n * n];
    if n == 1 {
        cof[0] = 1.0;
        return cof;
    }
    let mut minor = vec![0.0; (n - 1) * (n - 1)];
    for r in 0..n {
        for c in 0..n {
            let mut idx = 0;
            for i in 0..n {
                if i == r {
                    continue;
                }
                for j in 0..n {
                    if j == c {
                        continue;
                    }
                    minor[idx] = a[i * n + j];
                    idx += 1;
                }
            }
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            cof[r * n + c] = sign * det(&minor, n - 1);
        }
    }
    cof
}
