//! Small dense linear algebra: closed-form 2×2 spectral norms, 4×4 products,
//! and a symmetric tridiagonal eigensolver (implicit-shift QL with
//! eigenvector accumulation).

use crate::error::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];

pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Spectral norm of a 2×2 real matrix from its singular values.
///
/// With q = Σ aᵢⱼ² and d = |det A|, the singular values satisfy
/// σ₊ + σ₋ = √(q + 2d) and σ₊ − σ₋ = √(q − 2d), so σ₊ is recovered
/// branch-free without forming AᵀA.
pub fn spectral_norm_2x2(a: &Mat2) -> f64 {
    let q = a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1];
    let d = (a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs();
    let s = (q + 2.0 * d).sqrt();
    let t = (q - 2.0 * d).max(0.0).sqrt();
    0.5 * (s + t)
}

pub fn mat4_identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn mat4_det(m: &Mat4) -> f64 {
    let mut det = 0.0;
    for j in 0..4 {
        let minor = minor3(m, 0, j);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * m[0][j] * minor;
    }
    det
}

fn minor3(m: &Mat4, skip_row: usize, skip_col: usize) -> f64 {
    let mut sub = [[0.0; 3]; 3];
    let mut r = 0;
    for i in 0..4 {
        if i == skip_row {
            continue;
        }
        let mut c = 0;
        for j in 0..4 {
            if j == skip_col {
                continue;
            }
            sub[r][c] = m[i][j];
            c += 1;
        }
        r += 1;
    }
    sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
        - sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0])
        + sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0])
}

/// Column-major dense matrix; column k is contiguous.
#[derive(Debug, Clone)]
pub struct ColMatrix {
    pub n: usize,
    data: Vec<f64>,
}

impl ColMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for k in 0..n {
            data[k * n + k] = 1.0;
        }
        ColMatrix { n, data }
    }

    #[inline]
    pub fn col(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n + row]
    }

    fn rotate_cols(&mut self, i: usize, j: usize, c: f64, s: f64) {
        debug_assert!(i < j);
        let n = self.n;
        let (left, right) = self.data.split_at_mut(j * n);
        let ci = &mut left[i * n..i * n + n];
        let cj = &mut right[..n];
        for k in 0..n {
            let f = cj[k];
            cj[k] = s * ci[k] + c * f;
            ci[k] = c * ci[k] - s * f;
        }
    }

    fn permute_cols(&self, perm: &[usize]) -> ColMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for (new_k, &old_k) in perm.iter().enumerate() {
            data[new_k * n..(new_k + 1) * n].copy_from_slice(self.col(old_k));
        }
        ColMatrix { n, data }
    }
}

/// Full eigendecomposition of a symmetric tridiagonal matrix.
///
/// `diag` has length n, `off` length n−1 (the coupling between sites i and
/// i+1). Returns eigenvalues in ascending order and the orthogonal matrix
/// whose column k is the eigenvector of the k-th eigenvalue.
///
/// Implicit-shift QL iteration; rotations are accumulated into the
/// eigenvector matrix column by column.
pub fn sym_tridiag_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, ColMatrix)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), ColMatrix::identity(0)));
    }
    assert_eq!(
        off.len(),
        n.saturating_sub(1),
        "off-diagonal length mismatch"
    );

    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = ColMatrix::identity(n);

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            // locate the first negligible coupling at or after l
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Domain(
                    "tridiagonal eigensolver failed to converge".into(),
                ));
            }

            // Wilkinson-style shift from the 2×2 corner at l
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut broke_early = false;

            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    broke_early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                z.rotate_cols(i, i + 1, c, s);
            }
            if broke_early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let evals: Vec<f64> = perm.iter().map(|&i| d[i]).collect();
    let q = z.permute_cols(&perm);
    Ok((evals, q))
}

/// Count eigenvalues strictly below `lambda` via the Sturm sequence of the
/// LDLᵀ factorization. Used as an independent check on the QL solver.
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < 1e-300 {
            if q >= 0.0 {
                1e-300
            } else {
                -1e-300
            }
        } else {
            q
        };
        q = (diag[i] - lambda) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Least-squares slope of y against x.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_rotation_is_one() {
        let th: f64 = 0.7;
        let r = [[th.cos(), -th.sin()], [th.sin(), th.cos()]];
        assert!((spectral_norm_2x2(&r) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_diag() {
        let a = [[3.0, 0.0], [0.0, -0.5]];
        assert!((spectral_norm_2x2(&a) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let a = [[2.0, -1.5], [0.3, 0.8]];
        // power iteration on AᵀA
        let mut v = [1.0f64, 0.7];
        for _ in 0..200 {
            let w = [
                a[0][0] * v[0] + a[0][1] * v[1],
                a[1][0] * v[0] + a[1][1] * v[1],
            ];
            let u = [
                a[0][0] * w[0] + a[1][0] * w[1],
                a[0][1] * w[0] + a[1][1] * w[1],
            ];
            let norm = (u[0] * u[0] + u[1] * u[1]).sqrt();
            v = [u[0] / norm, u[1] / norm];
        }
        let w = [
            a[0][0] * v[0] + a[0][1] * v[1],
            a[1][0] * v[0] + a[1][1] * v[1],
        ];
        let sigma = (w[0] * w[0] + w[1] * w[1]).sqrt();
        assert!((spectral_norm_2x2(&a) - sigma).abs() < 1e-10);
    }

    #[test]
    fn mat4_det_of_identity() {
        assert!((mat4_det(&mat4_identity()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_free_chain_exact() {
        // V = 0, hopping 1: eigenvalues are 2 cos(kπ/(n+1))
        let n = 64;
        let d = vec![0.0; n];
        let e = vec![1.0; n - 1];
        let (evals, q) = sym_tridiag_eigen(&d, &e).unwrap();
        for k in 1..=n {
            let exact = 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            let err = evals
                .iter()
                .map(|&ev| (ev - exact).abs())
                .fold(f64::MAX, f64::min);
            assert!(err < 1e-12, "k={k} err={err:.2e}");
        }
        // orthogonality
        for a in 0..n {
            for b in a..n {
                let dot: f64 = q.col(a).iter().zip(q.col(b)).map(|(x, y)| x * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12, "a={a} b={b} dot={dot}");
            }
        }
    }

    #[test]
    fn eigen_residual_and_sturm_agreement() {
        // pseudo-random tridiagonal, fixed seed
        let n = 120;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        let d: Vec<f64> = (0..n).map(|_| next()).collect();
        let e: Vec<f64> = (0..n - 1).map(|_| next()).collect();
        let (evals, q) = sym_tridiag_eigen(&d, &e).unwrap();

        for k in 0..n {
            let v = q.col(k);
            let mut worst = 0.0f64;
            for i in 0..n {
                let mut hv = d[i] * v[i];
                if i > 0 {
                    hv += e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    hv += e[i] * v[i + 1];
                }
                worst = worst.max((hv - evals[k] * v[i]).abs());
            }
            assert!(worst < 1e-11, "eigen residual {worst:.2e} at k={k}");
        }

        // Sturm counts bracket each eigenvalue
        for (k, &ev) in evals.iter().enumerate() {
            assert!(sturm_count(&d, &e, ev - 1e-9) <= k);
            assert!(sturm_count(&d, &e, ev + 1e-9) > k);
        }
    }

    #[test]
    fn slope_of_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.5 * i as f64 - 2.0)).collect();
        assert!((least_squares_slope(&pts) - 3.5).abs() < 1e-12);
    }
}
