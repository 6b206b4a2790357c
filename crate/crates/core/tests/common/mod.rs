//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here is written from the definitions with explicit loops and
//! dense `p × p` matrices, deliberately avoiding the library's shortcuts.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(p: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(p, n, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(p: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(p, |_, _| StandardNormal.sample(rng))
}

/// Gaussian data with covariance `diag(d)` and mean `mu`, as columns.
pub fn diagonal_gaussian(mu: &DVector<f64>, d: &[f64], n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut x = gaussian_matrix(mu.len(), n, rng);
    for j in 0..n {
        for i in 0..mu.len() {
            x[(i, j)] = mu[i] + d[i].sqrt() * x[(i, j)];
        }
    }
    x
}

pub fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    let (p, n) = x.shape();
    let mut m = DVector::zeros(p);
    for j in 0..n {
        for i in 0..p {
            m[i] += x[(i, j)];
        }
    }
    m / n as f64
}

/// `(X − X̄)ᵀ(X − X̄)/(n − 1)` with an explicit centering loop.
pub fn brute_dual(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, n) = x.shape();
    let m = column_mean(x);
    let mut c = x.clone();
    for j in 0..n {
        for i in 0..p {
            c[(i, j)] -= m[i];
        }
    }
    let mut sd = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..p {
                s += c[(i, a)] * c[(i, b)];
            }
            sd[(a, b)] = s / (n as f64 - 1.0);
        }
    }
    sd
}

/// The `p × p` sample covariance `S`.
pub fn brute_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, n) = x.shape();
    let m = column_mean(x);
    let mut s = DMatrix::zeros(p, p);
    for j in 0..n {
        for a in 0..p {
            for b in 0..p {
                s[(a, b)] += (x[(a, j)] - m[a]) * (x[(b, j)] - m[b]);
            }
        }
    }
    s / (n as f64 - 1.0)
}

pub fn trace(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Cyclic Jacobi eigenvalue iteration; eigenvalues sorted nonincreasing with
/// matching unit eigenvector columns.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off < 1e-30 * (1.0 + a.norm_squared()) {
            break;
        }
        for pi in 0..n {
            for qi in (pi + 1)..n {
                let apq = a[(pi, qi)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(qi, qi)] - a[(pi, pi)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, pi)];
                    let akq = a[(k, qi)];
                    a[(k, pi)] = c * akp - s * akq;
                    a[(k, qi)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(pi, k)];
                    let aqk = a[(qi, k)];
                    a[(pi, k)] = c * apk - s * aqk;
                    a[(qi, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, pi)];
                    let vkq = v[(k, qi)];
                    v[(k, pi)] = c * vkp - s * vkq;
                    v[(k, qi)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

/// `det(M)` by Gaussian elimination with partial pivoting.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[(i, c)].abs().partial_cmp(&a[(j, c)].abs()).unwrap())
            .unwrap();
        if a[(piv, c)] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap_rows(piv, c);
            det = -det;
        }
        det *= a[(c, c)];
        for r in (c + 1)..n {
            let f = a[(r, c)] / a[(c, c)];
            for k in c..n {
                a[(r, k)] -= f * a[(c, k)];
            }
        }
    }
    det
}

/// `k` orthonormal vectors in `R^p` via Gram-Schmidt on Gaussian draws.
pub fn random_orthonormal(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    while out.len() < k {
        let mut v = gaussian_vector(p, rng);
        for h in &out {
            let c = h.dot(&v);
            v -= h * c;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / norm);
        }
    }
    out
}

/// Dense projector `I − Σ h hᵀ`.
pub fn dense_projector(p: usize, basis: &[DVector<f64>]) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::identity(p, p);
    for h in basis {
        a -= h * h.transpose();
    }
    a
}

/// `W(x₀)` assembled from explicit means and `p × p` covariance traces.
pub fn brute_dbda(x1: &DMatrix<f64>, x2: &DMatrix<f64>, x0: &DVector<f64>) -> f64 {
    let (n1, n2) = (x1.ncols() as f64, x2.ncols() as f64);
    let m1 = column_mean(x1);
    let m2 = column_mean(x2);
    let mid = (&m1 + &m2) / 2.0;
    (x0 - mid).dot(&(&m2 - &m1)) - trace(&brute_covariance(x1)) / (2.0 * n1)
        + trace(&brute_covariance(x2)) / (2.0 * n2)
}

/// Projected-distance rule with dense projectors:
/// `−{A₁(x̄₁ − x₀) + A₂(x̄₂ − x₀)}ᵀ(A₂x̄₂ − A₁x̄₁)/2 − tr(A₁S₁)/(2n₁) + tr(A₂S₂)/(2n₂)`.
pub fn brute_projected(
    x1: &DMatrix<f64>,
    x2: &DMatrix<f64>,
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    x0: &DVector<f64>,
) -> f64 {
    let (n1, n2) = (x1.ncols() as f64, x2.ncols() as f64);
    let m1 = column_mean(x1);
    let m2 = column_mean(x2);
    let lhs = a1 * (&m1 - x0) + a2 * (&m2 - x0);
    let rhs = a2 * &m2 - a1 * &m1;
    -lhs.dot(&rhs) / 2.0 - trace(&(a1 * brute_covariance(x1))) / (2.0 * n1)
        + trace(&(a2 * brute_covariance(x2))) / (2.0 * n2)
}

/// Product-expansion form with dense projectors:
/// `x₀,A*ᵀ(x̄₂,A − x̄₁,A) + Σ_{j<j'} x₁j,Aᵀx₁j',A/{n₁(n₁−1)} − Σ_{j<j'} x₂j,Aᵀx₂j',A/{n₂(n₂−1)}`.
pub fn brute_pairwise(
    x1: &DMatrix<f64>,
    x2: &DMatrix<f64>,
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    x0: &DVector<f64>,
) -> f64 {
    let a_star = (a1 + a2) / 2.0;
    let m1 = a1 * column_mean(x1);
    let m2 = a2 * column_mean(x2);
    let mut w = (&a_star * x0).dot(&(&m2 - &m1));
    for (x, a, sign) in [(x1, a1, 1.0), (x2, a2, -1.0)] {
        let n = x.ncols();
        let t = a * x;
        let mut acc = 0.0;
        for j in 0..n {
            for l in (j + 1)..n {
                acc += t.column(j).dot(&t.column(l));
            }
        }
        w += sign * acc / (n as f64 * (n as f64 - 1.0));
    }
    w
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
