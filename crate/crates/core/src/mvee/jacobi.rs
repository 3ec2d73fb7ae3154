//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.
//!
//! The solver sweeps the strict upper triangle in row order and applies a
//! plane rotation per entry. Eigenvalues come back sorted ascending with the
//! matching eigenvectors as columns. Accuracy is bounded by the sweep
//! tolerance on the off-diagonal Frobenius norm.

use nalgebra::{DMatrix, DVector};

/// Off-diagonal reduction target, relative to the input Frobenius norm.
pub const SWEEP_TOLERANCE: f64 = 1e-12;

/// Upper bound on full sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix: `a == vectors * diag(values) * vectors^T`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues, ascending.
    pub values: DVector<f64>,
    /// Eigenvectors as columns, ordered to match `values`.
    pub vectors: DMatrix<f64>,
}

/// Decomposes a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(a + a^T) / 2` before sweeping, so callers
/// may pass matrices with roundoff-level asymmetry.
pub fn sym_eigen(a: &DMatrix<f64>) -> SymEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut v = DMatrix::identity(n, n);
    let norm = m.norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= SWEEP_TOLERANCE * norm {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymEigen { values, vectors }
}

fn off_diagonal_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            sum += 2.0 * m[(p, q)] * m[(p, q)];
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation annihilating `m[(p, q)]`, accumulated into `v`.
fn rotate(m: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    // Smaller-angle root of t^2 + 2*theta*t - 1 = 0, kept stable for large theta.
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = m.nrows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
