//! Minimum-volume enclosing ellipsoids of finite point sets.
//!
//! The entry point is [`solve_mvee`], a Frank-Wolfe iteration on the dual
//! weight simplex with away steps and rank-one inverse updates. Support
//! routines turn converged weights into an explicit ellipsoid
//! ([`ellipsoid_from_weights`]) and read off its longest axis
//! ([`principal_axis`]).
//!
//! Shapes follow the convention `{ x : (x - c)^T Q (x - c) <= 1 }` with `Q`
//! symmetric positive definite, so long axes correspond to small eigenvalues
//! of `Q`.

pub mod jacobi;
mod solver;

pub use solver::{coreset_init, solve_mvee, solve_mvee_capped, MveeSolution};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative singular-value cutoff for the affine-span rank check.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Relative tolerance on `|sum(p) - 1|` for weight vectors.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Relative asymmetry tolerated when constructing an ellipsoid shape.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Condition-number ceiling on the weighted moment matrix.
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Error)]
pub enum MveeError {
    /// Input points do not affinely span their ambient space, or are
    /// otherwise unusable (too few, non-finite, collapsed extent).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    /// The iteration cap was reached before the duality gap closed.
    #[error("no convergence after {iterations} iterations (target eps {eps:e})")]
    NoConvergence { iterations: usize, eps: f64 },
    /// The weighted moment matrix is singular or conditioned beyond
    /// [`CONDITION_LIMIT`].
    #[error("weight moment matrix is numerically singular (condition estimate {condition:e})")]
    SingularWeights { condition: f64 },
    /// The two smallest eigenvalues of the shape matrix are too close to
    /// name a unique longest axis.
    #[error("no unique longest axis: eigenvalue ratio {ratio} is below 1 + gap_tol = {required}")]
    NoUniqueAxis { ratio: f64, required: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// An ordered list of points in a common dimension, validated to affinely
/// span it.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    points: Vec<DVector<f64>>,
}

impl PointSet {
    /// Validates and wraps a list of points.
    ///
    /// Requires at least `dim + 1` points, all finite, all of one dimension,
    /// affinely spanning: the singular values of the centered data matrix
    /// must not drop below [`RANK_TOLERANCE`] times the largest.
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self, MveeError> {
        let first = points
            .first()
            .ok_or_else(|| MveeError::DegenerateInput("empty point list".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(MveeError::DegenerateInput("zero-dimensional points".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(MveeError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !p.iter().all(|x| x.is_finite()) {
                return Err(MveeError::DegenerateInput(
                    "non-finite coordinate".into(),
                ));
            }
        }
        let m = points.len();
        if m < dim + 1 {
            return Err(MveeError::DegenerateInput(format!(
                "{m} points cannot affinely span dimension {dim}"
            )));
        }
        // Rank of the centered data matrix equals the affine span dimension.
        let mut centroid = DVector::zeros(dim);
        for p in &points {
            centroid += p;
        }
        centroid /= m as f64;
        let mut centered = DMatrix::zeros(m, dim);
        for (i, p) in points.iter().enumerate() {
            for j in 0..dim {
                centered[(i, j)] = p[j] - centroid[j];
            }
        }
        let sv = centered.singular_values();
        let max_sv = sv.max();
        if max_sv <= 0.0 {
            return Err(MveeError::DegenerateInput("all points coincide".into()));
        }
        let rank = sv.iter().filter(|&&s| s > RANK_TOLERANCE * max_sv).count();
        if rank < dim {
            return Err(MveeError::DegenerateInput(format!(
                "points span an affine subspace of dimension {rank} < {dim}"
            )));
        }
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }
}

/// A point of the standard simplex: nonnegative weights summing to one.
#[derive(Debug, Clone)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    /// Validates nonnegativity and `|sum - 1| <= `[`WEIGHT_SUM_TOLERANCE`].
    pub fn new(weights: Vec<f64>) -> Result<Self, MveeError> {
        if weights.is_empty() {
            return Err(MveeError::InvalidArgument("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MveeError::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(MveeError::InvalidArgument(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Uniform weights over `support`, zero elsewhere, length `m`.
    pub fn uniform_on(m: usize, support: &[usize]) -> Result<Self, MveeError> {
        if support.is_empty() {
            return Err(MveeError::InvalidArgument("empty support".into()));
        }
        let mut weights = vec![0.0; m];
        let w = 1.0 / support.len() as f64;
        for &i in support {
            if i >= m {
                return Err(MveeError::InvalidArgument(format!(
                    "support index {i} out of range for {m} weights"
                )));
            }
            weights[i] = w;
        }
        Self::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Ellipsoid `{ x : (x - c)^T Q (x - c) <= 1 }` with `Q` symmetric positive
/// definite.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
}

impl Ellipsoid {
    /// Validates symmetry (relative to the largest entry, within
    /// [`SYMMETRY_TOLERANCE`]) and positive definiteness, then stores the
    /// symmetrized shape.
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self, MveeError> {
        let n = center.len();
        if n == 0 {
            return Err(MveeError::InvalidArgument("empty center".into()));
        }
        if shape.nrows() != n || shape.ncols() != n {
            return Err(MveeError::DimensionMismatch {
                expected: n,
                got: shape.nrows().max(shape.ncols()),
            });
        }
        if !center.iter().all(|x| x.is_finite()) || !shape.iter().all(|x| x.is_finite()) {
            return Err(MveeError::InvalidArgument(
                "non-finite center or shape entry".into(),
            ));
        }
        let scale = shape.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            return Err(MveeError::InvalidArgument("zero shape matrix".into()));
        }
        let mut sym = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let diff = (shape[(i, j)] - shape[(j, i)]).abs();
                if diff > SYMMETRY_TOLERANCE * scale {
                    return Err(MveeError::InvalidArgument(format!(
                        "shape matrix is asymmetric at ({i}, {j}) by {diff:e}"
                    )));
                }
                sym[(i, j)] = 0.5 * (shape[(i, j)] + shape[(j, i)]);
            }
        }
        let eig = jacobi::sym_eigen(&sym);
        if eig.values[0] <= 0.0 {
            return Err(MveeError::InvalidArgument(format!(
                "shape matrix is not positive definite (min eigenvalue {:e})",
                eig.values[0]
            )));
        }
        Ok(Self { center, shape: sym })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// Quadratic form `(x - c)^T Q (x - c)`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.center;
        (&self.shape * &d).dot(&d)
    }

    /// Membership test with multiplicative slack: true when the quadratic
    /// form is at most `1 + slack`.
    pub fn contains(&self, x: &DVector<f64>, slack: f64) -> bool {
        x.len() == self.dim() && self.quadratic_form(x) <= 1.0 + slack
    }

    /// Semi-axis lengths `1/sqrt(lambda)`, sorted descending (longest first).
    pub fn semi_axis_lengths(&self) -> DVector<f64> {
        let eig = jacobi::sym_eigen(&self.shape);
        DVector::from_iterator(self.dim(), eig.values.iter().map(|l| 1.0 / l.sqrt()))
    }

    /// Lebesgue volume: `unit_ball_volume(n) / sqrt(det Q)`.
    pub fn volume(&self) -> f64 {
        let eig = jacobi::sym_eigen(&self.shape);
        let half_log_det: f64 = eig.values.iter().map(|l| 0.5 * l.ln()).sum();
        unit_ball_volume(self.dim()) * (-half_log_det).exp()
    }
}

/// Volume of the unit ball in `R^n`, via `V_n = 2 pi V_{n-2} / n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    if n <= 1 {
        return v[n];
    }
    let mut vol = 0.0;
    for k in 2..=n {
        vol = 2.0 * std::f64::consts::PI * v[0] / k as f64;
        v = [v[1], vol];
    }
    vol
}

/// Convergence record for one [`solve_mvee`] run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Accepted iterations (steps actually applied).
    pub iterations: usize,
    /// Duality-gap bound at exit: `max(eps_plus, eps_minus)`.
    pub final_eps: f64,
    /// Indices carrying positive weight at exit.
    pub support: Vec<usize>,
    /// `log det` of the lifted moment matrix after each accepted step, for
    /// the internally normalized coordinates (an additive constant away from
    /// the raw-coordinate value). Non-decreasing.
    pub logdet_trace: Vec<f64>,
}

/// Maps dual weights to the ellipsoid they induce.
///
/// With `c = sum_i p_i a_i` and `M = sum_i p_i a_i a_i^T - c c^T`, the shape
/// is `Q = M^{-1} / n`. Computation centers and rescales the points first
/// (the map is affine-equivariant, so this changes nothing but conditioning)
/// and inverts `M` by eigendecomposition, which keeps `Q` exactly symmetric.
///
/// Fails with [`MveeError::SingularWeights`] when the eigenvalue ratio of
/// `M` exceeds [`CONDITION_LIMIT`].
pub fn ellipsoid_from_weights(ps: &PointSet, p: &WeightVector) -> Result<Ellipsoid, MveeError> {
    let n = ps.dim();
    let m = ps.len();
    if p.len() != m {
        return Err(MveeError::DimensionMismatch {
            expected: m,
            got: p.len(),
        });
    }
    let w = p.as_slice();

    let mut mu = DVector::zeros(n);
    for a in ps.points() {
        mu += a;
    }
    mu /= m as f64;
    let sigma = ps
        .points()
        .iter()
        .map(|a| (a - &mu).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    // Weighted first and second moments of the rescaled points.
    let mut c = DVector::zeros(n);
    let mut second = DMatrix::zeros(n, n);
    for (a, &wi) in ps.points().iter().zip(w) {
        if wi == 0.0 {
            continue;
        }
        let z = (a - &mu) / sigma;
        c.axpy(wi, &z, 1.0);
        second.syger(wi, &z, &z, 1.0);
    }
    let mut moment = second - &c * c.transpose();
    // syger fills the lower triangle only; mirror it.
    for i in 0..n {
        for j in (i + 1)..n {
            moment[(i, j)] = moment[(j, i)];
        }
    }

    let eig = jacobi::sym_eigen(&moment);
    let lambda_min = eig.values[0];
    let lambda_max = eig.values[n - 1];
    let condition = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };
    if !(condition <= CONDITION_LIMIT) {
        return Err(MveeError::SingularWeights { condition });
    }

    // Q = M^{-1} / n in rescaled coordinates, mapped back by 1/sigma^2.
    let inv_scaled = DVector::from_iterator(
        n,
        eig.values.iter().map(|l| 1.0 / (l * n as f64 * sigma * sigma)),
    );
    let q = &eig.vectors * DMatrix::from_diagonal(&inv_scaled) * eig.vectors.transpose();
    let center = mu + sigma * c;
    Ellipsoid::new(center, q)
}

/// Longest semi-axis of an ellipsoid as an anchored vector.
///
/// Returns `(w, half_length)` where `w = c + half_length * u` for the unit
/// eigenvector `u` of the smallest eigenvalue `lambda_min` of `Q`, with the
/// sign of `u` fixed so its first nonzero coordinate is positive, and
/// `half_length = 1/sqrt(lambda_min)`.
///
/// Fails with [`MveeError::NoUniqueAxis`] unless
/// `lambda_2 / lambda_min >= 1 + gap_tol`.
pub fn principal_axis(e: &Ellipsoid, gap_tol: f64) -> Result<(DVector<f64>, f64), MveeError> {
    if !(gap_tol > 0.0) {
        return Err(MveeError::InvalidArgument(format!(
            "gap_tol must be positive, got {gap_tol}"
        )));
    }
    let eig = jacobi::sym_eigen(e.shape());
    let n = e.dim();
    if n < 2 {
        return Err(MveeError::InvalidArgument(
            "principal axis needs dimension at least 2".into(),
        ));
    }
    let lambda_min = eig.values[0];
    let lambda_next = eig.values[1];
    let ratio = lambda_next / lambda_min;
    let required = 1.0 + gap_tol;
    if !(ratio >= required) {
        return Err(MveeError::NoUniqueAxis { ratio, required });
    }
    let mut u = eig.vectors.column(0).clone_owned();
    if let Some(first) = u.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            u.neg_mut();
        }
    }
    let half_length = 1.0 / lambda_min.sqrt();
    Ok((e.center() + half_length * &u, half_length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vecs(rows: &[&[f64]]) -> Vec<DVector<f64>> {
        rows.iter().map(|r| DVector::from_row_slice(r)).collect()
    }

    #[test]
    fn point_set_rejects_empty_and_mixed_dims() {
        assert!(matches!(
            PointSet::new(vec![]),
            Err(MveeError::DegenerateInput(_))
        ));
        let pts = vec![
            DVector::from_row_slice(&[1.0, 2.0]),
            DVector::from_row_slice(&[1.0]),
        ];
        assert!(matches!(
            PointSet::new(pts),
            Err(MveeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_set_rejects_affinely_dependent_points() {
        // Three collinear points in the plane span a 1-dimensional affine set.
        let pts = vecs(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        assert!(matches!(
            PointSet::new(pts),
            Err(MveeError::DegenerateInput(_))
        ));
        // Too few points.
        let pts = vecs(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            PointSet::new(pts),
            Err(MveeError::DegenerateInput(_))
        ));
    }

    #[test]
    fn point_set_accepts_simplex() {
        let pts = vecs(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let ps = PointSet::new(pts).unwrap();
        assert_eq!(ps.dim(), 2);
        assert_eq!(ps.len(), 3);
    }

    #[test]
    fn weight_vector_validates_sum_and_sign() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        let w = WeightVector::uniform_on(4, &[0, 2]).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.0, 0.5, 0.0]);
        assert_eq!(w.support(), vec![0, 2]);
    }

    #[test]
    fn ellipsoid_rejects_asymmetry_and_indefiniteness() {
        let c = DVector::zeros(2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]);
        assert!(Ellipsoid::new(c.clone(), asym).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(Ellipsoid::new(c, indef).is_err());
    }

    #[test]
    fn ellipsoid_membership_and_axes() {
        // Q = diag(1/4, 1) has semi-axes 2 and 1 along x and y.
        let e = Ellipsoid::new(
            DVector::from_row_slice(&[1.0, -1.0]),
            DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!(e.contains(&DVector::from_row_slice(&[3.0, -1.0]), 1e-12));
        assert!(!e.contains(&DVector::from_row_slice(&[3.1, -1.0]), 1e-12));
        let lengths = e.semi_axis_lengths();
        assert_relative_eq!(lengths[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(lengths[1], 1.0, epsilon = 1e-12);
        // Area of an ellipse with semi-axes 2 and 1 is 2 pi.
        assert_relative_eq!(e.volume(), 2.0 * std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn unit_ball_volumes_match_closed_forms() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-15);
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-14);
        assert_relative_eq!(
            unit_ball_volume(3),
            4.0 / 3.0 * std::f64::consts::PI,
            epsilon = 1e-14
        );
        // V_4 = pi^2 / 2.
        assert_relative_eq!(
            unit_ball_volume(4),
            std::f64::consts::PI * std::f64::consts::PI / 2.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn from_weights_matches_triangle_circumellipse() {
        // Uniform weights on a triangle give its minimum-area enclosing
        // ellipse. For vertices (0,0), (1,0), (0,1): center (1/3, 1/3) and
        // Q = [[3, 3/2], [3/2, 3]].
        let ps = PointSet::new(vecs(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        let p = WeightVector::new(vec![1.0 / 3.0; 3]).unwrap();
        let e = ellipsoid_from_weights(&ps, &p).unwrap();
        assert_relative_eq!(e.center()[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.center()[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.shape()[(0, 0)], 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.shape()[(0, 1)], 1.5, epsilon = 1e-12);
        assert_relative_eq!(e.shape()[(1, 1)], 3.0, epsilon = 1e-12);
        // All three vertices lie on the boundary.
        for a in ps.points() {
            assert_relative_eq!(e.quadratic_form(a), 1.0, epsilon = 1e-12);
        }
        // Area 2 pi / (3 sqrt 3).
        assert_relative_eq!(e.volume(), 1.209_199_576_156_145_2, epsilon = 1e-12);
    }

    #[test]
    fn from_weights_flags_singular_moment() {
        // Weight concentrated on two points of a 2-D set leaves M rank 1.
        let ps = PointSet::new(vecs(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        let p = WeightVector::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(
            ellipsoid_from_weights(&ps, &p),
            Err(MveeError::SingularWeights { .. })
        ));
    }

    #[test]
    fn from_weights_is_translation_invariant() {
        let base = vecs(&[&[0.0, 0.0], &[2.0, 0.3], &[-0.5, 1.0], &[0.7, -1.1]]);
        let shifted: Vec<_> = base
            .iter()
            .map(|p| p + DVector::from_row_slice(&[1e6, -2e6]))
            .collect();
        let p = WeightVector::new(vec![0.25; 4]).unwrap();
        let e0 =
            ellipsoid_from_weights(&PointSet::new(base).unwrap(), &p).unwrap();
        let e1 =
            ellipsoid_from_weights(&PointSet::new(shifted).unwrap(), &p).unwrap();
        assert_relative_eq!(e1.center()[0] - 1e6, e0.center()[0], epsilon = 1e-6);
        assert_relative_eq!(e1.center()[1] + 2e6, e0.center()[1], epsilon = 1e-6);
        assert!((e1.shape() - e0.shape()).norm() <= 1e-9 * e0.shape().norm());
    }

    #[test]
    fn principal_axis_reads_off_diagonal_shape() {
        // Q = diag(1/9, 1, 4): longest semi-axis 3 along x.
        let e = Ellipsoid::new(
            DVector::from_row_slice(&[1.0, 2.0, 3.0]),
            DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0 / 9.0, 1.0, 4.0])),
        )
        .unwrap();
        let (w, half) = principal_axis(&e, 0.1).unwrap();
        assert_relative_eq!(half, 3.0, epsilon = 1e-12);
        assert_relative_eq!(w[0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(w[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(w[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn principal_axis_rejects_ties() {
        // A sphere has no unique longest axis.
        let e = Ellipsoid::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(
            principal_axis(&e, 0.1),
            Err(MveeError::NoUniqueAxis { .. })
        ));
        // Ratio 1.05 fails gap_tol 0.1 but passes gap_tol 0.01.
        let e = Ellipsoid::new(
            DVector::zeros(2),
            DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1.05])),
        )
        .unwrap();
        assert!(principal_axis(&e, 0.1).is_err());
        assert!(principal_axis(&e, 0.01).is_ok());
    }

    #[test]
    fn principal_axis_sign_is_canonical() {
        // The eigenvector's first nonzero coordinate is made positive, so w
        // sits on the +x side of the center here.
        let e = Ellipsoid::new(
            DVector::zeros(2),
            DMatrix::from_diagonal(&DVector::from_row_slice(&[0.25, 1.0])),
        )
        .unwrap();
        let (w, half) = principal_axis(&e, 0.1).unwrap();
        assert_relative_eq!(half, 2.0, epsilon = 1e-12);
        assert!(w[0] > 0.0);
    }
}
