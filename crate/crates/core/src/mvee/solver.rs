//! Dual Frank-Wolfe solver for minimum-volume enclosing ellipsoids.
//!
//! Points are lifted to `q_i = (a_i, 1)` in dimension `d = n + 1` and the
//! solver maximizes `log det` of `Lambda(p) = sum_i p_i q_i q_i^T` over the
//! weight simplex. Each iteration moves toward the vertex with the largest
//! leverage `kappa_i = q_i^T Lambda(p)^{-1} q_i` (plus step) or away from the
//! supported vertex with the smallest (away step, removing the point from
//! the support when the step hits the simplex boundary). Optimality holds at
//! `kappa_i = d` for supported points, so the exit test bounds
//! `max(kappa)/d - 1` and `1 - min_support(kappa)/d`. The lifted gap target
//! is `eps * n/(n+1)`: a lifted gap of `g` translates to a de-lifted
//! containment slack of `g(n+1)/n`, so the tightened target makes the
//! returned ellipsoid honor slack `eps` exactly.
//!
//! The inverse of `Lambda` is carried by rank-one updates and refreshed from
//! a Cholesky factorization every [`REFACTOR_PERIOD`] steps; a fresh
//! factorization also confirms the exit test before the solver returns.
//! Leverages are invariant under invertible affine maps of the points, so
//! the iteration internally recenters and rescales its inputs without
//! changing the weight path, then reports the ellipsoid in the original
//! coordinates.

use nalgebra::DMatrix;
use rand::Rng;

use super::{
    ellipsoid_from_weights, Ellipsoid, MveeError, PointSet, SolveReport, WeightVector,
};

/// Steps between full refactorizations of the carried inverse.
pub const REFACTOR_PERIOD: usize = 50;

/// Result of a successful [`solve_mvee`] run.
#[derive(Debug, Clone)]
pub struct MveeSolution {
    pub ellipsoid: Ellipsoid,
    pub weights: WeightVector,
    pub report: SolveReport,
}

/// Picks initial support indices by sweeping extreme points along mutually
/// orthogonal directions.
///
/// Each round draws a direction in the orthogonal complement of the
/// directions found so far, takes the argmax and argmin points of the inner
/// product (lowest index on ties), and extends the direction basis by their
/// difference. Rounds continue until the basis spans; the result has between
/// `n` and `2n` indices, sorted ascending. Point sets with at most `2n`
/// points are returned whole.
pub fn coreset_init<R: Rng + ?Sized>(
    ps: &PointSet,
    rng: &mut R,
) -> Result<Vec<usize>, MveeError> {
    let n = ps.dim();
    let m = ps.len();
    if m <= 2 * n {
        return Ok((0..m).collect());
    }
    let points = ps.points();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut chosen: Vec<usize> = Vec::with_capacity(2 * n);

    while basis.len() < n {
        let b = match random_complement_direction(n, &basis, rng) {
            Some(b) => b,
            None => {
                return Err(MveeError::DegenerateInput(
                    "could not draw a direction in the orthogonal complement".into(),
                ))
            }
        };
        let mut lo = 0usize;
        let mut hi = 0usize;
        let mut lo_val = f64::INFINITY;
        let mut hi_val = f64::NEG_INFINITY;
        for (i, a) in points.iter().enumerate() {
            let t: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            if t > hi_val {
                hi_val = t;
                hi = i;
            }
            if t < lo_val {
                lo_val = t;
                lo = i;
            }
        }
        let spread = hi_val - lo_val;
        if spread <= 1e-12 * (1.0 + hi_val.abs() + lo_val.abs()) {
            return Err(MveeError::DegenerateInput(
                "points collapse along a sweep direction".into(),
            ));
        }
        if !chosen.contains(&hi) {
            chosen.push(hi);
        }
        if !chosen.contains(&lo) {
            chosen.push(lo);
        }
        let diff: Vec<f64> = points[lo]
            .iter()
            .zip(points[hi].iter())
            .map(|(l, h)| l - h)
            .collect();
        let scale = norm(&diff);
        let mut v = diff;
        // Two orthogonalization passes keep the basis orthonormal to
        // working precision.
        for _ in 0..2 {
            for e in &basis {
                let t = dot(&v, e);
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= t * ei;
                }
            }
        }
        let vn = norm(&v);
        if vn <= 1e-12 * scale {
            return Err(MveeError::DegenerateInput(
                "sweep extremes do not extend the direction basis".into(),
            ));
        }
        for vi in &mut v {
            *vi /= vn;
        }
        basis.push(v);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Solves the minimum-volume enclosing ellipsoid problem to duality gap
/// `eps`, with the iteration cap `ceil(100 d (ln d + 1/eps))`.
///
/// On success every input point satisfies
/// `(x - c)^T Q (x - c) <= (1 + eps)(1 + 1e-9)` for the returned ellipsoid,
/// every leverage is at most `(1 + eps) d`, and every supported leverage is
/// at least `(1 - eps) d`.
pub fn solve_mvee<R: Rng + ?Sized>(
    ps: &PointSet,
    eps: f64,
    rng: &mut R,
) -> Result<MveeSolution, MveeError> {
    let d = (ps.dim() + 1) as f64;
    let cap = (100.0 * d * (d.ln() + 1.0 / eps)).ceil();
    let cap = if cap >= usize::MAX as f64 {
        usize::MAX
    } else {
        cap as usize
    };
    solve_mvee_capped(ps, eps, cap, rng)
}

/// [`solve_mvee`] with an explicit iteration cap.
pub fn solve_mvee_capped<R: Rng + ?Sized>(
    ps: &PointSet,
    eps: f64,
    max_iterations: usize,
    rng: &mut R,
) -> Result<MveeSolution, MveeError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MveeError::InvalidArgument(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let n = ps.dim();
    let m = ps.len();
    let d = n + 1;
    // A lifted gap of g bounds the de-lifted quadratic form by
    // 1 + g(n+1)/n, not 1 + g: tighten the lifted target by n/(n+1) so the
    // returned ellipsoid contains every point within slack eps.
    let eps_target = eps * n as f64 / d as f64;

    let support0 = coreset_init(ps, rng)?;

    // Recenter and rescale; leverages are unchanged, conditioning is not.
    let mut mu = vec![0.0; n];
    for a in ps.points() {
        for (s, x) in mu.iter_mut().zip(a.iter()) {
            *s += x;
        }
    }
    for s in &mut mu {
        *s /= m as f64;
    }
    let sigma = ps
        .points()
        .iter()
        .map(|a| {
            a.iter()
                .zip(&mu)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    // Lifted points, row-major m x d.
    let mut qs = vec![0.0; m * d];
    for (i, a) in ps.points().iter().enumerate() {
        for j in 0..n {
            qs[i * d + j] = (a[j] - mu[j]) / sigma;
        }
        qs[i * d + n] = 1.0;
    }

    let mut p = vec![0.0; m];
    for &i in &support0 {
        p[i] = 1.0 / support0.len() as f64;
    }

    let (mut linv, logdet0) = refactor(&p, &qs, m, d)?;
    let mut logdet = logdet0;
    let mut trace = vec![logdet];
    let mut u = vec![0.0; d];
    let mut iterations = 0usize;
    let mut final_eps;

    loop {
        let scan = scan_leverages(&qs, &linv, &p, m, d);
        let mut eps_plus = scan.kappa_plus / d as f64 - 1.0;
        let mut eps_minus = 1.0 - scan.kappa_minus / d as f64;
        final_eps = eps_plus.max(eps_minus);

        if final_eps <= eps_target {
            // Confirm against a fresh factorization before declaring
            // convergence; rank-one drift must not certify a stale gap.
            renormalize(&mut p);
            let (fresh, _) = refactor(&p, &qs, m, d)?;
            linv = fresh;
            let scan = scan_leverages(&qs, &linv, &p, m, d);
            eps_plus = scan.kappa_plus / d as f64 - 1.0;
            eps_minus = 1.0 - scan.kappa_minus / d as f64;
            final_eps = eps_plus.max(eps_minus);
            if final_eps <= eps_target {
                break;
            }
            continue;
        }

        if iterations >= max_iterations {
            return Err(MveeError::NoConvergence {
                iterations,
                eps,
            });
        }

        let delta_logdet = if eps_plus >= eps_minus {
            // Plus step: mix toward the vertex of the worst-covered point.
            let kappa = scan.kappa_plus;
            let j = scan.j_plus;
            let beta = (kappa - d as f64) / (d as f64 * (kappa - 1.0));
            for w in p.iter_mut() {
                *w *= 1.0 - beta;
            }
            p[j] += beta;
            rank_one_update(&mut linv, &mut u, &qs[j * d..(j + 1) * d], 1.0 - beta, beta, kappa)
                .or_else(|_| refactor(&p, &qs, m, d).map(|(f, _)| linv = f))?;
            (d as f64 - 1.0) * (-beta).ln_1p() + eps_plus.ln_1p()
        } else {
            // Away step: shift weight off the most over-covered supported
            // point, dropping it when the step hits the simplex boundary.
            let kappa = scan.kappa_minus;
            let j = scan.j_minus;
            let beta_unc = if kappa > 1.0 + 1e-12 {
                (d as f64 - kappa) / (d as f64 * (kappa - 1.0))
            } else {
                f64::INFINITY
            };
            let beta_drop = p[j] / (1.0 - p[j]);
            let beta = beta_unc.min(beta_drop);
            let drops = beta_drop <= beta_unc;
            for w in p.iter_mut() {
                *w *= 1.0 + beta;
            }
            p[j] = if drops { 0.0 } else { (p[j] - beta).max(0.0) };
            rank_one_update(&mut linv, &mut u, &qs[j * d..(j + 1) * d], 1.0 + beta, -beta, kappa)
                .or_else(|_| refactor(&p, &qs, m, d).map(|(f, _)| linv = f))?;
            (d as f64 - 1.0) * beta.ln_1p() + (-beta * (kappa - 1.0)).ln_1p()
        };
        // Each step maximizes log det along its segment and zero lies in the
        // segment, so the true increment is nonnegative; the clamp only
        // discards roundoff in the closed form far below the trace scale.
        logdet += delta_logdet.max(0.0);
        trace.push(logdet);
        iterations += 1;

        if iterations % REFACTOR_PERIOD == 0 {
            renormalize(&mut p);
            let (fresh, _) = refactor(&p, &qs, m, d)?;
            linv = fresh;
        }
    }

    let weights = WeightVector::new(p)?;
    let support = weights.support();
    let ellipsoid = ellipsoid_from_weights(ps, &weights)?;
    Ok(MveeSolution {
        ellipsoid,
        weights,
        report: SolveReport {
            iterations,
            final_eps,
            support,
            logdet_trace: trace,
        },
    })
}

struct LeverageScan {
    j_plus: usize,
    kappa_plus: f64,
    j_minus: usize,
    kappa_minus: f64,
}

/// Largest leverage over all points and smallest over the support.
fn scan_leverages(qs: &[f64], linv: &[f64], p: &[f64], m: usize, d: usize) -> LeverageScan {
    let mut j_plus = 0;
    let mut kappa_plus = f64::NEG_INFINITY;
    let mut j_minus = 0;
    let mut kappa_minus = f64::INFINITY;
    for i in 0..m {
        let q = &qs[i * d..(i + 1) * d];
        let kappa = quad_form(q, linv, d);
        if kappa > kappa_plus {
            kappa_plus = kappa;
            j_plus = i;
        }
        if p[i] > 0.0 && kappa < kappa_minus {
            kappa_minus = kappa;
            j_minus = i;
        }
    }
    LeverageScan {
        j_plus,
        kappa_plus,
        j_minus,
        kappa_minus,
    }
}

/// `q^T A q` for symmetric `A` in row-major flat storage.
fn quad_form(q: &[f64], a: &[f64], d: usize) -> f64 {
    let mut acc = 0.0;
    for r in 0..d {
        let mut row = 0.0;
        for c in 0..d {
            row += a[r * d + c] * q[c];
        }
        acc += q[r] * row;
    }
    acc
}

/// Sherman-Morrison update of `A = (gamma L + delta q q^T)^{-1}` in place,
/// given `A = L^{-1}` and `kappa = q^T A q`. Fails when the update is too
/// close to singular, in which case the caller refactorizes.
fn rank_one_update(
    linv: &mut [f64],
    u: &mut [f64],
    q: &[f64],
    gamma: f64,
    delta: f64,
    kappa: f64,
) -> Result<(), ()> {
    let d = q.len();
    let denom = gamma + delta * kappa;
    if !(denom.abs() > 1e-12 * gamma.abs().max(1.0)) {
        return Err(());
    }
    for r in 0..d {
        let mut s = 0.0;
        for c in 0..d {
            s += linv[r * d + c] * q[c];
        }
        u[r] = s;
    }
    let coef = delta / denom;
    for r in 0..d {
        for c in r..d {
            let v = (linv[r * d + c] - coef * u[r] * u[c]) / gamma;
            linv[r * d + c] = v;
            linv[c * d + r] = v;
        }
    }
    Ok(())
}

/// Rebuilds `Lambda(p)` and returns its inverse (flat row-major) and
/// `log det` via Cholesky.
fn refactor(p: &[f64], qs: &[f64], m: usize, d: usize) -> Result<(Vec<f64>, f64), MveeError> {
    let mut lambda = DMatrix::zeros(d, d);
    for i in 0..m {
        let w = p[i];
        if w == 0.0 {
            continue;
        }
        let q = &qs[i * d..(i + 1) * d];
        for r in 0..d {
            for c in r..d {
                lambda[(r, c)] += w * q[r] * q[c];
            }
        }
    }
    for r in 0..d {
        for c in (r + 1)..d {
            lambda[(c, r)] = lambda[(r, c)];
        }
    }
    let chol = nalgebra::Cholesky::new(lambda).ok_or_else(|| {
        MveeError::DegenerateInput("lifted moment matrix lost positive definiteness".into())
    })?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|x: &f64| x.ln()).sum::<f64>();
    let inv = chol.inverse();
    let mut flat = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            // Symmetrize; the factored inverse is symmetric to roundoff.
            flat[r * d + c] = 0.5 * (inv[(r, c)] + inv[(c, r)]);
        }
    }
    Ok((flat, logdet))
}

fn renormalize(p: &mut [f64]) {
    let sum: f64 = p.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        for w in p.iter_mut() {
            *w /= sum;
        }
    }
}

fn random_complement_direction<R: Rng + ?Sized>(
    n: usize,
    basis: &[Vec<f64>],
    rng: &mut R,
) -> Option<Vec<f64>> {
    for _ in 0..64 {
        let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for e in basis {
            let t = dot(&b, e);
            for (bi, ei) in b.iter_mut().zip(e) {
                *bi -= t * ei;
            }
        }
        let bn = norm(&b);
        if bn > 1e-9 {
            for bi in &mut b {
                *bi /= bn;
            }
            return Some(b);
        }
    }
    None
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
