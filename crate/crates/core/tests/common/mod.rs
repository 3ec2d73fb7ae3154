//! Shared helpers for the integration suites: seeded generators, random
//! geometry, and two independent oracles for 2-D enclosing ellipses (an
//! exact support-enumeration one and a brute-force multi-start one).
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-ish random rotation from the QR factor of a random matrix.
pub fn random_rotation<R: Rng + ?Sized>(n: usize, g: &mut R) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(n, n, |_, _| g.random_range(-1.0..1.0f64));
        let q = m.qr().q();
        if q.determinant().abs() > 0.5 {
            return q;
        }
    }
}

/// Random point cloud with a full-rank affine hull.
pub fn random_cloud<R: Rng + ?Sized>(n: usize, m: usize, g: &mut R) -> Vec<DVector<f64>> {
    assert!(m >= n + 1);
    loop {
        let pts: Vec<DVector<f64>> = (0..m)
            .map(|_| DVector::from_fn(n, |_, _| g.random_range(-1.0..1.0)))
            .collect();
        if polystego::PointSet::new(pts.clone()).is_ok() {
            return pts;
        }
    }
}

/// Random ellipsoid with eigenvalue ratio at most `cond`: semi-axis lengths
/// log-uniform over a `sqrt(cond)` range around 1, random orientation,
/// center in a small box.
pub fn random_ellipsoid<R: Rng + ?Sized>(
    n: usize,
    cond: f64,
    g: &mut R,
) -> polystego::Ellipsoid {
    let half_span = 0.5 * cond.ln();
    let lambdas =
        DVector::from_fn(n, |_, _| g.random_range(-half_span..half_span).exp());
    let rot = random_rotation(n, g);
    let q = &rot * DMatrix::from_diagonal(&lambdas) * rot.transpose();
    let center = DVector::from_fn(n, |_, _| g.random_range(-2.0..2.0));
    polystego::Ellipsoid::new(center, q).expect("constructed shape is positive definite")
}

/// Frobenius distance of `a` from `b`, relative to `b`.
pub fn shape_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Smallest enclosing-ellipse area of a 2-D point set by direct multi-start
/// minimization, independent of the solver under test.
///
/// An ellipse is parameterized by angle `theta`, log eigenvalue split `g`,
/// and center `(c1, c2)`: the unit-determinant form
/// `E = R(theta) diag(e^g, e^-g) R(theta)^T` scaled by the smallest factor
/// that covers the points. The covering scale is `t = max_i (x_i - c)^T E
/// (x_i - c)` and the resulting area is `pi * t`, so minimizing `t` over
/// `(theta, g, c)` by Nelder-Mead from many seeded starts minimizes area.
/// Every evaluation is a feasible enclosing ellipse, so the result is always
/// an upper bound on the true minimum.
pub fn oracle_min_area(points: &[DVector<f64>], starts: usize, seed: u64) -> f64 {
    assert!(points.iter().all(|p| p.len() == 2));
    let objective = |x: &[f64; 4]| -> f64 {
        let (theta, g, c1, c2) = (x[0], x[1], x[2], x[3]);
        if !g.is_finite() || g.abs() > 60.0 {
            return f64::INFINITY;
        }
        let (s, c) = theta.sin_cos();
        let (eg, egi) = (g.exp(), (-g).exp());
        let e11 = c * c * eg + s * s * egi;
        let e22 = s * s * eg + c * c * egi;
        let e12 = s * c * (eg - egi);
        points
            .iter()
            .map(|p| {
                let dx = p[0] - c1;
                let dy = p[1] - c2;
                e11 * dx * dx + 2.0 * e12 * dx * dy + e22 * dy * dy
            })
            .fold(0.0, f64::max)
    };

    let m = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / m;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / m;
    let radius = points
        .iter()
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .fold(0.0, f64::max)
        .max(1e-9);

    let mut g = rng(seed);
    let mut best = f64::INFINITY;
    let mut best_x = [0.0, 0.0, cx, cy];
    for k in 0..starts {
        let x0 = if k == 0 {
            [0.0, 0.0, cx, cy]
        } else {
            [
                g.random_range(0.0..std::f64::consts::PI),
                g.random_range(-2.5..2.5),
                cx + radius * g.random_range(-0.6..0.6),
                cy + radius * g.random_range(-0.6..0.6),
            ]
        };
        let step = [0.3, 0.3, 0.2 * radius, 0.2 * radius];
        let (x1, f1) = nelder_mead(&objective, x0, step, 600);
        if f1 < best {
            best = f1;
            best_x = x1;
        }
    }
    // Polish the winner with ladders of fresh, progressively smaller
    // simplexes: restarts slide along the kinks of the max-of-forms
    // surface where a single descent stalls. Repeat until a full ladder
    // yields no further progress.
    for _ in 0..6 {
        let mut improved = false;
        for &h in &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
            let step = [h, h, h * radius, h * radius];
            let (x1, f1) = nelder_mead(&objective, best_x, step, 600);
            if f1 < best * (1.0 - 1e-14) {
                improved = true;
            }
            if f1 < best {
                best = f1;
                best_x = x1;
            }
        }
        if !improved {
            break;
        }
    }
    std::f64::consts::PI * best
}

/// Plain Nelder-Mead on four parameters: reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2. Returns the best vertex.
fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(
    f: &F,
    x0: [f64; 4],
    step: [f64; 4],
    max_iter: usize,
) -> ([f64; 4], f64) {
    const DIM: usize = 4;
    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(DIM + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..DIM {
        let mut x = x0;
        x[i] += step[i];
        simplex.push((x, f(&x)));
    }

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[DIM].1;
        if worst - best <= 1e-14 * (1.0 + best.abs()) {
            break;
        }

        let mut centroid = [0.0; DIM];
        for v in &simplex[..DIM] {
            for (c, xi) in centroid.iter_mut().zip(&v.0) {
                *c += xi / DIM as f64;
            }
        }
        let blend = |a: f64| -> [f64; 4] {
            let mut x = [0.0; DIM];
            for i in 0..DIM {
                x[i] = centroid[i] + a * (simplex[DIM].0[i] - centroid[i]);
            }
            x
        };

        let xr = blend(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = blend(-2.0);
            let fe = f(&xe);
            simplex[DIM] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[DIM - 1].1 {
            simplex[DIM] = (xr, fr);
        } else {
            let xc = if fr < simplex[DIM].1 {
                blend(-0.5)
            } else {
                blend(0.5)
            };
            let fc = f(&xc);
            if fc < simplex[DIM].1.min(fr) {
                simplex[DIM] = (xc, fc);
            } else {
                let x0best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    for i in 0..DIM {
                        v.0[i] = x0best[i] + 0.5 * (v.0[i] - x0best[i]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// An ellipse `(x - z)^T a (x - z) <= scale` recovered from a conic.
pub struct ConicEllipse {
    pub a: Matrix2<f64>,
    pub z: Vector2<f64>,
    pub scale: f64,
}

impl ConicEllipse {
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.scale / self.a.determinant().sqrt()
    }

    pub fn contains_all(&self, points: &[DVector<f64>], rel_tol: f64) -> bool {
        points.iter().all(|p| {
            let d = Vector2::new(p[0] - self.z[0], p[1] - self.z[1]);
            (d.transpose() * self.a * d)[0] <= self.scale * (1.0 + rel_tol)
        })
    }
}

/// Reads a real ellipse out of a homogeneous conic matrix, if it is one.
fn ellipse_of_conic(c: &Matrix3<f64>) -> Option<ConicEllipse> {
    let mut c = *c;
    let det_a = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
    if !(det_a > 0.0) || !c.iter().all(|x| x.is_finite()) {
        return None;
    }
    // det_a > 0 means the quadratic part is definite; normalize its sign to
    // positive definite.
    if c[(0, 0)] < 0.0 {
        c = -c;
    }
    let a = Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]);
    let rhs = Vector2::new(-c[(0, 2)], -c[(1, 2)]);
    let z = a.lu().solve(&rhs)?;
    // Value of the conic form at the center; negative for a real ellipse.
    let h = Vector3::new(z[0], z[1], 1.0);
    let at_center = (h.transpose() * c * h)[0];
    if !(at_center < 0.0) {
        return None;
    }
    Some(ConicEllipse { a, z, scale: -at_center })
}

/// Minimum-area ellipse through three points (the Steiner circumellipse),
/// as `(x - m)^T (2 S)^{-1} (x - m) <= 1` with `m` the centroid and `S` the
/// second moment of the points about it.
pub fn steiner_ellipse(t: &[&DVector<f64>]) -> Option<ConicEllipse> {
    let m = Vector2::new(
        (t[0][0] + t[1][0] + t[2][0]) / 3.0,
        (t[0][1] + t[1][1] + t[2][1]) / 3.0,
    );
    let mut s = Matrix2::zeros();
    for p in t {
        let d = Vector2::new(p[0] - m[0], p[1] - m[1]);
        s += d * d.transpose() / 3.0;
    }
    let a = (2.0 * s).try_inverse()?;
    if !(a.determinant() > 0.0) {
        return None;
    }
    Some(ConicEllipse { a, z: m, scale: 1.0 })
}

/// Homogeneous line through two points.
fn line_through(p: &DVector<f64>, q: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(p[0], p[1], 1.0).cross(&Vector3::new(q[0], q[1], 1.0))
}

/// Rank-two conic consisting of the two lines `u` and `v`.
fn line_pair(u: &Vector3<f64>, v: &Vector3<f64>) -> Matrix3<f64> {
    (u * v.transpose() + v * u.transpose()) / 2.0
}

/// Determinant of a conic's quadratic part, and its polar form.
fn quad_det(c: &Matrix3<f64>) -> f64 {
    c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)]
}

fn quad_det_polar(x: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
    (x[(0, 0)] * y[(1, 1)] + y[(0, 0)] * x[(1, 1)]) / 2.0 - x[(0, 1)] * y[(0, 1)]
}

/// Minimum-area ellipse through the four points `t` that also encloses
/// every point of `enclosing`, by constrained minimization over the pencil
/// of conics spanned by two of the degenerate line pairs.
///
/// Any ellipse through the four points is a member of the pencil. Along
/// the pencil (a line in conic-coefficient space) the point-containment
/// constraints are linear, so the enclosing members form one sub-interval
/// of the elliptical arc; the minimum over that sub-interval sits either
/// at an interior stationary point or at one of its two endpoints.
pub fn min_ellipse_through_four(
    t: &[&DVector<f64>],
    enclosing: &[DVector<f64>],
) -> Option<ConicEllipse> {
    let c1 = line_pair(&line_through(t[0], t[1]), &line_through(t[2], t[3]));
    let c2 = line_pair(&line_through(t[0], t[2]), &line_through(t[1], t[3]));

    // det of the quadratic part along cos(phi) C1 + sin(phi) C2 is
    // avg + r cos(2 phi - psi); ellipses live where it is positive, which
    // is a single arc of phi modulo pi.
    let m11 = quad_det(&c1);
    let m22 = quad_det(&c2);
    let m12 = quad_det_polar(&c1, &c2);
    let avg = (m11 + m22) / 2.0;
    let r = ((m11 - m22) / 2.0).hypot(m12);
    if !(avg > -r) || r == 0.0 {
        return None; // no elliptical members
    }
    if avg >= r {
        return None; // both line pairs would be definite: impossible
    }
    let psi = f64::atan2(m12, (m11 - m22) / 2.0);
    let theta = (-avg / r).acos();
    let (arc_lo, arc_hi) = ((psi - theta) / 2.0, (psi + theta) / 2.0);

    let conic_at = |phi: f64| phi.cos() * c1 + phi.sin() * c2;
    let feasible_at = |phi: f64| {
        ellipse_of_conic(&conic_at(phi)).is_some_and(|e| e.contains_all(enclosing, 1e-12))
    };
    let area_at = |phi: f64| {
        ellipse_of_conic(&conic_at(phi)).map_or(f64::INFINITY, |e| {
            if e.contains_all(enclosing, 1e-12) {
                e.area()
            } else {
                f64::INFINITY
            }
        })
    };

    // Dense scan for enclosing members.
    const SCAN: usize = 512;
    let width = arc_hi - arc_lo;
    let sample = |s: usize| arc_lo + width * s as f64 / SCAN as f64;
    let mut scan_best: Option<(f64, usize)> = None;
    for s in 1..SCAN {
        let a = area_at(sample(s));
        if a.is_finite() && scan_best.is_none_or(|(b, _)| a < b) {
            scan_best = Some((a, s));
        }
    }
    let (_, s_best) = scan_best?;

    // Feasible samples are contiguous; bisect both feasibility boundaries.
    let mut lo_feas = s_best;
    while lo_feas > 1 && feasible_at(sample(lo_feas - 1)) {
        lo_feas -= 1;
    }
    let mut hi_feas = s_best;
    while hi_feas < SCAN - 1 && feasible_at(sample(hi_feas + 1)) {
        hi_feas += 1;
    }
    let bisect = |mut inside: f64, mut outside: f64| {
        for _ in 0..80 {
            let mid = 0.5 * (inside + outside);
            if feasible_at(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let fb_lo = bisect(sample(lo_feas), sample(lo_feas - 1));
    let fb_hi = bisect(sample(hi_feas), sample(hi_feas + 1));

    // Candidates: both feasibility endpoints, plus a golden-section polish
    // around the best scanned sample (the interior stationary point, when
    // the minimum is not pinned at a boundary).
    let step = width / SCAN as f64;
    let (mut lo, mut hi) = (
        (sample(s_best) - step).max(fb_lo),
        (sample(s_best) + step).min(fb_hi),
    );
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let (mut f1, mut f2) = (area_at(x1), area_at(x2));
    for _ in 0..160 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = area_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = area_at(x2);
        }
    }
    let polished = if f1 < f2 { (f1, x1) } else { (f2, x2) };
    let best = [polished, (area_at(fb_lo), fb_lo), (area_at(fb_hi), fb_hi)]
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))?;
    if !best.0.is_finite() {
        return None;
    }
    ellipse_of_conic(&conic_at(best.1))
}

/// The unique conic through five points, when it is an ellipse.
pub fn conic_through_five(t: &[&DVector<f64>]) -> Option<ConicEllipse> {
    let mut rows = DMatrix::zeros(5, 6);
    for (i, p) in t.iter().enumerate() {
        let (x, y) = (p[0], p[1]);
        rows.set_row(
            i,
            &nalgebra::RowDVector::from_row_slice(&[x * x, x * y, y * y, x, y, 1.0]).into(),
        );
    }
    let svd = rows.svd(false, true);
    let v_t = svd.v_t?;
    let k = v_t.nrows() - 1; // row for the smallest singular value
    let v = v_t.row(k);
    let c = Matrix3::new(
        v[0],
        v[1] / 2.0,
        v[3] / 2.0,
        v[1] / 2.0,
        v[2],
        v[4] / 2.0,
        v[3] / 2.0,
        v[4] / 2.0,
        v[5],
    );
    ellipse_of_conic(&c)
}

/// Exact minimum enclosing-ellipse area of a small 2-D point set, by
/// enumerating every candidate support subset of size three to five,
/// taking the minimum-area ellipse through each, and keeping the smallest
/// candidate that encloses every point. The optimum's own support set
/// always appears among the candidates, so the result equals the true
/// minimum up to roundoff; every accepted candidate is a genuine enclosing
/// ellipse, so the value can never fall below it.
pub fn exact_min_area_2d(points: &[DVector<f64>]) -> f64 {
    assert!(points.iter().all(|p| p.len() == 2));
    let m = points.len();
    assert!((3..=8).contains(&m), "exact enumeration is for small sets");

    let mut best = f64::INFINITY;
    let mut consider = |cand: Option<ConicEllipse>| {
        if let Some(e) = cand {
            if e.contains_all(points, 1e-10) {
                best = best.min(e.area());
            }
        }
    };

    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                consider(steiner_ellipse(&[&points[i], &points[j], &points[k]]));
                for l in k + 1..m {
                    consider(min_ellipse_through_four(
                        &[&points[i], &points[j], &points[k], &points[l]],
                        points,
                    ));
                    for h in l + 1..m {
                        consider(conic_through_five(&[
                            &points[i], &points[j], &points[k], &points[l], &points[h],
                        ]));
                    }
                }
            }
        }
    }
    assert!(best.is_finite(), "no enclosing candidate found by enumeration");
    best
}
