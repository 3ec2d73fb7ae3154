//! Hiding ordered vectors as the longest axes of enclosing ellipsoids.
//!
//! A message `(i, v)` with positive index `i` and payload `v` becomes the
//! vector `w = (i, j, v_1, ..., v_{n-2})`, where `j` is a one-based code for
//! the sign pattern of `v`. The carrier for `w` is a polytope whose
//! minimum-volume enclosing ellipsoid is centered at the origin with unique
//! longest semi-axis exactly `w`: recovering the axis recovers the message.
//! Decoy polytopes mixed into a plan have near-spherical enclosing
//! ellipsoids (no unique axis) and fall below the plan's size threshold, so
//! extraction rejects them on two independent grounds.
//!
//! Extraction is deterministic: solver randomness is seeded per polytope
//! from [`EXTRACT_SEED`] and the polytope's position.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::mvee::{self, jacobi, Ellipsoid, MveeError, PointSet};

/// Largest admissible message index.
pub const MAX_INDEX: u64 = 1 << 40;

/// Largest admissible payload length; keeps sign codes exactly representable
/// as `f64` integers, matching the index cap.
pub const MAX_PAYLOAD_LEN: usize = 40;

/// Accepted distance from an integer when reading index and code slots.
pub const SLOT_ROUND_TOLERANCE: f64 = 0.25;

/// Base seed for extraction-side solver randomness.
pub const EXTRACT_SEED: u64 = 0x706f_6c79_7374_6567;

#[derive(Debug, Error)]
pub enum StegoError {
    #[error("no messages to embed")]
    EmptyInput,
    #[error("message index {index} is outside [1, {MAX_INDEX}]")]
    IndexOutOfRange { index: u64 },
    #[error("duplicate message index {index}")]
    DuplicateIndex { index: u64 },
    #[error("payload length {got} does not match {expected}")]
    PayloadLengthMismatch { expected: usize, got: usize },
    #[error("payload coordinate {value} is smaller in magnitude than payload_min {min}")]
    PayloadTooSmall { value: f64, min: f64 },
    #[error("payload must be finite and nonempty, at most {MAX_PAYLOAD_LEN} long")]
    InvalidPayload,
    #[error("decoded vector is too short: length {0} < 3")]
    VectorTooShort(usize),
    #[error("index slot {value} does not read as an index")]
    IndexInvalid { value: f64 },
    #[error("sign code {got} does not match the payload signs {expected}")]
    ChecksumMismatch { expected: u64, got: u64 },
    #[error("axis vector must be nonzero")]
    ZeroVector,
    #[error("axis_ratio must exceed 1, got {0}")]
    BadAxisRatio(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("plan is malformed: {0}")]
    MalformedPlan(String),
    #[error(transparent)]
    Solver(#[from] MveeError),
}

/// An indexed message: a positive index and the real payload to hide.
#[derive(Debug, Clone, PartialEq)]
pub struct PayloadMessage {
    index: u64,
    payload: DVector<f64>,
}

impl PayloadMessage {
    /// Requires `1 <= index <= `[`MAX_INDEX`] and a finite, nonempty payload
    /// of length at most [`MAX_PAYLOAD_LEN`].
    pub fn new(index: u64, payload: DVector<f64>) -> Result<Self, StegoError> {
        if index == 0 || index > MAX_INDEX {
            return Err(StegoError::IndexOutOfRange { index });
        }
        if payload.is_empty()
            || payload.len() > MAX_PAYLOAD_LEN
            || !payload.iter().all(|x| x.is_finite())
        {
            return Err(StegoError::InvalidPayload);
        }
        Ok(Self { index, payload })
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn payload(&self) -> &DVector<f64> {
        &self.payload
    }

    /// Carrier dimension for this message: payload length plus the index
    /// and sign-code slots.
    pub fn carrier_dim(&self) -> usize {
        self.payload.len() + 2
    }
}

/// A message laid out as a carrier-space vector `(i, j, v_1, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedVector {
    coords: DVector<f64>,
    sign_code: u64,
}

impl EncodedVector {
    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// One-based code of the payload's sign pattern, duplicated in slot 1.
    pub fn sign_code(&self) -> u64 {
        self.sign_code
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// One-based sign-pattern code: bit `k` is set when `v[k] < 0`.
fn sign_code_of(v: &[f64]) -> u64 {
    let mut code = 1u64;
    for (k, x) in v.iter().enumerate() {
        if *x < 0.0 {
            code += 1u64 << k;
        }
    }
    code
}

/// Lays a message out as `(i, j, v_1, ..., v_{n-2})` in dimension `n`.
///
/// The payload must have length `n - 2`, and every payload coordinate must
/// have magnitude at least `payload_min`; extraction reads payload signs, so
/// coordinates too close to zero would make the sign code fragile.
pub fn encode_payload(
    msg: &PayloadMessage,
    n: usize,
    payload_min: f64,
) -> Result<EncodedVector, StegoError> {
    if msg.carrier_dim() != n {
        return Err(StegoError::PayloadLengthMismatch {
            expected: n.saturating_sub(2),
            got: msg.payload.len(),
        });
    }
    for &x in msg.payload.iter() {
        if x.abs() < payload_min {
            return Err(StegoError::PayloadTooSmall {
                value: x,
                min: payload_min,
            });
        }
    }
    let code = sign_code_of(msg.payload.as_slice());
    let mut coords = DVector::zeros(n);
    coords[0] = msg.index as f64;
    coords[1] = code as f64;
    for (k, &x) in msg.payload.iter().enumerate() {
        coords[k + 2] = x;
    }
    Ok(EncodedVector {
        coords,
        sign_code: code,
    })
}

/// Reads a carrier-space vector back into a message.
///
/// An ellipsoid axis is only defined up to sign, so the vector is negated
/// first if its leading slot is negative; `decode_payload(x)` and
/// `decode_payload(-x)` always agree. The first two slots must then sit
/// within [`SLOT_ROUND_TOLERANCE`] of integers and the sign code must match
/// the payload's actual signs. These checks are what separates a recovered
/// axis from noise.
pub fn decode_payload(x: &DVector<f64>) -> Result<PayloadMessage, StegoError> {
    let n = x.len();
    if n < 3 {
        return Err(StegoError::VectorTooShort(n));
    }
    let flipped;
    let x = if x[0] < 0.0 {
        flipped = -x;
        &flipped
    } else {
        x
    };
    let i_slot = x[0];
    let i_round = i_slot.round();
    if !i_slot.is_finite()
        || (i_slot - i_round).abs() > SLOT_ROUND_TOLERANCE
        || i_round < 1.0
        || i_round > MAX_INDEX as f64
    {
        return Err(StegoError::IndexInvalid { value: i_slot });
    }
    let index = i_round as u64;

    let payload = DVector::from_iterator(n - 2, x.iter().skip(2).copied());
    let expected = sign_code_of(payload.as_slice());

    let j_slot = x[1];
    let j_round = j_slot.round();
    let code_ok = j_slot.is_finite()
        && (j_slot - j_round).abs() <= SLOT_ROUND_TOLERANCE
        && j_round >= 1.0
        && j_round <= (1u64 << (n - 2)) as f64;
    if !code_ok || j_round as u64 != expected {
        return Err(StegoError::ChecksumMismatch {
            expected,
            got: if code_ok { j_round as u64 } else { 0 },
        });
    }
    PayloadMessage::new(index, payload)
}

/// Origin-centered ellipsoid whose unique longest semi-axis is exactly `w`,
/// with every other semi-axis shorter by the factor `axis_ratio`.
///
/// With `u = w / |w|`, the shape is the rank-one form
/// `Q = alpha I - (alpha - 1/|w|^2) u u^T`, `alpha = axis_ratio^2 / |w|^2`:
/// `u` is an eigenvector with eigenvalue `1/|w|^2` and every direction
/// orthogonal to `u` has eigenvalue `alpha`, so the eigenvalue gap ratio is
/// exactly `axis_ratio^2`.
pub fn make_axis_ellipsoid(w: &DVector<f64>, axis_ratio: f64) -> Result<Ellipsoid, StegoError> {
    if !(axis_ratio > 1.0 && axis_ratio.is_finite()) {
        return Err(StegoError::BadAxisRatio(axis_ratio));
    }
    let norm_sq = w.norm_squared();
    if !(norm_sq > 0.0 && norm_sq.is_finite()) {
        return Err(StegoError::ZeroVector);
    }
    let n = w.len();
    let alpha = axis_ratio * axis_ratio / norm_sq;
    let mut q = DMatrix::identity(n, n) * alpha;
    let coef = (alpha - 1.0 / norm_sq) / norm_sq;
    for r in 0..n {
        for c in 0..n {
            q[(r, c)] -= coef * w[r] * w[c];
        }
    }
    Ok(Ellipsoid::new(DVector::zeros(n), q)?)
}

/// Vertex list of a polytope whose minimum-volume enclosing ellipsoid is
/// exactly `e`: the `2n` contact points `c +- Q^{-1/2} e_k`, plus `extra`
/// points strictly inside.
pub fn make_cover_polytope<R: Rng + ?Sized>(
    e: &Ellipsoid,
    extra: usize,
    rng: &mut R,
) -> Vec<DVector<f64>> {
    let eig = jacobi::sym_eigen(e.shape());
    let n = e.dim();
    let inv_sqrt = DVector::from_iterator(n, eig.values.iter().map(|l| 1.0 / l.sqrt()));
    let bmap = &eig.vectors * DMatrix::from_diagonal(&inv_sqrt) * eig.vectors.transpose();
    ball_image_polytope(e.center(), &bmap, extra, rng)
}

/// Images of the cross-polytope vertices (and `extra` interior ball points)
/// under `x -> center + bmap x`. For invertible `bmap` the enclosing
/// ellipsoid of the result is the image of the unit ball.
fn ball_image_polytope<R: Rng + ?Sized>(
    center: &DVector<f64>,
    bmap: &DMatrix<f64>,
    extra: usize,
    rng: &mut R,
) -> Vec<DVector<f64>> {
    let n = center.len();
    let mut verts = Vec::with_capacity(2 * n + extra);
    for k in 0..n {
        let col = bmap.column(k);
        verts.push(center + &col);
        verts.push(center - &col);
    }
    for _ in 0..extra {
        let dir = random_unit(n, rng);
        let r = 0.9 * rng.random::<f64>();
        verts.push(center + bmap * (r * dir));
    }
    verts
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-1.0..1.0f64)));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

/// An embedding plan: polytope vertex lists in carrier space plus the size
/// threshold that separates carriers from decoys.
///
/// Construction validates shape only (dimensions, finiteness, threshold);
/// geometric defects in individual polytopes surface as per-polytope
/// rejections during [`extract`].
#[derive(Debug, Clone, PartialEq)]
pub struct StegoPlan {
    dim: usize,
    carrier_threshold: f64,
    polytopes: Vec<Vec<DVector<f64>>>,
}

impl StegoPlan {
    pub fn new(
        dim: usize,
        carrier_threshold: f64,
        polytopes: Vec<Vec<DVector<f64>>>,
    ) -> Result<Self, StegoError> {
        if dim < 3 {
            return Err(StegoError::MalformedPlan(format!(
                "carrier dimension {dim} is below 3"
            )));
        }
        if !(carrier_threshold > 0.0 && carrier_threshold.is_finite()) {
            return Err(StegoError::MalformedPlan(format!(
                "carrier threshold {carrier_threshold} must be positive and finite"
            )));
        }
        for (k, poly) in polytopes.iter().enumerate() {
            if poly.is_empty() {
                return Err(StegoError::MalformedPlan(format!(
                    "polytope {k} has no vertices"
                )));
            }
            for v in poly {
                if v.len() != dim {
                    return Err(StegoError::MalformedPlan(format!(
                        "polytope {k} has a vertex of dimension {}, expected {dim}",
                        v.len()
                    )));
                }
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(StegoError::MalformedPlan(format!(
                        "polytope {k} has a non-finite vertex"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            carrier_threshold,
            polytopes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Longest-axis half-length below which a polytope is treated as decoy.
    pub fn carrier_threshold(&self) -> f64 {
        self.carrier_threshold
    }

    pub fn polytopes(&self) -> &[Vec<DVector<f64>>] {
        &self.polytopes
    }
}

/// Why a polytope was rejected during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Vertex list is unusable: wrong count, non-finite, or rank-deficient.
    Degenerate,
    /// The ellipsoid solver hit its iteration cap.
    NoConvergence,
    /// No unique longest axis at the given gap tolerance.
    NoUniqueAxis,
    /// Longest axis is shorter than the plan's carrier threshold.
    BelowThreshold,
    /// Sign code and payload signs disagree.
    ChecksumMismatch,
    /// Index slot does not read as a valid index.
    IndexInvalid,
    /// A previous polytope already produced this index.
    DuplicateIndex,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::Degenerate => "degenerate",
            RejectReason::NoConvergence => "no_convergence",
            RejectReason::NoUniqueAxis => "no_unique_axis",
            RejectReason::BelowThreshold => "below_threshold",
            RejectReason::ChecksumMismatch => "checksum_mismatch",
            RejectReason::IndexInvalid => "index_invalid",
            RejectReason::DuplicateIndex => "duplicate_index",
        };
        f.write_str(s)
    }
}

/// One rejected polytope: its position in the plan and the reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub position: usize,
    pub reason: RejectReason,
}

/// Outcome of scanning a plan: recovered messages sorted by index, plus a
/// rejection record per non-carrier polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub messages: Vec<PayloadMessage>,
    pub rejected: Vec<Rejection>,
}

/// Builds a plan hiding `messages`, with `decoy_count` decoy polytopes
/// shuffled among the carriers.
///
/// All messages must share one payload length. The carrier threshold is set
/// to half the shortest carrier axis; decoys are near-spherical (eigenvalue
/// spread far below `config.gap_tol`) and globally rescaled so their longest
/// semi-axis stays at or below 0.9 of the threshold. Decoys therefore fail
/// both the unique-axis test and the size test.
pub fn embed<R: Rng + ?Sized>(
    messages: &[PayloadMessage],
    decoy_count: usize,
    config: &RunConfig,
    rng: &mut R,
) -> Result<StegoPlan, StegoError> {
    config.validate()?;
    let first = messages.first().ok_or(StegoError::EmptyInput)?;
    let payload_len = first.payload().len();
    let n = payload_len + 2;

    let mut seen = std::collections::BTreeSet::new();
    for msg in messages {
        if msg.payload().len() != payload_len {
            return Err(StegoError::PayloadLengthMismatch {
                expected: payload_len,
                got: msg.payload().len(),
            });
        }
        if !seen.insert(msg.index()) {
            return Err(StegoError::DuplicateIndex { index: msg.index() });
        }
    }

    let mut polytopes = Vec::with_capacity(messages.len() + decoy_count);
    let mut min_axis = f64::INFINITY;
    for msg in messages {
        let encoded = encode_payload(msg, n, config.payload_min)?;
        let e = make_axis_ellipsoid(encoded.coords(), config.axis_ratio)?;
        min_axis = min_axis.min(encoded.coords().norm());
        let extra = rng.random_range(0..=n);
        polytopes.push(make_cover_polytope(&e, extra, rng));
    }
    let tau = min_axis / 2.0;

    if decoy_count > 0 {
        // Near-spherical decoys: relative semi-axis spread far below the
        // gap tolerance, so no unique axis exists at extraction.
        let spread = (config.gap_tol / 8.0).min(0.01);
        let mut decoys = Vec::with_capacity(decoy_count);
        let mut longest: f64 = 0.0;
        for _ in 0..decoy_count {
            let r0 = rng.random_range(0.4..1.6);
            let lengths =
                DVector::from_iterator(n, (0..n).map(|_| r0 * (1.0 + spread * rng.random::<f64>())));
            longest = longest.max(lengths.max());
            let rot = random_rotation(n, rng);
            let bmap = &rot * DMatrix::from_diagonal(&lengths);
            let center =
                DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-0.5..0.5) * r0));
            let extra = rng.random_range(0..=n);
            decoys.push(ball_image_polytope(&center, &bmap, extra, rng));
        }
        // Rescale so the largest decoy axis sits at 0.9 tau, under the
        // threshold with margin.
        let scale = 0.9 * tau / longest;
        for poly in &mut decoys {
            for v in poly.iter_mut() {
                *v *= scale;
            }
        }
        polytopes.extend(decoys);
    }

    polytopes.shuffle(rng);
    StegoPlan::new(n, tau, polytopes)
}

/// Scans every polytope of a plan and recovers the hidden messages.
///
/// Each polytope, independently and in order: solve for its enclosing
/// ellipsoid at gap target `eps`, read off the longest axis at `gap_tol`,
/// require the half-length to reach the plan's carrier threshold, then
/// decode. The first failing stage becomes the polytope's rejection reason;
/// an index seen before is rejected as a duplicate. Recovered messages come
/// back sorted by index.
///
/// # Panics
///
/// Panics when `eps` is outside `(0, 1)` or `gap_tol` is not positive:
/// those are caller bugs, not plan defects.
pub fn extract(plan: &StegoPlan, eps: f64, gap_tol: f64) -> ExtractionResult {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    assert!(
        gap_tol > 0.0 && gap_tol.is_finite(),
        "gap_tol must be positive and finite"
    );
    let mut messages: Vec<PayloadMessage> = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

    for (position, poly) in plan.polytopes().iter().enumerate() {
        let reject = |reason| Rejection { position, reason };
        let ps = match PointSet::new(poly.clone()) {
            Ok(ps) => ps,
            Err(_) => {
                rejected.push(reject(RejectReason::Degenerate));
                continue;
            }
        };
        let mut rng =
            ChaCha8Rng::seed_from_u64(EXTRACT_SEED.wrapping_add(position as u64));
        let sol = match mvee::solve_mvee(&ps, eps, &mut rng) {
            Ok(sol) => sol,
            Err(MveeError::NoConvergence { .. }) => {
                rejected.push(reject(RejectReason::NoConvergence));
                continue;
            }
            Err(_) => {
                rejected.push(reject(RejectReason::Degenerate));
                continue;
            }
        };
        let (axis, half_length) = match mvee::principal_axis(&sol.ellipsoid, gap_tol) {
            Ok(pair) => pair,
            Err(_) => {
                rejected.push(reject(RejectReason::NoUniqueAxis));
                continue;
            }
        };
        if half_length < plan.carrier_threshold() {
            rejected.push(reject(RejectReason::BelowThreshold));
            continue;
        }
        let msg = match decode_payload(&axis) {
            Ok(msg) => msg,
            Err(StegoError::IndexInvalid { .. }) => {
                rejected.push(reject(RejectReason::IndexInvalid));
                continue;
            }
            Err(_) => {
                rejected.push(reject(RejectReason::ChecksumMismatch));
                continue;
            }
        };
        if !seen.insert(msg.index()) {
            rejected.push(reject(RejectReason::DuplicateIndex));
            continue;
        }
        messages.push(msg);
    }
    messages.sort_by_key(|m| m.index());
    ExtractionResult { messages, rejected }
}
