//! Hides ordered real vectors inside the geometry of point clouds.
//!
//! A message is laid out as a vector `w` in carrier space, an ellipsoid is
//! built whose unique longest semi-axis is exactly `w`, and that ellipsoid
//! is handed out only as a polytope touching it at the right points. The
//! minimum-volume enclosing ellipsoid of the polytope is the ellipsoid
//! itself, so whoever can solve for it ([`mvee::solve_mvee`]) reads the
//! message back off the longest axis; decoy polytopes with no distinguished
//! axis blend into the same plan ([`stego`]). A toy bit-level homomorphic
//! scheme ([`fhe`]) rounds out the pipeline for experiments that keep
//! payload post-processing encrypted.
//!
//! The [`io`] module defines the text formats used by the `polystego`
//! binary; [`config::RunConfig`] carries the shared tuning knobs.

pub mod config;
pub mod fhe;
pub mod io;
pub mod mvee;
pub mod stego;

pub use config::RunConfig;
pub use mvee::{
    coreset_init, ellipsoid_from_weights, principal_axis, solve_mvee, solve_mvee_capped,
    Ellipsoid, MveeError, MveeSolution, PointSet, SolveReport, WeightVector,
};
pub use stego::{
    decode_payload, embed, encode_payload, extract, make_axis_ellipsoid, make_cover_polytope,
    EncodedVector, ExtractionResult, PayloadMessage, RejectReason, Rejection, StegoError,
    StegoPlan,
};
