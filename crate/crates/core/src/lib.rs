//! holoscale-core: a numerical laboratory for automorphism families of
//! domains in C^2.
//!
//! The crate evaluates parameterized holomorphic map families, their
//! Jacobian eigenvalue fields, Frankel and eigenvector scalings, boundary
//! type estimates, and Hausdorff limits of scaled domains in CP^2. Kernels
//! are generic over the scalar (`f32`/`f64`); the pipeline and report schema
//! are pinned to `f64`.

pub mod boundary;
pub mod domain;
pub mod dsl;
pub mod error;
pub mod family;
pub mod grid;
pub mod holo_diff;
pub mod pipeline;
pub mod projective;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod scaling;
pub mod wirtinger;

pub use error::{Error, EvalError, ParseError, Result};
pub use scalar::Real;

// Values are immutable after construction; grid sweeps may share them
// across threads freely.
const _: () = {
    const fn shareable<T: Send + Sync>() {}
    shareable::<dsl::Expr>();
    shareable::<family::MapFamily<f64>>();
    shareable::<domain::DomainSpec<f64>>();
    shareable::<scaling::ScalingStep<f64>>();
    shareable::<boundary::NormalForm<f64>>();
    shareable::<projective::CloudCP2<f64>>();
    shareable::<report::Report>();
};

/// Concrete scalar used by the CLI and the report schema.
pub type F = f64;
/// Concrete complex scalar.
pub type C = num_complex::Complex64;
/// Concrete point of C^2.
pub type Point = (C, C);
/// Concrete experiment configuration.
pub type Config = dsl::ExperimentConfig<F>;
