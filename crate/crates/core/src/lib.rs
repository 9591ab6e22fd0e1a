//! Real-time as-rigid-as-possible deformation of 3D Gaussian splat objects.
//!
//! The pipeline is: load a splat PLY ([`splat`]), sample a sparse control graph
//! ([`graph`]), solve the constrained rigidity energy for user handles
//! ([`arap`]), skin the result back onto every Gaussian ([`skinning`]), then
//! preview ([`render`]) and composite ([`composite`]) the edited object.

pub mod arap;
pub mod composite;
pub mod config;
pub mod error;
pub mod graph;
pub mod render;
pub mod skinning;
pub mod splat;
pub mod synth;

pub use arap::{deform, DeformResult, FactorizedSystem, HandleSet};
pub use error::{Error, Result};
pub use graph::{build_control_graph, ControlGraph, GraphOptions, Weighting};
pub use skinning::{apply_lbs, bind, SkinBinding};
pub use splat::{GaussianCloud, LoadOptions};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
