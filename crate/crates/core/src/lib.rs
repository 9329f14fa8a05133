//! Non-rigid 3D shape retrieval toolkit.
//!
//! The crate covers the full retrieval pipeline for collections of
//! articulated (pose-varying) triangle meshes:
//!
//! - [`mesh`]: triangle mesh representation, OFF/OBJ I/O, validation,
//!   decimation, and simple intrinsic measures (area, volume, compactness).
//! - [`spectral`]: cotangent Laplace-Beltrami operator, partial
//!   eigendecomposition, and the spectral descriptor family (HKS, WKS,
//!   SI-HKS, SGWS, biharmonic distances, reduced biharmonic spectra, ISPM).
//! - [`geodesic`]: graph geodesic distance matrices, geodesic SVD features,
//!   SMACOF multidimensional scaling, and ray-based extent descriptors.
//! - [`local_features`]: principal curvatures, curvature-index features,
//!   oriented surface sampling, and augmented point feature histograms.
//! - [`hapt`]: multiscale area projection transform voxel maps, histogram
//!   descriptors, Jeffrey divergence, and PCA+LDA trained mappings.
//! - [`bof`]: k-means codebooks, soft assignment, sparse-coding pursuit,
//!   pooling, and manifold ranking.
//! - [`fusion`]: entropy-weighted similarity fusion and particle-swarm
//!   weight search.
//! - [`eval`]: ranked-list retrieval measures (NN, tiers, E-measure, DCG),
//!   precision/recall curves, confusion matrices, and pose-error analyses.
//! - [`datagen`]: a procedural labelled benchmark of articulated
//!   capsule-limb figures with class and pose ground truth.
//! - [`pipeline`]: the method registry, caching, and file formats shared by
//!   the command-line frontend.

pub mod bof;
pub mod datagen;
pub mod eval;
pub mod fusion;
pub mod geodesic;
pub mod hapt;
pub mod linalg;
pub mod local_features;
pub mod mesh;
pub mod pipeline;
pub mod spectral;

pub use mesh::TriangleMesh;
