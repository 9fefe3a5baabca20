//! Person re-identification from skin spectral signatures in hyperspectral cubes.
//!
//! The pipeline reads a cube, over-segments it into entropy-rate superpixels
//! using spectral-angle similarity, averages the spectra of the superpixels a
//! skin mask touches, and ranks gallery images for each probe by the mean
//! spectral angle between their skin signatures. Ranking quality is reported
//! as a cumulative matching characteristic (CMC) curve.

pub mod cube;
pub mod error;
pub mod pipeline;
pub mod pnm;
pub mod reid;
pub mod segment;
pub mod spectral;
pub mod synth;

pub use cube::{integrate_to_rgb, read_cube, write_cube, DataType, HyperCube, Interleave, RgbImage, RgbWindows};
pub use error::{Error, Result};
pub use pipeline::{Mode, PipelineConfig};
pub use reid::{cmc, distance_matrix, image_distance, rank_of_match, CmcCurve, DatasetManifest, DistanceMatrix};
pub use segment::{segment, segment_cube, LatticeGraph, SegmentParams, Segmentation, SuperpixelMap};
pub use spectral::{mean_signature, skin_signatures, spectral_angle, SkinMask, SkinSignatureSet, SpectralSignature};
pub use synth::{generate_dataset, generate_scenes, make_metamer_pair, SyntheticSpec};
