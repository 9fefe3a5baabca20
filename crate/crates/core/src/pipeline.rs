//! Manifest-to-CMC driver shared by the CLI and the end-to-end tests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::cube::{integrate_to_rgb, read_cube, HyperCube, RgbWindows};
use crate::error::{Error, Result};
use crate::pnm;
use crate::reid::{cmc, distance_matrix_with, Aggregation, CmcCurve, DatasetManifest, DistanceMatrix, Role};
use crate::segment::{segment_cube, SegmentParams, Segmentation};
use crate::spectral::{skin_signatures_with_overlap, SkinMask, SkinSignatureSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mode {
    /// Full-resolution spectra.
    #[default]
    Hyper,
    /// Spectra box-integrated to three broadband channels first.
    Rgb,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hyper" | "hyperspectral" => Ok(Mode::Hyper),
            "rgb" => Ok(Mode::Rgb),
            other => Err(Error::Config(format!("mode must be hyper or rgb, got {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Hyper => "hyper",
            Mode::Rgb => "rgb",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub aggregation: Aggregation,
    pub rgb_windows: RgbWindows,
    pub min_overlap: f64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 100,
            lambda: None,
            sigma: None,
            aggregation: Aggregation::Mean,
            rgb_windows: RgbWindows::default(),
            min_overlap: 0.0,
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_overlap) {
            return Err(Error::Config(format!(
                "min_overlap {} outside [0, 1]",
                self.min_overlap
            )));
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config(format!("lambda must be >= 0, got {l}")));
            }
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Config(format!("sigma must be > 0, got {s}")));
            }
        }
        self.rgb_windows.validate()
    }

    /// Applies one `key = value` setting. `lambda`/`sigma` accept `auto`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let number = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: {v:?} is not a number")))
        };
        let optional = |v: &str| -> Result<Option<f64>> {
            if v.eq_ignore_ascii_case("auto") {
                Ok(None)
            } else {
                number(v).map(Some)
            }
        };
        match key.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "k" => {
                self.k = value
                    .parse()
                    .map_err(|_| Error::Config(format!("k: {value:?} is not a count")))?
            }
            "lambda" => self.lambda = optional(value)?,
            "sigma" => self.sigma = optional(value)?,
            "aggregation" => self.aggregation = value.parse()?,
            "rgb_windows" => self.rgb_windows = value.parse()?,
            "min_overlap" | "overlap" => self.min_overlap = number(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a `key = value` file body (`#` starts a comment) over the defaults.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        config.apply_kv(text)?;
        Ok(config)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)?;
        }
        self.validate()
    }

    pub fn segment_params(&self) -> SegmentParams {
        SegmentParams {
            k: self.k,
            lambda: self.lambda,
            sigma: self.sigma,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub image_id: String,
    pub role: Role,
    pub cube: HyperCube,
    pub mask: SkinMask,
}

impl From<&crate::synth::SceneImage> for LoadedImage {
    fn from(scene: &crate::synth::SceneImage) -> Self {
        LoadedImage {
            image_id: scene.entry.image_id.clone(),
            role: scene.entry.role,
            cube: scene.cube.clone(),
            mask: scene.mask.clone(),
        }
    }
}

/// Reads every cube and mask named in a manifest loaded with [`DatasetManifest::load`].
pub fn load_images(manifest: &DatasetManifest) -> Result<Vec<LoadedImage>> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let cube = read_cube(&e.cube, &e.raster_path())?;
            let mask = pnm::read_mask(&e.mask)?;
            if mask.dims() != cube.dims() {
                return Err(Error::DimensionMismatch {
                    expected: cube.dims(),
                    actual: mask.dims(),
                });
            }
            Ok(LoadedImage {
                image_id: e.image_id.clone(),
                role: e.role,
                cube,
                mask,
            })
        })
        .collect()
}

/// The cube the pipeline actually segments: unchanged, or its three-band RGB rendering.
pub fn mode_cube(cube: &HyperCube, mode: Mode, windows: &RgbWindows) -> Result<HyperCube> {
    match mode {
        Mode::Hyper => Ok(cube.clone()),
        Mode::Rgb => integrate_to_rgb(cube, windows)?.to_cube(windows),
    }
}

#[derive(Debug, Clone)]
pub struct ImageResult {
    pub image_id: String,
    pub role: Role,
    pub segmentation: Segmentation,
    pub signatures: SkinSignatureSet,
    pub wavelengths: Vec<f64>,
}

pub fn process_image(image: &LoadedImage, mode: Mode, config: &PipelineConfig) -> Result<ImageResult> {
    let cube = mode_cube(&image.cube, mode, &config.rgb_windows)?;
    let segmentation = segment_cube(&cube, &config.segment_params())?;
    let signatures = skin_signatures_with_overlap(
        &image.image_id,
        &cube,
        &segmentation.map,
        &image.mask,
        config.min_overlap,
    )?;
    Ok(ImageResult {
        image_id: image.image_id.clone(),
        role: image.role,
        segmentation,
        signatures,
        wavelengths: cube.wavelengths().to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub images: Vec<ImageResult>,
    pub matrix: DistanceMatrix,
    pub curve: CmcCurve,
}

/// Segments every image, extracts skin signatures, and scores probes against
/// the gallery. Row and column order follow the manifest.
pub fn run_images(
    images: &[LoadedImage],
    manifest: &DatasetManifest,
    mode: Mode,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let results = images
        .par_iter()
        .map(|img| process_image(img, mode, config))
        .collect::<Result<Vec<_>>>()?;
    let sets = |role: Role| -> Vec<SkinSignatureSet> {
        results
            .iter()
            .filter(|r| r.role == role)
            .map(|r| r.signatures.clone())
            .collect()
    };
    let matrix = distance_matrix_with(&sets(Role::Probe), &sets(Role::Gallery), config.aggregation)?;
    let curve = cmc(&matrix, manifest)?;
    Ok(PipelineOutput {
        images: results,
        matrix,
        curve,
    })
}

pub fn run_manifest(manifest_path: &Path, mode: Mode, config: &PipelineConfig) -> Result<PipelineOutput> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let images = load_images(&manifest)?;
    run_images(&images, &manifest, mode, config)
}

/// Writes `distances.csv`, `cmc.csv` and per-image `signatures/<id>.csv` into `dir`.
pub fn write_outputs(output: &PipelineOutput, dir: &Path) -> Result<()> {
    let sig_dir = dir.join("signatures");
    fs::create_dir_all(&sig_dir).map_err(|e| Error::io(&sig_dir, e))?;
    let write = |path: PathBuf, text: String| fs::write(&path, text).map_err(|e| Error::io(&path, e));
    for img in &output.images {
        write(
            sig_dir.join(format!("{}.csv", img.image_id)),
            img.signatures.to_csv(&img.wavelengths)?,
        )?;
    }
    write(dir.join("distances.csv"), output.matrix.to_csv())?;
    write(dir.join("cmc.csv"), output.curve.to_csv())
}
