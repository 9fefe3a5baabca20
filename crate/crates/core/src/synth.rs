//! Synthetic gallery/probe scenes with known skin signatures.
//!
//! In metamer mode every person's skin spectrum integrates to the same
//! broadband RGB triple but differs at narrowband resolution, so a color
//! pipeline has nothing to match on while a hyperspectral one does.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::cube::{integrate_to_rgb, write_cube, DataType, HyperCube, Interleave, RgbWindows};
use crate::error::{Error, Result};
use crate::pnm;
use crate::reid::{DatasetManifest, ManifestEntry, Role};
use crate::spectral::{angle_between, SkinMask, SpectralSignature};

/// Retry budget for drawing one spectrum that meets its constraints.
pub const MAX_ATTEMPTS: usize = 100;

/// Minimum angle between any background material and any skin signature.
pub const BACKGROUND_SEPARATION: f64 = 0.5;

/// Two spectra with equal means over each of three band windows.
#[derive(Debug, Clone, PartialEq)]
pub struct MetamerPair {
    pub first: SpectralSignature,
    pub second: SpectralSignature,
    pub windows: RgbWindows,
}

/// Smooth skin-like reflectance: a red-edge rise around 600 nm over a flat floor.
fn base_skin(wavelengths: &[f64]) -> Vec<f64> {
    wavelengths
        .iter()
        .map(|&w| 0.32 + 0.25 / (1.0 + (-(w - 600.0) / 25.0).exp()) + 0.04 * ((w - 400.0) / 90.0).sin())
        .collect()
}

fn window_members(wavelengths: &[f64], windows: &RgbWindows) -> Result<Vec<Vec<usize>>> {
    windows
        .channels()
        .iter()
        .map(|w| {
            let idx = w.band_indices(wavelengths);
            if idx.len() < 2 {
                Err(Error::InvalidParameter(format!(
                    "band window {w} holds {} band(s); metamers need at least 2",
                    idx.len()
                )))
            } else {
                Ok(idx)
            }
        })
        .collect()
}

/// Random oscillation with zero mean inside every window.
fn window_neutral_oscillation(wavelengths: &[f64], members: &[Vec<usize>], rng: &mut impl Rng) -> Vec<f64> {
    let mut delta = vec![0.0; wavelengths.len()];
    for _ in 0..4 {
        let period = rng.gen_range(20.0..120.0);
        let phase = rng.gen_range(0.0..TAU);
        let amp = rng.gen_range(0.3..1.0);
        for (d, &w) in delta.iter_mut().zip(wavelengths) {
            *d += amp * (TAU * w / period + phase).sin();
        }
    }
    for idx in members {
        let mean = idx.iter().map(|&b| delta[b]).sum::<f64>() / idx.len() as f64;
        idx.iter().for_each(|&b| delta[b] -= mean);
    }
    delta
}

/// `base + delta`, with `delta` shrunk just enough to keep every band non-negative.
fn perturb_nonnegative(base: &[f64], delta: &[f64]) -> Vec<f64> {
    let shrink = base
        .iter()
        .zip(delta)
        .filter(|(_, d)| **d < 0.0)
        .map(|(b, d)| b / -d)
        .fold(1.0f64, f64::min);
    base.iter().zip(delta).map(|(b, d)| (b + shrink * d).max(0.0)).collect()
}

/// `count` spectra that are mutual metamers under `windows` and pairwise at
/// least `min_angle` apart.
pub fn metamer_family(
    wavelengths: &[f64],
    windows: &RgbWindows,
    count: usize,
    min_angle: f64,
    rng: &mut impl Rng,
) -> Result<Vec<SpectralSignature>> {
    if !(min_angle > 0.0 && min_angle <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "min_angle must be in (0, 0.5], got {min_angle}"
        )));
    }
    let members = window_members(wavelengths, windows)?;
    let base = base_skin(wavelengths);
    let amplitude = 0.9 * base.iter().copied().fold(f64::INFINITY, f64::min);

    let mut family: Vec<Vec<f64>> = Vec::with_capacity(count);
    while family.len() < count {
        let mut accepted = false;
        for _ in 0..MAX_ATTEMPTS {
            let mut delta = window_neutral_oscillation(wavelengths, &members, rng);
            let peak = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if peak > 0.0 {
                delta.iter_mut().for_each(|d| *d *= amplitude / peak);
            }
            let candidate = perturb_nonnegative(&base, &delta);
            let separated = family
                .iter()
                .all(|other| angle_between(other, &candidate).is_ok_and(|a| a >= min_angle));
            if separated {
                family.push(candidate);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::MetamerInfeasible {
                attempts: MAX_ATTEMPTS,
                min_angle,
            });
        }
    }
    family.into_iter().map(SpectralSignature::new).collect()
}

pub fn make_metamer_pair(wavelengths: &[f64], windows: &RgbWindows, min_angle: f64, seed: u64) -> Result<MetamerPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = metamer_family(wavelengths, windows, 2, min_angle, &mut rng)?;
    let second = family.pop().unwrap();
    let first = family.pop().unwrap();
    Ok(MetamerPair {
        first,
        second,
        windows: *windows,
    })
}

/// How person skin signatures are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignatureMode {
    /// Mutual metamers under the configured RGB windows, pairwise `min_angle` apart.
    Metamer { min_angle: f64 },
    /// Independent smooth spectra; RGB can tell these apart too.
    Distinct,
}

/// Illumination change applied to probe images on top of the scalar gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Illumination {
    Scalar,
    /// Linear spectral tilt of random sign and magnitude up to `strength`
    /// across the band range.
    Tilted {
        strength: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub height: usize,
    pub width: usize,
    pub wavelengths: Vec<f64>,
    pub persons: usize,
    /// Skin patch size; its position is drawn per image.
    pub patch: (usize, usize),
    /// Rectangular clutter objects of other materials per image.
    pub clutter: usize,
    pub noise: f64,
    pub gain_range: (f64, f64),
    pub illumination: Illumination,
    pub mode: SignatureMode,
    pub windows: RgbWindows,
    pub data_type: DataType,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            height: 48,
            width: 48,
            wavelengths: crate::cube::uniform_wavelengths(400.0, 1000.0, 64),
            persons: 15,
            patch: (12, 12),
            clutter: 2,
            noise: 0.005,
            gain_range: (0.7, 1.3),
            illumination: Illumination::Scalar,
            mode: SignatureMode::Metamer { min_angle: 0.15 },
            windows: RgbWindows::default(),
            data_type: DataType::Float32,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.persons < 2 {
            return bad(format!("need at least 2 persons, got {}", self.persons));
        }
        let (ph, pw) = self.patch;
        if ph == 0 || pw == 0 || ph > self.height || pw > self.width {
            return bad(format!(
                "patch {ph}x{pw} does not fit a {}x{} image",
                self.height, self.width
            ));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad(format!("noise level must be >= 0, got {}", self.noise));
        }
        let (lo, hi) = self.gain_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("gain range [{lo}, {hi}] must be positive and ordered"));
        }
        if let Illumination::Tilted { strength } = self.illumination {
            if !(0.0..1.0).contains(&strength) {
                return bad(format!("tilt strength must be in [0, 1), got {strength}"));
            }
        }
        crate::cube::check_wavelengths(&self.wavelengths)?;
        if self.wavelengths.is_empty() {
            return bad("no bands".into());
        }
        self.windows.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row..self.row + self.height).contains(&row) && (self.col..self.col + self.width).contains(&col)
    }
}

#[derive(Debug, Clone)]
pub struct SceneImage {
    pub entry: ManifestEntry,
    pub cube: HyperCube,
    pub mask: SkinMask,
    pub patch: Rect,
    pub gain: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub images: Vec<SceneImage>,
    /// Skin signature of each person, in person order.
    pub skin: Vec<SpectralSignature>,
}

fn smooth_spectrum(wavelengths: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let level = rng.gen_range(0.1..0.6);
    let slope = rng.gen_range(-0.8..0.8);
    let period = rng.gen_range(80.0..400.0);
    let phase = rng.gen_range(0.0..TAU);
    let (first, last) = (wavelengths[0], *wavelengths.last().unwrap());
    let span = (last - first).max(1.0);
    wavelengths
        .iter()
        .map(|&w| {
            let t = (w - first) / span;
            (level * (1.0 + slope * (t - 0.5)) + 0.15 * (TAU * w / period + phase).sin()).max(0.02)
        })
        .collect()
}

/// Material spectrum at least [`BACKGROUND_SEPARATION`] from every skin
/// signature, and visibly different from skin in RGB as well.
fn background_material(spec: &SyntheticSpec, skin: &[SpectralSignature], rng: &mut impl Rng) -> Result<Vec<f64>> {
    let rgb_of = |s: &[f64]| -> Result<Vec<f64>> {
        let cube = HyperCube::new(1, 1, spec.wavelengths.clone(), s.to_vec())?;
        Ok(integrate_to_rgb(&cube, &spec.windows)?.data().to_vec())
    };
    let skin_rgb = skin.iter().map(|s| rgb_of(s.values())).collect::<Result<Vec<_>>>()?;
    for _ in 0..MAX_ATTEMPTS {
        let candidate = smooth_spectrum(&spec.wavelengths, rng);
        let rgb = rgb_of(&candidate)?;
        let far = skin.iter().zip(&skin_rgb).all(|(s, s_rgb)| {
            angle_between(s.values(), &candidate).is_ok_and(|a| a >= BACKGROUND_SEPARATION)
                && angle_between(s_rgb, &rgb).is_ok_and(|a| a >= 0.2)
        });
        if far {
            return Ok(candidate);
        }
    }
    Err(Error::InvalidParameter(
        "could not draw a background material separated from all skin signatures".into(),
    ))
}

fn random_rect(rng: &mut impl Rng, height: usize, width: usize, size: (usize, usize)) -> Rect {
    Rect {
        row: rng.gen_range(0..=height - size.0),
        col: rng.gen_range(0..=width - size.1),
        height: size.0,
        width: size.1,
    }
}

fn image_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn quantize(value: f64, data_type: DataType) -> f64 {
    match data_type {
        DataType::Float32 => value as f32 as f64,
        DataType::Float64 => value,
        DataType::Uint16 => (value * crate::cube::UINT16_SCALE).round() / crate::cube::UINT16_SCALE,
    }
}

fn render_image(spec: &SyntheticSpec, skin: &[SpectralSignature], person: usize, role: Role) -> Result<SceneImage> {
    let stream = 1 + 2 * person as u64 + u64::from(role == Role::Probe);
    let mut rng = image_rng(spec.seed, stream);
    let (h, w) = (spec.height, spec.width);

    let background = background_material(spec, skin, &mut rng)?;
    let mut clutter = Vec::with_capacity(spec.clutter);
    for _ in 0..spec.clutter {
        let size = (rng.gen_range(h / 6..=h / 3).max(1), rng.gen_range(w / 6..=w / 3).max(1));
        clutter.push((
            random_rect(&mut rng, h, w, size),
            background_material(spec, skin, &mut rng)?,
        ));
    }
    let patch = random_rect(&mut rng, h, w, spec.patch);

    let gain = match role {
        Role::Gallery => 1.0,
        Role::Probe => {
            let (lo, hi) = spec.gain_range;
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..=hi)
            }
        }
    };
    let (first, last) = (spec.wavelengths[0], *spec.wavelengths.last().unwrap());
    let illumination: Vec<f64> = match (role, spec.illumination) {
        (Role::Probe, Illumination::Tilted { strength }) => {
            let s = rng.gen_range(-strength..=strength);
            let span = (last - first).max(1.0);
            spec.wavelengths
                .iter()
                .map(|&wl| 1.0 + s * (2.0 * (wl - first) / span - 1.0))
                .collect()
        }
        _ => vec![1.0; spec.wavelengths.len()],
    };

    let noise = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE)).expect("valid noise");
    let skin_spectrum = skin[person].values();
    let cube = HyperCube::from_fn(h, w, spec.wavelengths.clone(), |row, col| {
        let material: &[f64] = if patch.contains(row, col) {
            skin_spectrum
        } else {
            clutter
                .iter()
                .rev()
                .find(|(r, _)| r.contains(row, col))
                .map_or(background.as_slice(), |(_, m)| m.as_slice())
        };
        material
            .iter()
            .zip(&illumination)
            .map(|(m, l)| {
                let n = if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                quantize((m * l * gain + n).max(0.0), spec.data_type)
            })
            .collect()
    })?;
    let mask = SkinMask::from_fn(h, w, |r, c| patch.contains(r, c));

    let tag = match role {
        Role::Gallery => "gallery",
        Role::Probe => "probe",
    };
    let image_id = format!("{tag}_{:02}", person + 1);
    let entry = ManifestEntry {
        cube: PathBuf::from(format!("{image_id}.hdr")),
        raster: None,
        mask: PathBuf::from(format!("{image_id}_mask.pgm")),
        image_id,
        person_id: format!("person_{:02}", person + 1),
        role,
    };
    Ok(SceneImage {
        entry,
        cube,
        mask,
        patch,
        gain,
    })
}

/// Draws skin signatures and renders one gallery and one probe image per person.
pub fn generate_scenes(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = image_rng(spec.seed, 0);
    let skin = match spec.mode {
        SignatureMode::Metamer { min_angle } => {
            metamer_family(&spec.wavelengths, &spec.windows, spec.persons, min_angle, &mut rng)?
        }
        SignatureMode::Distinct => (0..spec.persons)
            .map(|_| SpectralSignature::new(smooth_spectrum(&spec.wavelengths, &mut rng)))
            .collect::<Result<_>>()?,
    };

    let jobs: Vec<(usize, Role)> = (0..spec.persons)
        .flat_map(|p| [(p, Role::Gallery), (p, Role::Probe)])
        .collect();
    let images = jobs
        .par_iter()
        .map(|&(p, role)| render_image(spec, &skin, p, role))
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::new(images.iter().map(|i| i.entry.clone()).collect())?;
    Ok(SyntheticDataset { manifest, images, skin })
}

/// Writes every cube, mask and `manifest.json` into `dir` (created if needed).
pub fn write_dataset(dataset: &SyntheticDataset, dir: &Path, data_type: DataType) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    dataset.images.par_iter().try_for_each(|img| -> Result<()> {
        write_cube(
            &img.cube,
            &dir.join(&img.entry.cube),
            &dir.join(img.entry.raster_path()),
            Interleave::Bip,
            data_type,
        )?;
        pnm::write_mask(&img.mask, &dir.join(&img.entry.mask))
    })?;
    let path = dir.join("manifest.json");
    fs::write(&path, dataset.manifest.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// [`generate_scenes`] followed by [`write_dataset`]; returns the manifest path.
pub fn generate_dataset(spec: &SyntheticSpec, dir: &Path) -> Result<(DatasetManifest, PathBuf)> {
    let dataset = generate_scenes(spec)?;
    let path = write_dataset(&dataset, dir, spec.data_type)?;
    Ok((dataset.manifest, path))
}
