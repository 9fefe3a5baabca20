//! Spectral angle, region mean signatures and skin-superpixel selection.

use std::fmt::Write as _;

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::segment::SuperpixelMap;

/// Mean reflectance spectrum of a region. Non-negative, finite and not all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignature(Vec<f64>);

impl SpectralSignature {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ZeroVector);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signature values must be finite and non-negative, got {v}"
            )));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(SpectralSignature(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn bands(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        SpectralSignature::new(self.0.iter().map(|v| v * gain).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Angle in radians between two spectra, `acos(a·b / (|a| |b|))`, with the
/// cosine clamped to `[-1, 1]`.
pub fn spectral_angle(a: &SpectralSignature, b: &SpectralSignature) -> Result<f64> {
    angle_between(a.values(), b.values())
}

/// Slice form of [`spectral_angle`] for raw pixel spectra.
pub fn angle_between(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::BandMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(angle_from_products(dot, aa, bb))
}

/// `sqrt(aa * bb)` instead of `sqrt(aa) * sqrt(bb)`: for `a == b` the ratio is exactly 1.
#[inline]
pub(crate) fn angle_from_products(dot: f64, aa: f64, bb: f64) -> f64 {
    let cos = dot / (aa * bb).sqrt();
    cos.clamp(-1.0, 1.0).acos()
}

/// Per-band mean over every pixel carrying `label`.
pub fn mean_signature(cube: &HyperCube, map: &SuperpixelMap, label: usize) -> Result<SpectralSignature> {
    check_dims(cube, map.dims())?;
    if !map.contains_label(label) {
        return Err(Error::UnknownLabel(label));
    }
    let mut sum = vec![0.0; cube.bands()];
    let mut count = 0usize;
    for (spectrum, &l) in cube.spectra().zip(map.labels()) {
        if l as usize == label {
            sum.iter_mut().zip(spectrum).for_each(|(s, v)| *s += v);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::UnknownLabel(label));
    }
    SpectralSignature::new(sum.into_iter().map(|s| s / count as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkinMask {
    height: usize,
    width: usize,
    flags: Vec<bool>,
}

impl SkinMask {
    pub fn new(height: usize, width: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != height * width {
            return Err(Error::InvalidParameter(format!(
                "mask of {height}x{width} needs {} flags, got {}",
                height * width,
                flags.len()
            )));
        }
        Ok(SkinMask { height, width, flags })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let flags = (0..height * width).map(|i| f(i / width, i % width)).collect();
        SkinMask { height, width, flags }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkinEntry {
    pub label: usize,
    pub signature: SpectralSignature,
    /// Pixels in the whole superpixel.
    pub pixels: usize,
}

/// Skin superpixel signatures of one image, ordered by label.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinSignatureSet {
    image_id: String,
    entries: Vec<SkinEntry>,
}

impl SkinSignatureSet {
    pub fn new(image_id: impl Into<String>, mut entries: Vec<SkinEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySignatureSet);
        }
        entries.sort_by_key(|e| e.label);
        if let Some(w) = entries.windows(2).find(|w| w[0].label == w[1].label) {
            return Err(Error::InvalidParameter(format!(
                "duplicate superpixel label {}",
                w[0].label
            )));
        }
        if entries.iter().any(|e| e.pixels == 0) {
            return Err(Error::InvalidParameter("skin entry with zero pixels".into()));
        }
        let bands = entries[0].signature.bands();
        if let Some(e) = entries.iter().find(|e| e.signature.bands() != bands) {
            return Err(Error::BandMismatch {
                left: bands,
                right: e.signature.bands(),
            });
        }
        Ok(SkinSignatureSet {
            image_id: image_id.into(),
            entries,
        })
    }

    /// Convenience constructor for bare signatures; labels are positional and counts are 1.
    pub fn from_signatures(image_id: impl Into<String>, signatures: Vec<SpectralSignature>) -> Result<Self> {
        let entries = signatures
            .into_iter()
            .enumerate()
            .map(|(label, signature)| SkinEntry {
                label,
                signature,
                pixels: 1,
            })
            .collect();
        SkinSignatureSet::new(image_id, entries)
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn entries(&self) -> &[SkinEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bands(&self) -> usize {
        self.entries[0].signature.bands()
    }

    pub fn signatures(&self) -> impl Iterator<Item = &SpectralSignature> {
        self.entries.iter().map(|e| &e.signature)
    }

    /// CSV with header `label,<wavelength>,...` and one row per entry.
    pub fn to_csv(&self, wavelengths: &[f64]) -> Result<String> {
        if wavelengths.len() != self.bands() {
            return Err(Error::BandMismatch {
                left: wavelengths.len(),
                right: self.bands(),
            });
        }
        let mut out = String::from("label");
        for w in wavelengths {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
        for e in &self.entries {
            let _ = write!(out, "{}", e.label);
            for v in e.signature.values() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses [`SkinSignatureSet::to_csv`] output. Pixel counts are not part of
    /// the format, so entries read back carry a count of 1.
    pub fn from_csv(image_id: impl Into<String>, text: &str) -> Result<(Vec<f64>, Self)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Csv("empty signature file".into()))?;
        let mut cols = header.split(',');
        if cols.next().map(str::trim) != Some("label") {
            return Err(Error::Csv("first column must be `label`".into()));
        }
        let wavelengths = cols
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Csv(format!("bad wavelength {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut fields = line.split(',').map(str::trim);
            let label = fields
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .ok_or_else(|| Error::Csv(format!("row {}: bad label", n + 1)))?;
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Csv(format!("row {}: bad value {f:?}", n + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != wavelengths.len() {
                return Err(Error::Csv(format!(
                    "row {}: {} values for {} wavelengths",
                    n + 1,
                    values.len(),
                    wavelengths.len()
                )));
            }
            entries.push(SkinEntry {
                label,
                signature: SpectralSignature::new(values)?,
                pixels: 1,
            });
        }
        Ok((wavelengths, SkinSignatureSet::new(image_id, entries)?))
    }
}

/// Superpixels touched by the mask in at least one pixel, each represented by
/// its mean over the whole superpixel.
pub fn skin_signatures(
    image_id: &str,
    cube: &HyperCube,
    map: &SuperpixelMap,
    mask: &SkinMask,
) -> Result<SkinSignatureSet> {
    skin_signatures_with_overlap(image_id, cube, map, mask, 0.0)
}

/// Like [`skin_signatures`], additionally requiring that at least
/// `min_overlap` of a superpixel's pixels are masked.
pub fn skin_signatures_with_overlap(
    image_id: &str,
    cube: &HyperCube,
    map: &SuperpixelMap,
    mask: &SkinMask,
    min_overlap: f64,
) -> Result<SkinSignatureSet> {
    check_dims(cube, map.dims())?;
    check_dims(cube, mask.dims())?;
    if !(0.0..=1.0).contains(&min_overlap) {
        return Err(Error::InvalidParameter(format!(
            "overlap fraction {min_overlap} outside [0, 1]"
        )));
    }
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }

    let k = map.label_bound();
    let bands = cube.bands();
    let mut sums = vec![0.0; k * bands];
    let mut sizes = vec![0usize; k];
    let mut hits = vec![0usize; k];
    for ((spectrum, &label), &skin) in cube.spectra().zip(map.labels()).zip(mask.flags()) {
        let l = label as usize;
        sums[l * bands..(l + 1) * bands]
            .iter_mut()
            .zip(spectrum)
            .for_each(|(s, v)| *s += v);
        sizes[l] += 1;
        hits[l] += usize::from(skin);
    }

    let mut entries = Vec::new();
    for label in 0..k {
        if hits[label] == 0 || (hits[label] as f64) < min_overlap * sizes[label] as f64 {
            continue;
        }
        let n = sizes[label] as f64;
        let mean = sums[label * bands..(label + 1) * bands].iter().map(|s| s / n).collect();
        entries.push(SkinEntry {
            label,
            signature: SpectralSignature::new(mean)?,
            pixels: sizes[label],
        });
    }
    if entries.is_empty() {
        return Err(Error::NoSkinSuperpixel);
    }
    SkinSignatureSet::new(image_id, entries)
}

fn check_dims(cube: &HyperCube, dims: (usize, usize)) -> Result<()> {
    if cube.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: cube.dims(),
            actual: dims,
        });
    }
    Ok(())
}
