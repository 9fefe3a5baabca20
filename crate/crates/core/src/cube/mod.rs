//! Hyperspectral cube representation, ENVI-subset I/O and broadband integration.
//!
//! A [`HyperCube`] keeps its samples band-interleaved-by-pixel: the spectrum of
//! pixel `(row, col)` is the contiguous slice `data[(row * width + col) * bands..][..bands]`.
//! Rasters stored in any other interleave are reordered on read.

mod envi;
mod rgb;

pub use envi::{read_cube, read_header, write_cube, CubeHeader, DataType, Interleave, UINT16_SCALE};
pub use rgb::{integrate_to_rgb, BandWindow, RgbImage, RgbWindows};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    height: usize,
    width: usize,
    bands: usize,
    wavelengths: Vec<f64>,
    fwhm: Option<Vec<f64>>,
    metadata: Vec<(String, String)>,
    data: Vec<f64>,
}

impl HyperCube {
    /// Builds a cube from pixel-major (BIP) samples.
    pub fn new(height: usize, width: usize, wavelengths: Vec<f64>, data: Vec<f64>) -> Result<Self> {
        let bands = wavelengths.len();
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::InvalidCube(format!(
                "dimensions must be positive, got {height}x{width}x{bands}"
            )));
        }
        check_wavelengths(&wavelengths)?;
        let expected = height * width * bands;
        if data.len() != expected {
            return Err(Error::InvalidCube(format!(
                "expected {expected} samples, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidCube(format!(
                "sample {i} is {} (values must be finite and non-negative)",
                data[i]
            )));
        }
        Ok(HyperCube {
            height,
            width,
            bands,
            wavelengths,
            fwhm: None,
            metadata: Vec::new(),
            data,
        })
    }

    /// Builds a cube by evaluating `f(row, col)` for every pixel spectrum.
    pub fn from_fn<F>(height: usize, width: usize, wavelengths: Vec<f64>, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Vec<f64>,
    {
        let bands = wavelengths.len();
        let mut data = Vec::with_capacity(height * width * bands);
        for row in 0..height {
            for col in 0..width {
                let spectrum = f(row, col);
                if spectrum.len() != bands {
                    return Err(Error::BandMismatch {
                        left: bands,
                        right: spectrum.len(),
                    });
                }
                data.extend_from_slice(&spectrum);
            }
        }
        HyperCube::new(height, width, wavelengths, data)
    }

    pub fn with_fwhm(mut self, fwhm: Vec<f64>) -> Result<Self> {
        if fwhm.len() != self.bands {
            return Err(Error::InvalidCube(format!(
                "fwhm has {} entries for {} bands",
                fwhm.len(),
                self.bands
            )));
        }
        self.fwhm = Some(fwhm);
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: Vec<(String, String)>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn fwhm(&self) -> Option<&[f64]> {
        self.fwhm.as_deref()
    }

    /// Header keys carried through I/O without interpretation.
    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// All samples in pixel-major order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn spectrum(&self, row: usize, col: usize) -> &[f64] {
        self.spectrum_at(row * self.width + col)
    }

    /// Spectrum of the pixel at row-major index `index`.
    pub fn spectrum_at(&self, index: usize) -> &[f64] {
        let start = index * self.bands;
        &self.data[start..start + self.bands]
    }

    pub fn value(&self, row: usize, col: usize, band: usize) -> f64 {
        self.data[(row * self.width + col) * self.bands + band]
    }

    pub fn spectra(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.bands)
    }

    /// Multiplies every sample by a non-negative gain.
    pub fn scaled(&self, gain: f64) -> Result<HyperCube> {
        if !gain.is_finite() || gain < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gain must be finite and >= 0, got {gain}"
            )));
        }
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= gain);
        Ok(out)
    }
}

pub(crate) fn check_wavelengths(wavelengths: &[f64]) -> Result<()> {
    if let Some(v) = wavelengths.iter().find(|v| !v.is_finite()) {
        return Err(Error::Header(format!("non-finite wavelength {v}")));
    }
    for (i, pair) in wavelengths.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(Error::NonIncreasingWavelengths {
                index: i + 1,
                value: pair[1],
            });
        }
    }
    Ok(())
}

/// `count` wavelengths spread evenly over `[start, end]` nm, both ends included.
pub fn uniform_wavelengths(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            (0..count).map(|i| start + step * i as f64).collect()
        }
    }
}
