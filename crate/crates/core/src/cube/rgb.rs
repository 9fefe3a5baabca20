use std::fmt;
use std::str::FromStr;

use super::HyperCube;
use crate::error::{Error, Result};

/// Half-open wavelength interval `[lo, hi)` in nanometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandWindow {
    pub lo: f64,
    pub hi: f64,
}

impl BandWindow {
    pub const fn new(lo: f64, hi: f64) -> Self {
        BandWindow { lo, hi }
    }

    pub fn contains(&self, wavelength: f64) -> bool {
        wavelength >= self.lo && wavelength < self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Indices of the bands that fall inside the window.
    pub fn band_indices(&self, wavelengths: &[f64]) -> Vec<usize> {
        wavelengths
            .iter()
            .enumerate()
            .filter(|(_, w)| self.contains(**w))
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for BandWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for BandWindow {
    type Err = Error;

    /// Parses `lo-hi`, e.g. `400-500`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("band window {s:?} is not of the form lo-hi"));
        let (lo, hi) = s.trim().split_once('-').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(bad());
        }
        Ok(BandWindow { lo, hi })
    }
}

/// Broadband channel windows used to synthesize color images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgbWindows {
    pub red: BandWindow,
    pub green: BandWindow,
    pub blue: BandWindow,
}

impl Default for RgbWindows {
    fn default() -> Self {
        RgbWindows {
            red: BandWindow::new(600.0, 700.0),
            green: BandWindow::new(500.0, 600.0),
            blue: BandWindow::new(400.0, 500.0),
        }
    }
}

impl RgbWindows {
    /// Windows in (R, G, B) channel order.
    pub fn channels(&self) -> [BandWindow; 3] {
        [self.red, self.green, self.blue]
    }

    /// Requires blue < green < red without overlap.
    pub fn validate(&self) -> Result<()> {
        for w in self.channels() {
            if !(w.lo.is_finite() && w.hi.is_finite() && w.lo < w.hi) {
                return Err(Error::Config(format!("band window {w} is empty")));
            }
        }
        if self.blue.hi > self.green.lo || self.green.hi > self.red.lo {
            return Err(Error::Config(format!(
                "rgb windows must be ascending and non-overlapping (blue {}, green {}, red {})",
                self.blue, self.green, self.red
            )));
        }
        Ok(())
    }
}

impl fmt::Display for RgbWindows {
    /// Blue, green, red (ascending wavelength), comma separated.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.blue, self.green, self.red)
    }
}

impl FromStr for RgbWindows {
    type Err = Error;

    /// Parses `blue,green,red`, e.g. `400-500,500-600,600-700`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        let [blue, green, red] = parts[..] else {
            return Err(Error::Config(format!(
                "expected three comma-separated windows, got {s:?}"
            )));
        };
        let windows = RgbWindows {
            red: red.parse()?,
            green: green.parse()?,
            blue: blue.parse()?,
        };
        windows.validate()?;
        Ok(windows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Samples as interleaved (R, G, B) triples in row-major pixel order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Three-band cube with bands ordered by window center (B, G, R for the
    /// usual windows), so the color image runs through the same pipeline as
    /// the hyperspectral one.
    pub fn to_cube(&self, windows: &RgbWindows) -> Result<HyperCube> {
        let mut order: Vec<(f64, usize)> = windows
            .channels()
            .iter()
            .enumerate()
            .map(|(ch, w)| (w.center(), ch))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let wavelengths = order.iter().map(|(c, _)| *c).collect();
        let mut data = Vec::with_capacity(self.data.len());
        for px in self.data.chunks_exact(3) {
            data.extend(order.iter().map(|&(_, ch)| px[ch]));
        }
        HyperCube::new(self.height, self.width, wavelengths, data)
    }
}

/// Box-integrates each pixel spectrum over the three windows: every output
/// channel is the arithmetic mean of the bands whose wavelength lies in that
/// channel's window.
pub fn integrate_to_rgb(cube: &HyperCube, windows: &RgbWindows) -> Result<RgbImage> {
    let channels = windows.channels();
    let mut members = Vec::with_capacity(3);
    for w in &channels {
        let idx = w.band_indices(cube.wavelengths());
        if idx.is_empty() {
            return Err(Error::EmptyWindow { lo: w.lo, hi: w.hi });
        }
        members.push(idx);
    }

    let mut data = Vec::with_capacity(cube.pixel_count() * 3);
    for spectrum in cube.spectra() {
        for idx in &members {
            // offset from the first band keeps the mean of a flat spectrum exact
            let first = spectrum[idx[0]];
            let spread: f64 = idx.iter().map(|&b| spectrum[b] - first).sum();
            data.push(first + spread / idx.len() as f64);
        }
    }
    Ok(RgbImage {
        height: cube.height(),
        width: cube.width(),
        data,
    })
}
