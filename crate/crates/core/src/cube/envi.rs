//! Minimal ENVI header + flat raster I/O.
//!
//! Supported: `interleave` bsq/bil/bip, `data type` 4 (float32), 5 (float64) and
//! 12 (uint16, reflectance scaled by 10000), little-endian only (`byte order = 0`).
//! Keys are matched case-insensitively; keys this reader does not interpret are
//! kept verbatim and written back out.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{check_wavelengths, HyperCube};
use crate::error::{Error, Result};

/// Scale applied to reflectance stored as uint16.
pub const UINT16_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    pub const ALL: [Interleave; 3] = [Interleave::Bsq, Interleave::Bil, Interleave::Bip];

    /// Position in the raster of sample `(row, col, band)`.
    fn offset(self, (lines, samples, bands): (usize, usize, usize), row: usize, col: usize, band: usize) -> usize {
        match self {
            Interleave::Bsq => (band * lines + row) * samples + col,
            Interleave::Bil => (row * bands + band) * samples + col,
            Interleave::Bip => (row * samples + col) * bands + band,
        }
    }
}

impl FromStr for Interleave {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            other => Err(Error::Header(format!("unknown interleave {other:?}"))),
        }
    }
}

impl fmt::Display for Interleave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    Float32,
    Float64,
    Uint16,
}

impl DataType {
    pub const fn code(self) -> u32 {
        match self {
            DataType::Float32 => 4,
            DataType::Float64 => 5,
            DataType::Uint16 => 12,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            4 => Ok(DataType::Float32),
            5 => Ok(DataType::Float64),
            12 => Ok(DataType::Uint16),
            other => Err(Error::UnsupportedDataType(other)),
        }
    }

    pub const fn bytes(self) -> usize {
        match self {
            DataType::Float32 => 4,
            DataType::Float64 => 8,
            DataType::Uint16 => 2,
        }
    }

    const fn name(self) -> &'static str {
        match self {
            DataType::Float32 => "float32",
            DataType::Float64 => "float64",
            DataType::Uint16 => "uint16",
        }
    }

    fn decode(self, bytes: &[u8]) -> f64 {
        match self {
            DataType::Float32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            DataType::Float64 => f64::from_le_bytes(bytes.try_into().unwrap()),
            DataType::Uint16 => u16::from_le_bytes(bytes.try_into().unwrap()) as f64 / UINT16_SCALE,
        }
    }

    fn encode(self, value: f64, index: usize, out: &mut [u8]) -> Result<()> {
        let unrepresentable = || Error::Unrepresentable {
            value,
            index,
            data_type: self.name(),
        };
        match self {
            DataType::Float32 => {
                let v = value as f32;
                if !v.is_finite() {
                    return Err(unrepresentable());
                }
                out.copy_from_slice(&v.to_le_bytes());
            }
            DataType::Float64 => out.copy_from_slice(&value.to_le_bytes()),
            DataType::Uint16 => {
                let scaled = (value * UINT16_SCALE).round();
                if !(0.0..=u16::MAX as f64).contains(&scaled) {
                    return Err(unrepresentable());
                }
                out.copy_from_slice(&(scaled as u16).to_le_bytes());
            }
        }
        Ok(())
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DataType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "float32" | "f32" | "4" => Ok(DataType::Float32),
            "float64" | "f64" | "5" => Ok(DataType::Float64),
            "uint16" | "u16" | "12" => Ok(DataType::Uint16),
            other => Err(Error::Header(format!("unknown data type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub header_offset: usize,
    pub wavelengths: Vec<f64>,
    pub fwhm: Option<Vec<f64>>,
    /// Uninterpreted `key = value` pairs in file order, original key spelling.
    pub extra: Vec<(String, String)>,
}

impl CubeHeader {
    pub fn for_cube(cube: &HyperCube, interleave: Interleave, data_type: DataType) -> Self {
        CubeHeader {
            samples: cube.width(),
            lines: cube.height(),
            bands: cube.bands(),
            interleave,
            data_type,
            header_offset: 0,
            wavelengths: cube.wavelengths().to_vec(),
            fwhm: cube.fwhm().map(<[f64]>::to_vec),
            extra: cube.metadata().to_vec(),
        }
    }

    pub fn raster_bytes(&self) -> u64 {
        (self.samples * self.lines * self.bands * self.data_type.bytes()) as u64
    }

    pub fn parse(text: &str) -> Result<Self> {
        let pairs = split_pairs(text)?;

        let mut samples = None;
        let mut lines = None;
        let mut bands = None;
        let mut interleave = None;
        let mut data_type = None;
        let mut header_offset = 0;
        let mut wavelengths = None;
        let mut fwhm = None;
        let mut extra = Vec::new();

        for (key, value) in pairs {
            let norm = key
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .to_ascii_lowercase();
            match norm.as_str() {
                "samples" => samples = Some(parse_count(&norm, &value)?),
                "lines" => lines = Some(parse_count(&norm, &value)?),
                "bands" => bands = Some(parse_count(&norm, &value)?),
                "header offset" => header_offset = parse_uint(&norm, &value)?,
                "interleave" => interleave = Some(value.parse::<Interleave>()?),
                "data type" => {
                    let code = value
                        .trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Header(format!("data type {value:?} is not an integer")))?;
                    data_type = Some(DataType::from_code(code)?);
                }
                "byte order" => {
                    if parse_uint(&norm, &value)? != 0 {
                        return Err(Error::Header(
                            "only little-endian rasters (byte order = 0) are supported".into(),
                        ));
                    }
                }
                "file type" => {}
                "wavelength" => wavelengths = Some(parse_list(&norm, &value)?),
                "fwhm" => fwhm = Some(parse_list(&norm, &value)?),
                _ => extra.push((key, value)),
            }
        }

        let missing = |k: &str| Error::Header(format!("missing required key {k:?}"));
        let header = CubeHeader {
            samples: samples.ok_or_else(|| missing("samples"))?,
            lines: lines.ok_or_else(|| missing("lines"))?,
            bands: bands.ok_or_else(|| missing("bands"))?,
            interleave: interleave.ok_or_else(|| missing("interleave"))?,
            data_type: data_type.ok_or_else(|| missing("data type"))?,
            header_offset,
            wavelengths: wavelengths.ok_or_else(|| missing("wavelength"))?,
            fwhm,
            extra,
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        if self.wavelengths.len() != self.bands {
            return Err(Error::Header(format!(
                "{} wavelengths listed for {} bands",
                self.wavelengths.len(),
                self.bands
            )));
        }
        if let Some(fwhm) = &self.fwhm {
            if fwhm.len() != self.bands {
                return Err(Error::Header(format!(
                    "{} fwhm values listed for {} bands",
                    fwhm.len(),
                    self.bands
                )));
            }
        }
        check_wavelengths(&self.wavelengths)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("ENVI\n");
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "lines = {}", self.lines);
        let _ = writeln!(out, "bands = {}", self.bands);
        let _ = writeln!(out, "header offset = {}", self.header_offset);
        let _ = writeln!(out, "file type = ENVI Standard");
        let _ = writeln!(out, "data type = {}", self.data_type.code());
        let _ = writeln!(out, "interleave = {}", self.interleave);
        let _ = writeln!(out, "byte order = 0");
        let _ = writeln!(out, "wavelength = {}", render_list(&self.wavelengths));
        if let Some(fwhm) = &self.fwhm {
            let _ = writeln!(out, "fwhm = {}", render_list(fwhm));
        }
        for (key, value) in &self.extra {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Splits header text into `(key, value)` pairs; brace values may span lines.
fn split_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut lines = text.lines();
    match lines.by_ref().map(str::trim).find(|l| !l.is_empty()) {
        Some(first) if first.eq_ignore_ascii_case("envi") => {}
        _ => return Err(Error::Header("file does not start with ENVI".into())),
    }

    let mut pairs = Vec::new();
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Header(format!("malformed line {line:?}")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Header(format!("malformed line {line:?}")));
        }
        let mut value = value.trim().to_string();
        if value.starts_with('{') {
            while !value.contains('}') {
                let next = lines
                    .next()
                    .ok_or_else(|| Error::Header(format!("unterminated brace list for key {key:?}")))?;
                value.push(' ');
                value.push_str(next.trim());
            }
        }
        pairs.push((key.to_string(), value));
    }
    Ok(pairs)
}

fn parse_uint(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Header(format!("{key} = {value:?} is not a non-negative integer")))
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    match parse_uint(key, value)? {
        0 => Err(Error::Header(format!("{key} must be >= 1"))),
        n => Ok(n),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let inner = value
        .trim()
        .strip_prefix('{')
        .and_then(|v| v.strip_suffix('}'))
        .ok_or_else(|| Error::Header(format!("{key} must be a brace-delimited list")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Header(format!("{key}: {s:?} is not a number")))
        })
        .collect()
}

fn render_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn read_header(path: &Path) -> Result<CubeHeader> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CubeHeader::parse(&text)
}

pub fn read_cube(header_path: &Path, raster_path: &Path) -> Result<HyperCube> {
    let header = read_header(header_path)?;
    let raw = fs::read(raster_path).map_err(|e| Error::io(raster_path, e))?;

    let expected = header.header_offset as u64 + header.raster_bytes();
    if raw.len() as u64 != expected {
        return Err(Error::RasterSize {
            expected,
            actual: raw.len() as u64,
        });
    }
    let raster = &raw[header.header_offset..];

    let dims = (header.lines, header.samples, header.bands);
    let width = header.data_type.bytes();
    let mut data = vec![0.0; header.lines * header.samples * header.bands];
    for row in 0..header.lines {
        for col in 0..header.samples {
            let base = (row * header.samples + col) * header.bands;
            for band in 0..header.bands {
                let pos = header.interleave.offset(dims, row, col, band) * width;
                data[base + band] = header.data_type.decode(&raster[pos..pos + width]);
            }
        }
    }

    let cube = HyperCube::new(header.lines, header.samples, header.wavelengths, data)?.with_metadata(header.extra);
    match header.fwhm {
        Some(fwhm) => cube.with_fwhm(fwhm),
        None => Ok(cube),
    }
}

pub fn write_cube(
    cube: &HyperCube,
    header_path: &Path,
    raster_path: &Path,
    interleave: Interleave,
    data_type: DataType,
) -> Result<()> {
    let header = CubeHeader::for_cube(cube, interleave, data_type);
    let dims = (cube.height(), cube.width(), cube.bands());
    let width = data_type.bytes();
    let mut raster = vec![0u8; cube.data().len() * width];
    for row in 0..cube.height() {
        for col in 0..cube.width() {
            for (band, &value) in cube.spectrum(row, col).iter().enumerate() {
                let pos = interleave.offset(dims, row, col, band);
                data_type.encode(value, pos, &mut raster[pos * width..(pos + 1) * width])?;
            }
        }
    }
    fs::write(raster_path, &raster).map_err(|e| Error::io(raster_path, e))?;
    fs::write(header_path, header.render()).map_err(|e| Error::io(header_path, e))?;
    Ok(())
}
