use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Per-pixel superpixel labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    k: usize,
}

impl SuperpixelMap {
    /// Wraps arbitrary label ids; `k` is the number of distinct ids.
    pub fn from_labels(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(Error::InvalidParameter(format!(
                "label map of {height}x{width} needs {} labels, got {}",
                height * width,
                labels.len()
            )));
        }
        let mut seen = vec![false; label_bound(&labels)];
        for &l in &labels {
            seen[l as usize] = true;
        }
        let k = seen.iter().filter(|s| **s).count();
        Ok(SuperpixelMap {
            height,
            width,
            labels,
            k,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Number of distinct labels.
    pub fn k(&self) -> usize {
        self.k
    }

    /// One past the largest label id; equals `k` for canonical maps.
    pub fn label_bound(&self) -> usize {
        label_bound(&self.labels)
    }

    pub fn contains_label(&self, label: usize) -> bool {
        label <= u32::MAX as usize && self.labels.contains(&(label as u32))
    }

    /// Pixel count per label id, indexed up to [`label_bound`](Self::label_bound).
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.label_bound()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// True when label `i`'s first pixel precedes label `i + 1`'s, for all `i < k`.
    pub fn is_canonical(&self) -> bool {
        let mut next = 0u32;
        for &l in &self.labels {
            if l > next {
                return false;
            }
            if l == next {
                next += 1;
            }
        }
        true
    }

    pub fn relabel_canonical(&self) -> SuperpixelMap {
        relabel_canonical(self)
    }

    /// Number of 4-connected regions of equal label. Equals `k` exactly when
    /// every label's pixel set is connected.
    pub fn connected_components(&self) -> usize {
        let (h, w) = (self.height, self.width);
        let mut seen = vec![false; h * w];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..h * w {
            if seen[start] {
                continue;
            }
            count += 1;
            let label = self.labels[start];
            seen[start] = true;
            stack.push(start);
            while let Some(p) = stack.pop() {
                let (r, c) = (p / w, p % w);
                let mut visit = |q: usize| {
                    if !seen[q] && self.labels[q] == label {
                        seen[q] = true;
                        stack.push(q);
                    }
                };
                if c > 0 {
                    visit(p - 1);
                }
                if c + 1 < w {
                    visit(p + 1);
                }
                if r > 0 {
                    visit(p - w);
                }
                if r + 1 < h {
                    visit(p + w);
                }
            }
        }
        count
    }

    pub fn is_connected_partition(&self) -> bool {
        self.connected_components() == self.k
    }

    /// Binary export: height, width, K as little-endian u32, then one u32 per pixel.
    pub fn to_raw(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.labels.len());
        for v in [self.height as u32, self.width as u32, self.k as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn from_raw(bytes: &[u8]) -> Result<Self> {
        let word = |i: usize| -> Result<u32> {
            bytes
                .get(4 * i..4 * i + 4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .ok_or_else(|| Error::ImageFormat("truncated label file".into()))
        };
        let (height, width, k) = (word(0)? as usize, word(1)? as usize, word(2)? as usize);
        if bytes.len() != 12 + 4 * height * width {
            return Err(Error::ImageFormat(format!(
                "label file holds {} bytes, header implies {}",
                bytes.len(),
                12 + 4 * height * width
            )));
        }
        let labels = (0..height * width).map(|i| word(3 + i)).collect::<Result<Vec<_>>>()?;
        let map = SuperpixelMap::from_labels(height, width, labels)?;
        if map.k != k {
            return Err(Error::ImageFormat(format!(
                "header says K = {k}, labels hold {}",
                map.k
            )));
        }
        Ok(map)
    }

    /// 16-bit binary PGM with labels spread over the gray range, and a sidecar
    /// listing `gray label` pairs.
    pub fn to_pgm16(&self) -> Result<(Vec<u8>, String)> {
        let bound = self.label_bound();
        if bound > 65_536 {
            return Err(Error::ImageFormat(format!("{bound} labels do not fit a 16-bit PGM")));
        }
        let step = 65_535 / (bound.max(2) - 1) as u32;
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &l in &self.labels {
            out.extend_from_slice(&((l * step) as u16).to_be_bytes());
        }
        let mut sidecar = String::from("# gray label\n");
        for (label, &size) in self.sizes().iter().enumerate() {
            if size > 0 {
                let _ = writeln!(sidecar, "{} {}", label as u32 * step, label);
            }
        }
        Ok((out, sidecar))
    }
}

fn label_bound(labels: &[u32]) -> usize {
    labels.iter().max().map_or(0, |&m| m as usize + 1)
}

/// Renumbers labels by the row-major order of their first pixel.
pub fn relabel_canonical(map: &SuperpixelMap) -> SuperpixelMap {
    let mut rename: HashMap<u32, u32> = HashMap::with_capacity(map.k);
    let labels = map
        .labels
        .iter()
        .map(|&l| {
            let next = rename.len() as u32;
            *rename.entry(l).or_insert(next)
        })
        .collect();
    SuperpixelMap {
        height: map.height,
        width: map.width,
        labels,
        k: map.k,
    }
}
