//! Netpbm I/O for skin masks (PGM/PBM in) and label maps (16-bit PGM out).
//!
//! Masks: any nonzero gray sample, or any set PBM bit, marks a skin pixel.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::segment::SuperpixelMap;
use crate::spectral::SkinMask;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ImageFormat(format!("expected a number at byte {start}")))
    }

    fn bit(&mut self) -> Result<bool> {
        self.skip_space_and_comments();
        match self.bytes.get(self.pos) {
            Some(b'0') => {
                self.pos += 1;
                Ok(false)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(true)
            }
            _ => Err(Error::ImageFormat(format!("expected 0 or 1 at byte {}", self.pos))),
        }
    }

    /// Consumes the single whitespace byte separating a binary header from its data.
    fn raster(&mut self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(Error::ImageFormat("missing whitespace before raster data".into())),
        }
    }
}

/// Parses a P1/P2/P4/P5 image into a mask.
pub fn parse_mask(bytes: &[u8]) -> Result<SkinMask> {
    let magic = bytes
        .get(..2)
        .ok_or_else(|| Error::ImageFormat("file too short for a netpbm header".into()))?;
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number()?;
    let height = cur.number()?;
    if width == 0 || height == 0 {
        return Err(Error::ImageFormat("zero image dimension".into()));
    }
    let n = width * height;

    let flags = match magic {
        b"P1" => (0..n).map(|_| cur.bit()).collect::<Result<Vec<_>>>()?,
        b"P4" => {
            let data = cur.raster()?;
            let row_bytes = width.div_ceil(8);
            if data.len() < row_bytes * height {
                return Err(Error::ImageFormat("truncated PBM raster".into()));
            }
            (0..n)
                .map(|i| {
                    let (r, c) = (i / width, i % width);
                    data[r * row_bytes + c / 8] & (0x80 >> (c % 8)) != 0
                })
                .collect()
        }
        b"P2" | b"P5" => {
            let maxval = cur.number()?;
            if maxval == 0 || maxval > 65_535 {
                return Err(Error::ImageFormat(format!("invalid maxval {maxval}")));
            }
            if magic == b"P2" {
                (0..n)
                    .map(|_| cur.number().map(|v| v != 0))
                    .collect::<Result<Vec<_>>>()?
            } else {
                let data = cur.raster()?;
                let width_bytes = if maxval < 256 { 1 } else { 2 };
                if data.len() < n * width_bytes {
                    return Err(Error::ImageFormat("truncated PGM raster".into()));
                }
                if width_bytes == 1 {
                    data[..n].iter().map(|&v| v != 0).collect()
                } else {
                    data[..2 * n].chunks_exact(2).map(|b| b != [0, 0]).collect()
                }
            }
        }
        other => {
            return Err(Error::ImageFormat(format!(
                "unsupported netpbm magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    SkinMask::new(height, width, flags)
}

pub fn read_mask(path: &Path) -> Result<SkinMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_mask(&bytes)
}

/// 8-bit binary PGM, 255 for skin and 0 elsewhere.
pub fn encode_mask(mask: &SkinMask) -> Vec<u8> {
    let (h, w) = mask.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(mask.flags().iter().map(|&f| if f { 255u8 } else { 0 }));
    out
}

pub fn write_mask(mask: &SkinMask, path: &Path) -> Result<()> {
    fs::write(path, encode_mask(mask)).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.pgm`, `<stem>.txt` (gray-to-label sidecar) and `<stem>.bin`.
pub fn write_label_map(map: &SuperpixelMap, dir: &Path, stem: &str) -> Result<()> {
    let (pgm, sidecar) = map.to_pgm16()?;
    let write = |name: String, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    };
    write(format!("{stem}.pgm"), &pgm)?;
    write(format!("{stem}.txt"), sidecar.as_bytes())?;
    write(format!("{stem}.bin"), &map.to_raw())
}

pub fn read_label_map(path: &Path) -> Result<SuperpixelMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    SuperpixelMap::from_raw(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm8_round_trip() {
        let mask = SkinMask::from_fn(3, 5, |r, c| r == 1 && c > 1);
        let bytes = encode_mask(&mask);
        assert!(bytes.starts_with(b"P5\n5 3\n255\n"));
        assert_eq!(parse_mask(&bytes).unwrap(), mask);
    }

    #[test]
    fn ascii_and_comment_headers() {
        let p2 = b"P2\n# a comment\n3 1\n# more\n255\n0 7 0\n";
        assert_eq!(parse_mask(p2).unwrap().flags(), &[false, true, false]);
        let p1 = b"P1\n3 2\n1 0 0\n0 0 1\n";
        assert_eq!(
            parse_mask(p1).unwrap().flags(),
            &[true, false, false, false, false, true]
        );
    }

    #[test]
    fn packed_pbm_and_16_bit_pgm() {
        // 10 wide: two bytes per row, msb first
        let mut p4 = b"P4\n10 1\n".to_vec();
        p4.extend_from_slice(&[0b1000_0000, 0b0100_0000]);
        let mask = parse_mask(&p4).unwrap();
        assert_eq!(mask.count(), 2);
        assert!(mask.get(0, 0) && mask.get(0, 9));

        let mut p5 = b"P5 2 1 65535\n".to_vec();
        p5.extend_from_slice(&[0, 0, 1, 0]);
        assert_eq!(parse_mask(&p5).unwrap().flags(), &[false, true]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_mask(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(parse_mask(b"P5\n2 2\n255\n\0").is_err());
        assert!(parse_mask(b"P5\n0 2\n255\n").is_err());
        assert!(parse_mask(b"P1\n2 1\n1 x\n").is_err());
        assert!(parse_mask(b"P").is_err());
    }

    #[test]
    fn label_map_files() {
        let dir = tempfile::tempdir().unwrap();
        let map = SuperpixelMap::from_labels(2, 2, vec![0, 1, 1, 2]).unwrap();
        write_label_map(&map, dir.path(), "labels").unwrap();
        assert_eq!(read_label_map(&dir.path().join("labels.bin")).unwrap(), map);
        assert!(dir.path().join("labels.pgm").exists());
        assert!(fs::read_to_string(dir.path().join("labels.txt"))
            .unwrap()
            .contains("65534 2"));
    }
}
