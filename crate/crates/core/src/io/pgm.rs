//! Portable GrayMap (PGM) images, ASCII `P2` and binary `P5`.
//!
//! Samples wider than 8 bits (`maxval > 255`) are stored big-endian in `P5`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Result, Ts1Error};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    Ascii,
    Binary,
}

/// Row-major grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if maxval == 0 {
            return Err(Ts1Error::Decode("PGM maxval must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Ts1Error::Decode(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(Ts1Error::Decode(format!("pixel value {p} exceeds maxval {maxval}")));
        }
        Ok(GrayImage {
            width,
            height,
            maxval,
            pixels,
        })
    }

    /// `height × width` matrix with values scaled to `[0, 1]`.
    pub fn to_unit_matrix<T: Real>(&self) -> DMatrix<T> {
        let scale = self.maxval as f64;
        DMatrix::from_fn(self.height, self.width, |i, j| {
            T::lit(self.pixels[i * self.width + j] as f64 / scale)
        })
    }

    /// Quantises a matrix of `[0, 1]` intensities; values outside are clipped.
    pub fn from_unit_matrix<T: Real>(m: &DMatrix<T>, maxval: u16) -> Self {
        let (height, width) = m.shape();
        let scale = maxval as f64;
        let mut pixels = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                let v = m[(i, j)].to_f64_lossy();
                let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                pixels.push((v * scale).round() as u16);
            }
        }
        GrayImage {
            width,
            height,
            maxval,
            pixels,
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let format = match magic {
            b"P2" => PgmFormat::Ascii,
            b"P5" => PgmFormat::Binary,
            other => {
                return Err(Ts1Error::Decode(format!(
                    "unsupported magic {:?}, expected P2 or P5",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let width = cur.number("width")?;
        let height = cur.number("height")?;
        let maxval = cur.number("maxval")?;
        if maxval == 0 || maxval > u16::MAX as usize {
            return Err(Ts1Error::Decode(format!("maxval {maxval} out of range")));
        }
        let count = width * height;
        let pixels = match format {
            PgmFormat::Ascii => {
                let mut px = Vec::with_capacity(count);
                for _ in 0..count {
                    px.push(cur.number("pixel")? as u16);
                }
                px
            }
            PgmFormat::Binary => {
                // Exactly one whitespace byte separates the header from the raster.
                if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
                    return Err(Ts1Error::Decode("missing separator before raster".into()));
                }
                cur.pos += 1;
                let raster = &cur.bytes[cur.pos..];
                if maxval < 256 {
                    if raster.len() < count {
                        return Err(Ts1Error::Decode(format!(
                            "truncated raster: {} of {count} bytes",
                            raster.len()
                        )));
                    }
                    raster[..count].iter().map(|&b| b as u16).collect()
                } else {
                    if raster.len() < 2 * count {
                        return Err(Ts1Error::Decode(format!(
                            "truncated raster: {} of {} bytes",
                            raster.len(),
                            2 * count
                        )));
                    }
                    raster[..2 * count]
                        .chunks_exact(2)
                        .map(|c| u16::from_be_bytes([c[0], c[1]]))
                        .collect()
                }
            }
        };
        GrayImage::new(width, height, maxval as u16, pixels)
    }

    pub fn encode(&self, format: PgmFormat) -> Vec<u8> {
        let magic = match format {
            PgmFormat::Ascii => "P2",
            PgmFormat::Binary => "P5",
        };
        let mut out = format!("{magic}\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        match format {
            PgmFormat::Ascii => {
                for row in self.pixels.chunks(self.width.max(1)) {
                    let line: Vec<String> = row.iter().map(u16::to_string).collect();
                    out.extend_from_slice(line.join(" ").as_bytes());
                    out.push(b'\n');
                }
            }
            PgmFormat::Binary if self.maxval < 256 => {
                out.extend(self.pixels.iter().map(|&p| p as u8));
            }
            PgmFormat::Binary => {
                for &p in &self.pixels {
                    out.extend_from_slice(&p.to_be_bytes());
                }
            }
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| Ts1Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::decode(&bytes).map_err(|e| match e {
            Ts1Error::Decode(msg) => Ts1Error::Decode(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, path: &Path, format: PgmFormat) -> Result<()> {
        let io_err = |source| Ts1Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = fs::File::create(path).map_err(io_err)?;
        f.write_all(&self.encode(format)).map_err(io_err)
    }
}

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

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Ts1Error::Decode("unexpected end of PGM data".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Ts1Error::Decode(format!("invalid {what} {:?}", String::from_utf8_lossy(tok))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GrayImage {
        GrayImage::new(3, 2, 255, vec![0, 10, 255, 128, 7, 99]).unwrap()
    }

    #[test]
    fn ascii_and_binary_round_trip() {
        let img = sample();
        for fmt in [PgmFormat::Ascii, PgmFormat::Binary] {
            assert_eq!(GrayImage::decode(&img.encode(fmt)).unwrap(), img);
        }
        let wide = GrayImage::new(2, 2, 1000, vec![0, 999, 1000, 256]).unwrap();
        assert_eq!(GrayImage::decode(&wide.encode(PgmFormat::Binary)).unwrap(), wide);
    }

    #[test]
    fn decodes_comments_and_odd_spacing() {
        let text = b"P2\n# made by hand\n3 2 # trailing\n255\n0 10 255\n128\t7   99\n";
        assert_eq!(GrayImage::decode(text).unwrap(), sample());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(GrayImage::decode(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(GrayImage::decode(b"P2\n2 2\n255\n1 2 3").is_err());
        assert!(GrayImage::decode(b"P2\n1 1\n255\n300").is_err());
        assert!(GrayImage::decode(b"P5\n2 2\n255\n\x01\x02").is_err());
        assert!(GrayImage::decode(b"P2\nx 2\n255\n").is_err());
        assert!(GrayImage::decode(b"").is_err());
    }

    #[test]
    fn unit_matrix_conversion() {
        let img = sample();
        let m = img.to_unit_matrix::<f64>();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(0, 2)], 1.0);
        assert!((m[(1, 0)] - 128.0 / 255.0).abs() < 1e-15);
        assert_eq!(GrayImage::from_unit_matrix(&m, 255), img);

        let over = DMatrix::from_row_slice(1, 3, &[-0.5, 0.5, 1.7]);
        assert_eq!(GrayImage::from_unit_matrix(&over, 255).pixels, vec![0, 128, 255]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        sample().write(&path, PgmFormat::Binary).unwrap();
        assert_eq!(GrayImage::read(&path).unwrap(), sample());
        assert!(matches!(
            GrayImage::read(&dir.path().join("missing.pgm")),
            Err(Ts1Error::Io { .. })
        ));
    }
}
