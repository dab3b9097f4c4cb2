//! Image sources for the inpainting pipeline.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use ts1_core::io::{read_matrix_csv, GrayImage};

use crate::config::ImageSource;
use crate::error::{BenchError, Result};

/// Deterministic `size × size` test scene in `[0, 1]`: a shaded background,
/// a few soft-edged disks and a striped band.
pub fn synthetic_image(size: usize) -> DMatrix<f64> {
    let s = size.max(1) as f64;
    let disks = [(0.3, 0.35, 0.18, 0.35), (0.68, 0.6, 0.22, -0.3), (0.45, 0.8, 0.1, 0.25)];
    DMatrix::from_fn(size, size, |i, j| {
        let (y, x) = ((i as f64 + 0.5) / s, (j as f64 + 0.5) / s);
        let mut v = 0.45 + 0.2 * (x - 0.5) + 0.1 * (2.0 * PI * y).cos() * (PI * x).sin();
        for &(cx, cy, rad, amp) in &disks {
            let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            v += amp / (1.0 + ((d - rad) * 60.0).exp());
        }
        if (0.1..0.2).contains(&y) {
            v += 0.12 * (2.0 * PI * 6.0 * x).sin();
        }
        v.clamp(0.0, 1.0)
    })
}

/// Loads a PGM (`.pgm`) or dense CSV matrix as intensities in `[0, 1]`.
///
/// CSV values are taken as is and must already lie in `[0, 1]`.
pub fn load_image(path: &Path) -> Result<DMatrix<f64>> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("pgm") => Ok(GrayImage::read(path)?.to_unit_matrix()),
        Some("csv") => {
            let m: DMatrix<f64> = read_matrix_csv(path)?;
            if m.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(BenchError::Config(format!(
                    "{}: CSV image values must lie in [0, 1]",
                    path.display()
                )));
            }
            Ok(m)
        }
        _ => Err(BenchError::Config(format!(
            "{}: unsupported image format (expected .pgm or .csv)",
            path.display()
        ))),
    }
}

pub fn resolve(source: &ImageSource) -> Result<DMatrix<f64>> {
    match source {
        ImageSource::Synthetic { size } => Ok(synthetic_image(*size)),
        ImageSource::File(path) => load_image(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ts1_core::io::PgmFormat;
    use ts1_core::spectral::singular_values;

    #[test]
    fn synthetic_image_is_in_range_and_deterministic() {
        let a = synthetic_image(64);
        assert_eq!(a.shape(), (64, 64));
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(a, synthetic_image(64));
        let s = singular_values(&a).unwrap();
        // Not low rank on its own, so truncation is meaningful.
        assert!(s[20] > 1e-6 * s[0]);
    }

    #[test]
    fn loads_pgm_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let img = synthetic_image(16);
        let pgm = dir.path().join("a.pgm");
        GrayImage::from_unit_matrix(&img, 255).write(&pgm, PgmFormat::Binary).unwrap();
        let back = load_image(&pgm).unwrap();
        assert!((back - &img).amax() <= 0.5 / 255.0 + 1e-12);

        let csv = dir.path().join("a.csv");
        ts1_core::io::write_matrix_csv(&csv, &img).unwrap();
        assert_eq!(load_image(&csv).unwrap(), img);

        std::fs::write(dir.path().join("b.csv"), "0.5,2\n").unwrap();
        assert!(load_image(&dir.path().join("b.csv")).is_err());
        assert!(load_image(&dir.path().join("c.png")).is_err());
    }
}
