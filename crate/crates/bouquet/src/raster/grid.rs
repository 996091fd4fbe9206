//! Labeled pixel grid with an exact affine pixel-center map and PPM output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// A rectangular window with per-pixel small-integer labels.  Row index `i`
/// runs top to bottom, column index `j` left to right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub top_left: Complex64,
    pub bottom_right: Complex64,
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
    pub legend: BTreeMap<u8, String>,
}

impl RasterGrid {
    pub fn new(top_left: Complex64, bottom_right: Complex64, width: usize, height: usize) -> Self {
        assert!(top_left.re < bottom_right.re && top_left.im > bottom_right.im);
        assert!(width > 0 && height > 0);
        RasterGrid {
            top_left,
            bottom_right,
            width,
            height,
            labels: vec![0; width * height],
            legend: BTreeMap::new(),
        }
    }

    pub fn dx(&self) -> f64 {
        (self.bottom_right.re - self.top_left.re) / self.width as f64
    }

    pub fn dy(&self) -> f64 {
        (self.top_left.im - self.bottom_right.im) / self.height as f64
    }

    /// Exact affine pixel-center map.
    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.top_left.re + (j as f64 + 0.5) * self.dx(),
            self.top_left.im - (i as f64 + 0.5) * self.dy(),
        )
    }

    /// Pixel containing `z`, if inside the window.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let fj = (z.re - self.top_left.re) / self.dx();
        let fi = (self.top_left.im - z.im) / self.dy();
        if fi < 0.0 || fj < 0.0 || fi >= self.height as f64 || fj >= self.width as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.labels[i * self.width + j]
    }

    pub fn set(&mut self, i: usize, j: usize, code: u8) {
        self.labels[i * self.width + j] = code;
    }

    pub fn contains_point(&self, z: Complex64) -> bool {
        self.pixel_of(z).is_some()
    }

    /// Fraction of pixels carrying `code`.
    pub fn fraction_of(&self, code: u8) -> f64 {
        let n = self.labels.iter().filter(|&&c| c == code).count();
        n as f64 / self.labels.len() as f64
    }

    /// Stamp a polyline into a boolean mask, sampling each segment at
    /// half-pixel spacing so strokes have no gaps.
    pub fn stamp_polyline(&self, mask: &mut [bool], points: &[Complex64]) {
        let px = self.dx().min(self.dy());
        for pair in points.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let steps = ((b - a).norm() / (0.5 * px)).ceil().max(1.0) as usize;
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                if let Some((i, j)) = self.pixel_of(a + (b - a) * t) {
                    mask[i * self.width + j] = true;
                }
            }
        }
    }

    /// Whether a mask of this grid's shape has any set pixel on the frame.
    pub fn mask_touches_frame(&self, mask: &[bool]) -> bool {
        let (w, h) = (self.width, self.height);
        (0..w).any(|j| mask[j] || mask[(h - 1) * w + j])
            || (0..h).any(|i| mask[i * w] || mask[i * w + w - 1])
    }

    /// Binary PPM with the exact header `P6\n<w> <h>\n255\n`, row-major from
    /// the top-left pixel.
    pub fn write_ppm<P: AsRef<Path>, F: Fn(u8) -> [u8; 3]>(
        &self,
        path: P,
        palette: F,
    ) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(self.labels.len() * 3 + 32);
        write!(buf, "P6\n{} {}\n255\n", self.width, self.height)?;
        for &code in &self.labels {
            buf.extend_from_slice(&palette(code));
        }
        std::fs::write(path, buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RasterGrid {
        RasterGrid::new(
            Complex64::new(-1.0, 1.0),
            Complex64::new(1.0, -1.0),
            4,
            4,
        )
    }

    #[test]
    fn center_and_pixel_roundtrip() {
        let g = grid();
        for i in 0..4 {
            for j in 0..4 {
                let z = g.center(i, j);
                assert_eq!(g.pixel_of(z), Some((i, j)));
            }
        }
        assert_eq!(g.center(0, 0), Complex64::new(-0.75, 0.75));
        assert_eq!(g.pixel_of(Complex64::new(2.0, 0.0)), None);
    }

    #[test]
    fn ppm_header_exact() {
        let mut g = grid();
        g.set(0, 0, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.ppm");
        g.write_ppm(&path, |c| if c == 0 { [0, 0, 0] } else { [255, 0, 0] })
            .unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P6\n4 4\n255\n"));
        assert_eq!(bytes.len(), 11 + 48);
        assert_eq!(&bytes[11..14], &[255, 0, 0]);
        assert_eq!(&bytes[14..17], &[0, 0, 0]);
    }
}
