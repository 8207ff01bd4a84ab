//! Dense single-channel float rasters and bilinear sampling.

use image::RgbImage;

/// Grayscale conversion weights for R, G, B.
pub const GRAY_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// Row-major single-channel float image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    /// Luma in [0, 1] from 8-bit RGB.
    pub fn gray_from_rgb(img: &RgbImage) -> Self {
        let (w, h) = img.dimensions();
        Plane::from_fn(w as usize, h as usize, |x, y| {
            let p = img.get_pixel(x as u32, y as u32).0;
            (GRAY_WEIGHTS[0] * p[0] as f32 + GRAY_WEIGHTS[1] * p[1] as f32 + GRAY_WEIGHTS[2] * p[2] as f32) / 255.0
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample; `None` unless all four taps are inside the image.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let (x0, y0, fx, fy) = self.taps(x, y)?;
        let i = y0 * self.width + x0;
        let (a, b, c, d) = self.corners(i, x0, y0);
        Some(a * (1.0 - fx) * (1.0 - fy) + b * fx * (1.0 - fy) + c * (1.0 - fx) * fy + d * fx * fy)
    }

    /// Bilinear sample with its exact partial derivatives `(v, dv/dx, dv/dy)`.
    #[inline]
    pub fn sample_with_gradient(&self, x: f64, y: f64) -> Option<(f64, f64, f64)> {
        let (x0, y0, fx, fy) = self.taps(x, y)?;
        let i = y0 * self.width + x0;
        let (a, b, c, d) = self.corners(i, x0, y0);
        let v = a * (1.0 - fx) * (1.0 - fy) + b * fx * (1.0 - fy) + c * (1.0 - fx) * fy + d * fx * fy;
        let dx = (b - a) * (1.0 - fy) + (d - c) * fy;
        let dy = (c - a) * (1.0 - fx) + (d - b) * fx;
        Some((v, dx, dy))
    }

    #[inline]
    fn taps(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        let xmax = (self.width - 1) as f64;
        let ymax = (self.height - 1) as f64;
        if !(x >= 0.0 && y >= 0.0 && x <= xmax && y <= ymax) {
            return None;
        }
        // Keep the lower tap strictly below the last column/row so the upper tap exists.
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        Some((x0, y0, x - x0 as f64, y - y0 as f64))
    }

    #[inline]
    fn corners(&self, i: usize, x0: usize, y0: usize) -> (f64, f64, f64, f64) {
        let dx = usize::from(x0 + 1 < self.width);
        let dy = if y0 + 1 < self.height { self.width } else { 0 };
        (
            self.data[i] as f64,
            self.data[i + dx] as f64,
            self.data[i + dy] as f64,
            self.data[i + dy + dx] as f64,
        )
    }

    /// Mean over non-overlapping `factor`×`factor` blocks.
    pub fn box_downsample(&self, factor: usize) -> Plane {
        assert!(factor >= 1 && self.width % factor == 0 && self.height % factor == 0);
        if factor == 1 {
            return self.clone();
        }
        let norm = 1.0 / (factor * factor) as f64;
        Plane::from_fn(self.width / factor, self.height / factor, |x, y| {
            let mut acc = 0.0f64;
            for yy in y * factor..(y + 1) * factor {
                for xx in x * factor..(x + 1) * factor {
                    acc += self.get(xx, yy) as f64;
                }
            }
            (acc * norm) as f32
        })
    }
}
