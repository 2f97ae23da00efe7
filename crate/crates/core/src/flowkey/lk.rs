//! Single-scale iterative Lucas-Kanade point tracking.

use super::image::GrayFrame;
use super::FlowError;
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LkParams<T> {
    /// Odd window side length.
    pub window: usize,
    pub max_iterations: usize,
    /// Stop when the update is shorter than this (px).
    pub epsilon: T,
    /// Minimum structure-tensor eigenvalue for a point to count as tracked.
    pub min_eigenvalue: T,
    /// Gaussian pre-smoothing; zero disables it.
    pub smoothing_sigma: T,
}

impl<T: Scalar> Default for LkParams<T> {
    fn default() -> Self {
        LkParams {
            window: 5,
            max_iterations: 20,
            epsilon: T::lit(0.005),
            min_eigenvalue: T::lit(1.0),
            smoothing_sigma: T::lit(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowPoint<T> {
    pub x: T,
    pub y: T,
    pub vx: T,
    pub vy: T,
    pub tracked: bool,
}

struct Plane<T> {
    w: usize,
    h: usize,
    v: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    fn at(&self, x: isize, y: isize) -> T {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.v[y * self.w + x]
    }

    fn bilinear(&self, x: T, y: T) -> T {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let xi = x0.to_isize().unwrap_or(0);
        let yi = y0.to_isize().unwrap_or(0);
        let one = T::one();
        (one - fy) * ((one - fx) * self.at(xi, yi) + fx * self.at(xi + 1, yi))
            + fy * ((one - fx) * self.at(xi, yi + 1) + fx * self.at(xi + 1, yi + 1))
    }
}

fn smooth<T: Scalar>(frame: &GrayFrame, sigma: T) -> Plane<T> {
    let w = frame.width;
    let h = frame.height;
    let raw: Vec<T> = frame.pixels.iter().map(|&p| T::lit(p as f64)).collect();
    if sigma <= T::zero() {
        return Plane { w, h, v: raw };
    }
    let radius = (sigma * T::lit(3.0)).ceil().to_usize().unwrap_or(1).max(1) as isize;
    let mut kernel: Vec<T> = (-radius..=radius)
        .map(|i| {
            let d = T::lit(i as f64) / sigma;
            (-(d * d) / T::lit(2.0)).exp()
        })
        .collect();
    let sum = kernel.iter().fold(T::zero(), |a, &b| a + b);
    kernel.iter_mut().for_each(|k| *k = *k / sum);
    let src = Plane { w, h, v: raw };
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &c) in kernel.iter().enumerate() {
                acc = acc + c * src.at(x as isize + k as isize - radius, y as isize);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mid = Plane { w, h, v: tmp };
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &c) in kernel.iter().enumerate() {
                acc = acc + c * mid.at(x as isize, y as isize + k as isize - radius);
            }
            out[y * w + x] = acc;
        }
    }
    Plane { w, h, v: out }
}

/// A preprocessed frame pair that can track many points.
pub struct FlowPair<T> {
    prev: Plane<T>,
    next: Plane<T>,
    gx: Plane<T>,
    gy: Plane<T>,
    params: LkParams<T>,
}

impl<T: Scalar> FlowPair<T> {
    pub fn new(prev: &GrayFrame, next: &GrayFrame, params: LkParams<T>) -> Result<Self, FlowError> {
        if prev.width != next.width || prev.height != next.height {
            return Err(FlowError::Dimensions(format!(
                "{}x{} vs {}x{}",
                prev.width, prev.height, next.width, next.height
            )));
        }
        if params.window % 2 == 0 || params.window < 3 {
            return Err(FlowError::InvalidParameter(
                "window must be odd and at least 3".into(),
            ));
        }
        let p = smooth(prev, params.smoothing_sigma);
        let n = smooth(next, params.smoothing_sigma);
        let (w, h) = (p.w, p.h);
        let half = T::lit(0.5);
        let mut gx = vec![T::zero(); w * h];
        let mut gy = vec![T::zero(); w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let i = y as usize * w + x as usize;
                gx[i] = (p.at(x + 1, y) - p.at(x - 1, y)) * half;
                gy[i] = (p.at(x, y + 1) - p.at(x, y - 1)) * half;
            }
        }
        Ok(FlowPair {
            prev: p,
            next: n,
            gx: Plane { w, h, v: gx },
            gy: Plane { w, h, v: gy },
            params,
        })
    }

    pub fn width(&self) -> usize {
        self.prev.w
    }

    pub fn height(&self) -> usize {
        self.prev.h
    }

    /// Absolute temporal difference of the smoothed frames at a pixel.
    pub fn temporal_difference(&self, x: usize, y: usize) -> T {
        let i = y * self.prev.w + x;
        (self.next.v[i] - self.prev.v[i]).abs()
    }

    pub fn half_window(&self) -> usize {
        self.params.window / 2
    }

    pub fn track(&self, x: T, y: T) -> Result<FlowPoint<T>, FlowError> {
        let r = self.half_window() as isize;
        let rf = T::lit(r as f64);
        let maxx = T::lit((self.prev.w - 1) as f64) - rf;
        let maxy = T::lit((self.prev.h - 1) as f64) - rf;
        if !(x >= rf && y >= rf && x <= maxx && y <= maxy) {
            return Err(FlowError::PointOutOfBounds(
                x.to_f64_lossy(),
                y.to_f64_lossy(),
            ));
        }
        let n = (2 * r + 1) as usize;
        let mut samples = Vec::with_capacity(n * n);
        let (mut gxx, mut gxy, mut gyy) = (T::zero(), T::zero(), T::zero());
        for j in -r..=r {
            for i in -r..=r {
                let qx = x + T::lit(i as f64);
                let qy = y + T::lit(j as f64);
                let ix = self.gx.bilinear(qx, qy);
                let iy = self.gy.bilinear(qx, qy);
                let i0 = self.prev.bilinear(qx, qy);
                gxx = gxx + ix * ix;
                gxy = gxy + ix * iy;
                gyy = gyy + iy * iy;
                samples.push((qx, qy, ix, iy, i0));
            }
        }
        let two = T::lit(2.0);
        let tr = gxx + gyy;
        let det = gxx * gyy - gxy * gxy;
        let disc = ((gxx - gyy) * (gxx - gyy) + T::lit(4.0) * gxy * gxy).sqrt();
        let lambda_min = (tr - disc) / two;
        let untracked = FlowPoint {
            x,
            y,
            vx: T::zero(),
            vy: T::zero(),
            tracked: false,
        };
        if !(lambda_min >= self.params.min_eigenvalue) || det <= T::zero() {
            return Ok(untracked);
        }
        let (mut dx, mut dy) = (T::zero(), T::zero());
        for _ in 0..self.params.max_iterations {
            let (mut bx, mut by) = (T::zero(), T::zero());
            for &(qx, qy, ix, iy, i0) in &samples {
                let diff = i0 - self.next.bilinear(qx + dx, qy + dy);
                bx = bx + diff * ix;
                by = by + diff * iy;
            }
            let ux = (gyy * bx - gxy * by) / det;
            let uy = (gxx * by - gxy * bx) / det;
            dx = dx + ux;
            dy = dy + uy;
            if !(dx.is_finite() && dy.is_finite()) {
                return Ok(untracked);
            }
            if (ux * ux + uy * uy).sqrt() < self.params.epsilon {
                break;
            }
        }
        Ok(FlowPoint {
            x,
            y,
            vx: dx,
            vy: dy,
            tracked: true,
        })
    }
}

/// Tracks each point from `prev` into `next`.
pub fn lucas_kanade_flow<T: Scalar>(
    prev: &GrayFrame,
    next: &GrayFrame,
    points: &[(T, T)],
    params: LkParams<T>,
) -> Result<Vec<FlowPoint<T>>, FlowError> {
    if points.is_empty() {
        return Err(FlowError::EmptyInput("no points to track".into()));
    }
    let pair = FlowPair::new(prev, next, params)?;
    points.iter().map(|&(x, y)| pair.track(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(shift: usize) -> GrayFrame {
        let mut f = GrayFrame::filled(32, 32, 20);
        for y in 12..20 {
            for x in 12 + shift..20 + shift {
                f.pixels[y * 32 + x] = 220;
            }
        }
        f
    }

    fn textured(dx: f64, dy: f64) -> GrayFrame {
        let mut f = GrayFrame::filled(40, 40, 0);
        for y in 0..40 {
            for x in 0..40 {
                let u = x as f64 - dx;
                let v = y as f64 - dy;
                let val = 128.0
                    + 60.0 * (0.45 * u).sin() * (0.38 * v + 0.4).cos()
                    + 30.0 * (0.21 * (u + v)).sin();
                f.pixels[y * 40 + x] = val.round() as u8;
            }
        }
        f
    }

    #[test]
    fn identical_frames_zero_flow() {
        let f = textured(0.0, 0.0);
        let out = lucas_kanade_flow(
            &f,
            &f,
            &[(20.0, 20.0), (10.0, 25.0)],
            LkParams::<f64>::default(),
        )
        .unwrap();
        for p in out {
            assert!(p.tracked);
            assert!(p.vx.abs() < 1e-9 && p.vy.abs() < 1e-9);
        }
    }

    #[test]
    fn bright_square_one_pixel_right() {
        let out = lucas_kanade_flow(
            &square(0),
            &square(1),
            &[(15.5, 15.5)],
            LkParams::<f64>::default(),
        )
        .unwrap();
        assert!(out[0].tracked);
        assert!((out[0].vx - 1.0).abs() < 0.15, "vx = {}", out[0].vx);
        assert!(out[0].vy.abs() < 0.15, "vy = {}", out[0].vy);
    }

    #[test]
    fn flat_region_untracked() {
        let f = GrayFrame::filled(20, 20, 90);
        let out = lucas_kanade_flow(&f, &f, &[(10.0, 10.0)], LkParams::<f32>::default()).unwrap();
        assert!(!out[0].tracked);
    }

    #[test]
    fn errors() {
        let a = GrayFrame::filled(20, 20, 0);
        let b = GrayFrame::filled(21, 20, 0);
        assert!(matches!(
            lucas_kanade_flow(&a, &b, &[(10.0, 10.0)], LkParams::<f64>::default()),
            Err(FlowError::Dimensions(_))
        ));
        assert!(matches!(
            lucas_kanade_flow::<f64>(&a, &a, &[], LkParams::default()),
            Err(FlowError::EmptyInput(_))
        ));
        assert!(matches!(
            lucas_kanade_flow(&a, &a, &[(1.0, 10.0)], LkParams::<f64>::default()),
            Err(FlowError::PointOutOfBounds(..))
        ));
    }

    #[test]
    fn textured_translations_recovered() {
        let base = textured(0.0, 0.0);
        for &(dx, dy) in &[(1.0, 0.0), (0.0, -1.0), (2.0, 1.0), (-1.5, 0.5), (0.3, 0.7)] {
            let moved = textured(dx, dy);
            let pts = [(15.0, 15.0), (20.0, 22.0), (24.0, 17.0)];
            for p in lucas_kanade_flow(&base, &moved, &pts, LkParams::<f64>::default()).unwrap() {
                assert!(p.tracked);
                assert!(
                    (p.vx - dx).abs() < 0.15 && (p.vy - dy).abs() < 0.15,
                    "{dx},{dy} -> {p:?}"
                );
            }
        }
    }
}
