//! Small shared image-processing kernels: Sobel gradients, histograms,
//! box/Gaussian filtering, and fixed-size resampling. All planes are
//! row-major slices with explicit width/height.

/// Sobel 3x3 responses over interior pixels, accumulated in f64.
///
/// Returns `(gx, gy)` planes of size `(width-2) x (height-2)`; `None` when
/// the input is smaller than the kernel.
pub fn sobel(gray: &[f32], width: usize, height: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if width < 3 || height < 3 {
        return None;
    }
    let (iw, ih) = (width - 2, height - 2);
    let mut gx = vec![0.0f64; iw * ih];
    let mut gy = vec![0.0f64; iw * ih];
    let at = |x: usize, y: usize| gray[y * width + x] as f64;
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let (tl, tc, tr) = (at(x - 1, y - 1), at(x, y - 1), at(x + 1, y - 1));
            let (ml, mr) = (at(x - 1, y), at(x + 1, y));
            let (bl, bc, br) = (at(x - 1, y + 1), at(x, y + 1), at(x + 1, y + 1));
            let o = (y - 1) * iw + (x - 1);
            gx[o] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            gy[o] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
        }
    }
    Some((gx, gy))
}

/// Largest possible Sobel gradient magnitude on byte-range input.
pub const MAX_SOBEL_MAGNITUDE: f64 = 1442.497833620557; // 4*255*sqrt(2)

/// Histogram of unit-range values over `bins` equal cells; out-of-range
/// values clamp into the edge bins.
pub fn unit_histogram(values: impl Iterator<Item = f64>, bins: usize) -> Vec<f64> {
    let mut hist = vec![0.0f64; bins];
    for v in values {
        let b = ((v * bins as f64) as isize).clamp(0, bins as isize - 1) as usize;
        hist[b] += 1.0;
    }
    hist
}

/// Scale a histogram so it sums to one; all-zero histograms are left as-is.
pub fn l1_normalize(hist: &mut [f64]) {
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        for v in hist.iter_mut() {
            *v /= total;
        }
    }
}

/// Separable box filter with replicate borders, applied `passes` times.
pub fn box_blur(plane: &[f64], width: usize, height: usize, radius: usize, passes: usize) -> Vec<f64> {
    let mut cur = plane.to_vec();
    for _ in 0..passes {
        cur = box_pass_h(&cur, width, height, radius);
        cur = box_pass_v(&cur, width, height, radius);
    }
    cur
}

fn box_pass_h(p: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    let norm = (2 * r + 1) as f64;
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dx in -(r as isize)..=(r as isize) {
                let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                acc += p[y * w + xx];
            }
            out[y * w + x] = acc / norm;
        }
    }
    out
}

fn box_pass_v(p: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    let norm = (2 * r + 1) as f64;
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -(r as isize)..=(r as isize) {
                let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                acc += p[yy * w + x];
            }
            out[y * w + x] = acc / norm;
        }
    }
    out
}

/// Separable Gaussian blur with replicate borders.
pub fn gaussian_blur(plane: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for d in -radius..=radius {
        kernel.push((-(d as f64).powi(2) / (2.0 * sigma * sigma)).exp());
    }
    let total: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= total;
    }

    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (ki, d) in (-radius..=radius).enumerate() {
                let xx = (x as isize + d).clamp(0, width as isize - 1) as usize;
                acc += plane[y * width + xx] * kernel[ki];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (ki, d) in (-radius..=radius).enumerate() {
                let yy = (y as isize + d).clamp(0, height as isize - 1) as usize;
                acc += tmp[yy * width + x] * kernel[ki];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Resample a plane to a fixed `side x side` grid by cell-mean assignment
/// (every input pixel lands in exactly one output cell); cells that receive
/// no pixels when upscaling fall back to nearest sampling.
pub fn resize_to_square(plane: &[f32], width: usize, height: usize, side: usize) -> Vec<f64> {
    let mut sums = vec![0.0f64; side * side];
    let mut counts = vec![0u32; side * side];
    for y in 0..height {
        let cy = (y * side / height).min(side - 1);
        for x in 0..width {
            let cx = (x * side / width).min(side - 1);
            sums[cy * side + cx] += plane[y * width + x] as f64;
            counts[cy * side + cx] += 1;
        }
    }
    let mut out = vec![0.0f64; side * side];
    for cy in 0..side {
        for cx in 0..side {
            let i = cy * side + cx;
            out[i] = if counts[i] > 0 {
                sums[i] / counts[i] as f64
            } else {
                let sy = ((cy * height + height / 2) / side).min(height - 1);
                let sx = ((cx * width + width / 2) / side).min(width - 1);
                plane[sy * width + sx] as f64
            };
        }
    }
    out
}
