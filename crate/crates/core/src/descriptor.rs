//! Per-frame segmentation descriptor and the column-per-frame feature
//! matrix consumed by change-point detection.
//!
//! Each frame yields, for 5 pyramid regions (whole frame plus 2x2
//! quadrants), three 128-bin HSV histograms, a 30-bin magnitude-weighted
//! edge-orientation histogram over [0, 180), and a 30-bin edge-magnitude
//! histogram with fixed bin range. Every block is L1-normalized (or
//! all-zero when a frame has no edge response), giving
//! 5 * (3*128 + 30 + 30) = 2220 dimensions.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{self, MAX_SOBEL_MAGNITUDE};
use crate::media::{self, Frame, GrayRange, VideoSource};
use crate::Real;

pub const HSV_BINS: usize = 128;
pub const EDGE_BINS: usize = 30;
pub const REGIONS: usize = 5;
/// Region block: H + S + V histograms plus the two edge histograms.
pub const REGION_DIM: usize = 3 * HSV_BINS + 2 * EDGE_BINS;
/// Full descriptor length.
pub const DESCRIPTOR_DIM: usize = REGIONS * REGION_DIM;

/// Column-per-frame multivariate time series: `data` is `d x n` with
/// column `i` holding the descriptor of subsampled frame `i`, and
/// `frame_indices[i]` its full-rate index.
#[derive(Debug, Clone)]
pub struct FeatureMatrix<T> {
    pub data: Array2<T>,
    pub frame_indices: Vec<usize>,
    pub analysis_rate: f64,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn from_parts(data: Array2<T>, frame_indices: Vec<usize>, analysis_rate: f64) -> Result<Self> {
        if data.ncols() != frame_indices.len() {
            return Err(Error::InvalidInput(format!(
                "matrix has {} columns but {} frame indices",
                data.ncols(),
                frame_indices.len()
            )));
        }
        Ok(FeatureMatrix {
            data,
            frame_indices,
            analysis_rate,
        })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.data.ncols()
    }

    /// Lossless element-wise conversion (used to lift the f32 cache format
    /// to solver precision).
    pub fn cast<U: Real>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            data: self.data.mapv(|v| U::of_f64(v.as_f64())),
            frame_indices: self.frame_indices.clone(),
            analysis_rate: self.analysis_rate,
        }
    }
}

/// Sidecar metadata stored next to the raw blob.
#[derive(Debug, Serialize, Deserialize)]
struct MatrixSidecar {
    d: usize,
    n: usize,
    frame_indices: Vec<usize>,
    analysis_rate: f64,
}

impl FeatureMatrix<f32> {
    /// Write the matrix as a flat little-endian f32 blob (column-major, one
    /// frame per column) plus a JSON sidecar at `path` + `.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut blob = Vec::with_capacity(self.data.len() * 4 + 16);
        for col in self.data.columns() {
            for &v in col.iter() {
                blob.write_all(&v.to_le_bytes())?;
            }
        }
        fs::write(path, blob)?;
        let sidecar = MatrixSidecar {
            d: self.dim(),
            n: self.n_columns(),
            frame_indices: self.frame_indices.clone(),
            analysis_rate: self.analysis_rate,
        };
        fs::write(sidecar_path(path), serde_json::to_string(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureMatrix<f32>> {
        let sidecar: MatrixSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        let blob = fs::read(path)?;
        if blob.len() != sidecar.d * sidecar.n * 4 {
            return Err(Error::Format(format!(
                "matrix blob is {} bytes, sidecar promises {}",
                blob.len(),
                sidecar.d * sidecar.n * 4
            )));
        }
        let mut data = Array2::<f32>::zeros((sidecar.d, sidecar.n));
        let mut off = 0;
        for c in 0..sidecar.n {
            for r in 0..sidecar.d {
                data[[r, c]] = f32::from_le_bytes(blob[off..off + 4].try_into().unwrap());
                off += 4;
            }
        }
        FeatureMatrix::from_parts(data, sidecar.frame_indices, sidecar.analysis_rate)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Compute the 2220-dimensional descriptor of one frame.
pub fn frame_descriptor<T: Real>(frame: &Frame) -> Vec<T> {
    let (w, h) = (frame.width, frame.height);
    let hsv = media::to_hsv(frame);
    let gray = media::to_grayscale(frame, GrayRange::Byte);
    let edges = imgproc::sobel(&gray, w, h);

    // region 0 is the whole frame, then the four quadrants in reading order
    let region_of = |x: usize, y: usize| -> usize {
        match (x < w / 2, y < h / 2) {
            (true, true) => 1,
            (false, true) => 2,
            (true, false) => 3,
            (false, false) => 4,
        }
    };

    let mut hist = vec![0.0f64; DESCRIPTOR_DIM];
    {
        let mut add = |region: usize, offset: usize, bin: usize, weight: f64| {
            hist[region * REGION_DIM + offset + bin] += weight;
        };
        let unit_bin = |v: f32, bins: usize| -> usize {
            ((v as f64 * bins as f64) as usize).min(bins - 1)
        };
        for y in 0..h {
            for x in 0..w {
                let [hh, ss, vv] = hsv[y * w + x];
                let hb = ((hh as f64 / 360.0 * HSV_BINS as f64) as usize).min(HSV_BINS - 1);
                let sb = unit_bin(ss, HSV_BINS);
                let vb = unit_bin(vv, HSV_BINS);
                for region in [0, region_of(x, y)] {
                    add(region, 0, hb, 1.0);
                    add(region, HSV_BINS, sb, 1.0);
                    add(region, 2 * HSV_BINS, vb, 1.0);
                }
            }
        }
        if let Some((gx, gy)) = &edges {
            let iw = w - 2;
            for (i, (&dx, &dy)) in gx.iter().zip(gy.iter()).enumerate() {
                let magnitude = (dx * dx + dy * dy).sqrt();
                if magnitude <= 0.0 {
                    continue;
                }
                let x = i % iw + 1;
                let y = i / iw + 1;
                let mut theta = dy.atan2(dx).to_degrees();
                theta = theta.rem_euclid(180.0);
                let ob = ((theta / 180.0 * EDGE_BINS as f64) as usize).min(EDGE_BINS - 1);
                let mb = ((magnitude / MAX_SOBEL_MAGNITUDE * EDGE_BINS as f64) as usize)
                    .min(EDGE_BINS - 1);
                for region in [0, region_of(x, y)] {
                    add(region, 3 * HSV_BINS, ob, magnitude);
                    add(region, 3 * HSV_BINS + EDGE_BINS, mb, 1.0);
                }
            }
        }
    }

    // normalize each histogram block independently
    for region in 0..REGIONS {
        let base = region * REGION_DIM;
        for (off, len) in [
            (0, HSV_BINS),
            (HSV_BINS, HSV_BINS),
            (2 * HSV_BINS, HSV_BINS),
            (3 * HSV_BINS, EDGE_BINS),
            (3 * HSV_BINS + EDGE_BINS, EDGE_BINS),
        ] {
            imgproc::l1_normalize(&mut hist[base + off..base + off + len]);
        }
    }

    hist.into_iter().map(T::of_f64).collect()
}

/// Build the d x n matrix for a source at `analysis_rate` frames/second.
/// Descriptor extraction runs frame-parallel; columns keep temporal order.
pub fn build_matrix<T: Real>(source: &VideoSource, analysis_rate: f64) -> Result<FeatureMatrix<T>> {
    let plan = media::subsample_plan(source.fps(), source.n_frames(), analysis_rate)?;
    if plan.indices.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "change-point detection needs at least 2 sampled frames, got {}",
            plan.indices.len()
        )));
    }
    let mut data = Array2::<T>::zeros((DESCRIPTOR_DIM, plan.indices.len()));
    let mut iter = source.frames()?;
    let mut col = 0usize;
    let mut batch: Vec<Frame> = Vec::new();
    const BATCH: usize = 32;

    let mut flush = |batch: &mut Vec<Frame>, col: &mut usize, data: &mut Array2<T>| {
        let cols: Vec<Vec<T>> = batch.par_iter().map(|f| frame_descriptor::<T>(f)).collect();
        for c in cols {
            for (r, v) in c.into_iter().enumerate() {
                data[[r, *col]] = v;
            }
            *col += 1;
        }
        batch.clear();
    };

    for i in 0..source.n_frames() {
        if plan.contains(i) {
            match iter.next() {
                Some(frame) => batch.push(frame?),
                None => break,
            }
            if batch.len() >= BATCH {
                flush(&mut batch, &mut col, &mut data);
            }
        } else {
            iter.skip_one()?;
        }
    }
    flush(&mut batch, &mut col, &mut data);

    FeatureMatrix::from_parts(data, plan.indices, analysis_rate)
}
