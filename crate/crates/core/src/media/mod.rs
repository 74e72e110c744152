//! Frame ingestion from codec-free sources, color conversions, and
//! temporal subsampling.
//!
//! Two containers are supported: numbered PPM/PNG image directories with a
//! `frames.json` metadata file, and uncompressed YUV4MPEG2 streams
//! (C420jpeg-family and C444). Both are bit-exact and need no external
//! decoder; anything else is expected to be transcoded with standard tools.

mod image_dir;
mod y4m;

pub use image_dir::{write_ppm, DirMeta};
pub use y4m::{write_y4m, Y4mWriter};

pub(crate) use image_dir::expand_pattern;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A decoded frame: interleaved RGB with channel values in `[0, 1]`.
///
/// Frames are immutable once built and safe to hand to parallel workers.
#[derive(Debug, Clone)]
pub struct Frame {
    pub index: usize,
    pub width: usize,
    pub height: usize,
    /// Seconds from the start of the video, `index / fps`.
    pub timestamp: f64,
    rgb: Vec<f32>,
}

impl Frame {
    pub fn new(index: usize, width: usize, height: usize, fps: f64, rgb: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("frame must have nonzero area".into()));
        }
        if rgb.len() != width * height * 3 {
            return Err(Error::InvalidInput(format!(
                "rgb buffer has {} values, expected {}",
                rgb.len(),
                width * height * 3
            )));
        }
        if rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidInput("channel value outside [0, 1]".into()));
        }
        Ok(Frame {
            index,
            width,
            height,
            timestamp: index as f64 / fps,
            rgb,
        })
    }

    /// Solid-color frame; handy for tests and synthetic content.
    pub fn solid(index: usize, width: usize, height: usize, fps: f64, color: [f32; 3]) -> Frame {
        let mut rgb = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            rgb.extend_from_slice(&color);
        }
        Frame::new(index, width, height, fps, rgb).expect("valid solid frame")
    }

    pub fn rgb(&self) -> &[f32] {
        &self.rgb
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }
}

/// Output range for grayscale conversion. Sharpness and the gray histograms
/// operate on byte-range values; everything else uses the unit range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrayRange {
    Unit,
    Byte,
}

/// Luminance plane, `0.2126 R + 0.7152 G + 0.0722 B` per pixel.
pub fn to_grayscale(frame: &Frame, range: GrayRange) -> Vec<f32> {
    let scale = match range {
        GrayRange::Unit => 1.0f32,
        GrayRange::Byte => 255.0,
    };
    frame
        .rgb
        .chunks_exact(3)
        .map(|p| (0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]) * scale)
        .collect()
}

/// Hexcone RGB→HSV. H in `[0, 360)` with achromatic pixels mapped to 0;
/// S and V in `[0, 1]`.
pub fn to_hsv(frame: &Frame) -> Vec<[f32; 3]> {
    frame.rgb.chunks_exact(3).map(|p| rgb_to_hsv(p[0], p[1], p[2])).collect()
}

pub(crate) fn rgb_to_hsv(r: f32, g: f32, b: f32) -> [f32; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else {
        let h = if max == r {
            (g - b) / delta % 6.0
        } else if max == g {
            (b - r) / delta + 2.0
        } else {
            (r - g) / delta + 4.0
        } * 60.0;
        if h < 0.0 {
            h + 360.0
        } else {
            h
        }
    };
    // fp round-off can land exactly on 360
    [if h >= 360.0 { 0.0 } else { h }, s, v]
}

/// How to interpret the path handed to [`VideoSource::open`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    ImageDir,
    Y4m,
}

enum Backend {
    Dir(image_dir::DirSource),
    Y4m(y4m::Y4mSource),
}

/// A video input: fixed fps, known frame count, frames decodable on demand
/// in strict index order. Open one iterator per sequential pass; multiple
/// sources (and multiple passes) may be open concurrently.
pub struct VideoSource {
    backend: Backend,
    fps: f64,
    n_frames: usize,
    width: usize,
    height: usize,
    provenance: PathBuf,
}

impl VideoSource {
    pub fn open(path: &Path, kind: SourceKind) -> Result<VideoSource> {
        let backend = match kind {
            SourceKind::ImageDir => Backend::Dir(image_dir::DirSource::open(path)?),
            SourceKind::Y4m => Backend::Y4m(y4m::Y4mSource::open(path)?),
        };
        let (fps, n_frames, width, height) = match &backend {
            Backend::Dir(d) => (d.meta.fps, d.meta.count, d.meta.width, d.meta.height),
            Backend::Y4m(y) => (y.fps(), y.n_frames, y.header.width, y.header.height),
        };
        if !(fps > 0.0) {
            return Err(Error::Format("source fps must be positive".into()));
        }
        if n_frames == 0 {
            return Err(Error::Format("source contains no frames".into()));
        }
        Ok(VideoSource {
            backend,
            fps,
            n_frames,
            width,
            height,
            provenance: path.to_path_buf(),
        })
    }

    /// Open by sniffing the path: a directory is an image dir, a file is Y4M.
    pub fn open_auto(path: &Path) -> Result<VideoSource> {
        if path.is_dir() {
            VideoSource::open(path, SourceKind::ImageDir)
        } else {
            VideoSource::open(path, SourceKind::Y4m)
        }
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn duration_seconds(&self) -> f64 {
        self.n_frames as f64 / self.fps
    }

    pub fn provenance(&self) -> &Path {
        &self.provenance
    }

    /// Fresh sequential reader over all frames, in index order.
    pub fn frames(&self) -> Result<FrameIter<'_>> {
        let reader = match &self.backend {
            Backend::Dir(_) => Reader::Dir { next: 0 },
            Backend::Y4m(y) => Reader::Y4m(y.reader()?),
        };
        Ok(FrameIter {
            source: self,
            reader,
            remaining: self.n_frames,
            next_index: 0,
        })
    }
}

enum Reader {
    Dir { next: usize },
    Y4m(y4m::Y4mReader),
}

/// Single-consumer sequential frame reader.
pub struct FrameIter<'a> {
    source: &'a VideoSource,
    reader: Reader,
    remaining: usize,
    next_index: usize,
}

impl FrameIter<'_> {
    /// Skip the next frame without decoding it to RGB.
    pub fn skip_one(&mut self) -> Result<()> {
        if self.remaining == 0 {
            return Ok(());
        }
        match (&mut self.reader, &self.source.backend) {
            (Reader::Dir { next }, _) => *next += 1,
            (Reader::Y4m(r), _) => r.skip_frame()?,
        }
        self.remaining -= 1;
        self.next_index += 1;
        Ok(())
    }

    fn read_one(&mut self) -> Result<Frame> {
        let index = self.next_index;
        let frame = match (&mut self.reader, &self.source.backend) {
            (Reader::Dir { next }, Backend::Dir(d)) => {
                let f = d.decode_frame(*next, self.source.fps)?;
                *next += 1;
                f
            }
            (Reader::Y4m(r), Backend::Y4m(_)) => r.read_frame(index, self.source.fps)?,
            _ => unreachable!("reader/backend mismatch"),
        };
        self.remaining -= 1;
        self.next_index += 1;
        Ok(frame)
    }
}

impl Iterator for FrameIter<'_> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        Some(self.read_one())
    }
}

/// Static subsampling plan: which full-rate indices are kept at `stride`
/// spacing, and the map from subsampled position back to full-rate index.
#[derive(Debug, Clone)]
pub struct SubsamplePlan {
    pub stride: usize,
    /// Full-rate frame index for each subsampled position.
    pub indices: Vec<usize>,
}

impl SubsamplePlan {
    pub fn contains(&self, full_rate_index: usize) -> bool {
        full_rate_index % self.stride == 0
    }
}

/// Plan a temporal subsample at `target_rate` frames/second.
///
/// Frames are kept every `round(fps / target_rate)` positions starting at 0.
pub fn subsample_plan(fps: f64, n_frames: usize, target_rate: f64) -> Result<SubsamplePlan> {
    if !(target_rate > 0.0) || target_rate > fps {
        return Err(Error::InvalidInput(format!(
            "target rate {target_rate} must be in (0, fps={fps}]"
        )));
    }
    let stride = ((fps / target_rate).round() as usize).max(1);
    let indices: Vec<usize> = (0..n_frames).step_by(stride).collect();
    Ok(SubsamplePlan { stride, indices })
}

/// Iterator over the subsampled frames of a source plus the index map back
/// to full-rate frame indices.
pub fn subsample(
    source: &VideoSource,
    target_rate: f64,
) -> Result<(impl Iterator<Item = Result<Frame>> + '_, Vec<usize>)> {
    let plan = subsample_plan(source.fps(), source.n_frames(), target_rate)?;
    let map = plan.indices.clone();
    let mut iter = source.frames()?;
    let n = source.n_frames();
    let stride = plan.stride;
    let it = (0..n).filter_map(move |i| {
        if i % stride == 0 {
            iter.next()
        } else {
            match iter.skip_one() {
                Ok(()) => None,
                Err(e) => Some(Err(e)),
            }
        }
    });
    Ok((it, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray_frame(level: f32) -> Frame {
        Frame::solid(0, 4, 4, 24.0, [level, level, level])
    }

    #[test]
    fn grayscale_of_white_is_one() {
        let plane = to_grayscale(&gray_frame(1.0), GrayRange::Unit);
        assert!(plane.iter().all(|&v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn grayscale_of_pure_red_is_red_coefficient() {
        let f = Frame::solid(0, 4, 4, 24.0, [1.0, 0.0, 0.0]);
        let plane = to_grayscale(&f, GrayRange::Unit);
        assert!(plane.iter().all(|&v| (v - 0.2126).abs() < 1e-6));
    }

    #[test]
    fn grayscale_of_black_in_byte_range_is_zero() {
        let plane = to_grayscale(&gray_frame(0.0), GrayRange::Byte);
        assert!(plane.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grayscale_is_idempotent_on_gray_frames() {
        let f = Frame::solid(0, 3, 3, 24.0, [0.37, 0.37, 0.37]);
        let once = to_grayscale(&f, GrayRange::Unit);
        let as_rgb: Vec<f32> = once.iter().flat_map(|&g| [g, g, g]).collect();
        let f2 = Frame::new(0, 3, 3, 24.0, as_rgb).unwrap();
        let twice = to_grayscale(&f2, GrayRange::Unit);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hsv_of_primaries() {
        assert_eq!(rgb_to_hsv(1.0, 0.0, 0.0), [0.0, 1.0, 1.0]);
        assert_eq!(rgb_to_hsv(0.0, 1.0, 0.0), [120.0, 1.0, 1.0]);
        assert_eq!(rgb_to_hsv(0.0, 0.0, 1.0), [240.0, 1.0, 1.0]);
    }

    #[test]
    fn hsv_of_achromatic_pixel_uses_zero_hue() {
        assert_eq!(rgb_to_hsv(0.5, 0.5, 0.5), [0.0, 0.0, 0.5]);
    }

    #[test]
    fn subsample_plan_stride_arithmetic() {
        // 100 frames at 24 fps down to 2 fps: every 12th frame, 9 kept.
        let plan = subsample_plan(24.0, 100, 2.0).unwrap();
        assert_eq!(plan.stride, 12);
        assert_eq!(plan.indices.len(), 9);
        assert_eq!(plan.indices[1], 12);
        assert_eq!(*plan.indices.last().unwrap(), 96);
    }

    #[test]
    fn subsample_at_source_rate_is_identity() {
        let plan = subsample_plan(24.0, 10, 24.0).unwrap();
        assert_eq!(plan.stride, 1);
        assert_eq!(plan.indices, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn subsample_rejects_rates_above_fps() {
        assert!(subsample_plan(24.0, 10, 25.0).is_err());
        assert!(subsample_plan(24.0, 10, 0.0).is_err());
    }

    #[test]
    fn frame_rejects_out_of_range_channels() {
        let err = Frame::new(0, 1, 1, 24.0, vec![0.0, 1.5, 0.0]);
        assert!(err.is_err());
    }
}
