//! Per-frame quality scores — luminance, sharpness, uniformity — and the
//! dark/blurry/uniform labels used to discard undesirable frames before the
//! expensive pipeline stages run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc;
use crate::media::{to_grayscale, Frame, GrayRange};

/// Label attached to an undesirable frame. Priority when several tests
/// fail: dark, then blurry, then uniform (a dark frame typically fails all
/// three).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityLabel {
    None,
    Dark,
    Blurry,
    Uniform,
}

impl QualityLabel {
    pub fn is_bad(self) -> bool {
        self != QualityLabel::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::None => "none",
            QualityLabel::Dark => "dark",
            QualityLabel::Blurry => "blurry",
            QualityLabel::Uniform => "uniform",
        }
    }
}

/// Scores for one frame. `luminance` and `uniformity` are in `[0, 1]`;
/// `sharpness` is a mean squared gradient on byte-range gray and is
/// unbounded above.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QualityScores {
    pub luminance: f64,
    pub sharpness: f64,
    pub uniformity: f64,
}

/// Score thresholds; a frame is flagged when a score falls below the
/// corresponding minimum. The defaults are consistent with the reference
/// exemplars (dark 0.02 vs clean 0.14; blurry 83.19 vs sharp 1955.33;
/// uniform 0.24 vs varied 0.70) and are fully configurable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QualityThresholds {
    pub y_min: f64,
    pub s_min: f64,
    pub u_min: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        QualityThresholds {
            y_min: 0.10,
            s_min: 100.0,
            u_min: 0.30,
        }
    }
}

/// Number of histogram bins used by the uniformity score.
pub const UNIFORMITY_BINS: usize = 128;
/// Top 5th-percentile bin count: ceil(0.05 * 128).
pub const UNIFORMITY_TOP_BINS: usize = 7;

/// Mean luminance over the frame, `mean(0.2126 R + 0.7152 G + 0.0722 B)`.
pub fn luminance(frame: &Frame) -> f64 {
    let plane = to_grayscale(frame, GrayRange::Unit);
    plane.iter().map(|&v| v as f64).sum::<f64>() / plane.len() as f64
}

/// Mean squared Sobel gradient magnitude over interior pixels of the
/// byte-range grayscale plane.
pub fn sharpness(frame: &Frame) -> Result<f64> {
    let gray = to_grayscale(frame, GrayRange::Byte);
    sharpness_of_gray(&gray, frame.width, frame.height)
}

pub(crate) fn sharpness_of_gray(gray: &[f32], width: usize, height: usize) -> Result<f64> {
    let (gx, gy) = imgproc::sobel(gray, width, height).ok_or_else(|| {
        Error::DegenerateInput(format!(
            "sharpness needs at least a 3x3 frame, got {width}x{height}"
        ))
    })?;
    let sum: f64 = gx.iter().zip(&gy).map(|(&x, &y)| x * x + y * y).sum();
    Ok(sum / gx.len() as f64)
}

/// Uniformity score: one minus the mass held by the 7 largest bins of the
/// normalized 128-bin grayscale histogram. Low values mean the frame's
/// intensities are concentrated in a few levels.
pub fn uniformity(frame: &Frame) -> f64 {
    let gray = to_grayscale(frame, GrayRange::Unit);
    uniformity_of_gray(&gray)
}

pub(crate) fn uniformity_of_gray(gray_unit: &[f32]) -> f64 {
    let mut hist = imgproc::unit_histogram(gray_unit.iter().map(|&v| v as f64), UNIFORMITY_BINS);
    imgproc::l1_normalize(&mut hist);
    hist.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite histogram"));
    let top: f64 = hist[..UNIFORMITY_TOP_BINS].iter().sum();
    (1.0 - top).clamp(0.0, 1.0)
}

/// All three scores in one pass over shared grayscale planes.
pub fn scores(frame: &Frame) -> Result<QualityScores> {
    let unit = to_grayscale(frame, GrayRange::Unit);
    let byte: Vec<f32> = unit.iter().map(|&v| v * 255.0).collect();
    let luminance = unit.iter().map(|&v| v as f64).sum::<f64>() / unit.len() as f64;
    Ok(QualityScores {
        luminance,
        sharpness: sharpness_of_gray(&byte, frame.width, frame.height)?,
        uniformity: uniformity_of_gray(&unit),
    })
}

/// Assign the label, testing dark before blurry before uniform.
pub fn label(scores: &QualityScores, thresholds: &QualityThresholds) -> QualityLabel {
    if scores.luminance < thresholds.y_min {
        QualityLabel::Dark
    } else if scores.sharpness < thresholds.s_min {
        QualityLabel::Blurry
    } else if scores.uniformity < thresholds.u_min {
        QualityLabel::Uniform
    } else {
        QualityLabel::None
    }
}

/// Write per-frame scores as CSV: `index,y,s,u,label`.
pub fn write_scores_csv(
    out: &mut impl std::io::Write,
    rows: impl Iterator<Item = (usize, QualityScores, QualityLabel)>,
) -> Result<()> {
    writeln!(out, "index,y,s,u,label")?;
    for (index, s, l) in rows {
        writeln!(
            out,
            "{index},{},{},{},{}",
            s.luminance,
            s.sharpness,
            s.uniformity,
            l.as_str()
        )?;
    }
    Ok(())
}
