//! Numbered image directory source: PPM (P6) or PNG frames plus a
//! `frames.json` metadata file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::Frame;

/// Contents of `frames.json`. `pattern` is printf-style with a single
/// `%d`/`%0Nd` hole, e.g. `frame_%06d.ppm`; frame numbering starts at 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirMeta {
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    pub pattern: String,
    pub count: usize,
}

pub(super) struct DirSource {
    pub meta: DirMeta,
    dir: PathBuf,
}

impl DirSource {
    pub fn open(dir: &Path) -> Result<DirSource> {
        let meta_path = dir.join("frames.json");
        if !meta_path.exists() {
            return Err(Error::Format(format!(
                "no frames.json in {}",
                dir.display()
            )));
        }
        let meta: DirMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
        if meta.count == 0 {
            return Err(Error::Format("frames.json declares zero frames".into()));
        }
        if !(meta.fps > 0.0) {
            return Err(Error::Format("frames.json fps must be positive".into()));
        }
        expand_pattern(&meta.pattern, 0)?; // validate the pattern up front
        Ok(DirSource {
            meta,
            dir: dir.to_path_buf(),
        })
    }

    pub fn decode_frame(&self, index: usize, fps: f64) -> Result<Frame> {
        let name = expand_pattern(&self.meta.pattern, index)?;
        let path = self.dir.join(&name);
        let lower = name.to_ascii_lowercase();
        let (w, h, rgb) = if lower.ends_with(".ppm") {
            decode_ppm(&path)?
        } else if lower.ends_with(".png") {
            decode_png(&path)?
        } else {
            return Err(Error::UnsupportedFormat(format!(
                "frame extension in pattern `{}` (want .ppm or .png)",
                self.meta.pattern
            )));
        };
        if w != self.meta.width || h != self.meta.height {
            return Err(Error::Format(format!(
                "{name}: {w}x{h} does not match frames.json {}x{}",
                self.meta.width, self.meta.height
            )));
        }
        Frame::new(index, w, h, fps, rgb)
    }
}

/// Expand a printf-style `%d` / `%0Nd` pattern.
pub(super) fn expand_pattern(pattern: &str, index: usize) -> Result<String> {
    let Some(pos) = pattern.find('%') else {
        return Err(Error::Format(format!("pattern `{pattern}` has no % hole")));
    };
    let rest = &pattern[pos + 1..];
    let digits_end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
    let (width_str, after) = rest.split_at(digits_end);
    if !after.starts_with('d') {
        return Err(Error::Format(format!(
            "pattern `{pattern}` must use %d or %0Nd"
        )));
    }
    let number = if width_str.is_empty() {
        index.to_string()
    } else {
        let width: usize = width_str
            .trim_start_matches('0')
            .parse()
            .unwrap_or(width_str.len());
        format!("{index:0width$}")
    };
    Ok(format!("{}{}{}", &pattern[..pos], number, &after[1..]))
}

fn decode_png(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let img = image::open(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let rgb = img.into_raw().iter().map(|&b| b as f32 / 255.0).collect();
    Ok((w, h, rgb))
}

/// Binary PPM (P6, maxval 255).
fn decode_ppm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path)?;
    let mut cursor = 0usize;

    let mut token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and `#` comments between tokens
        loop {
            while cursor < bytes.len() && bytes[cursor].is_ascii_whitespace() {
                cursor += 1;
            }
            if cursor < bytes.len() && bytes[cursor] == b'#' {
                while cursor < bytes.len() && bytes[cursor] != b'\n' {
                    cursor += 1;
                }
            } else {
                break;
            }
        }
        let start = cursor;
        while cursor < bytes.len() && !bytes[cursor].is_ascii_whitespace() {
            cursor += 1;
        }
        if start == cursor {
            return Err(Error::Format(format!("{}: truncated header", path.display())));
        }
        Ok(String::from_utf8_lossy(&bytes[start..cursor]).into_owned())
    };

    let magic = token(&bytes)?;
    if magic != "P6" {
        return Err(Error::UnsupportedFormat(format!(
            "{}: PPM magic `{magic}` (only P6 is supported)",
            path.display()
        )));
    }
    let w: usize = token(&bytes)?.parse().map_err(|_| bad_ppm(path))?;
    let h: usize = token(&bytes)?.parse().map_err(|_| bad_ppm(path))?;
    let maxval: usize = token(&bytes)?.parse().map_err(|_| bad_ppm(path))?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "{}: PPM maxval {maxval} (only 255 is supported)",
            path.display()
        )));
    }
    cursor += 1; // single whitespace byte after maxval
    let need = w * h * 3;
    if bytes.len() < cursor + need {
        return Err(Error::Format(format!("{}: truncated pixel data", path.display())));
    }
    let rgb = bytes[cursor..cursor + need]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    Ok((w, h, rgb))
}

fn bad_ppm(path: &Path) -> Error {
    Error::Format(format!("{}: malformed PPM header", path.display()))
}

/// Write a frame as binary PPM (P6, maxval 255).
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[f32]) -> Result<()> {
    use std::io::Write;
    let mut out = Vec::with_capacity(width * height * 3 + 32);
    write!(&mut out, "P6\n{width} {height}\n255\n")?;
    for &c in rgb {
        out.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{SourceKind, VideoSource};

    #[test]
    fn pattern_expansion() {
        assert_eq!(expand_pattern("frame_%06d.ppm", 12).unwrap(), "frame_000012.ppm");
        assert_eq!(expand_pattern("f%d.png", 3).unwrap(), "f3.png");
        assert!(expand_pattern("noformat.ppm", 0).is_err());
    }

    #[test]
    fn ppm_round_trip_through_directory_source() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..10 {
            let level = i as f32 / 10.0;
            let rgb: Vec<f32> = std::iter::repeat([level, 0.5, 1.0 - level])
                .take(6 * 4)
                .flatten()
                .collect();
            write_ppm(&dir.path().join(format!("frame_{i:04}.ppm")), 6, 4, &rgb).unwrap();
        }
        let meta = DirMeta {
            fps: 24.0,
            width: 6,
            height: 4,
            pattern: "frame_%04d.ppm".into(),
            count: 10,
        };
        std::fs::write(
            dir.path().join("frames.json"),
            serde_json::to_string(&meta).unwrap(),
        )
        .unwrap();

        let src = VideoSource::open(dir.path(), SourceKind::ImageDir).unwrap();
        assert_eq!(src.fps(), 24.0);
        assert_eq!(src.n_frames(), 10);
        let frames: Vec<_> = src.frames().unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(frames.len(), 10);
        // quantization to bytes is the only loss
        let p = frames[3].pixel(0, 0);
        assert!((p[0] - 0.3).abs() < 1.5 / 255.0);
        assert_eq!(frames[7].index, 7);
    }

    #[test]
    fn empty_directory_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = VideoSource::open(dir.path(), SourceKind::ImageDir).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }
}
