//! Uncompressed YUV4MPEG2 reader/writer.
//!
//! Supported chroma modes: the C420 family (JPEG/MPEG2/PALDV siting all
//! decode identically here) and C444. YUV↔RGB uses BT.601 full-range
//! coefficients, so solid-color round trips are exact to within one
//! byte-quantization step per channel.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::media::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Chroma {
    C420,
    C444,
}

#[derive(Debug, Clone)]
pub(super) struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub fps_num: u64,
    pub fps_den: u64,
    pub chroma: Chroma,
}

impl Y4mHeader {
    fn frame_bytes(&self) -> usize {
        let luma = self.width * self.height;
        match self.chroma {
            Chroma::C420 => luma + luma / 2,
            Chroma::C444 => luma * 3,
        }
    }
}

pub(super) struct Y4mSource {
    pub header: Y4mHeader,
    pub n_frames: usize,
    path: PathBuf,
    first_frame_offset: u64,
}

impl Y4mSource {
    pub fn open(path: &Path) -> Result<Y4mSource> {
        let mut file = BufReader::new(File::open(path)?);
        let line = read_line(&mut file)?;
        let header = parse_header(&line)?;
        let first_frame_offset = (line.len() + 1) as u64;

        // one quick pass counting FRAME markers without decoding
        let mut n_frames = 0usize;
        let frame_bytes = header.frame_bytes() as i64;
        loop {
            match read_line(&mut file) {
                Ok(l) if l.starts_with("FRAME") => {
                    file.seek_relative(frame_bytes)?;
                    n_frames += 1;
                }
                Ok(l) if l.is_empty() => break,
                Ok(l) => {
                    return Err(Error::Format(format!("unexpected Y4M frame marker `{l}`")))
                }
                Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e),
            }
        }
        if n_frames == 0 {
            return Err(Error::Format("Y4M stream contains no frames".into()));
        }
        Ok(Y4mSource {
            header,
            n_frames,
            path: path.to_path_buf(),
            first_frame_offset,
        })
    }

    pub fn fps(&self) -> f64 {
        self.header.fps_num as f64 / self.header.fps_den as f64
    }

    pub fn reader(&self) -> Result<Y4mReader> {
        let mut file = BufReader::new(File::open(&self.path)?);
        file.seek(SeekFrom::Start(self.first_frame_offset))?;
        Ok(Y4mReader {
            file,
            header: self.header.clone(),
            buf: vec![0u8; self.header.frame_bytes()],
        })
    }
}

pub(super) struct Y4mReader {
    file: BufReader<File>,
    header: Y4mHeader,
    buf: Vec<u8>,
}

impl Y4mReader {
    fn frame_marker(&mut self) -> Result<()> {
        let line = read_line(&mut self.file)?;
        if !line.starts_with("FRAME") {
            return Err(Error::Format(format!("expected FRAME marker, got `{line}`")));
        }
        Ok(())
    }

    pub fn skip_frame(&mut self) -> Result<()> {
        self.frame_marker()?;
        self.file.seek_relative(self.header.frame_bytes() as i64)?;
        Ok(())
    }

    pub fn read_frame(&mut self, index: usize, fps: f64) -> Result<Frame> {
        self.frame_marker()?;
        self.file.read_exact(&mut self.buf)?;
        let (w, h) = (self.header.width, self.header.height);
        let luma = w * h;
        let mut rgb = vec![0.0f32; luma * 3];
        match self.header.chroma {
            Chroma::C444 => {
                let (y, rest) = self.buf.split_at(luma);
                let (cb, cr) = rest.split_at(luma);
                for i in 0..luma {
                    let px = yuv_to_rgb(y[i], cb[i], cr[i]);
                    rgb[i * 3..i * 3 + 3].copy_from_slice(&px);
                }
            }
            Chroma::C420 => {
                let cw = w / 2;
                let (y, rest) = self.buf.split_at(luma);
                let (cb, cr) = rest.split_at(luma / 4);
                for row in 0..h {
                    for col in 0..w {
                        let ci = (row / 2) * cw + col / 2;
                        let px = yuv_to_rgb(y[row * w + col], cb[ci], cr[ci]);
                        let o = (row * w + col) * 3;
                        rgb[o..o + 3].copy_from_slice(&px);
                    }
                }
            }
        }
        Frame::new(index, w, h, fps, rgb)
    }
}

fn read_line(r: &mut impl Read) -> Result<String> {
    let mut out = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match r.read(&mut byte)? {
            0 => {
                if out.is_empty() {
                    return Ok(String::new());
                }
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::UnexpectedEof,
                    "truncated Y4M line",
                )));
            }
            _ => {
                if byte[0] == b'\n' {
                    return Ok(String::from_utf8_lossy(&out).into_owned());
                }
                out.push(byte[0]);
                if out.len() > 256 {
                    return Err(Error::Format("Y4M header line too long".into()));
                }
            }
        }
    }
}

fn parse_header(line: &str) -> Result<Y4mHeader> {
    let mut parts = line.split(' ');
    if parts.next() != Some("YUV4MPEG2") {
        return Err(Error::Format("not a YUV4MPEG2 stream".into()));
    }
    let (mut width, mut height) = (0usize, 0usize);
    let (mut fps_num, mut fps_den) = (0u64, 0u64);
    let mut chroma = Chroma::C420; // spec default when C is absent
    for p in parts {
        let (tag, val) = p.split_at(1);
        match tag {
            "W" => width = val.parse().map_err(|_| bad_param(p))?,
            "H" => height = val.parse().map_err(|_| bad_param(p))?,
            "F" => {
                let (n, d) = val.split_once(':').ok_or_else(|| bad_param(p))?;
                fps_num = n.parse().map_err(|_| bad_param(p))?;
                fps_den = d.parse().map_err(|_| bad_param(p))?;
            }
            "C" => {
                chroma = match val {
                    "420jpeg" | "420" | "420mpeg2" | "420paldv" => Chroma::C420,
                    "444" => Chroma::C444,
                    other => {
                        return Err(Error::UnsupportedFormat(format!(
                            "Y4M chroma subsampling C{other}"
                        )))
                    }
                }
            }
            // interlacing, aspect, extensions: accepted and ignored
            "I" | "A" | "X" => {}
            _ => return Err(Error::Format(format!("unknown Y4M parameter `{p}`"))),
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::Format("Y4M header missing W/H".into()));
    }
    if fps_num == 0 || fps_den == 0 {
        return Err(Error::Format("Y4M header missing F".into()));
    }
    if chroma == Chroma::C420 && (width % 2 != 0 || height % 2 != 0) {
        return Err(Error::UnsupportedFormat(
            "odd dimensions with 4:2:0 chroma".into(),
        ));
    }
    Ok(Y4mHeader {
        width,
        height,
        fps_num,
        fps_den,
        chroma,
    })
}

fn bad_param(p: &str) -> Error {
    Error::Format(format!("malformed Y4M parameter `{p}`"))
}

#[inline]
fn yuv_to_rgb(y: u8, cb: u8, cr: u8) -> [f32; 3] {
    // BT.601 full range
    let y = y as f32;
    let cb = cb as f32 - 128.0;
    let cr = cr as f32 - 128.0;
    let r = y + 1.402 * cr;
    let g = y - 0.344136 * cb - 0.714136 * cr;
    let b = y + 1.772 * cb;
    [
        (r / 255.0).clamp(0.0, 1.0),
        (g / 255.0).clamp(0.0, 1.0),
        (b / 255.0).clamp(0.0, 1.0),
    ]
}

#[inline]
fn rgb_to_yuv(r: f32, g: f32, b: f32) -> [u8; 3] {
    let (r, g, b) = (r * 255.0, g * 255.0, b * 255.0);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    [
        y.round().clamp(0.0, 255.0) as u8,
        cb.round().clamp(0.0, 255.0) as u8,
        cr.round().clamp(0.0, 255.0) as u8,
    ]
}

/// Streaming Y4M writer (C420jpeg). Width and height must be even.
pub struct Y4mWriter {
    out: BufWriter<File>,
    width: usize,
    height: usize,
}

impl Y4mWriter {
    pub fn create(path: &Path, width: usize, height: usize, fps_num: u64, fps_den: u64) -> Result<Self> {
        if width % 2 != 0 || height % 2 != 0 {
            return Err(Error::InvalidInput(
                "Y4M 4:2:0 output requires even dimensions".into(),
            ));
        }
        let mut out = BufWriter::new(File::create(path)?);
        write!(out, "YUV4MPEG2 W{width} H{height} F{fps_num}:{fps_den} Ip A1:1 C420jpeg\n")?;
        Ok(Y4mWriter { out, width, height })
    }

    /// Append one frame given interleaved unit-range RGB.
    pub fn write_rgb(&mut self, rgb: &[f32]) -> Result<()> {
        let (w, h) = (self.width, self.height);
        assert_eq!(rgb.len(), w * h * 3, "frame size mismatch");
        let luma = w * h;
        let mut y_plane = vec![0u8; luma];
        // accumulate chroma as f32 for the 2x2 box average
        let (cw, ch) = (w / 2, h / 2);
        let mut cb_acc = vec![0.0f32; cw * ch];
        let mut cr_acc = vec![0.0f32; cw * ch];
        for row in 0..h {
            for col in 0..w {
                let i = (row * w + col) * 3;
                let [y, cb, cr] = rgb_to_yuv(rgb[i], rgb[i + 1], rgb[i + 2]);
                y_plane[row * w + col] = y;
                let ci = (row / 2) * cw + col / 2;
                cb_acc[ci] += cb as f32;
                cr_acc[ci] += cr as f32;
            }
        }
        let quarter = |acc: Vec<f32>| -> Vec<u8> {
            acc.into_iter()
                .map(|v| (v / 4.0).round().clamp(0.0, 255.0) as u8)
                .collect()
        };
        self.out.write_all(b"FRAME\n")?;
        self.out.write_all(&y_plane)?;
        self.out.write_all(&quarter(cb_acc))?;
        self.out.write_all(&quarter(cr_acc))?;
        Ok(())
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<()> {
        self.write_rgb(frame.rgb())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Write a whole sequence of RGB frames as a Y4M file.
pub fn write_y4m(
    path: &Path,
    width: usize,
    height: usize,
    fps_num: u64,
    fps_den: u64,
    frames: impl Iterator<Item = Vec<f32>>,
) -> Result<()> {
    let mut w = Y4mWriter::create(path, width, height, fps_num, fps_den)?;
    for rgb in frames {
        w.write_rgb(&rgb)?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{SourceKind, VideoSource};

    #[test]
    fn header_parse() {
        let h = parse_header("YUV4MPEG2 W640 H360 F24:1 C420jpeg").unwrap();
        assert_eq!((h.width, h.height), (640, 360));
        assert_eq!((h.fps_num, h.fps_den), (24, 1));
        assert_eq!(h.chroma, Chroma::C420);
    }

    #[test]
    fn unsupported_chroma_is_rejected() {
        let err = parse_header("YUV4MPEG2 W64 H36 F24:1 C422").unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn solid_color_round_trip_within_one_quantization_step() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.y4m");
        let colors = [[1.0f32, 0.0, 0.0], [0.25, 0.6, 0.9], [0.0, 0.0, 0.0]];
        let frames = colors.iter().map(|c| {
            let mut rgb = Vec::with_capacity(8 * 6 * 3);
            for _ in 0..8 * 6 {
                rgb.extend_from_slice(c);
            }
            rgb
        });
        write_y4m(&path, 8, 6, 24, 1, frames).unwrap();

        let src = VideoSource::open(&path, SourceKind::Y4m).unwrap();
        assert_eq!(src.n_frames(), 3);
        assert_eq!(src.fps(), 24.0);
        assert_eq!(src.width(), 8);
        let decoded: Vec<_> = src.frames().unwrap().collect::<Result<_>>().unwrap();
        for (frame, color) in decoded.iter().zip(&colors) {
            let px = frame.pixel(3, 3);
            for c in 0..3 {
                // encode + decode rounding: one quantization step per channel
                assert!(
                    (px[c] - color[c]).abs() <= 1.0 / 255.0 + 1e-4,
                    "channel {c}: {} vs {}",
                    px[c],
                    color[c]
                );
            }
        }
    }

    #[test]
    fn skip_frame_keeps_stream_aligned() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.y4m");
        let frames = (0..5).map(|i| {
            let level = i as f32 / 4.0;
            std::iter::repeat([level, level, level])
                .take(4 * 4)
                .flatten()
                .collect()
        });
        write_y4m(&path, 4, 4, 24, 1, frames).unwrap();
        let src = VideoSource::open(&path, SourceKind::Y4m).unwrap();
        let mut iter = src.frames().unwrap();
        iter.skip_one().unwrap();
        iter.skip_one().unwrap();
        let f2 = iter.next().unwrap().unwrap();
        assert_eq!(f2.index, 2);
        assert!((f2.pixel(0, 0)[0] - 0.5).abs() < 2.0 / 255.0);
    }
}
