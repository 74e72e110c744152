//! Segment bookkeeping: applying split points, refining segments by
//! per-frame quality labels, and the short-segment merge/eliminate pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quality::QualityLabel;

/// A frame interval `[start, end)` in full-rate indices. `bad_fraction` is
/// the fraction of frames inside it labeled other than `none`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub bad_fraction: f64,
}

impl Segment {
    pub fn new(start: usize, end: usize) -> Segment {
        Segment {
            start,
            end,
            bad_fraction: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Ordered, non-overlapping segments over a video. Gaps between adjacent
/// segments are allowed; overlap is not.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub n_frames: usize,
    pub fps: f64,
}

impl Segmentation {
    pub fn new(segments: Vec<Segment>, n_frames: usize, fps: f64) -> Result<Segmentation> {
        let seg = Segmentation {
            segments,
            n_frames,
            fps,
        };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.segments {
            if s.start >= s.end || s.end > self.n_frames {
                return Err(Error::InvalidInput(format!(
                    "segment [{}, {}) out of range for {} frames",
                    s.start, s.end, self.n_frames
                )));
            }
        }
        for pair in self.segments.windows(2) {
            if pair[0].end > pair[1].start {
                return Err(Error::InvalidInput(format!(
                    "segments [{}, {}) and [{}, {}) overlap",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        Ok(())
    }

    /// Total number of frames covered by segments.
    pub fn covered_frames(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }
}

// --- JSON wire format -----------------------------------------------------
// `{ "fps": f, "n_frames": n, "segments": [{"start": a, "end": b}, ...] }`

#[derive(Serialize, Deserialize)]
struct SegmentJson {
    start: usize,
    end: usize,
}

#[derive(Serialize, Deserialize)]
struct SegmentationJson {
    fps: f64,
    n_frames: usize,
    segments: Vec<SegmentJson>,
}

impl Segmentation {
    pub fn to_json(&self) -> Result<String> {
        let wire = SegmentationJson {
            fps: self.fps,
            n_frames: self.n_frames,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentJson {
                    start: s.start,
                    end: s.end,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Segmentation> {
        let wire: SegmentationJson = serde_json::from_str(text)?;
        Segmentation::new(
            wire.segments
                .into_iter()
                .map(|s| Segment::new(s.start, s.end))
                .collect(),
            wire.n_frames,
            wire.fps,
        )
    }
}

/// Turn `k` ascending split points into `k + 1` contiguous segments
/// covering `[0, n_frames)`.
pub fn apply_splits(n_frames: usize, fps: f64, splits: &[usize]) -> Result<Segmentation> {
    for pair in splits.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::InvalidInput("split points must be ascending".into()));
        }
    }
    if let (Some(&first), Some(&last)) = (splits.first(), splits.last()) {
        if first == 0 || last >= n_frames {
            return Err(Error::InvalidInput(format!(
                "split points must lie strictly inside (0, {n_frames})"
            )));
        }
    }
    let mut segments = Vec::with_capacity(splits.len() + 1);
    let mut start = 0usize;
    for &split in splits {
        segments.push(Segment::new(start, split));
        start = split;
    }
    segments.push(Segment::new(start, n_frames));
    Segmentation::new(segments, n_frames, fps)
}

/// Parameters for [`refine_by_quality`].
#[derive(Debug, Clone, Copy)]
pub struct RefineParams {
    /// Segments whose pre-trim fraction of labeled frames exceeds this are
    /// dropped entirely.
    pub discard_fraction: f64,
    /// Interior runs of labeled frames longer than this split the segment;
    /// shorter runs are kept inline.
    pub max_bad_run: usize,
}

/// Refine a segmentation using per-frame quality labels: trim labeled
/// frames at segment ends, split segments at long interior runs of labeled
/// frames (dropping the run), and discard segments that were mostly bad to
/// begin with.
pub fn refine_by_quality(
    seg: &Segmentation,
    labels: &[QualityLabel],
    params: &RefineParams,
) -> Result<Segmentation> {
    if labels.len() != seg.n_frames {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} frames",
            labels.len(),
            seg.n_frames
        )));
    }
    let mut out: Vec<Segment> = Vec::new();
    for segment in &seg.segments {
        let bad_count = (segment.start..segment.end)
            .filter(|&i| labels[i].is_bad())
            .count();
        let bad_fraction = bad_count as f64 / segment.len() as f64;
        if bad_fraction > params.discard_fraction {
            continue;
        }

        // trim both ends
        let mut start = segment.start;
        let mut end = segment.end;
        while start < end && labels[start].is_bad() {
            start += 1;
        }
        while end > start && labels[end - 1].is_bad() {
            end -= 1;
        }
        if start >= end {
            continue;
        }

        // split at interior bad runs longer than max_bad_run
        let mut piece_start = start;
        let mut i = start;
        while i < end {
            if labels[i].is_bad() {
                let run_start = i;
                while i < end && labels[i].is_bad() {
                    i += 1;
                }
                if i - run_start > params.max_bad_run {
                    if run_start > piece_start {
                        out.push(piece_with_fraction(piece_start, run_start, labels));
                    }
                    piece_start = i;
                }
            } else {
                i += 1;
            }
        }
        if end > piece_start {
            out.push(piece_with_fraction(piece_start, end, labels));
        }
    }
    Segmentation::new(out, seg.n_frames, seg.fps)
}

fn piece_with_fraction(start: usize, end: usize, labels: &[QualityLabel]) -> Segment {
    let bad = (start..end).filter(|&i| labels[i].is_bad()).count();
    Segment {
        start,
        end,
        bad_fraction: bad as f64 / (end - start) as f64,
    }
}

/// Merge/eliminate pass over short segments: a single left-to-right sweep
/// of the (prev, cur, next) triples. An interior segment of at most `d_m`
/// frames absorbs its previous neighbor when the gap is at most `d_b`
/// frames, then its next neighbor under the same test; if neither merge
/// fired, the segment is removed. Boundary segments participate only as
/// neighbors. One pass as specified, so a merge may leave a new short
/// neighbor behind; the pass is not idempotent by design.
pub fn post_process_short_segments(seg: &Segmentation, d_m: usize, d_b: usize) -> Segmentation {
    let n = seg.segments.len();
    if n < 3 {
        return seg.clone();
    }
    let mut slots: Vec<Option<Segment>> = seg.segments.iter().copied().map(Some).collect();

    for cur_idx in 1..n - 1 {
        let Some(cur) = slots[cur_idx] else {
            continue; // removed by an earlier merge
        };
        if cur.len() > d_m {
            continue;
        }
        let mut cur = cur;
        let mut merged = false;

        let prev_idx = (0..cur_idx).rev().find(|&i| slots[i].is_some());
        if let Some(pi) = prev_idx {
            let prev = slots[pi].unwrap();
            if cur.start - prev.end <= d_b {
                cur.start = prev.start;
                slots[pi] = None;
                merged = true;
            }
        }
        let next_idx = (cur_idx + 1..n).find(|&i| slots[i].is_some());
        if let Some(ni) = next_idx {
            let next = slots[ni].unwrap();
            if next.start - cur.end <= d_b {
                cur.end = next.end;
                slots[ni] = None;
                merged = true;
            }
        }

        slots[cur_idx] = if merged { Some(cur) } else { None };
    }

    let segments: Vec<Segment> = slots.into_iter().flatten().collect();
    Segmentation {
        segments,
        n_frames: seg.n_frames,
        fps: seg.fps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize, bad: &[std::ops::Range<usize>]) -> Vec<QualityLabel> {
        let mut l = vec![QualityLabel::None; n];
        for r in bad {
            for i in r.clone() {
                l[i] = QualityLabel::Dark;
            }
        }
        l
    }

    fn seg(intervals: &[(usize, usize)], n: usize) -> Segmentation {
        Segmentation::new(
            intervals.iter().map(|&(a, b)| Segment::new(a, b)).collect(),
            n,
            24.0,
        )
        .unwrap()
    }

    #[test]
    fn apply_splits_cases() {
        let none = apply_splits(100, 24.0, &[]).unwrap();
        assert_eq!(none.segments, vec![Segment::new(0, 100)]);

        let one = apply_splits(100, 24.0, &[40]).unwrap();
        assert_eq!(one.segments, vec![Segment::new(0, 40), Segment::new(40, 100)]);

        let two = apply_splits(100, 24.0, &[20, 60]).unwrap();
        let lens: Vec<usize> = two.segments.iter().map(Segment::len).collect();
        assert_eq!(lens, vec![20, 40, 40]);
    }

    #[test]
    fn apply_splits_rejects_out_of_range() {
        assert!(apply_splits(100, 24.0, &[0]).is_err());
        assert!(apply_splits(100, 24.0, &[100]).is_err());
        assert!(apply_splits(100, 24.0, &[30, 30]).is_err());
    }

    #[test]
    fn refine_keeps_clean_segmentation_unchanged() {
        let s = seg(&[(0, 40), (40, 100)], 100);
        let l = labels(100, &[]);
        let refined = refine_by_quality(
            &s,
            &l,
            &RefineParams {
                discard_fraction: 0.5,
                max_bad_run: 3,
            },
        )
        .unwrap();
        assert_eq!(refined.segments.len(), 2);
        assert_eq!(refined.segments[0].start, 0);
        assert_eq!(refined.segments[0].end, 40);
        assert_eq!(refined.segments[1].end, 100);
    }

    #[test]
    fn refine_trims_leading_bad_frames() {
        let s = seg(&[(0, 10)], 10);
        let l = labels(10, &[0..3]);
        let refined = refine_by_quality(
            &s,
            &l,
            &RefineParams {
                discard_fraction: 0.5,
                max_bad_run: 3,
            },
        )
        .unwrap();
        assert_eq!(refined.segments, vec![piece(3, 10)]);
    }

    #[test]
    fn refine_splits_on_long_interior_run() {
        let s = seg(&[(0, 20)], 20);
        let l = labels(20, &[8..15]);
        let refined = refine_by_quality(
            &s,
            &l,
            &RefineParams {
                discard_fraction: 0.5,
                max_bad_run: 3,
            },
        )
        .unwrap();
        assert_eq!(refined.segments, vec![piece(0, 8), piece(15, 20)]);
    }

    #[test]
    fn refine_keeps_short_interior_runs_inline() {
        let s = seg(&[(0, 20)], 20);
        let l = labels(20, &[9..11]);
        let refined = refine_by_quality(
            &s,
            &l,
            &RefineParams {
                discard_fraction: 0.5,
                max_bad_run: 3,
            },
        )
        .unwrap();
        assert_eq!(refined.segments.len(), 1);
        assert_eq!((refined.segments[0].start, refined.segments[0].end), (0, 20));
        assert!((refined.segments[0].bad_fraction - 0.1).abs() < 1e-12);
    }

    #[test]
    fn refine_discards_mostly_bad_segments_pre_trim() {
        let s = seg(&[(0, 10), (10, 20)], 20);
        let l = labels(20, &[0..6]); // 60% of the first segment
        let refined = refine_by_quality(
            &s,
            &l,
            &RefineParams {
                discard_fraction: 0.5,
                max_bad_run: 3,
            },
        )
        .unwrap();
        assert_eq!(refined.segments, vec![piece(10, 20)]);
    }

    #[test]
    fn refine_never_increases_coverage() {
        let s = seg(&[(0, 30), (40, 80)], 100);
        let l = labels(100, &[5..9, 50..70]);
        let refined = refine_by_quality(
            &s,
            &l,
            &RefineParams {
                discard_fraction: 0.9,
                max_bad_run: 2,
            },
        )
        .unwrap();
        assert!(refined.covered_frames() <= s.covered_frames());
        refined.validate().unwrap();
    }

    fn piece(a: usize, b: usize) -> Segment {
        Segment {
            start: a,
            end: b,
            bad_fraction: 0.0,
        }
    }

    #[test]
    fn post_process_skips_long_segments() {
        let s = seg(&[(0, 100)], 100);
        let out = post_process_short_segments(&s, 10, 5);
        assert_eq!(out.segments, s.segments);
    }

    #[test]
    fn post_process_merges_left_when_gap_small() {
        // interior short segment [50, 53) with gap 2 to prev
        let s = seg(&[(0, 48), (50, 53), (70, 100)], 100);
        let out = post_process_short_segments(&s, 5, 5);
        assert_eq!(
            out.segments.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(),
            vec![(0, 53), (70, 100)]
        );
    }

    #[test]
    fn post_process_removes_isolated_short_segment() {
        let s = seg(&[(0, 30), (50, 53), (80, 100)], 100);
        let out = post_process_short_segments(&s, 5, 5);
        assert_eq!(
            out.segments.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(),
            vec![(0, 30), (80, 100)]
        );
    }

    #[test]
    fn json_round_trip() {
        let s = seg(&[(0, 40), (45, 90)], 100);
        let text = s.to_json().unwrap();
        let back = Segmentation::from_json(&text).unwrap();
        assert_eq!(back.segments.len(), 2);
        assert_eq!(back.n_frames, 100);
        assert_eq!(back.fps, 24.0);
        assert_eq!(back.segments[1].start, 45);
    }
}
