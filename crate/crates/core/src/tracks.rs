//! Per-segment trajectories of PCA scores over time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentVector;
use crate::num::Real;
use crate::pca::PcaModel;
use crate::segmentation::SegmentKey;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub time_index: usize,
    pub time_fs: f64,
    /// Scores on PC1..PC4.
    pub scores: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub state_label: String,
    pub segment_id: SegmentKey,
    pub points: Vec<TrackPoint>,
}

impl Track {
    /// Scores on a 1-based axis pair.
    pub fn points_2d(&self, axes: AxisPair) -> Vec<[f64; 2]> {
        let (a, b) = axes.zero_based();
        self.points.iter().map(|p| [p.scores[a], p.scores[b]]).collect()
    }
}

/// Tracks sorted by (state label, segment).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub tracks: Vec<Track>,
}

impl TrackSet {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn get(&self, state_label: &str, segment: SegmentKey) -> Option<&Track> {
        self.tracks
            .iter()
            .find(|t| t.state_label == state_label && t.segment_id == segment)
    }

    pub fn num_points(&self) -> usize {
        self.tracks.iter().map(|t| t.points.len()).sum()
    }
}

/// Two distinct principal axes, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisPair(usize, usize);

impl AxisPair {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if !(1..=4).contains(&a) || !(1..=4).contains(&b) || a == b {
            return Err(Error::InvalidInput(format!(
                "axis pair must be two distinct axes in 1..=4, got ({a}, {b})"
            )));
        }
        Ok(AxisPair(a, b))
    }

    pub fn first(self) -> usize {
        self.0
    }

    pub fn second(self) -> usize {
        self.1
    }

    fn zero_based(self) -> (usize, usize) {
        (self.0 - 1, self.1 - 1)
    }
}

impl std::str::FromStr for AxisPair {
    type Err = Error;

    /// Parses `"1,3"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad axis pair {s:?}"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        AxisPair::new(a, b)
    }
}

/// Projects every moment vector and groups the scores by (state, segment),
/// ordered by time index.
pub fn build_tracks<T: Real>(model: &PcaModel, moments: &[MomentVector<T>]) -> Result<TrackSet> {
    let mut groups: BTreeMap<(String, SegmentKey), BTreeMap<usize, TrackPoint>> = BTreeMap::new();
    for m in moments {
        let p = m
            .provenance
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("moment vector without provenance".into()))?;
        let point = TrackPoint {
            time_index: p.time_index,
            time_fs: p.time_fs,
            scores: model.project(m.as_array().map(Real::as_f64)),
        };
        let track = groups.entry((p.state_label.clone(), p.segment_id)).or_default();
        if track.insert(p.time_index, point).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate moment vector for state {}, segment {}, time index {}",
                p.state_label, p.segment_id, p.time_index
            )));
        }
    }
    let mut tracks = Vec::with_capacity(groups.len());
    for ((state_label, segment_id), pts) in groups {
        let points: Vec<TrackPoint> = pts.into_values().collect();
        if points.windows(2).any(|w| !(w[1].time_fs > w[0].time_fs)) {
            return Err(Error::InvalidInput(format!(
                "time stamps of state {state_label}, segment {segment_id} are not increasing"
            )));
        }
        tracks.push(Track {
            state_label,
            segment_id,
            points,
        });
    }
    Ok(TrackSet { tracks })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackMetrics {
    pub state_label: String,
    pub segment_id: SegmentKey,
    pub arc_length: f64,
    pub bbox_area: f64,
    /// Longest single step between consecutive points.
    pub max_step: f64,
}

pub fn metrics_of(points: &[[f64; 2]]) -> (f64, f64, f64) {
    let mut arc = 0.0;
    let mut max_step: f64 = 0.0;
    for w in points.windows(2) {
        let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        arc += d;
        max_step = max_step.max(d);
    }
    let area = if points.is_empty() {
        0.0
    } else {
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        (hi[0] - lo[0]) * (hi[1] - lo[1])
    };
    (arc, area, max_step)
}

/// Arc length, bounding-box area and largest step of every track in the
/// plane of `axes`, sorted by descending bounding-box area.
pub fn track_metrics(tracks: &TrackSet, axes: AxisPair) -> Vec<TrackMetrics> {
    let mut out: Vec<TrackMetrics> = tracks
        .tracks
        .iter()
        .map(|t| {
            let (arc_length, bbox_area, max_step) = metrics_of(&t.points_2d(axes));
            TrackMetrics {
                state_label: t.state_label.clone(),
                segment_id: t.segment_id,
                arc_length,
                bbox_area,
                max_step,
            }
        })
        .collect();
    out.sort_by(|a, b| b.bbox_area.total_cmp(&a.bbox_area));
    out
}
