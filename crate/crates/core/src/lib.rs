//! Analysis of time-varying bivariate scalar fields through continuous
//! scatterplots.
//!
//! The pipeline: sample `(f1, f2)` on a regular grid ([`grid`]), split the
//! domain into atomic segments ([`segmentation`]), compute the continuous
//! scatterplot of each segment ([`csp`]), reduce every scatterplot to four
//! image moments ([`moments`]), embed all descriptors with one global PCA
//! ([`pca`]) and follow each segment's scores through time ([`tracks`]).
//! [`fiber`] extracts the spatial preimage of a range-space polygon.
//!
//! Geometry and CSP code is generic over [`Real`] (`f32` or `f64`); the
//! aliases below pin the common choices.

pub mod atoms;
pub mod csp;
pub mod cube;
pub mod error;
pub mod fiber;
pub mod grid;
pub mod moments;
pub mod num;
pub mod pca;
pub mod segmentation;
pub mod series;
pub mod synthetic;
pub mod tet;
pub mod tracks;

pub use atoms::{Atom, AtomList};
pub use csp::{compute_csp, peel_all, peel_csp, CspHistogram, ExecMode};
pub use error::{Error, Result};
pub use fiber::{extract_fiber_surface, polygon_signed_distance, ControlPolygon, TriangleMesh};
pub use grid::{BivariateField, GridSpec, ScalarGrid};
pub use moments::{csp_moments, normalize_moments, raw_moments, MomentVector, Pooling, Provenance};
pub use num::Real;
pub use pca::{fit_pca, PcaModel};
pub use segmentation::{label_power_diagram, LabelGrid, SegmentKey};
pub use series::{global_range_window, BivariateTimeSeries, RangeWindow, TimeStep};
pub use tracks::{build_tracks, track_metrics, AxisPair, Track, TrackSet};

pub type GridSpec64 = GridSpec<f64>;
pub type GridSpec32 = GridSpec<f32>;
pub type ScalarGrid64 = ScalarGrid<f64>;
pub type ScalarGrid32 = ScalarGrid<f32>;
pub type BivariateField64 = BivariateField<f64>;
pub type BivariateField32 = BivariateField<f32>;
pub type RangeWindow64 = RangeWindow<f64>;
pub type RangeWindow32 = RangeWindow<f32>;
pub type CspHistogram64 = CspHistogram<f64>;
pub type CspHistogram32 = CspHistogram<f32>;
pub type MomentVector64 = MomentVector<f64>;
pub type TriangleMesh64 = TriangleMesh<f64>;
pub type ControlPolygon64 = ControlPolygon<f64>;
pub type LabelGrid64 = LabelGrid<f64>;
pub type AtomList64 = AtomList<f64>;
pub type BivariateTimeSeries64 = BivariateTimeSeries<f64>;
