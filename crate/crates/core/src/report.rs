//! Machine-readable run reports.
//!
//! JSON numbers are written with 17 significant digits so every `f64`
//! round-trips bit for bit.

use std::io;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::calibration::CalibrationEstimate;
use crate::entropy::{EntropyEstimate, ExponentFit, GrowthEstimate, SandwichReport};
use crate::model::MetricSpec;
use crate::rigidity::{BcgProxyReport, ComparisonReport, ScalingReport, ScanTable};
use crate::verify::CheckResult;

/// Result of an `eval` request.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct PointEvaluation {
    pub z: Vec<num_complex::Complex64>,
    pub w: Vec<num_complex::Complex64>,
    pub diastasis: f64,
    /// Exact for multiples of the hyperbolic metric, else the radial bound.
    pub distance: f64,
    pub metric_det: f64,
    pub grad_norm: f64,
}

/// One row of the hyperbolic table.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub calibration: f64,
    pub exponent: f64,
    pub exponent_cutoff: f64,
    pub ent_d: f64,
    pub ent_d_err: f64,
    pub ent_v: f64,
    pub ent_v_err: f64,
    pub ent_v_growth: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultItem {
    Entropy(EntropyEstimate),
    Calibration(CalibrationEstimate),
    Comparison(ComparisonReport),
    Scaling(ScalingReport),
    Sandwich(SandwichReport),
    BcgProxy(BcgProxyReport),
    Growth(GrowthEstimate),
    Scan(ScanTable),
    Eval(PointEvaluation),
    Table(TableRow),
    Check(CheckResult),
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub spec: Option<MetricSpec>,
    pub results: Vec<ResultItem>,
    pub diagnostics: Vec<ExponentFit>,
    pub status: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunReport {
    pub fn new(command: impl Into<String>, spec: Option<MetricSpec>) -> Self {
        Self {
            command: command.into(),
            spec,
            results: Vec::new(),
            diagnostics: Vec::new(),
            status: 0,
            timestamp: None,
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Compact JSON with floats as `{:.16e}`.
#[derive(Debug, Default, Clone, Copy)]
pub struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        CompactFormatter.write_f32(writer, value)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value
        .serialize(&mut ser)
        .expect("report types always serialize");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
