//! `report_v1` documents and their JSON and CSV encodings.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;

use super::config::ExperimentConfig;

pub const SCHEMA: &str = "report_v1";

/// One sampled evaluation. `deviation` is the scaled quantity compared
/// against the tolerance; `fields` holds the experiment's CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub index: usize,
    pub value: f64,
    pub deviation: f64,
    pub fields: BTreeMap<String, f64>,
}

/// A named side condition with its own tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, pass: value < tolerance }
    }

    /// Passes when `value > bound`.
    pub fn above(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.to_string(), value, tolerance: bound, pass: value > bound }
    }

    /// Passes when `value` equals `expected` exactly.
    pub fn equal(name: &str, value: f64, expected: f64) -> Self {
        Self { name: name.to_string(), value, tolerance: 0.0, pass: value == expected }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistics {
    pub mean: f64,
    pub stddev: f64,
    pub max_abs_dev: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    /// Always zero so that reports are byte-identical across runs.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub samples: Vec<Sample>,
    pub statistics: Statistics,
    pub checks: Vec<Check>,
    pub summary: BTreeMap<String, f64>,
    pub error: Option<String>,
    pub provenance: Provenance,
    /// `statistics.pass` and every check.
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(
        config: &ExperimentConfig,
        samples: Vec<Sample>,
        checks: Vec<Check>,
        summary: BTreeMap<String, f64>,
        error: Option<String>,
    ) -> Self {
        let n = samples.len() as f64;
        let mean = if samples.is_empty() { 0.0 } else { samples.iter().map(|s| s.value).sum::<f64>() / n };
        let stddev = if samples.len() < 2 {
            0.0
        } else {
            (samples.iter().map(|s| (s.value - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let max_abs_dev = samples.iter().map(|s| s.deviation.abs()).fold(0.0, f64::max);
        let ok = !samples.is_empty() && max_abs_dev < config.tol && samples.iter().all(|s| s.deviation.is_finite());
        let statistics = Statistics { mean, stddev, max_abs_dev, tolerance: config.tol, pass: ok };
        let pass = ok && error.is_none() && checks.iter().all(|c| c.pass);
        Self {
            schema: SCHEMA.to_string(),
            experiment: config.experiment.clone(),
            config: config.params.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            samples,
            statistics,
            checks,
            summary,
            error,
            provenance: Provenance { version: env!("CARGO_PKG_VERSION").to_string(), seed: config.seed, wall_time: 0.0 },
            pass,
        }
    }

    /// Pretty JSON with every float written with 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits::default());
        self.serialize(&mut ser).expect("reports serialize to memory");
        String::from_utf8(out).expect("JSON is UTF-8")
    }

    /// Columns `index, value, deviation` followed by the sample fields.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let names: Vec<String> = self.samples.first().map(|s| s.fields.keys().cloned().collect()).unwrap_or_default();
        let mut header = vec!["index".to_string(), "value".to_string(), "deviation".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header).expect("CSV to memory");
        for s in &self.samples {
            let mut row = vec![s.index.to_string(), sig17(s.value), sig17(s.deviation)];
            row.extend(names.iter().map(|k| s.fields.get(k).map_or_else(String::new, |v| sig17(*v))));
            w.write_record(&row).expect("CSV to memory");
        }
        String::from_utf8(w.into_inner().expect("CSV flush")).expect("CSV is UTF-8")
    }
}

pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Default)]
struct SignificantDigits(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}
