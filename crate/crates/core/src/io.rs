//! Plot-ready CSV/JSON emitters and the matching parsers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{relative_errors, Contour, MomentSummary, StationaryPoint, TimingLedger, MOMENT_NAMES};
use crate::error::{Error, Result};
use crate::gmmut::{GaussianMixture, SplitLibrary1D};
use crate::histogram::{BinGrid, JointDensityGrid, MarginalDensity, Method};
use crate::scenario::ScenarioConfig;

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

const JOINT_HEADER: [&str; 9] = ["method", "time", "i", "j", "lo_1", "hi_1", "lo_2", "hi_2", "density"];

pub fn joint_to_csv(joint: &JointDensityGrid) -> Result<String> {
    let mut w = writer();
    let mut header = JOINT_HEADER.map(String::from);
    header[4] = format!("{}_lo", joint.labels[0]);
    header[5] = format!("{}_hi", joint.labels[0]);
    header[6] = format!("{}_lo", joint.labels[1]);
    header[7] = format!("{}_hi", joint.labels[1]);
    w.write_record(&header).map_err(csv_err)?;
    let [n1, n2] = joint.grid.counts();
    let (e1, e2) = (joint.grid.edges(0), joint.grid.edges(1));
    for i in 0..n1 {
        for j in 0..n2 {
            w.write_record([
                joint.method.to_string(),
                num(joint.time),
                i.to_string(),
                j.to_string(),
                num(e1[i]),
                num(e1[i + 1]),
                num(e2[j]),
                num(e2[j + 1]),
                num(joint.get(i, j)),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: usize) -> Result<T> {
    rec.get(k)
        .ok_or_else(|| Error::Parse(format!("line {line}: missing column {}", k + 1)))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse column {}", k + 1)))
}

/// Parses a joint grid CSV; bins must form a complete uniform grid.
pub fn joint_from_csv(text: &str) -> Result<JointDensityGrid> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() != JOINT_HEADER.len() {
        return Err(Error::Parse(format!("expected {} columns, found {}", JOINT_HEADER.len(), header.len())));
    }
    let labels = [0, 1].map(|a| {
        let h = &header[4 + 2 * a];
        h.strip_suffix("_lo").unwrap_or(h).to_string()
    });
    struct Row {
        i: usize,
        j: usize,
        edges: [f64; 4],
        v: f64,
    }
    let mut rows = Vec::new();
    let mut meta: Option<(Method, f64)> = None;
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = n + 2;
        let m: Method = field(&rec, 0, line)?;
        let t: f64 = field(&rec, 1, line)?;
        match meta {
            None => meta = Some((m, t)),
            Some((m0, t0)) if m0 != m || t0.to_bits() != t.to_bits() => {
                return Err(Error::Parse(format!("line {line}: method/time differ from the first row")));
            }
            _ => {}
        }
        let edges = [field(&rec, 4, line)?, field(&rec, 5, line)?, field(&rec, 6, line)?, field(&rec, 7, line)?];
        let v: f64 = field(&rec, 8, line)?;
        if !v.is_finite() || v < 0.0 || edges.iter().any(|e: &f64| !e.is_finite()) {
            return Err(Error::Parse(format!("line {line}: values must be finite and densities non-negative")));
        }
        rows.push(Row { i: field(&rec, 2, line)?, j: field(&rec, 3, line)?, edges, v });
    }
    let (method, time) = meta.ok_or_else(|| Error::Parse("no bins".into()))?;
    let n1 = rows.iter().map(|r| r.i).max().unwrap_or(0).saturating_add(1);
    let n2 = rows.iter().map(|r| r.j).max().unwrap_or(0).saturating_add(1);
    if n1.checked_mul(n2) != Some(rows.len()) {
        return Err(Error::Parse(format!("{} rows do not form a {n1}x{n2} grid", rows.len())));
    }
    let mut values = vec![f64::NAN; rows.len()];
    let mut lo = [f64::NAN; 2];
    let mut hi = [f64::NAN; 2];
    for r in &rows {
        let k = r.i * n2 + r.j;
        if !values[k].is_nan() {
            return Err(Error::Parse(format!("bin ({}, {}) appears twice", r.i, r.j)));
        }
        values[k] = r.v;
        if r.i == 0 {
            lo[0] = r.edges[0];
        }
        if r.i + 1 == n1 {
            hi[0] = r.edges[1];
        }
        if r.j == 0 {
            lo[1] = r.edges[2];
        }
        if r.j + 1 == n2 {
            hi[1] = r.edges[3];
        }
    }
    let grid = BinGrid::uniform(lo, hi, [n1, n2]).map_err(|e| Error::Parse(format!("bin edges: {e}")))?;
    for r in &rows {
        let want = [grid.edges(0)[r.i], grid.edges(0)[r.i + 1], grid.edges(1)[r.j], grid.edges(1)[r.j + 1]];
        for (a, b) in want.iter().zip(&r.edges) {
            if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::Parse(format!("bin ({}, {}) edges are not uniform", r.i, r.j)));
            }
        }
    }
    Ok(JointDensityGrid { grid, values, method, time, labels })
}

pub fn marginal_to_csv(m: &MarginalDensity, label: &str) -> Result<String> {
    let mut w = writer();
    w.write_record([label, "density"]).map_err(csv_err)?;
    for (c, v) in m.centers.iter().zip(&m.values) {
        w.write_record([num(*c), num(*v)]).map_err(csv_err)?;
    }
    finish(w)
}

/// One row per snapshot time with four moment columns per case.
pub fn moments_to_csv(cases: &[(&str, &[MomentSummary])]) -> Result<String> {
    let mut w = writer();
    let mut header = vec!["t".to_string()];
    for (label, _) in cases {
        header.extend(MOMENT_NAMES.iter().map(|m| format!("{label}:{m}")));
    }
    w.write_record(&header).map_err(csv_err)?;
    let rows = cases.iter().map(|(_, m)| m.len()).max().unwrap_or(0);
    for k in 0..rows {
        let t = cases.iter().find_map(|(_, m)| m.get(k)).map(|m| m.time).unwrap_or(f64::NAN);
        let mut rec = vec![num(t)];
        for (_, m) in cases {
            match m.get(k) {
                Some(s) => rec.extend(s.as_array().iter().map(|v| num(*v))),
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// Relative errors of each case against the reference, long format; empty
/// cells mark undefined ratios.
pub fn relative_errors_to_csv(reference: &[MomentSummary], cases: &[(&str, &[MomentSummary])]) -> Result<String> {
    let mut w = writer();
    let mut header = vec!["t".to_string(), "case".to_string()];
    header.extend(MOMENT_NAMES.iter().map(|m| format!("rel_{m}")));
    w.write_record(&header).map_err(csv_err)?;
    for (label, ms) in cases {
        for (r, m) in reference.iter().zip(ms.iter()) {
            let mut rec = vec![num(m.time), label.to_string()];
            rec.extend(relative_errors(r, m).iter().map(|e| e.map(num).unwrap_or_default()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn timing_to_json(ledgers: &[TimingLedger]) -> Result<String> {
    serde_json::to_string_pretty(ledgers).map_err(|e| Error::Parse(e.to_string()))
}

pub fn library_to_csv(lib: &SplitLibrary1D) -> Result<String> {
    let mut out = format!("# sigma={}\n", num(lib.sigma));
    let mut w = writer();
    w.write_record(["index", "mean", "weight"]).map_err(csv_err)?;
    for (k, (m, wt)) in lib.means.iter().zip(&lib.weights).enumerate() {
        w.write_record([k.to_string(), num(*m), num(*wt)]).map_err(csv_err)?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

/// Parses a split library and checks its invariants.
pub fn library_from_csv(text: &str) -> Result<SplitLibrary1D> {
    let (first, rest) = text.split_once('\n').ok_or_else(|| Error::Parse("missing sigma header".into()))?;
    let sigma: f64 = first
        .trim()
        .strip_prefix("# sigma=")
        .ok_or_else(|| Error::Parse("line 1: expected '# sigma=<value>'".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse("line 1: cannot parse sigma".into()))?;
    let mut r = csv::ReaderBuilder::new().from_reader(rest.as_bytes());
    let header = r.headers().map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>() != ["index", "mean", "weight"] {
        return Err(Error::Parse("line 2: expected header index,mean,weight".into()));
    }
    let mut means = Vec::new();
    let mut weights = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = n + 3;
        let idx: usize = field(&rec, 0, line)?;
        if idx != n {
            return Err(Error::Parse(format!("line {line}: index {idx} out of order")));
        }
        means.push(field::<f64>(&rec, 1, line)?);
        weights.push(field::<f64>(&rec, 2, line)?);
    }
    let lib = SplitLibrary1D { sigma, means, weights };
    lib.check()?;
    Ok(lib)
}

pub fn mixture_to_json(mix: &GaussianMixture) -> Result<String> {
    serde_json::to_string_pretty(mix).map_err(|e| Error::Parse(e.to_string()))
}

pub fn mixture_from_json(text: &str) -> Result<GaussianMixture> {
    let mix: GaussianMixture = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    mix.validate()?;
    Ok(mix)
}

pub fn stationary_points_to_csv(points: &[StationaryPoint]) -> Result<String> {
    let mut w = writer();
    w.write_record(["phi", "e", "hamiltonian", "kind", "gradient_norm"]).map_err(csv_err)?;
    for p in points {
        let kind = match p.kind {
            crate::analysis::PointKind::Center => "center",
            crate::analysis::PointKind::Saddle => "saddle",
        };
        w.write_record([num(p.phi), num(p.e), num(p.hamiltonian), kind.into(), num(p.gradient_norm)])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn contours_to_csv(contours: &[Contour]) -> Result<String> {
    let mut w = writer();
    w.write_record(["contour", "level", "phi", "e"]).map_err(csv_err)?;
    for (k, c) in contours.iter().enumerate() {
        for p in &c.points {
            w.write_record([k.to_string(), num(c.level), num(p[0]), num(p[1])]).map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn labels_to_csv(rows: &[(f64, f64, String)]) -> Result<String> {
    let mut w = writer();
    w.write_record(["phi", "e", "subdomain"]).map_err(csv_err)?;
    for (p, e, l) in rows {
        w.write_record([num(*p), num(*e), l.clone()]).map_err(csv_err)?;
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub configs: Vec<ScenarioConfig>,
    pub timings: Vec<TimingLedger>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            configs: Vec::new(),
            timings: Vec::new(),
            files: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Collects emitted files under one output directory.
pub struct OutputDir {
    pub root: std::path::PathBuf,
    pub files: Vec<String>,
}

impl OutputDir {
    pub fn new(root: impl Into<std::path::PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, text: &str) -> Result<()> {
        write_text(&self.root.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// `t0.5`-style tag for file names.
pub fn time_tag(t: f64) -> String {
    format!("t{t}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::mc_joint;

    #[test]
    fn joint_round_trip() {
        let pts = [[0.1, 0.2], [0.4, 0.3], [0.35, 0.25], [0.2, 0.22]];
        let grid = BinGrid::uniform([0.1, 0.2], [0.4, 0.3], [3, 2]).unwrap();
        let j = mc_joint(&pts, &grid).unwrap().with_meta(0.5, ["phi", "e"]);
        let back = joint_from_csv(&joint_to_csv(&j).unwrap()).unwrap();
        assert_eq!(back.values, j.values);
        assert_eq!(back.grid.counts(), [3, 2]);
        assert_eq!(back.time, 0.5);
        assert_eq!(back.labels, j.labels);
    }

    #[test]
    fn library_round_trip() {
        let lib = crate::gmmut::build_split_library(3).unwrap();
        let back = library_from_csv(&library_to_csv(&lib).unwrap()).unwrap();
        assert_eq!(back, lib);
    }

    #[test]
    fn library_rejects_bad_weights() {
        let text = "# sigma=1.0\nindex,mean,weight\n0,0.0,0.5\n";
        assert!(library_from_csv(text).is_err());
    }

    #[test]
    fn joint_rejects_incomplete_grid() {
        let text = "method,time,i,j,phi_lo,phi_hi,e_lo,e_hi,density\nMC,0,0,0,0,1,0,1,1\nMC,0,1,1,1,2,1,2,1\n";
        assert!(joint_from_csv(text).is_err());
    }

    #[test]
    fn number_format_has_17_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
    }
}
