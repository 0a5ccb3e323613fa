//! JSON and CSV file formats.
//!
//! JSON floats are written in shortest round-trip form, so reading a file
//! back reproduces every value bit for bit. CSV floats use 17 significant
//! digits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConeSpec, Parity, SphereCover, UnitDirection, COVER_SEED};
use crate::mollifier::{BumpKernel, MollificationWindow, SmoothPath};
use crate::pipeline::BuiltPath;
use crate::sampling::SampleRow;
use crate::skeleton::{breakpoints_for, AnchorEntry, AnchorSequence, AnchorSource, MatchedPair};
use crate::vector::norm;
use crate::witness::{Generator, WitnessPair, WitnessSequence};

pub const PATH_FORMAT: &str = "pathcert-path/1";

fn format_error(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessFile {
    #[serde(default)]
    dimension: Option<usize>,
    #[serde(default)]
    pairs: Option<Vec<PairRecord>>,
    #[serde(default)]
    generator: Option<Generator>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    x: Vec<f64>,
    #[serde(default)]
    y: Option<Vec<f64>>,
}

/// Where witness pairs come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessSource {
    Explicit(WitnessSequence),
    Generated { dimension: usize, generator: Generator },
}

impl WitnessSource {
    pub fn dimension(&self) -> usize {
        match self {
            WitnessSource::Explicit(w) => w.dimension(),
            WitnessSource::Generated { dimension, .. } => *dimension,
        }
    }

    pub fn sequence(&self) -> Result<WitnessSequence> {
        match self {
            WitnessSource::Explicit(w) => Ok(w.clone()),
            WitnessSource::Generated { dimension, generator } => generator.generate(*dimension),
        }
    }

    /// Raw candidate points (before any filtering).
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            WitnessSource::Explicit(w) => Ok(w.points()),
            WitnessSource::Generated { dimension, generator } => generator.points(*dimension),
        }
    }
}

/// Parses a witness document:
/// `{"dimension": n, "pairs": [{"x": [...], "y": [...]}]}` with `y` optional
/// (defaults to `x/|x|`), or `{"dimension": n, "generator": {"kind": ...}}`
/// with `dimension` defaulting to 2.
pub fn parse_witness_json(text: &str) -> Result<WitnessSource> {
    let file: WitnessFile = serde_json::from_str(text).map_err(format_error)?;
    match (file.pairs, file.generator) {
        (Some(pairs), None) => {
            let n = match file.dimension {
                Some(n) => n,
                None => pairs
                    .first()
                    .map(|p| p.x.len())
                    .ok_or_else(|| Error::input("empty pair list and no dimension"))?,
            };
            let pairs = pairs
                .into_iter()
                .enumerate()
                .map(|(i, p)| {
                    let y = match p.y {
                        Some(y) => y,
                        None => {
                            let r = norm(&p.x);
                            if !(r > 0.0 && r.is_finite()) {
                                return Err(Error::input(format!("pair {i}: x must be nonzero and finite")));
                            }
                            p.x.iter().map(|v| v / r).collect()
                        }
                    };
                    Ok(WitnessPair { x: p.x, y })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(WitnessSource::Explicit(WitnessSequence::new(n, pairs)?))
        }
        (None, Some(generator)) => {
            let dimension = file.dimension.unwrap_or(2);
            // generate once so that invalid parameters surface here
            generator.points(dimension)?;
            Ok(WitnessSource::Generated { dimension, generator })
        }
        (Some(_), Some(_)) => Err(Error::Format("give either `pairs` or `generator`, not both".into())),
        (None, None) => Err(Error::Format("missing `pairs` or `generator`".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorRecord {
    pub k: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub source: AnchorSource,
    pub witness_index: Option<usize>,
}

/// On-disk form of a built path. Breakpoints, windows and the domain are
/// recorded for readers; loading recomputes them from the anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub format: String,
    pub dimension: usize,
    pub scale: f64,
    pub k_max: usize,
    pub cone_axis: Vec<f64>,
    pub parity: Parity,
    pub kernel_c: f64,
    pub cover_size: usize,
    pub cover_seed: u64,
    pub domain: (f64, f64),
    pub anchors: Vec<AnchorRecord>,
    pub windows: Vec<MollificationWindow>,
    pub matched: Vec<MatchedPair>,
}

impl PathFile {
    pub fn from_built(built: &BuiltPath) -> Self {
        let a = &built.anchors;
        let witness_of = |k: usize| a.matched().iter().find(|m| m.k == k).map(|m| m.witness_index);
        PathFile {
            format: PATH_FORMAT.to_string(),
            dimension: a.dimension(),
            scale: built.witness.scale(),
            k_max: a.k_max(),
            cone_axis: a.cone().axis().coords().to_vec(),
            parity: a.parity(),
            kernel_c: built.path.kernel().constant(),
            cover_size: built.cover_size,
            cover_seed: COVER_SEED,
            domain: built.path.domain(),
            anchors: a
                .entries()
                .iter()
                .map(|e| AnchorRecord {
                    k: e.k,
                    a: e.a.clone(),
                    b: e.b.clone(),
                    t0: e.t0,
                    t1: e.t1,
                    t2: e.t2,
                    source: e.source,
                    witness_index: witness_of(e.k),
                })
                .collect(),
            windows: built.path.windows().to_vec(),
            matched: a.matched().to_vec(),
        }
    }

    /// Rebuilds the anchors and the smooth path.
    pub fn load(&self) -> Result<(AnchorSequence, SmoothPath)> {
        if self.format != PATH_FORMAT {
            return Err(Error::Format(format!(
                "unsupported format `{}`, expected `{PATH_FORMAT}`",
                self.format
            )));
        }
        if self.cone_axis.len() != self.dimension {
            return Err(Error::input("cone axis dimension mismatch"));
        }
        let cone = ConeSpec::new(UnitDirection::new(self.cone_axis.clone())?);
        let entries = self
            .anchors
            .iter()
            .map(|r| {
                let (t0, t1, t2) = breakpoints_for(r.k, norm(&r.a), self.parity)?;
                Ok(AnchorEntry {
                    k: r.k,
                    a: r.a.clone(),
                    b: r.b.clone(),
                    source: r.source,
                    t0,
                    t1,
                    t2,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let anchors = AnchorSequence::from_parts(self.parity, cone, entries, self.matched.clone())?;
        if anchors.k_max() != self.k_max {
            return Err(Error::input(format!(
                "k_max is {} but the file lists {} anchors",
                self.k_max,
                anchors.k_max()
            )));
        }
        let kernel = BumpKernel::with_constant(self.kernel_c)?;
        let path = SmoothPath::new(&anchors, kernel)?;
        Ok((anchors, path))
    }
}

pub fn path_to_json(built: &BuiltPath) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&PathFile::from_built(built)).map_err(format_error)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_path_json(text: &str) -> Result<PathFile> {
    serde_json::from_str(text).map_err(format_error)
}

pub fn load_path_json(text: &str) -> Result<(AnchorSequence, SmoothPath)> {
    parse_path_json(text)?.load()
}

#[derive(Serialize)]
struct CoverFile<'a> {
    dimension: usize,
    half_angle_deg: f64,
    directions: Vec<&'a [f64]>,
}

pub fn cover_to_json(cover: &SphereCover) -> Result<String> {
    let file = CoverFile {
        dimension: cover.dimension,
        half_angle_deg: cover.half_angle.to_degrees(),
        directions: cover.directions.iter().map(|d| d.coords()).collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).map_err(format_error)?;
    s.push('\n');
    Ok(s)
}

/// Any serializable value as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(format_error)?;
    s.push('\n');
    Ok(s)
}

/// `{:.16e}` gives 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sample_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("s{i}")));
    h.extend((1..=n).map(|i| format!("d{i}")));
    h.extend(["norm_s", "norm_ds", "product"].map(String::from));
    h
}

pub fn write_samples_csv<W: Write>(out: W, n: usize, rows: &[SampleRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(sample_header(n)).map_err(io)?;
    for r in rows {
        let mut rec = Vec::with_capacity(2 * n + 4);
        rec.push(fmt_float(r.t));
        rec.extend(r.s.iter().map(|v| fmt_float(*v)));
        rec.extend(r.ds.iter().map(|v| fmt_float(*v)));
        rec.extend([r.norm_s, r.norm_ds, r.product].map(fmt_float));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn write_tail_csv<W: Write>(out: W, profile: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["delta", "sup"]).map_err(io)?;
    for (d, s) in profile {
        w.write_record([fmt_float(*d), fmt_float(*s)]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}
