//! Discontinuity probing: scalar fields evaluated along a built path.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::pipeline::{build_path, BuildOptions, BuiltPath};
use crate::sampling::GridSpec;
use crate::vector::{dot, norm};
use crate::witness::{Generator, WitnessPair, WitnessSequence};

/// Slack applied to `epsilon` when deciding the verdict.
pub const VERDICT_TOL: f64 = 1e-9;
pub const MIN_PROBE_K_MAX: usize = 10;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A real function near the origin, shifted so that it vanishes there.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    dimension: usize,
    evaluator: Evaluator,
    offset: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("offset", &self.offset)
            .finish()
    }
}

impl ScalarField {
    /// Wraps `evaluator`. A finite value at the origin is subtracted
    /// everywhere; a non-finite one is replaced by 0.
    pub fn new(name: impl Into<String>, dimension: usize, evaluator: Evaluator) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::input("field dimension must be at least 1"));
        }
        let raw = evaluator(&vec![0.0; dimension]);
        Ok(ScalarField {
            name: name.into(),
            dimension,
            evaluator,
            offset: if raw.is_finite() { raw } else { 0.0 },
        })
    }

    pub fn from_expression(src: &str, dimension: usize) -> Result<Self> {
        let e: Expr = expr::parse_for_dimension(src, dimension)?;
        ScalarField::new(src.trim(), dimension, Arc::new(move |x: &[f64]| e.eval(x)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Amount subtracted from the raw evaluator.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn value_at_origin(&self) -> f64 {
        0.0
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        (self.evaluator)(x) - self.offset
    }
}

/// Looks up a built-in field by name in dimension `n`.
///
/// `rational2d` is `2 x1 x2 / |x|^2` (n = 2), `rational3d` the same quotient
/// in n = 3, `parabola` is `|x|^2`, `ray_bump` is `exp(-20 (1 - x1/|x|))`,
/// which equals 1 along the positive `x1` ray, and `zero` is identically 0.
pub fn builtin_field(name: &str, n: usize) -> Result<ScalarField> {
    let need = |want: usize| -> Result<()> {
        if n == want {
            Ok(())
        } else {
            Err(Error::input(format!("builtin:{name} needs dimension {want}, got {n}")))
        }
    };
    let rational: Evaluator = Arc::new(|x: &[f64]| 2.0 * x[0] * x[1] / dot(x, x));
    let f: Evaluator = match name {
        "rational2d" => {
            need(2)?;
            rational
        }
        "rational3d" => {
            need(3)?;
            rational
        }
        "parabola" => Arc::new(|x: &[f64]| dot(x, x)),
        "ray_bump" => Arc::new(|x: &[f64]| (-20.0 * (1.0 - x[0] / norm(x))).exp()),
        "zero" => Arc::new(|_: &[f64]| 0.0),
        other => return Err(Error::NotFound(format!("no builtin field named `{other}`"))),
    };
    ScalarField::new(name, n, f)
}

pub const BUILTIN_NAMES: [&str; 5] = ["rational2d", "rational3d", "parabola", "ray_bump", "zero"];

/// Every built-in field in its natural dimension.
pub fn builtin_fields() -> Vec<ScalarField> {
    BUILTIN_NAMES
        .iter()
        .map(|name| {
            let n = if *name == "rational3d" { 3 } else { 2 };
            builtin_field(name, n).expect("builtin fields are well formed")
        })
        .collect()
}

/// Keeps the candidates inside the closed unit ball with `|f(x)| >= epsilon`
/// and pairs each with `y = x/|x|`.
pub fn derive_witness_from_points(
    field: &ScalarField,
    candidates: &[Vec<f64>],
    epsilon: f64,
    min_count: usize,
) -> Result<WitnessSequence> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::input("epsilon must be positive and finite"));
    }
    let kept: Vec<Vec<f64>> = candidates
        .iter()
        .filter(|x| x.len() == field.dimension())
        .filter(|x| {
            let r = norm(x);
            r > 0.0 && r <= 1.0 && field.eval(x).abs() >= epsilon
        })
        .cloned()
        .collect();
    if kept.len() < min_count.max(1) {
        return Err(Error::NotFound(format!(
            "only {} of {} candidates have |f| >= {epsilon} (need {}); the field may be continuous at 0",
            kept.len(),
            candidates.len(),
            min_count.max(1)
        )));
    }
    WitnessSequence::radial(field.dimension(), kept)
}

pub fn derive_witness(
    field: &ScalarField,
    generator: &Generator,
    epsilon: f64,
    min_count: usize,
) -> Result<WitnessSequence> {
    let candidates = generator.points(field.dimension())?;
    derive_witness_from_points(field, &candidates, epsilon, min_count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DiscontinuousCertified,
    NoViolationFound,
}

/// Field value at a matched anchor time next to the value at the witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorValue {
    pub k: usize,
    pub t: f64,
    pub path_value: f64,
    pub witness_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub field: String,
    pub epsilon: f64,
    pub k_max: usize,
    pub limsup_estimate: f64,
    /// `(delta, sup_{t < delta} |f(s(t))|)` for `delta = 2^-j`.
    pub tail_profile: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub anchor_values: Vec<AnchorValue>,
    #[serde(skip)]
    samples: Vec<(f64, f64)>,
}

impl ProbeReport {
    /// `sup |f(s(t))|` over sampled `t < delta`, or `None` if no sample is
    /// that small.
    pub fn tail_sup(&self, delta: f64) -> Option<f64> {
        let end = self.samples.partition_point(|(t, _)| *t < delta);
        (end > 0).then(|| self.samples[..end].iter().map(|(_, v)| *v).fold(0.0, f64::max))
    }

    /// Sampled `(t, |f(s(t))|)` in increasing `t`.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn certified(&self) -> bool {
        self.verdict == Verdict::DiscontinuousCertified
    }
}

/// Grid used for probing: the dense log grid at 256 points per decade.
pub fn probe_grid() -> GridSpec {
    GridSpec::Dense {
        per_decade: 256,
        per_window: 16,
    }
}

/// Builds a path through `witness` and estimates `limsup |f(s(t))|` as
/// `t -> 0+`.
pub fn certify_discontinuity(
    field: &ScalarField,
    witness: &WitnessSequence,
    opts: &BuildOptions,
    epsilon: f64,
) -> Result<(ProbeReport, BuiltPath)> {
    if opts.k_max < MIN_PROBE_K_MAX {
        return Err(Error::input(format!("probing needs k_max >= {MIN_PROBE_K_MAX}")));
    }
    if field.dimension() != witness.dimension() {
        return Err(Error::input(format!(
            "field dimension {} differs from witness dimension {}",
            field.dimension(),
            witness.dimension()
        )));
    }
    let built = build_path(witness, opts)?;
    let report = probe_built(field, &built, &probe_grid(), epsilon)?;
    Ok((report, built))
}

/// Probes an already built path.
pub fn probe_built(field: &ScalarField, built: &BuiltPath, grid: &GridSpec, epsilon: f64) -> Result<ProbeReport> {
    let path = &built.path;
    let (inf, sup) = path.domain();
    let mut times = grid.times(path)?;
    let anchor_times: Vec<f64> = built.anchors.matched().iter().map(|m| norm(&m.x)).collect();
    times.extend(anchor_times.iter().copied().filter(|t| *t > inf && *t <= sup));
    times.sort_by(f64::total_cmp);
    times.dedup();

    let samples: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| Ok((t, field.eval(&path.eval(t)?).abs())))
        .collect::<Result<_>>()?;

    let mut tail_profile = Vec::new();
    let mut delta = 0.5f64;
    while delta > inf {
        let end = samples.partition_point(|(t, _)| *t < delta);
        if end == 0 {
            break;
        }
        let s = samples[..end].iter().map(|(_, v)| *v).fold(0.0, f64::max);
        tail_profile.push((delta, s));
        delta *= 0.5;
    }
    let limsup_estimate = tail_profile.last().map_or(0.0, |(_, s)| *s);
    let verdict = if limsup_estimate >= epsilon - VERDICT_TOL {
        Verdict::DiscontinuousCertified
    } else {
        Verdict::NoViolationFound
    };
    let anchor_values = built
        .anchors
        .matched()
        .iter()
        .map(|m| {
            let t = norm(&m.x);
            Ok(AnchorValue {
                k: m.k,
                t,
                path_value: field.eval(&path.eval(t)?).abs(),
                witness_value: field.eval(&m.x).abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ProbeReport {
        field: field.name().to_string(),
        epsilon,
        k_max: built.anchors.k_max(),
        limsup_estimate,
        tail_profile,
        verdict,
        anchor_values,
        samples,
    })
}

/// Radial witness pairs for raw candidate points, for probing fields that
/// yield no witness above `epsilon`.
pub fn unfiltered_witness(dimension: usize, candidates: &[Vec<f64>]) -> Result<WitnessSequence> {
    let pairs = candidates
        .iter()
        .filter(|x| norm(x) > 0.0)
        .map(|x| {
            let r = norm(x);
            WitnessPair {
                x: x.clone(),
                y: x.iter().map(|v| v / r).collect(),
            }
        })
        .collect();
    WitnessSequence::new(dimension, pairs)
}
