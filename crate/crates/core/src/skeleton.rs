//! Anchor selection and the piecewise-affine skeleton through the anchors.
//!
//! Anchor `k` sits in shell `2k` (even parity) or `2k - 1` (odd parity) and
//! carries three times
//!
//! ```text
//! t0 = |a_k|,  t1 = t0 - D_k,  t2 = t0 - 2 D_k,   D_k = (1/(j+1) - 1/(j+2)) / 3
//! ```
//!
//! where `j` is the anchor's shell. On `(t_{k+1,0}, t_{k,0}]` the skeleton leaves
//! `a_{k+1}` along `b_{k+1}`, crosses over on `(t_{k,2}, t_{k,1}]`, and arrives at
//! `a_k` along `b_k`.

use serde::{Deserialize, Serialize};

use crate::affine::{PiecewiseAffinePath, Segment};
use crate::error::{Error, Result};
use crate::geometry::{shell_bounds, shell_index, ConeSpec, Parity};
use crate::vector::{axpy, norm};
use crate::witness::WitnessSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorSource {
    Given,
    Filler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorEntry {
    pub k: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub source: AnchorSource,
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

impl AnchorEntry {
    /// Step `D_k` between consecutive breakpoints.
    pub fn step(&self) -> f64 {
        self.t0 - self.t1
    }
}

/// A witness pair that became an anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub k: usize,
    pub witness_index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSequence {
    parity: Parity,
    cone: ConeSpec,
    entries: Vec<AnchorEntry>,
    matched: Vec<MatchedPair>,
}

/// Breakpoint step for shell `j`.
fn shell_step(shell: u64) -> f64 {
    (shell_bounds(shell + 1).1 - shell_bounds(shell + 1).0) / 3.0
}

/// `(t0, t1, t2)` for anchor `k` with norm `a_norm`.
pub fn breakpoints_for(k: usize, a_norm: f64, parity: Parity) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return Err(Error::input("anchor indices start at 1"));
    }
    let shell = parity.shell_of(k);
    let (lo, hi) = shell_bounds(shell);
    if !(a_norm > lo && a_norm <= hi) {
        return Err(Error::input(format!(
            "anchor {k}: norm {a_norm} outside shell {shell} = ({lo}, {hi}]"
        )));
    }
    let step = shell_step(shell);
    Ok((a_norm, a_norm - step, a_norm - 2.0 * step))
}

impl AnchorSequence {
    /// Assembles a sequence from explicit entries and validates it.
    pub fn from_parts(
        parity: Parity,
        cone: ConeSpec,
        entries: Vec<AnchorEntry>,
        matched: Vec<MatchedPair>,
    ) -> Result<Self> {
        let seq = AnchorSequence {
            parity,
            cone,
            entries,
            matched,
        };
        seq.validate()?;
        Ok(seq)
    }

    fn validate(&self) -> Result<()> {
        let n = self.cone.dim();
        if self.entries.len() < 2 {
            return Err(Error::input("need at least two anchors"));
        }
        for (idx, e) in self.entries.iter().enumerate() {
            if e.k != idx + 1 {
                return Err(Error::input(format!(
                    "anchor at position {idx} has index {}, expected {}",
                    e.k,
                    idx + 1
                )));
            }
            if e.a.len() != n || e.b.len() != n {
                return Err(Error::input(format!("anchor {}: dimension mismatch", e.k)));
            }
            let (t0, t1, t2) = breakpoints_for(e.k, norm(&e.a), self.parity)?;
            if (t0, t1, t2) != (e.t0, e.t1, e.t2) {
                return Err(Error::Invariant(format!("anchor {}: stale breakpoints", e.k)));
            }
            if (norm(&e.b) - 1.0).abs() > crate::geometry::UNIT_TOL {
                return Err(Error::input(format!("anchor {}: |b| != 1", e.k)));
            }
            if !self.cone.contains(&e.a)? {
                return Err(Error::Invariant(format!(
                    "anchor {} lies outside the selected cone",
                    e.k
                )));
            }
        }
        for w in self.entries.windows(2) {
            let (upper, lower) = (&w[0], &w[1]);
            if !(lower.t0 < upper.t2 && upper.t2 < upper.t1 && upper.t1 < upper.t0) {
                return Err(Error::Invariant(format!(
                    "breakpoints of anchors {} and {} are not interleaved",
                    upper.k, lower.k
                )));
            }
        }
        for m in &self.matched {
            if m.k == 0 || m.k > self.entries.len() || m.x.len() != n || m.y.len() != n {
                return Err(Error::input(format!("matched pair for anchor {} is invalid", m.k)));
            }
        }
        Ok(())
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn entries(&self) -> &[AnchorEntry] {
        &self.entries
    }

    pub fn matched(&self) -> &[MatchedPair] {
        &self.matched
    }

    pub fn k_max(&self) -> usize {
        self.entries.len()
    }

    pub fn dimension(&self) -> usize {
        self.cone.dim()
    }

    pub fn given_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.source == AnchorSource::Given)
            .count()
    }

    /// Overwrites anchor `k`'s point without touching the matched witness
    /// data; used to build negative controls.
    pub fn with_displaced_anchor(&self, k: usize, delta: &[f64]) -> Result<Self> {
        let mut entries = self.entries.clone();
        let e = entries
            .get_mut(k.wrapping_sub(1))
            .ok_or_else(|| Error::input(format!("no anchor {k}")))?;
        axpy(&mut e.a, 1.0, delta);
        let (t0, t1, t2) = breakpoints_for(k, norm(&e.a), self.parity)?;
        e.t0 = t0;
        e.t1 = t1;
        e.t2 = t2;
        Self::from_parts(self.parity, self.cone.clone(), entries, self.matched.clone())
    }
}

/// Chooses anchors `k = 1..k_max` from the witnesses captured by `cone`.
///
/// The lowest-index captured witness in the anchor's shell wins; empty
/// shells get a filler on the cone axis at the shell's midpoint radius.
pub fn build_anchor_sequence(
    w: &WitnessSequence,
    cone: &ConeSpec,
    parity: Parity,
    k_max: usize,
) -> Result<AnchorSequence> {
    if k_max < 2 {
        return Err(Error::input("k_max must be at least 2"));
    }
    if w.dimension() != cone.dim() {
        return Err(Error::input(format!(
            "witness dimension {} differs from cone dimension {}",
            w.dimension(),
            cone.dim()
        )));
    }
    let mut slots: Vec<Option<usize>> = vec![None; k_max];
    for (i, p) in w.pairs().iter().enumerate() {
        if !cone.contains(&p.x)? {
            continue;
        }
        let Some(k) = parity.anchor_of(shell_index(&p.x)?) else {
            continue;
        };
        if k <= k_max && slots[k - 1].is_none() {
            slots[k - 1] = Some(i);
        }
    }

    let axis = cone.axis().coords();
    let mut entries = Vec::with_capacity(k_max);
    let mut matched = Vec::new();
    for (idx, slot) in slots.iter().enumerate() {
        let k = idx + 1;
        let (a, b, source) = match slot {
            Some(i) => {
                let p = &w.pairs()[*i];
                matched.push(MatchedPair {
                    k,
                    witness_index: *i,
                    x: p.x.clone(),
                    y: p.y.clone(),
                });
                (p.x.clone(), p.y.clone(), AnchorSource::Given)
            }
            None => {
                let (lo, hi) = shell_bounds(parity.shell_of(k));
                let r = 0.5 * (lo + hi);
                (axis.iter().map(|z| z * r).collect(), axis.to_vec(), AnchorSource::Filler)
            }
        };
        let (t0, t1, t2) = breakpoints_for(k, norm(&a), parity)?;
        entries.push(AnchorEntry {
            k,
            a,
            b,
            source,
            t0,
            t1,
            t2,
        });
    }
    AnchorSequence::from_parts(parity, cone.clone(), entries, matched)
}

/// Slope of the crossover piece on `(t_{k,2}, t_{k,1}]`.
fn crossover_slope(upper: &AnchorEntry, lower: &AnchorEntry) -> Vec<f64> {
    let width = upper.t1 - upper.t2;
    let lead = upper.t1 - upper.t0;
    let run = upper.t2 - lower.t0;
    (0..upper.a.len())
        .map(|i| {
            (upper.a[i] - lower.a[i] + lead * upper.b[i] - run * lower.b[i]) / width
        })
        .collect()
}

/// The piecewise-affine path through all anchors, on `(t_{K,1}, t_{1,0}]`.
///
/// Besides the pieces on `(t_{k+1,0}, t_{k,0}]` for `k < K` the path keeps the
/// arriving piece of the last anchor, so that `t_{K,0}` is an interior point.
pub fn build_skeleton(anchors: &AnchorSequence) -> Result<PiecewiseAffinePath> {
    let e = anchors.entries();
    let last = e.last().expect("validated: at least two anchors");
    let mut breakpoints = vec![last.t1, last.t0];
    let mut segments = vec![Segment {
        slope: last.b.clone(),
        base_t: last.t0,
        base: last.a.clone(),
    }];
    for idx in (0..e.len() - 1).rev() {
        let (upper, lower) = (&e[idx], &e[idx + 1]);
        let mut cross_base = lower.a.clone();
        axpy(&mut cross_base, upper.t2 - lower.t0, &lower.b);
        segments.push(Segment {
            slope: lower.b.clone(),
            base_t: lower.t0,
            base: lower.a.clone(),
        });
        segments.push(Segment {
            slope: crossover_slope(upper, lower),
            base_t: upper.t2,
            base: cross_base,
        });
        segments.push(Segment {
            slope: upper.b.clone(),
            base_t: upper.t0,
            base: upper.a.clone(),
        });
        breakpoints.extend([upper.t2, upper.t1, upper.t0]);
    }
    PiecewiseAffinePath::new(breakpoints, segments)
}
