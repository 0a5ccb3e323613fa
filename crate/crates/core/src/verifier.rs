//! Numerical certification of the quantitative properties of a built path.
//!
//! Every check returns a [`CheckReport`]. Bound checks pass when
//! `measured <= threshold`; the smoothness check reports an observed
//! convergence order and passes when `measured >= threshold`.

use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::PiecewiseAffinePath;
use crate::error::{Error, Result};
use crate::mollifier::{mollify, BumpKernel, SmoothPath};
use crate::sampling::{sample_times, GridSpec};
use crate::skeleton::{AnchorSequence, AnchorSource};
use crate::vector::{distance, dot, norm};

/// Tolerance on the derivative bound for mollified piecewise-affine paths.
pub const LEMMA1_RTOL: f64 = 1e-7;
pub const INTERPOLATION_TOL: f64 = 1e-9;
pub const COINCIDENCE_TOL: f64 = 1e-10;
pub const ENVELOPE_TOL: f64 = 1e-10;
pub const KERNEL_MASS_TOL: f64 = 1e-12;
/// Bound on `|s(t)| |s'(t)|` in the restricted regime.
pub const PRODUCT_BOUND: f64 = 28.0;
/// Per-interval bound on `|s'|` is `DERIVATIVE_BOUND_PER_K * k`.
pub const DERIVATIVE_BOUND_PER_K: f64 = 28.0;
pub const MIN_ORDER: f64 = 1.9;

const FD_HALVINGS: usize = 13;
/// Errors below `FD_NOISE_FACTOR * eps * |f| / delta` are treated as rounding
/// and quadrature noise.
const FD_NOISE_FACTOR: f64 = 1e5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub witness_t: Option<f64>,
    pub details: String,
}

impl CheckReport {
    fn at_most(name: &str, measured: f64, threshold: f64, witness_t: Option<f64>, details: String) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
            witness_t,
            details,
        }
    }
}

/// Checks `|d/dt (rho_scale * p)(t)| <= sum_i |slope_i|` at each sample,
/// where `rho_scale(u) = rho(u/scale)/scale`.
pub fn lemma1_bound_check(
    p: &PiecewiseAffinePath,
    kernel: &BumpKernel,
    scale: f64,
    t_samples: &[f64],
) -> Result<CheckReport> {
    let (lo, hi) = p.domain();
    if let Some(t) = t_samples.iter().find(|t| !(**t - scale >= lo && **t + scale <= hi)) {
        return Err(Error::input(format!(
            "kernel support around t = {t} with scale {scale} leaves [{lo}, {hi}]"
        )));
    }
    let bound = p.total_slope_norm();
    let mut worst = (0.0f64, None);
    for &t in t_samples {
        let (_, d) = mollify(p, kernel, t, scale)?;
        let ratio = if bound > 0.0 { norm(&d) / bound } else { norm(&d) };
        if ratio > worst.0 || worst.1.is_none() {
            worst = (ratio.max(worst.0), Some(t));
        }
    }
    Ok(CheckReport::at_most(
        "lemma1",
        worst.0,
        1.0 + LEMMA1_RTOL,
        worst.1,
        format!(
            "max |derivative| / sum |slope| over {} samples; sum |slope| = {bound:.6e}",
            t_samples.len()
        ),
    ))
}

/// One seeded random instance for the derivative-bound suite: a path with
/// at most 8 segments in dimension 1..=4, a kernel scale, and 50 admissible
/// sample times.
pub fn lemma1_random_instance(seed: u64, samples: usize) -> (PiecewiseAffinePath, f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4);
    let segments = rng.gen_range(1..=8);
    let mut times = vec![0.0];
    for _ in 0..segments {
        let last = *times.last().unwrap();
        times.push(last + rng.gen_range(0.05..1.0));
    }
    let mut values = Vec::with_capacity(times.len());
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    values.push(v.clone());
    for w in times.windows(2) {
        let slope: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        for (vi, si) in v.iter_mut().zip(&slope) {
            *vi += si * (w[1] - w[0]);
        }
        values.push(v.clone());
    }
    let span = times[segments] - times[0];
    let scale = rng.gen_range(0.05..0.5) * span;
    let ts = (0..samples)
        .map(|_| rng.gen_range(times[0] + scale..=times[segments] - scale))
        .collect();
    let p = PiecewiseAffinePath::from_knots(times, values).expect("knots are increasing");
    (p, scale, ts)
}

/// The derivative bound over many seeded random paths.
pub fn lemma1_random_suite(kernel: &BumpKernel, seeds: Range<u64>, samples: usize) -> Result<CheckReport> {
    let count = seeds.end.saturating_sub(seeds.start);
    let reports: Vec<(u64, CheckReport)> = seeds
        .clone()
        .into_par_iter()
        .map(|seed| {
            let (p, scale, ts) = lemma1_random_instance(seed, samples);
            lemma1_bound_check(&p, kernel, scale, &ts).map(|r| (seed, r))
        })
        .collect::<Result<_>>()?;
    let (seed, worst) = reports
        .iter()
        .max_by(|a, b| a.1.measured.total_cmp(&b.1.measured))
        .map(|(s, r)| (*s, r.clone()))
        .ok_or_else(|| Error::input("empty seed range"))?;
    Ok(CheckReport {
        name: "lemma1".into(),
        passed: reports.iter().all(|(_, r)| r.passed),
        measured: worst.measured,
        threshold: worst.threshold,
        witness_t: worst.witness_t,
        details: format!(
            "{count} random paths x {samples} samples (seeds {}..{}); worst ratio at seed {seed}",
            seeds.start, seeds.end
        ),
    })
}

/// `s(|x_i|) = x_i` and `s'(|x_i|) = y_i` for every matched witness; fillers
/// are checked at `t_{k,0}` against their own anchor.
pub fn interpolation_check(path: &SmoothPath, anchors: &AnchorSequence) -> CheckReport {
    let mut targets: Vec<(f64, &[f64], &[f64], String)> = anchors
        .matched()
        .iter()
        .map(|m| (norm(&m.x), m.x.as_slice(), m.y.as_slice(), format!("witness {} (k = {})", m.witness_index, m.k)))
        .collect();
    for e in anchors.entries() {
        if e.source == AnchorSource::Filler {
            targets.push((e.t0, e.a.as_slice(), e.b.as_slice(), format!("filler k = {}", e.k)));
        }
    }
    let mut worst = (0.0f64, None, String::from("no anchors"));
    for (t, x, y, label) in targets {
        let dev = match path.eval_with_derivative(t) {
            Ok((s, ds)) => distance(&s, x).max(distance(&ds, y)),
            Err(_) => f64::INFINITY,
        };
        if dev > worst.0 || worst.1.is_none() {
            worst = (dev.max(worst.0), Some(t), label);
        }
    }
    CheckReport::at_most(
        "interpolation",
        worst.0,
        INTERPOLATION_TOL,
        worst.1,
        format!(
            "{} matched witnesses, {} fillers; worst: {}",
            anchors.matched().len(),
            anchors.k_max() - anchors.given_count(),
            worst.2
        ),
    )
}

/// `|s(t)| <= 1/k` for `t < 1/(2k)`, `k = 1..=k_max`.
pub fn envelope_check(path: &SmoothPath, k_max: usize, samples_per_shell: usize) -> CheckReport {
    let (inf, sup) = path.domain();
    let mut worst = (f64::NEG_INFINITY, None);
    let mut shells = 0;
    for k in 1..=k_max {
        let limit = 1.0 / (2 * k) as f64;
        let hi = limit.min(sup);
        if hi <= inf {
            continue;
        }
        shells += 1;
        let bound = 1.0 / k as f64;
        let ratio = hi / inf;
        for i in 0..samples_per_shell {
            let u = (i as f64 + 0.5) / samples_per_shell as f64;
            let t = inf * ratio.powf(u);
            if t >= limit || t <= inf {
                continue;
            }
            let excess = match path.eval(t) {
                Ok(s) => norm(&s) - bound,
                Err(_) => f64::INFINITY,
            };
            if excess > worst.0 {
                worst = (excess, Some(t));
            }
        }
    }
    CheckReport::at_most(
        "envelope",
        worst.0,
        ENVELOPE_TOL,
        worst.1,
        format!("max of |s(t)| - 1/k over {shells} shells x {samples_per_shell} samples"),
    )
}

/// `s = s~` outside the windows and within `h_k` of each `t_{k+1,0}`.
///
/// Near `t_{k+1,0}` the window-`k` convolution itself is also compared with
/// `s~` wherever its support contains no kink.
pub fn coincidence_check(path: &SmoothPath, points_per_region: usize) -> CheckReport {
    let skel = path.skeleton();
    let (inf, sup) = path.domain();
    let m = points_per_region.max(1) as f64;
    let mut worst = (0.0f64, None);
    let mut record = |dev: f64, t: f64| {
        if dev > worst.0 || worst.1.is_none() {
            worst = (dev.max(worst.0), Some(t));
        }
    };
    let mut regions = 0;

    // around each t_{k+1,0}, radius h_k
    for w in path.windows() {
        let centre = if path.window(w.k + 1).is_some() {
            anchor_time_below(path, w.k)
        } else {
            // lowest window: the anchor below sits at the last skeleton knot
            skel.breakpoints()[1]
        };
        regions += 1;
        around(centre, w.h, m, inf, sup, path, skel, &mut record);
    }

    // gaps between windows
    let mut edges = vec![inf];
    for w in path.windows() {
        edges.push(w.lo);
        edges.push(w.hi);
    }
    edges.push(sup);
    for gap in edges.chunks(2) {
        let (a, b) = (gap[0], gap[1]);
        if b <= a {
            continue;
        }
        regions += 1;
        for j in 0..points_per_region {
            let t = a + (b - a) * (j as f64 + 0.5) / m;
            let dev = match (path.eval(t), skel.eval(t)) {
                (Ok(s), Ok(r)) => distance(&s, &r),
                _ => f64::INFINITY,
            };
            record(dev, t);
        }
    }
    CheckReport::at_most(
        "coincidence",
        worst.0,
        COINCIDENCE_TOL,
        worst.1,
        format!("max |s - s~| over {regions} regions x {points_per_region} points"),
    )
}

fn has_kink(skel: &PiecewiseAffinePath, lo: f64, hi: f64) -> bool {
    let bps = skel.breakpoints();
    let segs = skel.segments();
    let start = bps.partition_point(|&b| b <= lo);
    skel.breakpoints_within(lo, hi)
        .iter()
        .enumerate()
        .any(|(j, _)| {
            let i = start + j;
            i > 0 && i < segs.len() && distance(&segs[i].slope, &segs[i - 1].slope) > 0.0
        })
}

fn anchor_time_below(path: &SmoothPath, k: usize) -> f64 {
    // t_{k+1,0} is the breakpoint just below window k
    let w = path.window(k).expect("window exists");
    let bps = path.skeleton().breakpoints();
    let i = bps.partition_point(|&b| b < w.lo);
    bps[i - 1]
}

#[allow(clippy::too_many_arguments)]
fn around(
    centre: f64,
    h: f64,
    m: f64,
    inf: f64,
    sup: f64,
    path: &SmoothPath,
    skel: &PiecewiseAffinePath,
    record: &mut impl FnMut(f64, f64),
) {
    let count = m as usize;
    for j in 0..count {
        let t = centre + h * (2.0 * (j as f64 + 0.5) / m - 1.0);
        if t <= inf || t > sup {
            continue;
        }
        let reference = match skel.eval(t) {
            Ok(r) => r,
            Err(_) => {
                record(f64::INFINITY, t);
                continue;
            }
        };
        let mut dev = match path.eval(t) {
            Ok(s) => distance(&s, &reference),
            Err(_) => f64::INFINITY,
        };
        if t - h >= inf && t + h <= sup && !has_kink(skel, t - h, t + h) {
            if let Ok((conv, _)) = mollify(skel, path.kernel(), t, h) {
                dev = dev.max(distance(&conv, &reference));
            }
        }
        record(dev, t);
    }
}

/// Which bound the product scan enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductRegime {
    /// Consecutive anchors at most 60 degrees apart: `|s||s'| <= 28` and
    /// `|s'| <= 28k` on `(t_{k+1,0}, t_{k,0}]` are enforced.
    Restricted,
    /// Only finiteness is enforced; the measured constants are reported.
    Unrestricted,
}

impl ProductRegime {
    pub fn classify(anchors: &AnchorSequence) -> Self {
        let ok = anchors.entries().windows(2).all(|w| {
            let (a, b) = (&w[0].a, &w[1].a);
            dot(a, b) >= 0.5 * norm(a) * norm(b) * (1.0 - 1e-12)
        });
        if ok {
            ProductRegime::Restricted
        } else {
            ProductRegime::Unrestricted
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBound {
    pub k: usize,
    pub sup_derivative: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductScan {
    pub regime: ProductRegime,
    pub samples: usize,
    pub sup_product: f64,
    pub sup_product_t: f64,
    pub intervals: Vec<IntervalBound>,
}

impl ProductScan {
    pub fn worst_interval_ratio(&self) -> (f64, usize) {
        self.intervals
            .iter()
            .map(|i| (i.sup_derivative / i.bound, i.k))
            .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a })
    }

    pub fn reports(&self) -> Vec<CheckReport> {
        let restricted = self.regime == ProductRegime::Restricted;
        let finite = self.sup_product.is_finite();
        let product = CheckReport {
            name: "product_bound".into(),
            passed: finite && (!restricted || self.sup_product <= PRODUCT_BOUND),
            measured: self.sup_product,
            threshold: PRODUCT_BOUND,
            witness_t: Some(self.sup_product_t),
            details: format!(
                "sup |s||s'| over {} samples, {} regime{}",
                self.samples,
                if restricted { "restricted" } else { "unrestricted" },
                if restricted { "" } else { " (bound reported, finiteness enforced)" }
            ),
        };
        let (ratio, k) = self.worst_interval_ratio();
        let derivative = CheckReport {
            name: "derivative_bound".into(),
            passed: ratio.is_finite() && (!restricted || ratio <= 1.0),
            measured: ratio,
            threshold: 1.0,
            witness_t: None,
            details: format!(
                "max over k of sup |s'| / (28 k) on (t_(k+1,0), t_(k,0)]; worst k = {k}"
            ),
        };
        vec![product, derivative]
    }
}

/// Scans `|s||s'|` and the per-interval `|s'|` over a grid.
pub fn product_bound_scan(
    path: &SmoothPath,
    anchors: &AnchorSequence,
    grid: &GridSpec,
    regime: ProductRegime,
) -> Result<ProductScan> {
    let times = grid.times(path)?;
    let rows = sample_times(path, &times)?;
    let (mut sup_product, mut sup_product_t) = (f64::NEG_INFINITY, f64::NAN);
    for r in &rows {
        if r.product > sup_product || !r.product.is_finite() {
            sup_product = if r.product.is_finite() { r.product } else { f64::INFINITY };
            sup_product_t = r.t;
        }
    }
    // interval k is (t_{k+1,0}, t_{k,0}]; the last anchor owns the bottom piece
    let t0: Vec<f64> = anchors.entries().iter().map(|e| e.t0).collect();
    let mut sup_ds = vec![0.0f64; t0.len()];
    for r in &rows {
        let idx = t0.partition_point(|&a| a >= r.t);
        let k = idx.min(t0.len()).max(1);
        sup_ds[k - 1] = sup_ds[k - 1].max(r.norm_ds);
    }
    let intervals = sup_ds
        .iter()
        .enumerate()
        .map(|(i, &s)| IntervalBound {
            k: i + 1,
            sup_derivative: s,
            bound: DERIVATIVE_BOUND_PER_K * (i + 1) as f64,
        })
        .collect();
    Ok(ProductScan {
        regime,
        samples: rows.len(),
        sup_product,
        sup_product_t,
        intervals,
    })
}

/// Central-difference convergence of `value` towards `deriv` at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Order from the finest pair of steps whose errors clear the rounding
    /// floor; `None` when every error is at rounding level.
    pub order: Option<f64>,
}

/// Observed order of `(f(t+d) - f(t-d)) / 2d -> df(t)` as `d` halves from
/// `delta0`. Errors below `1e5 * eps * |f| / d` are treated as noise.
pub fn observed_order(
    f: impl Fn(f64) -> Result<Vec<f64>>,
    df: impl Fn(f64) -> Result<Vec<f64>>,
    t: f64,
    delta0: f64,
    halvings: usize,
) -> Result<OrderEstimate> {
    let target = df(t)?;
    let mut deltas = Vec::with_capacity(halvings + 1);
    let mut errors = Vec::with_capacity(halvings + 1);
    let mut floors = Vec::with_capacity(halvings + 1);
    for j in 0..=halvings {
        let d = delta0 / (1u64 << j) as f64;
        let up = f(t + d)?;
        let down = f(t - d)?;
        let fd: Vec<f64> = up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * d)).collect();
        let size = norm(&up).max(norm(&down)).max(1e-300);
        deltas.push(d);
        errors.push(distance(&fd, &target));
        floors.push(FD_NOISE_FACTOR * f64::EPSILON * size / d);
    }
    let order = (0..halvings)
        .rev()
        .find(|&j| errors[j + 1] > floors[j + 1] && errors[j] > floors[j])
        .map(|j| (errors[j] / errors[j + 1]).log2());
    Ok(OrderEstimate {
        deltas,
        errors,
        order,
    })
}

fn local_width(path: &SmoothPath, t: f64) -> f64 {
    if let Some(w) = path.window_at(t) {
        return w.h;
    }
    path.windows()
        .iter()
        .min_by(|a, b| {
            let da = (t - 0.5 * (a.lo + a.hi)).abs();
            let db = (t - 0.5 * (b.lo + b.hi)).abs();
            da.total_cmp(&db)
        })
        .map(|w| w.h)
        .unwrap_or(1e-3)
}

/// Finite-order smoothness proxy: at `trials` random points (half of them
/// inside windows near a kink), central differences of `s` converge to `s'` and those of
/// `s'` converge to `s''` with observed order at least 1.9.
pub fn smoothness_check(path: &SmoothPath, trials: usize, seed: u64) -> Result<CheckReport> {
    if trials < 10 {
        return Err(Error::input("smoothness check needs at least 10 trials"));
    }
    let (inf, sup) = path.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(trials);
    while points.len() < trials {
        let t = if points.len() % 2 == 0 && !path.windows().is_empty() {
            // inside a window, within the kernel support around one of its kinks
            let w = &path.windows()[rng.gen_range(0..path.windows().len())];
            let kinks = path.skeleton().breakpoints_within(w.lo, w.hi);
            if kinks.is_empty() {
                rng.gen_range(w.lo..=w.hi)
            } else {
                let kink = kinks[rng.gen_range(0..kinks.len())];
                rng.gen_range((kink - w.h).max(w.lo)..=(kink + w.h).min(w.hi))
            }
        } else {
            inf * (sup / inf).powf(rng.gen::<f64>())
        };
        let d0 = local_width(path, t) / 4.0;
        if t - d0 > inf && t + d0 <= sup {
            points.push((t, d0));
        }
    }
    let results: Vec<(f64, Option<f64>, Option<f64>)> = points
        .par_iter()
        .map(|&(t, d0)| {
            let first = observed_order(|u| path.eval(u), |u| path.derivative(u), t, d0, FD_HALVINGS)?;
            let second = observed_order(
                |u| path.derivative(u),
                |u| path.second_derivative(u),
                t,
                d0,
                FD_HALVINGS,
            )?;
            Ok((t, first.order, second.order))
        })
        .collect::<Result<_>>()?;

    let mut worst = (f64::INFINITY, None);
    let mut resolved = 0;
    for (t, a, b) in &results {
        for o in [a, b].into_iter().flatten() {
            resolved += 1;
            if *o < worst.0 {
                worst = (*o, Some(*t));
            }
        }
    }
    let measured = if resolved == 0 { f64::INFINITY } else { worst.0 };
    Ok(CheckReport {
        name: "smoothness".into(),
        passed: measured >= MIN_ORDER,
        measured,
        threshold: MIN_ORDER,
        witness_t: worst.1,
        details: format!(
            "min observed central-difference order (s -> s', s' -> s''), must be >= threshold; \
             {resolved} of {} estimates above rounding level",
            2 * trials
        ),
    })
}

/// The same convergence test applied to the skeleton at each kink with a
/// slope jump. A piecewise-affine path fails it.
pub fn skeleton_kink_control(path: &SmoothPath) -> Result<CheckReport> {
    let skel = path.skeleton();
    let bps = skel.breakpoints();
    let segs = skel.segments();
    let mut worst = (f64::INFINITY, None);
    for i in 1..segs.len() {
        if distance(&segs[i].slope, &segs[i - 1].slope) < 1e-9 {
            continue;
        }
        let t = bps[i];
        let d0 = local_width(path, t) / 4.0;
        if t - d0 <= bps[0] || t + d0 > *bps.last().unwrap() {
            continue;
        }
        let est = observed_order(
            |u| skel.eval(u),
            |u| skel.derivative(u).map(<[f64]>::to_vec),
            t,
            d0,
            4,
        )?;
        if let Some(o) = est.order {
            if o < worst.0 {
                worst = (o, Some(t));
            }
        }
    }
    Ok(CheckReport {
        name: "skeleton_kink_control".into(),
        passed: worst.0 >= MIN_ORDER,
        measured: worst.0,
        threshold: MIN_ORDER,
        witness_t: worst.1,
        details: "central differences of the unsmoothed skeleton at its kinks".into(),
    })
}

pub fn kernel_check(kernel: &BumpKernel) -> CheckReport {
    let mass = kernel.mass();
    CheckReport::at_most(
        "kernel",
        (mass - 1.0).abs(),
        KERNEL_MASS_TOL,
        None,
        format!("|integral rho - 1| with c = {:.17e}", kernel.constant()),
    )
}

/// Named groups of checks selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernel,
    Interpolation,
    Envelope,
    Coincidence,
    Product,
    Smoothness,
    Lemma1,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Kernel,
        Suite::Interpolation,
        Suite::Envelope,
        Suite::Coincidence,
        Suite::Product,
        Suite::Smoothness,
        Suite::Lemma1,
    ];

    pub fn needs_path(self) -> bool {
        !matches!(self, Suite::Lemma1 | Suite::Kernel)
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kernel" => Suite::Kernel,
            "interpolation" => Suite::Interpolation,
            "envelope" => Suite::Envelope,
            "coincidence" => Suite::Coincidence,
            "product" => Suite::Product,
            "smoothness" => Suite::Smoothness,
            "lemma1" => Suite::Lemma1,
            other => return Err(Error::input(format!("unknown suite `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    pub envelope_k_max: usize,
    pub envelope_samples: usize,
    pub coincidence_points: usize,
    pub grid: GridSpec,
    pub smoothness_trials: usize,
    pub seed: u64,
    pub lemma1_seeds: Range<u64>,
    pub lemma1_samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            envelope_k_max: 20,
            envelope_samples: 256,
            coincidence_points: 64,
            grid: GridSpec::dense(),
            smoothness_trials: 100,
            seed: 0,
            lemma1_seeds: 0..100,
            lemma1_samples: 50,
        }
    }
}

/// Runs the selected suites in the order given.
pub fn run_suites(
    built: Option<(&SmoothPath, &AnchorSequence)>,
    kernel: &BumpKernel,
    suites: &[Suite],
    opts: &CheckOptions,
) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for &suite in suites {
        let target = || {
            built.ok_or_else(|| Error::input(format!("suite {suite:?} needs a path")))
        };
        match suite {
            Suite::Kernel => out.push(kernel_check(kernel)),
            Suite::Lemma1 => out.push(lemma1_random_suite(
                kernel,
                opts.lemma1_seeds.clone(),
                opts.lemma1_samples,
            )?),
            Suite::Interpolation => {
                let (p, a) = target()?;
                out.push(interpolation_check(p, a));
            }
            Suite::Envelope => {
                let (p, a) = target()?;
                out.push(envelope_check(p, opts.envelope_k_max.min(a.k_max()), opts.envelope_samples));
            }
            Suite::Coincidence => {
                let (p, _) = target()?;
                out.push(coincidence_check(p, opts.coincidence_points));
            }
            Suite::Product => {
                let (p, a) = target()?;
                let scan = product_bound_scan(p, a, &opts.grid, ProductRegime::classify(a))?;
                out.extend(scan.reports());
            }
            Suite::Smoothness => {
                let (p, _) = target()?;
                out.push(smoothness_check(p, opts.smoothness_trials, opts.seed)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConeSpec, Parity, UnitDirection};
    use crate::mollifier::make_kernel;
    use crate::skeleton::build_anchor_sequence;
    use crate::witness::{DerivativeMode, Generator};

    fn build(g: Generator, n: usize, k_max: usize) -> (SmoothPath, AnchorSequence) {
        let w = g.generate(n).unwrap();
        let b = crate::pipeline::build_path(&w, &crate::pipeline::BuildOptions::with_k_max(k_max)).unwrap();
        (b.path, b.anchors)
    }

    #[test]
    fn lemma1_single_segment_ratio_is_one() {
        let k = make_kernel();
        let p = PiecewiseAffinePath::from_knots(vec![0.0, 2.0], vec![vec![0.0, 0.0], vec![1.2, -1.0]]).unwrap();
        let r = lemma1_bound_check(&p, &k, 0.5, &[0.6, 1.0, 1.4]).unwrap();
        assert!((r.measured - 1.0).abs() < 1e-14);
        assert!(r.passed);
    }

    #[test]
    fn lemma1_symmetric_kink() {
        let k = make_kernel();
        let p = PiecewiseAffinePath::from_knots(
            vec![0.0, 1.0, 2.0],
            vec![vec![0.0, 0.0], vec![0.6, 0.8], vec![0.0, 0.0]],
        )
        .unwrap();
        let ts: Vec<f64> = (0..101).map(|i| 0.5 + i as f64 / 100.0).collect();
        let r = lemma1_bound_check(&p, &k, 0.5, &ts).unwrap();
        // |u| = 1, bound 2; the derivative is a convex combination of u and -u
        assert!(r.measured <= 0.5 + 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn lemma1_rejects_support_outside_path() {
        let k = make_kernel();
        let p = PiecewiseAffinePath::from_knots(vec![0.0, 1.0], vec![vec![0.0], vec![1.0]]).unwrap();
        match lemma1_bound_check(&p, &k, 0.3, &[0.5, 0.9]) {
            Err(Error::Input(msg)) => assert!(msg.contains("0.9")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lemma1_random_suite_passes() {
        let r = lemma1_random_suite(&make_kernel(), 0..20, 50).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn interpolation_passes_and_detects_corruption() {
        let (p, a) = build(Generator::spiral(200), 2, 20);
        assert!(interpolation_check(&p, &a).passed);
        let k = a.matched()[1].k;
        let moved = a.with_displaced_anchor(k, &[1e-7, 0.0]).unwrap();
        let bad = SmoothPath::new(&moved, make_kernel()).unwrap();
        let r = interpolation_check(&bad, &moved);
        assert!(!r.passed);
        assert_eq!(r.witness_t, Some(norm(&a.matched()[1].x)));
    }

    #[test]
    fn envelope_passes_and_scaled_path_fails() {
        let (p, _) = build(Generator::diagonal(200), 2, 40);
        assert!(envelope_check(&p, 20, 256).passed);
        assert!(!envelope_check(&p.scaled(3.0), 20, 256).passed);
    }

    #[test]
    fn coincidence_on_random_fixture() {
        let (p, _) = build(Generator::random_cone(200, 30.0, DerivativeMode::Random, 1), 3, 20);
        let r = coincidence_check(&p, 64);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn on_axis_product_is_small() {
        let (p, a) = build(Generator::diagonal(200), 2, 40);
        let scan = product_bound_scan(&p, &a, &GridSpec::dense(), ProductRegime::classify(&a)).unwrap();
        assert_eq!(scan.regime, ProductRegime::Restricted);
        assert!(scan.sup_product <= p.domain().1 + 1e-12);
        assert!(scan.reports().iter().all(|r| r.passed));
    }

    #[test]
    fn product_scan_is_grid_monotone() {
        let (p, a) = build(Generator::spiral(200), 2, 20);
        let regime = ProductRegime::classify(&a);
        let coarse = product_bound_scan(&p, &a, &GridSpec::Dense { per_decade: 128, per_window: 9 }, regime).unwrap();
        let fine = product_bound_scan(&p, &a, &GridSpec::Dense { per_decade: 256, per_window: 17 }, regime).unwrap();
        assert!(fine.sup_product >= coarse.sup_product);
    }

    #[test]
    fn smoothness_passes_and_skeleton_fails() {
        let (p, _) = build(Generator::random_cone(200, 30.0, DerivativeMode::Random, 2), 2, 20);
        let r = smoothness_check(&p, 40, 0).unwrap();
        assert!(r.passed, "{r:?}");
        let c = skeleton_kink_control(&p).unwrap();
        assert!(!c.passed);
        assert!(c.measured < 0.5);
    }

    #[test]
    fn affine_region_is_exact() {
        let (p, _) = build(Generator::diagonal(200), 2, 10);
        let t = 0.3;
        let est = observed_order(|u| p.eval(u), |u| p.derivative(u), t, 1e-3, 4).unwrap();
        assert!(est.errors.iter().all(|e| *e < 1e-9));
        assert!(est.order.is_none());
    }

    #[test]
    fn suite_names() {
        assert_eq!("lemma1".parse::<Suite>().unwrap(), Suite::Lemma1);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn kernel_check_passes() {
        assert!(kernel_check(&make_kernel()).passed);
    }

    #[test]
    fn parity_odd_build_is_consistent() {
        let w = Generator::diagonal(80).generate(2).unwrap();
        let cone = ConeSpec::new(UnitDirection::normalize(&[1.0, 1.0]).unwrap());
        let a = build_anchor_sequence(&w, &cone, Parity::Odd, 30).unwrap();
        let p = SmoothPath::new(&a, make_kernel()).unwrap();
        assert!(interpolation_check(&p, &a).passed);
        assert!(envelope_check(&p, 20, 64).passed);
        assert!(coincidence_check(&p, 16).passed);
    }
}
