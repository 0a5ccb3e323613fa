//! The bump kernel and the windowed mollification of the skeleton.
//!
//! Inside window `k` the smooth path is
//!
//! ```text
//! s(t) = integral_{-1}^{1} rho(tau) s~(t - tau h_k) dtau,    h_k = (t_{k,0} - t_{k,1}) / 4
//! ```
//!
//! and `s = s~` elsewhere. Because `s~` is affine between breakpoints, each
//! panel between consecutive kink preimages contributes
//! `m0 * s~_piece(t) - h * m1 * slope`, where `m0`, `m1` are the zeroth and
//! first partial moments of `rho` over the panel.

use serde::{Deserialize, Serialize};

use crate::affine::PiecewiseAffinePath;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::skeleton::{build_skeleton, AnchorSequence};
use crate::vector::axpy;

/// Uniform base panels on `[-1, 1]` for the kernel moments.
const BASE_PANELS: usize = 16;
/// Agreement required between a panel and its two halves.
const PANEL_TOL: f64 = 1e-15;

/// `rho(tau) = c exp(-1/(1 - tau^2))` on `(-1, 1)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpKernel {
    c: f64,
}

fn unnormalized_bump(tau: f64) -> f64 {
    let q = 1.0 - tau * tau;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

impl BumpKernel {
    /// Normalizes the bump to unit mass by panel quadrature.
    pub fn new() -> Self {
        let raw = BumpKernel { c: 1.0 }.moments(-1.0, 1.0)[0];
        let kernel = BumpKernel { c: 1.0 / raw };
        debug_assert!((kernel.mass() - 1.0).abs() <= 1e-12);
        kernel
    }

    /// Kernel with a given normalization constant (as read back from a file).
    pub fn with_constant(c: f64) -> Result<Self> {
        let k = BumpKernel { c };
        if !(c.is_finite() && c > 0.0) || (k.mass() - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!(
                "kernel constant {c} does not normalize the bump to unit mass"
            )));
        }
        Ok(k)
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn density(&self, tau: f64) -> f64 {
        self.c * unnormalized_bump(tau)
    }

    /// `integral rho` over `[-1, 1]`.
    pub fn mass(&self) -> f64 {
        self.moments(-1.0, 1.0)[0]
    }

    /// `[integral rho, integral tau rho]` over `[lo, hi]` (clipped to `[-1, 1]`).
    pub fn moments(&self, lo: f64, hi: f64) -> [f64; 2] {
        let lo = lo.max(-1.0);
        let hi = hi.min(1.0);
        if lo >= hi {
            return [0.0, 0.0];
        }
        let rule = GaussLegendre::standard();
        let width = 2.0 / BASE_PANELS as f64;
        let first = (((lo + 1.0) / width).floor() as usize).min(BASE_PANELS - 1);
        let mut acc = [0.0; 2];
        let mut f = |tau: f64| {
            let r = self.density(tau);
            [r, tau * r]
        };
        for p in first..BASE_PANELS {
            let a = (-1.0 + p as f64 * width).max(lo);
            let b = (-1.0 + (p + 1) as f64 * width).min(hi);
            if a >= hi {
                break;
            }
            if a >= b {
                continue;
            }
            let q = rule.integrate_adaptive(a, b, PANEL_TOL, &mut f);
            acc[0] += q[0];
            acc[1] += q[1];
        }
        acc
    }
}

impl Default for BumpKernel {
    fn default() -> Self {
        Self::new()
    }
}

/// Builds the normalized bump kernel.
pub fn make_kernel() -> BumpKernel {
    BumpKernel::new()
}

/// `(value, derivative)` of `t -> integral rho(tau) p(t - tau h) dtau`.
///
/// The derivative is the convolution of the piecewise-constant `p'`; panels
/// are split at every `tau` where `t - tau h` hits a breakpoint of `p`, so
/// each panel integrand is `rho` times an affine function.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn mollify(
    path: &PiecewiseAffinePath,
    kernel: &BumpKernel,
    t: f64,
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = path.domain();
    if !(h > 0.0) || t - h < lo || t + h > hi {
        return Err(Error::input(format!(
            "mollifier support [{}, {}] leaves the path domain [{lo}, {hi}]",
            t - h,
            t + h
        )));
    }
    let kinks = path.breakpoints_within(t - h, t + h);
    let mut edges = Vec::with_capacity(kinks.len() + 2);
    edges.push(-1.0);
    edges.extend(kinks.iter().rev().map(|k| (t - k) / h));
    edges.push(1.0);

    let n = path.dimension();
    let mut value = vec![0.0; n];
    let mut deriv = vec![0.0; n];
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a >= b {
            continue;
        }
        let [m0, m1] = kernel.moments(a, b);
        let u_mid = t - 0.5 * (a + b) * h;
        let seg = &path.segments()[path.segment_index_closed(u_mid)];
        // s~ on this piece, extended affinely to t
        let shift = t - seg.base_t;
        for i in 0..n {
            let at_t = seg.base[i] + shift * seg.slope[i];
            value[i] += m0 * at_t - h * m1 * seg.slope[i];
            deriv[i] += m0 * seg.slope[i];
        }
    }
    Ok((value, deriv))
}

/// Closed window `[lo, hi]` around the kinks of anchor `k`, with half-width `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollificationWindow {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub h: f64,
}

/// The skeleton smoothed inside each window.
#[derive(Debug, Clone)]
pub struct SmoothPath {
    skeleton: PiecewiseAffinePath,
    kernel: BumpKernel,
    /// ascending in `t` (descending in `k`)
    windows: Vec<MollificationWindow>,
    domain_inf: f64,
    domain_sup: f64,
}

impl SmoothPath {
    pub fn new(anchors: &AnchorSequence, kernel: BumpKernel) -> Result<Self> {
        let skeleton = build_skeleton(anchors)?;
        let e = anchors.entries();
        let mut windows: Vec<MollificationWindow> = (0..e.len() - 1)
            .map(|idx| {
                let (upper, lower) = (&e[idx], &e[idx + 1]);
                MollificationWindow {
                    k: upper.k,
                    lo: 0.5 * (lower.t0 + upper.t2),
                    hi: 0.5 * (upper.t1 + upper.t0),
                    h: 0.25 * (upper.t0 - upper.t1),
                }
            })
            .collect();
        windows.reverse();

        for (i, w) in windows.iter().enumerate() {
            let upper = &e[w.k - 1];
            let lower = &e[w.k];
            if !(w.lo < w.hi && w.h > 0.0) {
                return Err(Error::Invariant(format!("window {} is empty", w.k)));
            }
            // both kinks inside, neighbouring anchors' kinks outside
            let inner = lower.t0 < w.lo - w.h
                && w.lo - w.h < upper.t2
                && upper.t1 < w.hi + w.h
                && w.hi + w.h < upper.t0;
            if !inner {
                return Err(Error::Invariant(format!(
                    "window {} does not isolate its two kinks",
                    w.k
                )));
            }
            if i > 0 && windows[i - 1].hi >= w.lo {
                return Err(Error::Invariant(format!("windows {} and {} overlap", windows[i - 1].k, w.k)));
            }
        }

        let (domain_inf, domain_sup) = skeleton.domain();
        Ok(SmoothPath {
            skeleton,
            kernel,
            windows,
            domain_inf,
            domain_sup,
        })
    }

    pub fn skeleton(&self) -> &PiecewiseAffinePath {
        &self.skeleton
    }

    pub fn kernel(&self) -> &BumpKernel {
        &self.kernel
    }

    pub fn windows(&self) -> &[MollificationWindow] {
        &self.windows
    }

    pub fn dimension(&self) -> usize {
        self.skeleton.dimension()
    }

    /// Evaluation domain `(domain_inf, domain_sup]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.domain_inf, self.domain_sup)
    }

    pub fn window_at(&self, t: f64) -> Option<&MollificationWindow> {
        let i = self.windows.partition_point(|w| w.lo <= t);
        let w = self.windows.get(i.checked_sub(1)?)?;
        (t <= w.hi).then_some(w)
    }

    /// Window with index `k`.
    pub fn window(&self, k: usize) -> Option<&MollificationWindow> {
        let n = self.windows.len();
        (k >= 1 && k <= n).then(|| &self.windows[n - k])
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if t > self.domain_inf && t <= self.domain_sup {
            Ok(())
        } else {
            Err(Error::Domain {
                t,
                lo: self.domain_inf,
                hi: self.domain_sup,
            })
        }
    }

    /// `(s(t), s'(t))`.
    pub fn eval_with_derivative(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_domain(t)?;
        match self.window_at(t) {
            Some(w) => mollify(&self.skeleton, &self.kernel, t, w.h),
            None => {
                let i = self.skeleton.segment_index(t)?;
                let seg = &self.skeleton.segments()[i];
                Ok((seg.value(t), seg.slope.clone()))
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.eval_with_derivative(t)?.0)
    }

    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.eval_with_derivative(t)?.1)
    }

    /// `s''(t)`: each kink `kappa` with slope jump `J` inside the kernel
    /// support contributes `J rho((t - kappa)/h) / h`.
    pub fn second_derivative(&self, t: f64) -> Result<Vec<f64>> {
        self.check_domain(t)?;
        let mut out = vec![0.0; self.dimension()];
        let Some(w) = self.window_at(t) else {
            return Ok(out);
        };
        let bps = self.skeleton.breakpoints();
        let segs = self.skeleton.segments();
        let first = bps.partition_point(|&b| b <= t - w.h);
        for (i, kappa) in bps.iter().enumerate().skip(first) {
            if *kappa >= t + w.h {
                break;
            }
            if i == 0 || i >= segs.len() {
                continue;
            }
            let weight = self.kernel.density((t - kappa) / w.h) / w.h;
            axpy(&mut out, weight, &segs[i].slope);
            axpy(&mut out, -weight, &segs[i - 1].slope);
        }
        Ok(out)
    }

    /// The path with all values multiplied by `factor` (times unchanged).
    pub fn scaled(&self, factor: f64) -> Self {
        SmoothPath {
            skeleton: self.skeleton.scaled(factor),
            ..self.clone()
        }
    }
}

/// Free-function form of [`SmoothPath::eval`].
pub fn eval_smooth(path: &SmoothPath, t: f64) -> Result<Vec<f64>> {
    path.eval(t)
}

/// Free-function form of [`SmoothPath::derivative`].
pub fn eval_smooth_derivative(path: &SmoothPath, t: f64) -> Result<Vec<f64>> {
    path.derivative(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::Segment;
    use crate::geometry::{ConeSpec, Parity, UnitDirection};
    use crate::skeleton::build_anchor_sequence;
    use crate::vector::distance;
    use crate::witness::Generator;

    /// Adaptive Simpson, independent of the Gauss-Legendre machinery.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth > 40 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0)
    }

    #[test]
    fn kernel_constant_matches_independent_oracle() {
        let raw = simpson(&unnormalized_bump, -1.0, 1.0, 1e-14);
        // frozen from the Simpson oracle and a 30-digit reference
        assert!((raw - 0.443_993_816_168_079_4).abs() < 1e-12);
        let k = make_kernel();
        assert!((k.constant() - 1.0 / raw).abs() < 1e-10);
        assert!((k.constant() - 2.252_283_621_043_581).abs() < 1e-11);
        assert!((k.mass() - 1.0).abs() <= 1e-12);
        assert!((k.density(0.0) - 0.828_568_839_869_105).abs() < 1e-12);
        assert_eq!(k.density(1.0), 0.0);
        assert_eq!(k.density(-1.0), 0.0);
        assert_eq!(k.density(1.5), 0.0);
    }

    #[test]
    fn kernel_moments_are_symmetric() {
        let k = make_kernel();
        let [m0, m1] = k.moments(-1.0, 1.0);
        assert!((m0 - 1.0).abs() < 1e-14);
        assert!(m1.abs() < 1e-16);
        let [l0, _] = k.moments(-1.0, 0.0);
        assert!((l0 - 0.5).abs() < 1e-14);
        let [a, b] = k.moments(-0.3, 0.7);
        let [c, d] = k.moments(-0.7, 0.3);
        assert!((a - c).abs() < 1e-15 && (b + d).abs() < 1e-15);
        let oracle = simpson(&|x| k.density(x) * x, -0.3, 0.7, 1e-15);
        assert!((b - oracle).abs() < 1e-12);
    }

    #[test]
    fn with_constant_rejects_wrong_mass() {
        assert!(BumpKernel::with_constant(2.0).is_err());
        let c = make_kernel().constant();
        assert!(BumpKernel::with_constant(c).is_ok());
    }

    fn affine_path(slope: Vec<f64>, base: Vec<f64>) -> PiecewiseAffinePath {
        PiecewiseAffinePath::new(
            vec![0.0, 1.0, 2.0],
            vec![
                Segment { slope: slope.clone(), base_t: 0.0, base: base.clone() },
                Segment { slope, base_t: 0.0, base },
            ],
        )
        .unwrap()
    }

    #[test]
    fn mollifying_affine_reproduces_it() {
        let k = make_kernel();
        let p = affine_path(vec![0.7, -2.0], vec![0.1, 0.3]);
        for t in [0.5, 0.9, 1.0, 1.3] {
            let (v, d) = mollify(&p, &k, t, 0.4).unwrap();
            let exact = p.eval(t).unwrap();
            assert!(distance(&v, &exact) < 1e-14);
            assert!(distance(&d, &[0.7, -2.0]) < 1e-14);
        }
        assert!(mollify(&p, &k, 0.2, 0.4).is_err());
    }

    #[test]
    fn constant_path_has_unit_mass() {
        let k = make_kernel();
        let p = affine_path(vec![0.0, 0.0, 0.0], vec![3.5, -1.25, 1e3]);
        let (v, _) = mollify(&p, &k, 1.01, 0.5).unwrap();
        assert!(distance(&v, &[3.5, -1.25, 1e3]) < 1e-12 * 1e3);
    }

    #[test]
    fn derivative_at_kink_is_average_of_slopes() {
        let k = make_kernel();
        let p = PiecewiseAffinePath::from_knots(
            vec![0.0, 1.0, 2.0],
            vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![1.5, 0.0]],
        )
        .unwrap();
        let (_, d) = mollify(&p, &k, 1.0, 0.3).unwrap();
        assert!(distance(&d, &[0.75, 0.0]) < 1e-14);
    }

    fn spiral_path() -> SmoothPath {
        let w = Generator::spiral(300).generate(2).unwrap();
        let cone = ConeSpec::new(UnitDirection::normalize(&[1.0, 0.3]).unwrap());
        let anchors = build_anchor_sequence(&w, &cone, Parity::Even, 20).unwrap();
        SmoothPath::new(&anchors, make_kernel()).unwrap()
    }

    #[test]
    fn windows_are_ordered_and_disjoint() {
        let s = spiral_path();
        assert_eq!(s.windows().len(), 19);
        assert!(s.windows().windows(2).all(|w| w[0].hi < w[1].lo));
        assert_eq!(s.window(1).unwrap().k, 1);
        assert_eq!(s.window(19).unwrap().k, 19);
        assert!(s.window(20).is_none());
    }

    #[test]
    fn window_edges_agree_with_skeleton() {
        let s = spiral_path();
        for w in s.windows() {
            for t in [w.lo, w.hi] {
                let inside = s.eval(t).unwrap();
                let outside = s.skeleton().eval(t).unwrap();
                assert!(distance(&inside, &outside) < 1e-14, "k = {} t = {t}", w.k);
            }
        }
    }

    #[test]
    fn second_derivative_matches_differences_of_first() {
        let s = spiral_path();
        let w = *s.window(5).unwrap();
        let t = 0.5 * (w.lo + w.hi) + 0.37 * w.h;
        let d = 1e-3 * w.h;
        let fd: Vec<f64> = s
            .derivative(t + d)
            .unwrap()
            .iter()
            .zip(s.derivative(t - d).unwrap())
            .map(|(a, b)| (a - b) / (2.0 * d))
            .collect();
        let exact = s.second_derivative(t).unwrap();
        let scale = crate::vector::norm(&exact).max(1.0);
        assert!(distance(&fd, &exact) < 1e-4 * scale, "{fd:?} vs {exact:?}");
    }

    #[test]
    fn domain_errors() {
        let s = spiral_path();
        let (lo, hi) = s.domain();
        assert!(matches!(s.eval(lo), Err(Error::Domain { .. })));
        assert!(s.eval(hi).is_ok());
        assert!(s.eval(hi * 1.0001).is_err());
    }
}
