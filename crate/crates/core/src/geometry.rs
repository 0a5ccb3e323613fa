//! Cones with vertex at the origin, finite covers of the unit sphere, the
//! shells `1/(k+1) < |x| <= 1/k`, and the pigeonhole selections that pick a
//! cone and a shell parity holding the most witness points.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{dot, norm};

/// Ratio between the ball radius and the distance along the axis in the cone
/// definition `|x - r z| <= r / sqrt(3)`.
pub const APERTURE_RATIO: f64 = 0.577_350_269_189_625_8;

/// Squared cosine of the cone's angular radius: a nonzero `x` is inside the
/// cone iff `x.z >= 0` and `(x.z)^2 >= 2/3 |x|^2`.
pub const CONE_COS_SQ: f64 = 2.0 / 3.0;

/// Relative slack on the closed-form membership test so that boundary points
/// such as `(sqrt 2, 1)/sqrt 3` are not lost to rounding.
const CONE_SLACK: f64 = 1e-12;

/// Tolerance on `|z| = 1` for unit directions.
pub const UNIT_TOL: f64 = 1e-12;

/// Number of random unit vectors used to verify a sphere cover.
pub const COVER_SAMPLES: usize = 100_000;
pub const COVER_SEED: u64 = 0x5EED_C0FE;
const MAX_COVER_SIZE: usize = 1 << 20;

/// Angular radius of the cone around its axis, `arccos(sqrt(2/3))`.
pub fn cone_half_angle() -> f64 {
    CONE_COS_SQ.sqrt().acos()
}

/// Default cap radius of the sphere cover: half of the cone's angular radius.
pub fn default_cover_half_angle() -> f64 {
    cone_half_angle() / 2.0
}

/// A vector of Euclidean norm one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitDirection(Vec<f64>);

impl UnitDirection {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::input("unit direction must have dimension >= 1"));
        }
        let r = norm(&coords);
        if !r.is_finite() || (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::input(format!("direction has norm {r}, expected 1")));
        }
        Ok(UnitDirection(coords))
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        let r = norm(v);
        if r == 0.0 || !r.is_finite() {
            return Err(Error::input("cannot normalize a zero or non-finite vector"));
        }
        Self::new(v.iter().map(|x| x / r).collect())
    }

    /// The i-th standard basis vector of R^n.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::input(format!("basis index {i} out of range for n = {n}")));
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self::new(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for UnitDirection {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitDirection::new(v)
    }
}

impl From<UnitDirection> for Vec<f64> {
    fn from(u: UnitDirection) -> Self {
        u.0
    }
}

impl AsRef<[f64]> for UnitDirection {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The closed cone `{x : |x - r z| <= r/sqrt(3) for some r >= 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    axis: UnitDirection,
}

impl ConeSpec {
    pub fn new(axis: UnitDirection) -> Self {
        ConeSpec { axis }
    }

    pub fn axis(&self) -> &UnitDirection {
        &self.axis
    }

    pub fn aperture_ratio(&self) -> f64 {
        APERTURE_RATIO
    }

    pub fn dim(&self) -> usize {
        self.axis.dim()
    }

    /// Membership via the minimizer of `|x - r z|^2 - r^2/3` over `r >= 0`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "point has dimension {}, cone has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let xx = dot(x, x);
        if xx == 0.0 {
            return Ok(true);
        }
        let d = dot(x, self.axis.coords());
        Ok(d >= 0.0 && d * d >= CONE_COS_SQ * xx * (1.0 - CONE_SLACK))
    }
}

/// Free-function form of [`ConeSpec::contains`].
pub fn cone_contains(cone: &ConeSpec, x: &[f64]) -> Result<bool> {
    cone.contains(x)
}

/// Finitely many directions whose caps of angular radius `half_angle`
/// cover the unit sphere of R^n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereCover {
    pub dimension: usize,
    pub half_angle: f64,
    pub directions: Vec<UnitDirection>,
}

impl SphereCover {
    /// Largest angular distance (radians) from any of `samples` random unit
    /// vectors to its nearest cover direction.
    pub fn max_sampled_gap(&self, samples: usize, seed: u64) -> f64 {
        let n = self.dimension;
        let probes = random_unit_vectors(n, samples, seed);
        let min_cos = probes
            .par_iter()
            .map(|p| {
                self.directions
                    .iter()
                    .map(|d| dot(p, d.coords()))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .reduce(|| f64::INFINITY, f64::min);
        min_cos.clamp(-1.0, 1.0).acos()
    }

    fn verified(&self) -> bool {
        let cos_cap = self.half_angle.cos();
        let probes = random_unit_vectors(self.dimension, COVER_SAMPLES, COVER_SEED);
        probes.par_iter().all(|p| {
            self.directions
                .iter()
                .any(|d| dot(p, d.coords()) >= cos_cap)
        })
    }
}

fn random_unit_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = norm(&v);
        if r > 1e-300 {
            out.push(v.into_iter().map(|x| x / r).collect());
        }
    }
    out
}

/// Builds a cover of the unit sphere in R^n by caps of angular radius
/// `half_angle`.
pub fn build_sphere_cover(n: usize, half_angle: f64) -> Result<SphereCover> {
    if n == 0 {
        return Err(Error::input("dimension must be at least 1"));
    }
    if !(half_angle > 0.0 && half_angle < PI / 2.0) {
        return Err(Error::input(format!(
            "half angle {half_angle} must lie in (0, pi/2)"
        )));
    }
    match n {
        1 => Ok(SphereCover {
            dimension: 1,
            half_angle,
            directions: vec![UnitDirection(vec![1.0]), UnitDirection(vec![-1.0])],
        }),
        2 => {
            let count = (2.0 * PI / half_angle).ceil() as usize;
            let directions = (0..count)
                .map(|j| {
                    let theta = 2.0 * PI * j as f64 / count as f64;
                    UnitDirection(vec![theta.cos(), theta.sin()])
                })
                .collect();
            Ok(SphereCover {
                dimension: 2,
                half_angle,
                directions,
            })
        }
        _ => {
            let mut count = 2 * n;
            loop {
                let directions = if n == 3 {
                    fibonacci_sphere(count)
                } else {
                    kronecker_sphere(n, count)
                };
                let cover = SphereCover {
                    dimension: n,
                    half_angle,
                    directions,
                };
                if cover.verified() {
                    return Ok(cover);
                }
                count *= 2;
                if count > MAX_COVER_SIZE {
                    return Err(Error::input(format!(
                        "no verified cover with at most {MAX_COVER_SIZE} directions"
                    )));
                }
            }
        }
    }
}

/// Spherical Fibonacci lattice on S^2.
fn fibonacci_sphere(count: usize) -> Vec<UnitDirection> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let v = [r * phi.cos(), r * phi.sin(), z];
            let len = norm(&v);
            UnitDirection(v.iter().map(|x| x / len).collect())
        })
        .collect()
}

/// Additive-recurrence (R_d) points in the unit cube pushed to Gaussian
/// coordinates by Box-Muller and projected to the sphere.
fn kronecker_sphere(n: usize, count: usize) -> Vec<UnitDirection> {
    let d = n.div_ceil(2) * 2;
    // phi_d: unique positive root of x^(d+1) = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
    (0..count)
        .map(|i| {
            let u: Vec<f64> = alpha
                .iter()
                .map(|a| (0.5 + a * (i + 1) as f64).fract())
                .collect();
            let mut g = Vec::with_capacity(d);
            for pair in u.chunks(2) {
                let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
                let theta = 2.0 * PI * pair[1];
                g.push(r * theta.cos());
                g.push(r * theta.sin());
            }
            g.truncate(n);
            let len = norm(&g);
            UnitDirection(g.iter().map(|x| x / len).collect())
        })
        .collect()
}

/// Picks the cover direction whose cone captures points in the most distinct
/// shells, then the most points. Ties go to the lowest direction index.
/// Returns the cone and the captured point indices in input order.
pub fn select_dominant_cone(
    points: &[Vec<f64>],
    cover: &SphereCover,
) -> Result<(ConeSpec, Vec<usize>)> {
    if points.is_empty() {
        return Err(Error::input("no points to select a cone for"));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != cover.dimension {
            return Err(Error::input(format!(
                "point {i} has dimension {}, cover has dimension {}",
                p.len(),
                cover.dimension
            )));
        }
        if norm(p) == 0.0 {
            return Err(Error::input(format!("point {i} is zero")));
        }
    }
    let mut captures: Vec<Vec<usize>> = cover
        .directions
        .par_iter()
        .map(|dir| {
            let cone = ConeSpec::new(dir.clone());
            points
                .iter()
                .enumerate()
                .filter(|(_, p)| cone.contains(p).unwrap_or(false))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let shells: Vec<u64> = points
        .iter()
        .map(|p| shell_index(p))
        .collect::<Result<_>>()?;
    let score = |c: &Vec<usize>| {
        let distinct: BTreeSet<u64> = c.iter().map(|&i| shells[i]).collect();
        (distinct.len(), c.len())
    };
    let scores: Vec<(usize, usize)> = captures.iter().map(score).collect();
    let mut best = 0;
    for (j, sc) in scores.iter().enumerate() {
        if *sc > scores[best] {
            best = j;
        }
    }
    if captures[best].is_empty() {
        return Err(Error::Pipeline {
            stage: "cone",
            message: "no cover cone captures any point".into(),
        });
    }
    let cone = ConeSpec::new(cover.directions[best].clone());
    Ok((cone, captures.swap_remove(best)))
}

/// Shell boundaries `(1/(k+1), 1/k]`.
pub fn shell_bounds(k: u64) -> (f64, f64) {
    (1.0 / (k + 1) as f64, 1.0 / k as f64)
}

/// The unique `k >= 1` with `1/(k+1) < |x| <= 1/k`.
pub fn shell_index(x: &[f64]) -> Result<u64> {
    shell_index_of_norm(norm(x))
}

pub fn shell_index_of_norm(r: f64) -> Result<u64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::input(format!(
            "norm {r} is outside the punctured unit ball (0, 1]"
        )));
    }
    let guess = (1.0 / r).floor();
    if guess > 1e15 {
        return Err(Error::input(format!("norm {r} is too small to index a shell")));
    }
    let mut k = (guess as u64).max(1);
    while k > 1 && r > shell_bounds(k).1 {
        k -= 1;
    }
    while r <= shell_bounds(k).0 {
        k += 1;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Anchors live in shells `2k`.
    Even,
    /// Anchors live in shells `2k + 1`; shell 1 is never used.
    Odd,
}

impl Parity {
    /// Shell holding the k-th anchor.
    pub fn shell_of(self, k: usize) -> u64 {
        match self {
            Parity::Even => 2 * k as u64,
            Parity::Odd => 2 * k as u64 + 1,
        }
    }

    /// Inverse of [`Parity::shell_of`], if the shell has this parity.
    pub fn anchor_of(self, shell: u64) -> Option<usize> {
        match (self, shell % 2) {
            (Parity::Even, 0) => Some((shell / 2) as usize),
            (Parity::Odd, 1) if shell >= 3 => Some((shell / 2) as usize),
            _ => None,
        }
    }
}

/// Groups points by shell and picks the parity whose anchor shells are hit
/// for more distinct indices; ties go to even.
pub fn select_parity(points: &[Vec<f64>]) -> Result<(Parity, BTreeMap<u64, Vec<usize>>)> {
    let mut shells: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        shells.entry(shell_index(p)?).or_default().push(i);
    }
    let count = |p: Parity| shells.keys().filter(|s| p.anchor_of(**s).is_some()).count();
    let (even, odd) = (count(Parity::Even), count(Parity::Odd));
    let parity = if odd > even { Parity::Odd } else { Parity::Even };
    Ok((parity, shells))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> UnitDirection {
        UnitDirection::basis(n, i).unwrap()
    }

    /// Membership straight from the definition: scan r over a fine grid.
    fn contains_by_definition(axis: &[f64], x: &[f64]) -> bool {
        let r_max = 3.0 * norm(x) + 1.0;
        (0..=200_000).any(|j| {
            let r = r_max * j as f64 / 200_000.0;
            let d2: f64 = x.iter().zip(axis).map(|(a, z)| (a - r * z).powi(2)).sum();
            d2 <= r * r / 3.0
        })
    }

    #[test]
    fn cone_membership_examples() {
        let cone = ConeSpec::new(e(2, 0));
        assert!(cone.contains(&[1.0, 0.0]).unwrap());
        assert!(!cone.contains(&[0.0, 1.0]).unwrap());
        let s3 = 3f64.sqrt();
        assert!(cone.contains(&[2f64.sqrt() / s3, 1.0 / s3]).unwrap());
        assert!(cone.contains(&[0.0, 0.0]).unwrap());
        assert!(matches!(cone.contains(&[1.0]), Err(Error::Input(_))));
    }

    #[test]
    fn closed_form_matches_definition_away_from_boundary() {
        let axis = UnitDirection::normalize(&[1.0, 2.0, -0.5]).unwrap();
        let cone = ConeSpec::new(axis.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..400 {
            let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let c = dot(&x, axis.coords()) / norm(&x);
            if (c - CONE_COS_SQ.sqrt()).abs() < 1e-2 {
                continue;
            }
            assert_eq!(
                cone.contains(&x).unwrap(),
                contains_by_definition(axis.coords(), &x),
                "x = {x:?}"
            );
            checked += 1;
        }
        assert!(checked > 300);
    }

    #[test]
    fn circle_cover_spacing() {
        let cover = build_sphere_cover(2, PI / 6.0).unwrap();
        assert!(cover.directions.len() >= 12);
        let spacing = 2.0 * PI / cover.directions.len() as f64;
        assert!(spacing <= PI / 6.0 + 1e-15);
        assert_eq!(cover.directions[0].coords(), &[1.0, 0.0]);
    }

    #[test]
    fn zero_sphere_cover() {
        let cover = build_sphere_cover(1, 0.3).unwrap();
        let dirs: Vec<_> = cover.directions.iter().map(|d| d.coords()[0]).collect();
        assert_eq!(dirs, vec![1.0, -1.0]);
    }

    #[test]
    fn sphere_cover_three_dimensions() {
        let cover = build_sphere_cover(3, PI / 6.0).unwrap();
        assert!(!cover.directions.is_empty());
        // independent probe set, different seed from the construction check
        assert!(cover.max_sampled_gap(COVER_SAMPLES, 99) <= PI / 6.0);
    }

    #[test]
    fn sphere_cover_four_dimensions_default_angle() {
        let cover = build_sphere_cover(4, default_cover_half_angle()).unwrap();
        assert!(cover.max_sampled_gap(20_000, 3) <= default_cover_half_angle());
    }

    #[test]
    fn cover_rejects_bad_arguments() {
        assert!(build_sphere_cover(0, 0.3).is_err());
        assert!(build_sphere_cover(2, 0.0).is_err());
        assert!(build_sphere_cover(2, PI / 2.0).is_err());
    }

    #[test]
    fn dominant_cone_on_axis() {
        let cover = build_sphere_cover(2, default_cover_half_angle()).unwrap();
        let pts: Vec<Vec<f64>> = (1..20).map(|j| vec![1.0 / j as f64, 0.0]).collect();
        let (cone, idx) = select_dominant_cone(&pts, &cover).unwrap();
        assert_eq!(cone.axis().coords(), &[1.0, 0.0]);
        assert_eq!(idx, (0..19).collect::<Vec<_>>());
    }

    #[test]
    fn dominant_cone_majority_wins() {
        let cover = build_sphere_cover(2, default_cover_half_angle()).unwrap();
        let mut pts = Vec::new();
        let mut near_plus = Vec::new();
        for j in 0..100 {
            let r = 0.9 / (j + 1) as f64;
            let wobble = 0.05 * ((j * 7 % 11) as f64 / 11.0 - 0.5);
            if j % 5 < 3 {
                near_plus.push(j);
                pts.push(vec![r * wobble.cos(), r * wobble.sin()]);
            } else {
                pts.push(vec![-r * wobble.cos(), r * wobble.sin()]);
            }
        }
        assert_eq!(near_plus.len(), 60);
        let (cone, idx) = select_dominant_cone(&pts, &cover).unwrap();
        assert!(cone.axis().coords()[0] > 0.9);
        assert_eq!(idx, near_plus);

        // brute-force the maximum capture count over all cover directions
        let best = cover
            .directions
            .iter()
            .map(|d| {
                let c = ConeSpec::new(d.clone());
                pts.iter().filter(|p| c.contains(p).unwrap()).count()
            })
            .max()
            .unwrap();
        assert_eq!(idx.len(), best);
    }

    #[test]
    fn dominant_cone_single_point_and_errors() {
        let cover = build_sphere_cover(3, default_cover_half_angle()).unwrap();
        let p = vec![0.3, -0.2, 0.6];
        let (cone, idx) = select_dominant_cone(std::slice::from_ref(&p), &cover).unwrap();
        assert_eq!(idx, vec![0]);
        assert!(cone.contains(&p).unwrap());
        assert!(select_dominant_cone(&[], &cover).is_err());
        assert!(select_dominant_cone(&[vec![0.0, 0.0, 0.0]], &cover).is_err());
    }

    #[test]
    fn shell_index_examples() {
        assert_eq!(shell_index(&[0.5]).unwrap(), 2);
        assert_eq!(shell_index(&[1.0 / 3.0]).unwrap(), 3);
        assert_eq!(shell_index(&[0.07]).unwrap(), 14);
        assert_eq!(shell_index(&[1.0]).unwrap(), 1);
        assert_eq!(shell_index(&[0.6, 0.8]).unwrap(), 1);
        assert!(shell_index(&[1.5]).is_err());
        assert!(shell_index(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn parity_examples() {
        let pts = |norms: &[f64]| norms.iter().map(|r| vec![*r]).collect::<Vec<_>>();
        let (p, shells) = select_parity(&pts(&[1.0 / 2.5, 1.0 / 4.5, 1.0 / 6.5])).unwrap();
        assert_eq!(p, Parity::Even);
        assert_eq!(shells.keys().copied().collect::<Vec<_>>(), vec![2, 4, 6]);
        let (p, _) = select_parity(&pts(&[1.0 / 1.5, 1.0 / 3.5])).unwrap();
        assert_eq!(p, Parity::Odd);
        let (p, _) = select_parity(&pts(&[1.0 / 1.5, 1.0 / 2.5])).unwrap();
        assert_eq!(p, Parity::Even);
    }

    #[test]
    fn parity_shell_mapping() {
        for k in 1..50 {
            assert_eq!(Parity::Even.anchor_of(Parity::Even.shell_of(k)), Some(k));
            assert_eq!(Parity::Odd.anchor_of(Parity::Odd.shell_of(k)), Some(k));
        }
        assert_eq!(Parity::Even.anchor_of(3), None);
        assert_eq!(Parity::Odd.anchor_of(1), None);
        assert_eq!(Parity::Odd.shell_of(1), 3);
    }

    #[test]
    fn cone_angles_from_constants() {
        assert!((APERTURE_RATIO - 1.0 / 3f64.sqrt()).abs() < 1e-16);
        assert!((cone_half_angle().to_degrees() - 35.264_389_682_754_654).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-10.0f64..10.0, 3)
        }

        proptest! {
            #[test]
            fn membership_is_scale_invariant(x in vec3(), a in vec3(), lambda in 1e-3f64..1e3) {
                prop_assume!(norm(&a) > 1e-3 && norm(&x) > 1e-6);
                let cone = ConeSpec::new(UnitDirection::normalize(&a).unwrap());
                let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
                let c = dot(&x, cone.axis().coords()) / norm(&x);
                prop_assume!((c * c - CONE_COS_SQ).abs() > 1e-9);
                prop_assert_eq!(cone.contains(&x).unwrap(), cone.contains(&scaled).unwrap());
            }

            #[test]
            fn points_in_one_cone_are_close(a in vec3(), p in vec3(), q in vec3()) {
                prop_assume!(norm(&a) > 1e-3 && norm(&p) > 1e-6 && norm(&q) > 1e-6);
                let cone = ConeSpec::new(UnitDirection::normalize(&a).unwrap());
                if cone.contains(&p).unwrap() && cone.contains(&q).unwrap() {
                    prop_assert!(dot(&p, &q) >= norm(&p) * norm(&q) / 3.0 - 1e-9 * norm(&p) * norm(&q));
                }
            }

            #[test]
            fn shells_partition_the_ball(r in 1e-9f64..=1.0) {
                let k = shell_index_of_norm(r).unwrap();
                let (lo, hi) = shell_bounds(k);
                prop_assert!(lo < r && r <= hi);
            }
        }
    }
}
