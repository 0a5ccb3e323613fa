//! Witness sequences `(x_k, y_k)` and the deterministic generators used by
//! the CLI and the test fixtures.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UNIT_TOL;
use crate::vector::{dot, is_finite, norm};

/// Slack on `x . y >= 0`.
pub const ORTHO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Validated witness data: every `x != 0`, `|x| <= 1`, `|y| = 1`, `x.y >= 0`.
///
/// If some input point has norm above one the whole sequence is scaled by
/// `1 / max |x|` at ingestion; `scale` records the factor (1 otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSequence {
    dimension: usize,
    pairs: Vec<WitnessPair>,
    scale: f64,
}

impl WitnessSequence {
    pub fn new(dimension: usize, pairs: Vec<WitnessPair>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::input("witness dimension must be at least 1"));
        }
        let mut max_norm: f64 = 0.0;
        for (i, p) in pairs.iter().enumerate() {
            if p.x.len() != dimension || p.y.len() != dimension {
                return Err(Error::input(format!(
                    "pair {i}: expected vectors of dimension {dimension}"
                )));
            }
            if !is_finite(&p.x) || !is_finite(&p.y) {
                return Err(Error::input(format!("pair {i}: non-finite coordinate")));
            }
            let r = norm(&p.x);
            if r == 0.0 {
                return Err(Error::input(format!("pair {i}: x is zero")));
            }
            if !r.is_finite() {
                return Err(Error::input(format!("pair {i}: |x| overflows")));
            }
            let ry = norm(&p.y);
            if (ry - 1.0).abs() > UNIT_TOL {
                return Err(Error::input(format!("pair {i}: |y| = {ry}, expected 1")));
            }
            if dot(&p.x, &p.y) < -ORTHO_TOL {
                return Err(Error::input(format!("pair {i}: x . y < 0")));
            }
            max_norm = max_norm.max(r);
        }

        let mut scale = 1.0;
        let mut pairs = pairs;
        if max_norm > 1.0 {
            scale = 1.0 / max_norm;
            // step down until rounding no longer pushes the largest point past 1
            while pairs
                .iter()
                .any(|p| norm(&p.x.iter().map(|v| v * scale).collect::<Vec<_>>()) > 1.0)
            {
                scale = f64::from_bits(scale.to_bits() - 1);
            }
            for p in &mut pairs {
                for v in &mut p.x {
                    *v *= scale;
                }
                if norm(&p.x) == 0.0 {
                    return Err(Error::input("rescaling underflowed a witness point to zero"));
                }
            }
        }
        Ok(WitnessSequence {
            dimension,
            pairs,
            scale,
        })
    }

    /// Pairs each point with `y = x / |x|`.
    pub fn radial(dimension: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let pairs = points
            .into_iter()
            .map(|x| {
                let r = norm(&x);
                let y = if r > 0.0 {
                    x.iter().map(|v| v / r).collect()
                } else {
                    x.clone()
                };
                WitnessPair { x, y }
            })
            .collect();
        Self::new(dimension, pairs)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn pairs(&self) -> &[WitnessPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.pairs.iter().map(|p| p.x.clone()).collect()
    }

    /// Keeps the pairs selected by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&WitnessPair) -> bool) -> Self {
        WitnessSequence {
            dimension: self.dimension,
            pairs: self.pairs.iter().filter(|p| keep(p)).cloned().collect(),
            scale: self.scale,
        }
    }
}

/// How generated points choose their prescribed derivative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// `y = x / |x|`
    #[default]
    Radial,
    /// A seeded random unit vector, flipped if needed so that `x . y >= 0`.
    Random,
}

fn default_r_max() -> f64 {
    1.0
}
fn default_r_min() -> f64 {
    0.005
}
fn default_turns() -> f64 {
    2.0
}
fn default_cone_angle() -> f64 {
    30.0
}

/// Deterministic witness generators.
///
/// `ray` and `diagonal` put point `j` at norm `1/(j + 1.5)`, one point in each
/// shell; `spiral` winds a logarithmic spiral through the `x1 x2` plane;
/// `random_cone` scatters seeded points inside a cone around `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Ray {
        count: usize,
        #[serde(default)]
        direction: Option<Vec<f64>>,
        #[serde(default)]
        y: DerivativeMode,
        #[serde(default)]
        seed: u64,
    },
    Diagonal {
        count: usize,
        #[serde(default)]
        y: DerivativeMode,
        #[serde(default)]
        seed: u64,
    },
    Spiral {
        count: usize,
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default = "default_r_min")]
        r_min: f64,
        #[serde(default = "default_turns")]
        turns: f64,
        #[serde(default)]
        y: DerivativeMode,
        #[serde(default)]
        seed: u64,
    },
    RandomCone {
        count: usize,
        #[serde(default)]
        axis: Option<Vec<f64>>,
        #[serde(default = "default_cone_angle")]
        half_angle_deg: f64,
        #[serde(default)]
        y: DerivativeMode,
        #[serde(default)]
        seed: u64,
    },
}

impl Generator {
    pub fn diagonal(count: usize) -> Self {
        Generator::Diagonal {
            count,
            y: DerivativeMode::Radial,
            seed: 0,
        }
    }

    pub fn spiral(count: usize) -> Self {
        Generator::Spiral {
            count,
            r_max: default_r_max(),
            r_min: default_r_min(),
            turns: default_turns(),
            y: DerivativeMode::Radial,
            seed: 0,
        }
    }

    pub fn random_cone(count: usize, half_angle_deg: f64, y: DerivativeMode, seed: u64) -> Self {
        Generator::RandomCone {
            count,
            axis: None,
            half_angle_deg,
            y,
            seed,
        }
    }

    fn count(&self) -> usize {
        match self {
            Generator::Ray { count, .. }
            | Generator::Diagonal { count, .. }
            | Generator::Spiral { count, .. }
            | Generator::RandomCone { count, .. } => *count,
        }
    }

    fn derivative_mode(&self) -> (DerivativeMode, u64) {
        match self {
            Generator::Ray { y, seed, .. }
            | Generator::Diagonal { y, seed, .. }
            | Generator::Spiral { y, seed, .. }
            | Generator::RandomCone { y, seed, .. } => (*y, *seed),
        }
    }

    /// The generated points, before pairing with derivatives.
    pub fn points(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::input("dimension must be at least 1"));
        }
        let count = self.count();
        if count == 0 {
            return Err(Error::input("generator count must be positive"));
        }
        if count > 1_000_000 {
            return Err(Error::input("generator count is limited to 10^6"));
        }
        if count.saturating_mul(n) > 10_000_000 {
            return Err(Error::input("generator count times dimension is limited to 10^7"));
        }
        let harmonic = |j: usize| 1.0 / (j as f64 + 1.5);
        match self {
            Generator::Ray { direction, .. } => {
                let dir = unit_or_basis(direction.as_deref(), n)?;
                Ok((0..count)
                    .map(|j| dir.iter().map(|d| d * harmonic(j)).collect())
                    .collect())
            }
            Generator::Diagonal { .. } => {
                if n < 2 {
                    return Err(Error::input("diagonal generator needs dimension >= 2"));
                }
                let c = std::f64::consts::FRAC_1_SQRT_2;
                Ok((0..count)
                    .map(|j| {
                        let mut x = vec![0.0; n];
                        x[0] = c * harmonic(j);
                        x[1] = c * harmonic(j);
                        x
                    })
                    .collect())
            }
            Generator::Spiral {
                r_max,
                r_min,
                turns,
                ..
            } => {
                if n < 2 {
                    return Err(Error::input("spiral generator needs dimension >= 2"));
                }
                if !(*r_min > 0.0 && r_min <= r_max && r_max.is_finite() && turns.is_finite()) {
                    return Err(Error::input("spiral needs 0 < r_min <= r_max and finite turns"));
                }
                let steps = (count.max(2) - 1) as f64;
                Ok((0..count)
                    .map(|j| {
                        let u = j as f64 / steps;
                        let r = r_max * (r_min / r_max).powf(u);
                        let theta = 2.0 * PI * turns * u;
                        let mut x = vec![0.0; n];
                        x[0] = r * theta.cos();
                        x[1] = r * theta.sin();
                        x
                    })
                    .collect())
            }
            Generator::RandomCone {
                axis,
                half_angle_deg,
                seed,
                ..
            } => {
                if !(*half_angle_deg >= 0.0 && *half_angle_deg < 90.0) {
                    return Err(Error::input("cone half angle must lie in [0, 90) degrees"));
                }
                let axis = unit_or_basis(axis.as_deref(), n)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let max_angle = half_angle_deg.to_radians();
                Ok((0..count)
                    .map(|j| {
                        let (lo, hi) = (1.0 / (j + 2) as f64, 1.0 / (j + 1) as f64);
                        let r = hi - rng.gen::<f64>() * (hi - lo) * 0.999;
                        let dir = perturb(&axis, rng.gen::<f64>() * max_angle, &mut rng);
                        dir.iter().map(|d| d * r).collect()
                    })
                    .collect())
            }
        }
    }

    /// Generates the full witness sequence in dimension `n`.
    pub fn generate(&self, n: usize) -> Result<WitnessSequence> {
        let points = self.points(n)?;
        let (mode, seed) = self.derivative_mode();
        match mode {
            DerivativeMode::Radial => WitnessSequence::radial(n, points),
            DerivativeMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
                let pairs = points
                    .into_iter()
                    .map(|x| {
                        let mut y = random_unit(n, &mut rng);
                        if dot(&x, &y) < 0.0 {
                            y.iter_mut().for_each(|v| *v = -*v);
                        }
                        WitnessPair { x, y }
                    })
                    .collect();
                WitnessSequence::new(n, pairs)
            }
        }
    }
}

fn unit_or_basis(v: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    match v {
        None => {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            Ok(e)
        }
        Some(v) => {
            if v.len() != n {
                return Err(Error::input(format!(
                    "direction has dimension {}, expected {n}",
                    v.len()
                )));
            }
            let r = norm(v);
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::input("direction must be nonzero and finite"));
            }
            Ok(v.iter().map(|x| x / r).collect())
        }
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Rotates `axis` by `angle` towards a random orthogonal direction.
fn perturb(axis: &[f64], angle: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = axis.len();
    if n == 1 {
        return axis.to_vec();
    }
    loop {
        let v = random_unit(n, rng);
        let d = dot(&v, axis);
        let w: Vec<f64> = v.iter().zip(axis).map(|(a, z)| a - d * z).collect();
        let r = norm(&w);
        if r > 1e-6 {
            let out: Vec<f64> = axis
                .iter()
                .zip(&w)
                .map(|(z, u)| angle.cos() * z + angle.sin() * u / r)
                .collect();
            let len = norm(&out);
            return out.into_iter().map(|x| x / len).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shell_index;

    fn pair(x: &[f64], y: &[f64]) -> WitnessPair {
        WitnessPair {
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    #[test]
    fn validation_rejects_bad_pairs() {
        assert!(WitnessSequence::new(2, vec![pair(&[0.0, 0.0], &[1.0, 0.0])]).is_err());
        assert!(WitnessSequence::new(2, vec![pair(&[0.5, 0.0], &[2.0, 0.0])]).is_err());
        assert!(WitnessSequence::new(2, vec![pair(&[0.5, 0.0], &[-1.0, 0.0])]).is_err());
        assert!(WitnessSequence::new(2, vec![pair(&[0.5], &[1.0])]).is_err());
        assert!(WitnessSequence::new(2, vec![pair(&[f64::NAN, 0.0], &[1.0, 0.0])]).is_err());
        // orthogonal is admissible
        assert!(WitnessSequence::new(2, vec![pair(&[0.5, 0.0], &[0.0, 1.0])]).is_ok());
    }

    #[test]
    fn rescales_into_unit_ball() {
        let w = WitnessSequence::new(
            2,
            vec![pair(&[3.0, 4.0], &[0.6, 0.8]), pair(&[1.0, 0.0], &[1.0, 0.0])],
        )
        .unwrap();
        assert!(w.scale() <= 0.2 && w.scale() > 0.2 * (1.0 - 1e-15));
        assert!(w.pairs().iter().all(|p| norm(&p.x) <= 1.0));
        assert_eq!(w.pairs()[0].y, vec![0.6, 0.8]);
    }

    #[test]
    fn harmonic_generators_hit_every_shell() {
        let w = Generator::diagonal(50).generate(2).unwrap();
        for (j, p) in w.pairs().iter().enumerate() {
            assert_eq!(shell_index(&p.x).unwrap(), j as u64 + 1);
            assert_eq!(p.x[0], p.x[1]);
        }
    }

    #[test]
    fn random_cone_respects_constraints() {
        let g = Generator::random_cone(100, 30.0, DerivativeMode::Random, 4);
        let w = g.generate(3).unwrap();
        for (j, p) in w.pairs().iter().enumerate() {
            assert_eq!(shell_index(&p.x).unwrap(), j as u64 + 1);
            assert!(dot(&p.x, &p.y) >= 0.0);
            let cos = p.x[0] / norm(&p.x);
            assert!(cos >= 30f64.to_radians().cos() - 1e-12);
        }
        assert_eq!(w, g.generate(3).unwrap());
    }

    #[test]
    fn spiral_norms_decrease() {
        let w = Generator::spiral(200).generate(2).unwrap();
        let norms: Vec<f64> = w.pairs().iter().map(|p| norm(&p.x)).collect();
        assert!(norms.windows(2).all(|s| s[1] < s[0]));
        assert!(norms[199] < 0.0051);
    }

    #[test]
    fn generator_json_shape() {
        let g: Generator =
            serde_json::from_str(r#"{"kind":"spiral","count":200,"turns":4}"#).unwrap();
        assert!(matches!(g, Generator::Spiral { count: 200, .. }));
        assert!(serde_json::from_str::<Generator>(r#"{"kind":"ray","count":3,"bogus":1}"#).is_err());
    }
}
