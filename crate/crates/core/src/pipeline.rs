//! End-to-end construction: witnesses -> cone -> parity -> anchors -> smooth path.

use crate::error::{Error, Result};
use crate::geometry::{
    build_sphere_cover, default_cover_half_angle, select_dominant_cone, select_parity, shell_index,
    ConeSpec, Parity,
};
use crate::mollifier::{make_kernel, BumpKernel, SmoothPath};
use crate::skeleton::{build_anchor_sequence, AnchorSequence};
use crate::witness::WitnessSequence;

pub const DEFAULT_K_MAX: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub k_max: usize,
    /// Cap radius of the sphere cover, radians.
    pub half_angle: f64,
    /// Fewest witness pairs that must become anchors.
    pub min_matched: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            k_max: DEFAULT_K_MAX,
            half_angle: default_cover_half_angle(),
            min_matched: 2,
        }
    }
}

impl BuildOptions {
    pub fn with_k_max(k_max: usize) -> Self {
        BuildOptions {
            k_max,
            ..Default::default()
        }
    }
}

/// Everything produced by one build.
#[derive(Debug, Clone)]
pub struct BuiltPath {
    pub witness: WitnessSequence,
    pub cover_size: usize,
    pub anchors: AnchorSequence,
    pub path: SmoothPath,
}

impl BuiltPath {
    pub fn cone(&self) -> &ConeSpec {
        self.anchors.cone()
    }

    pub fn parity(&self) -> Parity {
        self.anchors.parity()
    }
}

fn stage(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Pipeline { .. } => e,
        other => Error::Pipeline {
            stage,
            message: other.to_string(),
        },
    }
}

/// Runs the whole construction on a validated witness sequence.
pub fn build_path(witness: &WitnessSequence, opts: &BuildOptions) -> Result<BuiltPath> {
    build_path_with_kernel(witness, opts, make_kernel())
}

pub fn build_path_with_kernel(
    witness: &WitnessSequence,
    opts: &BuildOptions,
    kernel: BumpKernel,
) -> Result<BuiltPath> {
    if opts.k_max < 2 {
        return Err(Error::input("k_max must be at least 2"));
    }
    if witness.is_empty() {
        return Err(Error::Pipeline {
            stage: "witness",
            message: "no witness pairs".into(),
        });
    }
    let cover = build_sphere_cover(witness.dimension(), opts.half_angle).map_err(stage("cover"))?;
    let points = witness.points();

    // only shells the truncated build can use take part in cone and parity selection
    let last_shell = Parity::Odd.shell_of(opts.k_max);
    let mut usable_idx = Vec::new();
    for (i, x) in points.iter().enumerate() {
        if shell_index(x).map_err(stage("cone"))? <= last_shell {
            usable_idx.push(i);
        }
    }
    if usable_idx.is_empty() {
        return Err(Error::Pipeline {
            stage: "cone",
            message: format!("no witness lies in shells 1..={last_shell}"),
        });
    }
    let usable_points: Vec<Vec<f64>> = usable_idx.iter().map(|&i| points[i].clone()).collect();
    let (cone, captured) = select_dominant_cone(&usable_points, &cover).map_err(stage("cone"))?;
    let usable: Vec<Vec<f64>> = captured.iter().map(|&i| usable_points[i].clone()).collect();
    let (parity, _) = select_parity(&usable).map_err(stage("parity"))?;

    let anchors =
        build_anchor_sequence(witness, &cone, parity, opts.k_max).map_err(stage("anchors"))?;
    if anchors.matched().len() < opts.min_matched {
        return Err(Error::Pipeline {
            stage: "anchors",
            message: format!(
                "only {} witness pair(s) became anchors, need at least {}",
                anchors.matched().len(),
                opts.min_matched
            ),
        });
    }
    let path = SmoothPath::new(&anchors, kernel).map_err(stage("smooth"))?;
    Ok(BuiltPath {
        witness: witness.clone(),
        cover_size: cover.directions.len(),
        anchors,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::{Generator, WitnessPair};

    #[test]
    fn diagonal_build_matches_every_anchor() {
        let w = Generator::diagonal(200).generate(2).unwrap();
        let b = build_path(&w, &BuildOptions::default()).unwrap();
        assert_eq!(b.anchors.given_count(), DEFAULT_K_MAX);
        assert_eq!(b.parity(), Parity::Even);
    }

    #[test]
    fn spiral_build_has_many_given_anchors() {
        let w = Generator::spiral(200).generate(2).unwrap();
        let b = build_path(&w, &BuildOptions::default()).unwrap();
        assert!(b.anchors.given_count() >= 10, "{}", b.anchors.given_count());
    }

    #[test]
    fn single_pair_is_a_pipeline_failure() {
        let w = WitnessSequence::new(
            2,
            vec![WitnessPair {
                x: vec![0.3, 0.1],
                y: vec![1.0, 0.0],
            }],
        )
        .unwrap();
        match build_path(&w, &BuildOptions::default()) {
            Err(Error::Pipeline { stage, .. }) => assert_eq!(stage, "anchors"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn far_tail_only_fails_at_cone() {
        let w = WitnessSequence::radial(1, vec![vec![1e-4], vec![2e-4]]).unwrap();
        match build_path(&w, &BuildOptions::with_k_max(5)) {
            Err(Error::Pipeline { stage, .. }) => assert_eq!(stage, "cone"),
            other => panic!("{other:?}"),
        }
    }
}
