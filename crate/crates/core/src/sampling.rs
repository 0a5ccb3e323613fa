//! Sampling grids over a smooth path's domain.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mollifier::SmoothPath;
use crate::vector::norm;

/// Default log-grid density for verification scans.
pub const DEFAULT_PER_DECADE: usize = 2048;
/// Default number of extra points inside each mollification window.
pub const DEFAULT_PER_WINDOW: usize = 64;

/// How to place sample times in `(domain_inf, domain_sup]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// `count` equally spaced points; the range defaults to the path domain.
    Uniform { count: usize, range: Option<(f64, f64)> },
    /// `count` geometrically spaced points.
    Log { count: usize, range: Option<(f64, f64)> },
    /// `per_decade` log-spaced points per decade measured down from the top
    /// of the domain, plus `per_window` equally spaced points across each
    /// mollification window (closed). Doubling either density refines the
    /// grid: every coarse point stays in the fine grid.
    Dense { per_decade: usize, per_window: usize },
    Explicit(Vec<f64>),
}

impl GridSpec {
    pub fn dense() -> Self {
        GridSpec::Dense {
            per_decade: DEFAULT_PER_DECADE,
            per_window: DEFAULT_PER_WINDOW,
        }
    }

    /// Sorted, deduplicated sample times.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn times(&self, path: &SmoothPath) -> Result<Vec<f64>> {
        let (inf, sup) = path.domain();
        let bounded = |range: &Option<(f64, f64)>| -> Result<(f64, f64)> {
            let (lo, hi) = range.unwrap_or((inf, sup));
            if !(lo < hi) || lo < inf || hi > sup {
                return Err(Error::input(format!(
                    "grid range [{lo}, {hi}] is not inside the domain ({inf}, {sup}]"
                )));
            }
            Ok((lo, hi))
        };
        let mut t: Vec<f64> = match self {
            GridSpec::Uniform { count, range } => {
                let (lo, hi) = bounded(range)?;
                let c = *count as f64;
                (1..=*count).map(|i| lo + (hi - lo) * i as f64 / c).collect()
            }
            GridSpec::Log { count, range } => {
                let (lo, hi) = bounded(range)?;
                if lo <= 0.0 {
                    return Err(Error::input("log grid needs a positive lower bound"));
                }
                let ratio = hi / lo;
                let c = *count as f64;
                (1..=*count)
                    .map(|i| if i == *count { hi } else { lo * ratio.powf(i as f64 / c) })
                    .collect()
            }
            GridSpec::Dense {
                per_decade,
                per_window,
            } => {
                if *per_decade == 0 {
                    return Err(Error::input("per_decade must be positive"));
                }
                let mut out = Vec::new();
                let mut i = 0usize;
                loop {
                    let t = sup * 10f64.powf(-(i as f64) / *per_decade as f64);
                    if t <= inf {
                        break;
                    }
                    out.push(t);
                    i += 1;
                }
                if *per_window >= 2 {
                    let m = (*per_window - 1) as f64;
                    for w in path.windows() {
                        out.extend((0..*per_window).map(|j| w.lo + (w.hi - w.lo) * j as f64 / m));
                    }
                } else if *per_window == 1 {
                    out.extend(path.windows().iter().map(|w| 0.5 * (w.lo + w.hi)));
                }
                out
            }
            GridSpec::Explicit(points) => points.clone(),
        };
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("grid contains non-finite times"));
        }
        t.sort_by(f64::total_cmp);
        t.dedup();
        if t.is_empty() {
            return Err(Error::input("empty grid"));
        }
        if t[0] <= inf || *t.last().unwrap() > sup {
            return Err(Error::input(format!(
                "grid leaves the domain ({inf}, {sup}]"
            )));
        }
        Ok(t)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = |f: &mut fmt::Formatter<'_>, r: &Option<(f64, f64)>| match r {
            Some((lo, hi)) => write!(f, ":{lo}:{hi}"),
            None => Ok(()),
        };
        match self {
            GridSpec::Uniform { count, range: r } => {
                write!(f, "uniform:{count}")?;
                range(f, r)
            }
            GridSpec::Log { count, range: r } => {
                write!(f, "log:{count}")?;
                range(f, r)
            }
            GridSpec::Dense { per_decade, per_window } => write!(f, "dense:{per_decade}:{per_window}"),
            GridSpec::Explicit(t) => write!(f, "explicit({} times)", t.len()),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `uniform:N[:lo:hi]`, `log:N[:lo:hi]`, or `dense[:per_decade[:per_window]]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = |position: usize, message: &str| Error::Parse {
            position,
            message: message.to_string(),
        };
        let offset = |i: usize| parts[..i].iter().map(|p| p.len() + 1).sum::<usize>();
        let int = |i: usize| -> Result<usize> {
            let v: usize = parts[i]
                .parse()
                .map_err(|_| bad(offset(i), "expected a non-negative integer"))?;
            Ok(v)
        };
        let float = |i: usize| -> Result<f64> {
            parts[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(offset(i), "expected a finite number"))
        };
        match parts[0] {
            kind @ ("uniform" | "log") => {
                if parts.len() != 2 && parts.len() != 4 {
                    return Err(bad(0, "expected kind:N or kind:N:lo:hi"));
                }
                let count = int(1)?;
                if count == 0 || count > 100_000_000 {
                    return Err(bad(offset(1), "count must lie in 1..=10^8"));
                }
                let range = if parts.len() == 4 {
                    Some((float(2)?, float(3)?))
                } else {
                    None
                };
                Ok(if kind == "uniform" {
                    GridSpec::Uniform { count, range }
                } else {
                    GridSpec::Log { count, range }
                })
            }
            "dense" => {
                if parts.len() > 3 {
                    return Err(bad(0, "expected dense[:per_decade[:per_window]]"));
                }
                let per_decade = if parts.len() > 1 { int(1)? } else { DEFAULT_PER_DECADE };
                let per_window = if parts.len() > 2 { int(2)? } else { DEFAULT_PER_WINDOW };
                if per_decade == 0 || per_decade > 1_000_000 || per_window > 1_000_000 {
                    return Err(bad(offset(1), "densities must lie in 1..=10^6"));
                }
                Ok(GridSpec::Dense {
                    per_decade,
                    per_window,
                })
            }
            _ => Err(bad(0, "unknown grid kind (expected uniform, log or dense)")),
        }
    }
}

/// One sampled point of the smooth path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t: f64,
    pub s: Vec<f64>,
    pub ds: Vec<f64>,
    pub norm_s: f64,
    pub norm_ds: f64,
    pub product: f64,
}

/// Evaluates `s`, `s'` and `|s| |s'|` on the grid, in increasing `t`.
pub fn sample_path(path: &SmoothPath, grid: &GridSpec) -> Result<Vec<SampleRow>> {
    let times = grid.times(path)?;
    sample_times(path, &times)
}

pub(crate) fn sample_times(path: &SmoothPath, times: &[f64]) -> Result<Vec<SampleRow>> {
    times
        .par_iter()
        .map(|&t| {
            let (s, ds) = path.eval_with_derivative(t)?;
            let norm_s = norm(&s);
            let norm_ds = norm(&ds);
            Ok(SampleRow {
                t,
                s,
                ds,
                norm_s,
                norm_ds,
                product: norm_s * norm_ds,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConeSpec, Parity, UnitDirection};
    use crate::mollifier::make_kernel;
    use crate::skeleton::build_anchor_sequence;
    use crate::witness::Generator;

    fn path() -> SmoothPath {
        let w = Generator::diagonal(40).generate(2).unwrap();
        let cone = ConeSpec::new(UnitDirection::normalize(&[1.0, 1.0]).unwrap());
        let a = build_anchor_sequence(&w, &cone, Parity::Even, 10).unwrap();
        SmoothPath::new(&a, make_kernel()).unwrap()
    }

    #[test]
    fn parse_grid_specs() {
        assert_eq!(
            "log:100".parse::<GridSpec>().unwrap(),
            GridSpec::Log { count: 100, range: None }
        );
        assert_eq!(
            "uniform:5:0.1:0.2".parse::<GridSpec>().unwrap(),
            GridSpec::Uniform { count: 5, range: Some((0.1, 0.2)) }
        );
        assert_eq!("dense".parse::<GridSpec>().unwrap(), GridSpec::dense());
        match "log:x".parse::<GridSpec>() {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("{other:?}"),
        }
        assert!("spline:3".parse::<GridSpec>().is_err());
        assert!("log:0".parse::<GridSpec>().is_err());
        assert!("uniform:3:0.1".parse::<GridSpec>().is_err());
    }

    #[test]
    fn log_grid_is_increasing_and_inside() {
        let p = path();
        let rows = sample_path(&p, &GridSpec::Log { count: 500, range: None }).unwrap();
        assert_eq!(rows.len(), 500);
        assert!(rows.windows(2).all(|w| w[0].t < w[1].t));
        let (inf, sup) = p.domain();
        assert!(rows[0].t > inf && rows[499].t == sup);
        for r in &rows {
            assert_eq!(r.product, r.norm_s * r.norm_ds);
        }
    }

    #[test]
    fn sample_just_below_top_anchor() {
        let p = path();
        let (_, sup) = p.domain();
        let delta = 1e-4;
        let rows = sample_path(&p, &GridSpec::Explicit(vec![sup - delta])).unwrap();
        let top = p.skeleton().segments().last().unwrap();
        for i in 0..2 {
            let expected = top.base[i] - delta * top.slope[i];
            assert!((rows[0].s[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_grid_refines() {
        let p = path();
        let coarse = GridSpec::Dense { per_decade: 64, per_window: 9 }.times(&p).unwrap();
        let fine = GridSpec::Dense { per_decade: 128, per_window: 17 }.times(&p).unwrap();
        let found = coarse
            .iter()
            .filter(|t| fine.iter().any(|f| (*f - **t).abs() <= 1e-15 * t.abs()))
            .count();
        assert_eq!(found, coarse.len());
    }

    #[test]
    fn grid_errors() {
        let p = path();
        assert!(sample_path(&p, &GridSpec::Explicit(vec![])).is_err());
        assert!(sample_path(&p, &GridSpec::Explicit(vec![10.0])).is_err());
        assert!(sample_path(&p, &GridSpec::Uniform { count: 3, range: Some((0.0, 0.1)) }).is_err());
    }
}
