use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use pathcert::format::{self, WitnessSource};
use pathcert::geometry::{build_sphere_cover, default_cover_half_angle};
use pathcert::harness::{self, ScalarField};
use pathcert::mollifier::make_kernel;
use pathcert::pipeline::{build_path, BuildOptions};
use pathcert::sampling::{sample_path, GridSpec};
use pathcert::verifier::{run_suites, CheckOptions, Suite};
use pathcert::Error;

use crate::{BuildArgs, CheckArgs, CoverArgs, ProbeArgs, SampleArgs};

pub enum Outcome {
    Success,
    /// A check failed or no violation was found.
    Negative,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(PathBuf, io::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Pipeline { .. } | Error::Invariant(_)) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Honors `PATHCERT_THREADS` if set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("PATHCERT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("PATHCERT_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Writes through a temporary file in the target directory, then renames.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let Some(path) = out else {
        let mut stdout = io::stdout().lock();
        return stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io_err = |e: io::Error| CliError::Io(path.to_path_buf(), e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn half_angle(deg: Option<f64>) -> Result<f64> {
    match deg {
        None => Ok(default_cover_half_angle()),
        Some(d) if d > 0.0 && d < 90.0 => Ok(d.to_radians()),
        Some(d) => Err(CliError::Usage(format!("half angle must lie in (0, 90) degrees, got {d}"))),
    }
}

pub fn cover(args: &CoverArgs) -> Result<Outcome> {
    let cover = build_sphere_cover(args.dim, half_angle(args.half_angle_deg)?)?;
    emit(args.out.as_deref(), format::cover_to_json(&cover)?.as_bytes())?;
    eprintln!("cover: {} directions in dimension {}", cover.directions.len(), cover.dimension);
    Ok(Outcome::Success)
}

pub fn build(args: &BuildArgs) -> Result<Outcome> {
    let source = format::parse_witness_json(&read(&args.input)?)?;
    let witness = source.sequence()?;
    let opts = BuildOptions {
        k_max: args.k_max as usize,
        half_angle: half_angle(args.half_angle_deg)?,
        ..BuildOptions::default()
    };
    let built = build_path(&witness, &opts)?;
    emit(args.out.as_deref(), format::path_to_json(&built)?.as_bytes())?;
    let (inf, sup) = built.path.domain();
    eprintln!(
        "build: K_max = {}, {} given anchors, parity {:?}, domain ({inf:.6e}, {sup:.6e}]",
        opts.k_max,
        built.anchors.given_count(),
        built.parity()
    );
    Ok(Outcome::Success)
}

pub fn sample(args: &SampleArgs) -> Result<Outcome> {
    let (anchors, path) = format::load_path_json(&read(&args.path)?)?;
    let grid: GridSpec = args.grid.parse()?;
    let rows = sample_path(&path, &grid)?;
    let mut buf = Vec::new();
    format::write_samples_csv(&mut buf, anchors.dimension(), &rows)?;
    emit(args.out.as_deref(), &buf)?;
    eprintln!("sample: {} rows", rows.len());
    Ok(Outcome::Success)
}

pub fn check(args: &CheckArgs) -> Result<Outcome> {
    let suites: Vec<Suite> = if args.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        args.suite
            .iter()
            .map(|s| s.trim().parse::<Suite>())
            .collect::<std::result::Result<_, _>>()?
    };
    let loaded = match &args.path {
        Some(p) => Some(format::load_path_json(&read(p)?)?),
        None if suites.iter().any(|s| s.needs_path()) => {
            return Err(CliError::Usage("--path is required for the selected suites".into()))
        }
        None => None,
    };
    let kernel = loaded.as_ref().map_or_else(make_kernel, |(_, p)| *p.kernel());
    let opts = CheckOptions {
        envelope_k_max: args.envelope_k_max as usize,
        envelope_samples: args.samples_per_shell as usize,
        grid: args.grid.parse()?,
        smoothness_trials: args.trials as usize,
        seed: args.seed,
        lemma1_seeds: 0..args.lemma1_paths,
        ..CheckOptions::default()
    };
    let built = loaded.as_ref().map(|(a, p)| (p, a));
    let reports = run_suites(built, &kernel, &suites, &opts)?;
    emit(args.out.as_deref(), format::to_json(&reports)?.as_bytes())?;
    for r in &reports {
        eprintln!(
            "{} {:<22} measured {:.6e} threshold {:.6e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.measured,
            r.threshold
        );
    }
    Ok(if reports.iter().all(|r| r.passed) {
        Outcome::Success
    } else {
        Outcome::Negative
    })
}

fn field_from_spec(spec: &str, n: usize) -> Result<ScalarField> {
    match spec.trim().strip_prefix("builtin:") {
        Some(name) => harness::builtin_field(name, n).map_err(|e| match e {
            Error::NotFound(m) => CliError::Usage(format!(
                "{m}; available: {}",
                harness::BUILTIN_NAMES.join(", ")
            )),
            other => other.into(),
        }),
        None => Ok(ScalarField::from_expression(spec, n)?),
    }
}

pub fn probe(args: &ProbeArgs) -> Result<Outcome> {
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(CliError::Usage("--epsilon must be positive".into()));
    }
    let source = format::parse_witness_json(&read(&args.input)?)?;
    let field = field_from_spec(&args.field, source.dimension())?;
    let witness = match &source {
        WitnessSource::Explicit(w) => w.clone(),
        WitnessSource::Generated { generator, .. } => {
            match harness::derive_witness(&field, generator, args.epsilon, args.min_count) {
                Ok(w) => w,
                Err(Error::NotFound(m)) => {
                    eprintln!("probe: {m}; probing along a path through the raw candidates");
                    harness::unfiltered_witness(source.dimension(), &source.points()?)?
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let opts = BuildOptions::with_k_max(args.k_max as usize);
    let (report, _) = harness::certify_discontinuity(&field, &witness, &opts, args.epsilon)?;
    emit(args.out.as_deref(), format::to_json(&report)?.as_bytes())?;
    if let Some(p) = &args.tail_csv {
        let mut buf = Vec::new();
        format::write_tail_csv(&mut buf, &report.tail_profile)?;
        emit(Some(p), &buf)?;
    }
    eprintln!(
        "probe: limsup estimate {:.6e}, epsilon {}, {}",
        report.limsup_estimate,
        args.epsilon,
        if report.certified() { "discontinuous-certified" } else { "no-violation-found" }
    );
    Ok(if report.certified() {
        Outcome::Success
    } else {
        Outcome::Negative
    })
}
