use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use pfsic_core::fisher::{fisher_rank, FisherReport, PfsicVerdict, PFSIC_TOL};
use pfsic_core::povm::{PovmFile, ORTHOGONALITY_THRESHOLD};
use pfsic_core::tomography::{run_trials, trial_rng, PovmSource, SimConfig};
use pfsic_core::{
    is_pfsic, orthogonal_mix, ConstructionDescriptor, LocalParams, MixMode, OrthogonalMatrix,
    RankOnePovm,
};

use crate::error::{CliError, CliResult, EXIT_DOMAIN};
use crate::manifest::RunManifest;
use crate::{ConstructArgs, FisherArgs, Kind, MixArgs, SimulateArgs, VerifyArgs};

fn options<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_povm_file(path: &Path) -> CliResult<PovmFile> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Io(format!("{}: parse error: {e}", path.display())))
}

fn read_povm(path: &Path) -> CliResult<RankOnePovm> {
    Ok(RankOnePovm::try_from(read_povm_file(path)?)?)
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Writes `text` to `out` (recording it in the manifest) or to stdout.
fn emit(text: &str, out: Option<&Path>, manifest: &mut RunManifest) -> CliResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            manifest.outputs.push(path.to_path_buf());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn seed_or_draw(seed: Option<u64>, manifest: &mut RunManifest) -> u64 {
    match seed {
        Some(s) => {
            manifest.record_seed(s, false);
            s
        }
        None => {
            let s = rand::rng().random();
            eprintln!("seed: {s}");
            manifest.record_seed(s, true);
            s
        }
    }
}

fn descriptor_for(kind: Kind, d: usize, p_chi: f64, seed: u64, size: Option<usize>) -> ConstructionDescriptor {
    match kind {
        Kind::Minimal => ConstructionDescriptor::Minimal { d },
        Kind::TwoBasis => ConstructionDescriptor::TwoBasis {
            d,
            p_chi,
            basis: None,
        },
        Kind::Mix => ConstructionDescriptor::Mix {
            base: Box::new(ConstructionDescriptor::Minimal { d }),
            seed,
            size,
            mode: MixMode::Strict,
        },
    }
}

pub fn construct(args: &ConstructArgs) -> CliResult<u8> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("construct", options(args));
    let descriptor = match (&args.descriptor, args.kind) {
        (Some(path), _) => {
            manifest.inputs.push(path.clone());
            serde_json::from_str(&read_text(path)?)?
        }
        (None, Some(kind)) => {
            let d = args
                .d
                .ok_or_else(|| CliError::Io("--d is required with --kind".into()))?;
            let seed = if kind == Kind::Mix {
                seed_or_draw(args.seed, &mut manifest)
            } else {
                0
            };
            descriptor_for(kind, d, args.p_chi, seed, args.size)
        }
        (None, None) => return Err(CliError::Io("either --kind or --descriptor is required".into())),
    };
    let povm = descriptor.build()?;
    emit(&to_json(&povm)?, args.out.as_deref(), &mut manifest)?;
    manifest.write_sidecars(start.elapsed())?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    path: PathBuf,
    valid: bool,
    dim: usize,
    n: usize,
    completeness_residual: Option<f64>,
    gram_residual: Option<f64>,
    /// Outcomes with `|⟨0|ψ⟩|²` at or below the orthogonality threshold.
    orthogonal_outcomes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pfsic: Option<PfsicVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

pub fn verify(args: &VerifyArgs) -> CliResult<u8> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("verify", options(args));
    manifest.inputs.push(args.povm.clone());
    let file = read_povm_file(&args.povm)?;
    let mut report = VerifyReport {
        path: args.povm.clone(),
        valid: false,
        dim: file.dim,
        n: file.n,
        completeness_residual: None,
        gram_residual: None,
        orthogonal_outcomes: Vec::new(),
        pfsic: None,
        reason: None,
    };
    match RankOnePovm::try_from(file) {
        Err(e) => report.reason = Some(e.to_string()),
        Ok(povm) => {
            report.completeness_residual = Some(povm.completeness_residual());
            let decomposition = povm.gauge_fixed().real_decomposition()?;
            report.gram_residual = Some(decomposition.gram_residual());
            report.orthogonal_outcomes = povm
                .fiducial_overlaps()
                .iter()
                .enumerate()
                .filter(|(_, &p)| p <= ORTHOGONALITY_THRESHOLD)
                .map(|(i, _)| i)
                .collect();
            report.valid = true;
            if args.strict && !report.orthogonal_outcomes.is_empty() {
                report.valid = false;
                report.reason = Some(format!(
                    "outcomes {:?} are orthogonal to the fiducial state",
                    report.orthogonal_outcomes
                ));
            }
            if args.pfsic {
                let verdict = is_pfsic(&povm, PFSIC_TOL);
                if !verdict.is_pfsic {
                    report.valid = false;
                    let c = pfsic_core::classical_fisher(&povm)?;
                    let reason = if fisher_rank(&c) < 2 * povm.dim() - 2 {
                        "C singular / not PFSIC".to_string()
                    } else {
                        format!("not PFSIC: deviation {:e} from C = 2I", verdict.deviation)
                    };
                    report.reason.get_or_insert(reason);
                }
                report.pfsic = Some(verdict);
            }
        }
    }
    emit(&to_json(&report)?, args.out.as_deref(), &mut manifest)?;
    manifest.write_sidecars(start.elapsed())?;
    if report.valid {
        Ok(0)
    } else {
        if let Some(reason) = &report.reason {
            eprintln!("{reason}");
        }
        Ok(EXIT_DOMAIN)
    }
}

pub fn fisher(args: &FisherArgs) -> CliResult<u8> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("fisher", options(args));
    manifest.inputs.push(args.povm.clone());
    let povm = read_povm(&args.povm)?;
    let mut report = FisherReport::compute(&povm)?;
    if args.fd_check {
        report = report.with_fd_check(&povm, args.step)?;
    }
    emit(&to_json(&report)?, args.out.as_deref(), &mut manifest)?;
    manifest.write_sidecars(start.elapsed())?;
    Ok(0)
}

/// Simulation config as accepted on disk; every field may be overridden by a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    povm: Option<PovmSource>,
    povm_path: Option<PathBuf>,
    true_params: Option<Vec<f64>>,
    shots_per_trial: Option<u64>,
    trials: Option<usize>,
    seed: Option<u64>,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<u8> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("simulate", options(args));
    let file: SimFile = match &args.config {
        Some(path) => {
            manifest.inputs.push(path.clone());
            serde_json::from_str(&read_text(path)?)?
        }
        None => SimFile::default(),
    };
    let povm = if let Some(path) = &args.povm {
        manifest.inputs.push(path.clone());
        PovmSource::Explicit(read_povm(path)?)
    } else if let Some(kind) = args.kind {
        let d = args
            .d
            .ok_or_else(|| CliError::Io("--d is required with --kind".into()))?;
        let seed = if kind == Kind::Mix {
            args.seed.unwrap_or(0)
        } else {
            0
        };
        PovmSource::Descriptor(descriptor_for(kind, d, args.p_chi.unwrap_or(0.5), seed, None))
    } else if let Some(path) = &file.povm_path {
        manifest.inputs.push(path.clone());
        PovmSource::Explicit(read_povm(path)?)
    } else if let Some(source) = file.povm {
        source
    } else {
        return Err(CliError::Io("no POVM given (--povm, --kind or config)".into()));
    };
    let shots = args
        .shots
        .or(file.shots_per_trial)
        .ok_or_else(|| CliError::Io("--shots is required".into()))?;
    let trials = args
        .trials
        .or(file.trials)
        .ok_or_else(|| CliError::Io("--trials is required".into()))?;
    let seed = seed_or_draw(args.seed.or(file.seed), &mut manifest);
    let true_params = match args.params.clone().or(file.true_params) {
        Some(x) => Some(LocalParams::try_from(x)?),
        None => None,
    };
    let config = SimConfig {
        povm,
        true_params,
        shots_per_trial: shots,
        trials,
        seed,
    };
    let report = run_trials(&config)?;
    emit(&to_json(&report)?, args.out.as_deref(), &mut manifest)?;
    if let Some(path) = &args.csv {
        let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        report
            .write_csv(std::io::BufWriter::new(f))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        manifest.outputs.push(path.clone());
    }
    manifest.write_sidecars(start.elapsed())?;
    Ok(0)
}

pub fn mix(args: &MixArgs) -> CliResult<u8> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("mix", options(args));
    manifest.inputs.push(args.povm.clone());
    let povm = read_povm(&args.povm)?;
    let size = args.size.unwrap_or(povm.n_outcomes());
    let o = if args.identity {
        OrthogonalMatrix::identity(size)
    } else if let Some(path) = &args.matrix {
        manifest.inputs.push(path.clone());
        let rows: Vec<Vec<f64>> = serde_json::from_str(&read_text(path)?)?;
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(CliError::Io(format!("{}: matrix must be square", path.display())));
        }
        OrthogonalMatrix::new(DMatrix::from_row_iterator(m, m, rows.into_iter().flatten()))?
    } else {
        let seed = seed_or_draw(args.seed, &mut manifest);
        let mut rng = trial_rng(seed, 0);
        OrthogonalMatrix::random(size, &mut rng)
    };
    let mode = if args.lenient {
        MixMode::Lenient
    } else {
        MixMode::Strict
    };
    let mixed = orthogonal_mix(&povm, &o, mode)?;
    emit(&to_json(&mixed)?, args.out.as_deref(), &mut manifest)?;
    manifest.write_sidecars(start.elapsed())?;
    Ok(0)
}
