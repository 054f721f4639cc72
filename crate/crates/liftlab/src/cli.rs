//! Command-line front end: corpus generation, solving, verification,
//! analysis, identity suites, and JSON report emission.
//!
//! Exit codes: 0 when all checks pass, 1 when a check fails, 2 on usage or
//! schema errors. `LIFTLAB_TOL` overrides the default check tolerance
//! (an explicit `--check-tol` still wins).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    collision_experiment, interpolant_defect, proper_param_check, uniqueness_report,
};
use crate::config::{RunConfig, DEFAULT_CHECK_TOL, DEFAULT_RANK_TOL, DEFAULT_TRUNCATION};
use crate::dataset::{gen_classical, gen_random, validate, Dims, LiftingDataSet};
use crate::error::Error;
use crate::numlin::{eye, max_abs, op_norm};
use crate::realization::{
    coupling_identity, feedback_pair, random_contractive_realization, Realization,
};
use crate::redheffer::{solve, solve_central, solve_seeded, verify};
use crate::schema;

#[derive(Parser, Debug)]
#[command(
    name = "liftlab",
    version,
    about = "Contractive interpolants for relaxed commutant lifting data"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Taylor truncation horizon N.
    #[arg(short = 'N', long, global = true)]
    truncation: Option<usize>,

    /// Relative singular-value cut for numerical ranges.
    #[arg(long, global = true)]
    rank_tol: Option<f64>,

    /// Residual tolerance for pass/fail checks.
    #[arg(long, global = true)]
    check_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the defining constraints of a data set file.
    Validate { dataset: PathBuf },

    /// Compute an interpolant for a data set.
    Solve {
        dataset: PathBuf,
        /// Use the central (constant) parameter.
        #[arg(long, conflicts_with_all = ["param_seed", "param_file"])]
        central: bool,
        /// Seed a random contractive free block.
        #[arg(long)]
        param_seed: Option<u64>,
        /// State dimension of the seeded free block.
        #[arg(long, default_value_t = 1)]
        param_state: usize,
        /// Load the free block from a realization JSON file.
        #[arg(long)]
        param_file: Option<PathBuf>,
        /// Write the interpolant here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Check an interpolant file against its data set.
    Verify {
        dataset: PathBuf,
        interpolant: PathBuf,
    },

    /// Uniqueness/properness report, plus defect data of an interpolant.
    Analyze {
        dataset: PathBuf,
        interpolant: Option<PathBuf>,
    },

    /// Generate data set files.
    Corpus {
        #[arg(long, value_enum)]
        kind: CorpusKind,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Dimensions as `H0,H,Hp` (classical uses the middle value).
        #[arg(long, default_value = "2,3,2")]
        dims: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },

    /// Run the structural identity suites on random instances.
    Identities {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Sample parameters and look for interpolant collisions.
    Collide {
        dataset: PathBuf,
        #[arg(long, default_value_t = 20)]
        params: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorpusKind {
    Classical,
    Random,
    Zero,
    ScalarExamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Realization,
    Feedback,
    Coupling,
    All,
}

impl Cli {
    fn config(&self) -> RunConfig {
        let env_tol = std::env::var("LIFTLAB_TOL")
            .ok()
            .and_then(|v| v.parse::<f64>().ok());
        RunConfig {
            truncation: self.truncation.unwrap_or(DEFAULT_TRUNCATION),
            rank_tol: self.rank_tol.unwrap_or(DEFAULT_RANK_TOL),
            check_tol: self.check_tol.or(env_tol).unwrap_or(DEFAULT_CHECK_TOL),
            seed: 0,
            grid: RunConfig::default_grid(),
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Json(_) | Error::Io(_) | Error::ShapeMismatch { .. } | Error::DimMismatch { .. } => {
            2
        }
        _ => 1,
    }
}

fn read_dataset(path: &Path) -> crate::Result<LiftingDataSet> {
    let text = std::fs::read_to_string(path)?;
    schema::dataset_from_str(&text)
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable report")
    );
}

/// Entry point of the `liftlab` binary.
pub fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports usage problems with exit code 2, help/version with 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> crate::Result<u8> {
    let config = cli.config();
    config.validate()?;
    let tols = config.tols();
    match &cli.command {
        Command::Validate { dataset } => {
            let ds = read_dataset(dataset)?;
            let report = validate(&ds, tols.check_tol)?;
            print_json(&report);
            Ok(if report.pass { 0 } else { 1 })
        }

        Command::Solve {
            dataset,
            central,
            param_seed,
            param_state,
            param_file,
            out,
        } => {
            let ds = read_dataset(dataset)?;
            let ip = if let Some(seed) = param_seed {
                solve_seeded(&ds, *seed, *param_state, config.truncation, &tols)?
            } else if let Some(path) = param_file {
                let text = std::fs::read_to_string(path)?;
                let g = schema::realization_from_str(&text)?;
                solve(&ds, &g, config.truncation, &tols)?
            } else {
                // --central and the default agree.
                let _ = central;
                solve_central(&ds, config.truncation, &tols)?
            };
            let rendered = schema::interpolant_to_string(&ip);
            match out {
                Some(path) => std::fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
            Ok(0)
        }

        Command::Verify {
            dataset,
            interpolant,
        } => {
            let ds = read_dataset(dataset)?;
            let text = std::fs::read_to_string(interpolant)?;
            let ip = schema::interpolant_from_str(&text, &ds)?;
            let report = verify(&ip, &tols)?;
            print_json(&report);
            Ok(if report.pass { 0 } else { 1 })
        }

        Command::Analyze {
            dataset,
            interpolant,
        } => {
            let ds = read_dataset(dataset)?;
            let uniqueness = uniqueness_report(&ds, &tols)?;
            let defect = match interpolant {
                None => None,
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    let ip = schema::interpolant_from_str(&text, &ds)?;
                    let d = interpolant_defect(&ip, &tols)?;
                    let k = d.frame_f_b.dim();
                    let unitarity = op_norm(&(d.omega_b.adjoint() * &d.omega_b - eye(k)));
                    Some(DefectSummary {
                        dim_d_b: d.frame_d_b.dim(),
                        dim_d_circ: d.frame_d_circ.dim(),
                        dim_f_b: d.frame_f_b.dim(),
                        dim_f_bp: d.frame_f_bp.dim(),
                        dim_g_b: d.dim_g_b,
                        dim_g_bp: d.dim_g_bp,
                        omega_b_unitarity_residual: unitarity,
                        tail_caveat: d.tail_caveat,
                        proper_param: proper_param_check(&d),
                    })
                }
            };
            print_json(&AnalyzeReport {
                uniqueness,
                interpolant: defect,
            });
            Ok(0)
        }

        Command::Corpus {
            kind,
            count,
            dims,
            seed,
            out_dir,
        } => {
            let dims = parse_dims(dims)?;
            std::fs::create_dir_all(out_dir)?;
            let mut written = Vec::new();
            match kind {
                CorpusKind::Classical => {
                    for i in 0..*count {
                        let g = gen_classical(dims.h, seed + i as u64);
                        written.push(write_ds(out_dir, "classical", i, &g.ds)?);
                    }
                }
                CorpusKind::Random => {
                    for i in 0..*count {
                        let g = gen_random(dims, seed + i as u64);
                        written.push(write_ds(out_dir, "random", i, &g.ds)?);
                    }
                }
                CorpusKind::Zero => {
                    for i in 0..*count {
                        let ds = LiftingDataSet::zero(dims);
                        written.push(write_ds(out_dir, "zero", i, &ds)?);
                    }
                }
                CorpusKind::ScalarExamples => {
                    let examples = [
                        ("scalar_isometry", crate::dataset::scalar_isometry_example()),
                        ("scalar_gap", crate::dataset::scalar_gap_example()),
                        (
                            "scalar_zero",
                            LiftingDataSet::zero(Dims { h0: 1, h: 1, hp: 1 }),
                        ),
                    ];
                    for (i, (name, ds)) in examples.iter().enumerate() {
                        written.push(write_named(out_dir, name, i, ds)?);
                    }
                }
            }
            print_json(&CorpusManifest { files: written });
            Ok(0)
        }

        Command::Identities {
            suite,
            trials,
            seed,
        } => {
            let report = run_identities(*suite, *trials, *seed, &config)?;
            print_json(&report);
            Ok(if report.pass { 0 } else { 1 })
        }

        Command::Collide {
            dataset,
            params,
            seed,
        } => {
            let ds = read_dataset(dataset)?;
            let report = collision_experiment(&ds, *params, *seed, config.truncation, &tols)?;
            print_json(&report);
            Ok(if report.inconsistent { 1 } else { 0 })
        }
    }
}

fn parse_dims(s: &str) -> crate::Result<Dims> {
    let parts: Vec<&str> = s.split(',').collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| {
            Error::dim(format!(
                "cannot parse dims {s:?}; expected `H0,H,Hp` or `n`"
            ))
        })?;
    match nums.as_slice() {
        [n] => Ok(Dims {
            h0: *n,
            h: *n,
            hp: *n,
        }),
        [h0, h, hp] => Ok(Dims {
            h0: *h0,
            h: *h,
            hp: *hp,
        }),
        _ => Err(Error::dim(format!(
            "cannot parse dims {s:?}; expected `H0,H,Hp` or `n`"
        ))),
    }
}

fn write_ds(dir: &Path, kind: &str, index: usize, ds: &LiftingDataSet) -> crate::Result<String> {
    let path = dir.join(format!("{kind}_{index:03}.json"));
    std::fs::write(&path, schema::dataset_to_string(ds))?;
    Ok(path.to_string_lossy().into_owned())
}

fn write_named(dir: &Path, name: &str, index: usize, ds: &LiftingDataSet) -> crate::Result<String> {
    let path = dir.join(format!("{name}_{index:03}.json"));
    std::fs::write(&path, schema::dataset_to_string(ds))?;
    Ok(path.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct CorpusManifest {
    files: Vec<String>,
}

#[derive(Serialize)]
struct DefectSummary {
    dim_d_b: usize,
    dim_d_circ: usize,
    dim_f_b: usize,
    dim_f_bp: usize,
    dim_g_b: usize,
    dim_g_bp: usize,
    omega_b_unitarity_residual: f64,
    tail_caveat: Option<f64>,
    proper_param: bool,
}

#[derive(Serialize)]
struct AnalyzeReport {
    uniqueness: crate::analysis::UniquenessReport,
    interpolant: Option<DefectSummary>,
}

#[derive(Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub trials: usize,
    pub max_residual: f64,
    pub disagreements: usize,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct IdentitiesReport {
    pub results: Vec<SuiteResult>,
    pub pass: bool,
}

/// Runs the structural identity suites: transfer-evaluation equivalence and
/// the controllability/cyclicity agreement, the feedback-transform identity,
/// and the coupling identity.
pub fn run_identities(
    suite: Suite,
    trials: usize,
    seed: u64,
    config: &RunConfig,
) -> crate::Result<IdentitiesReport> {
    use rand::SeedableRng;
    let mut results = Vec::new();
    let grid = &config.grid;

    if matches!(suite, Suite::Realization | Suite::All) {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for trial in 0..trials {
            let u = 1 + trial % 3;
            let y = 1 + (trial / 2) % 3;
            let x = 1 + trial % 4;
            let r = random_contractive_realization(&mut rng, u, y, x, 0.3, 0.98);
            for &l in grid {
                worst = worst.max(max_abs(&(r.eval(l)? - r.eval_via_system(l)?)));
            }
        }
        results.push(SuiteResult {
            suite: "transfer_eval_equivalence".into(),
            trials,
            max_residual: worst,
            disagreements: 0,
            threshold: 1e-12,
            pass: worst <= 1e-12,
        });

        let mut disagreements = 0;
        for trial in 0..trials {
            let u = 1 + trial % 3;
            let x = 1 + trial % 4;
            let mut r = random_contractive_realization(&mut rng, u, u, x, 0.3, 0.95);
            if trial % 13 == 0 {
                // Salt in guaranteed-uncontrollable pairs.
                r = Realization::new(
                    r.z().clone(),
                    crate::numlin::CMat::zeros(x, u),
                    r.c().clone(),
                    r.d().clone(),
                )?;
            }
            if r.controllable(1e-9) != r.cyclic_for_m(1e-9)? {
                disagreements += 1;
            }
        }
        results.push(SuiteResult {
            suite: "controllability_cyclicity".into(),
            trials,
            max_residual: 0.0,
            disagreements,
            threshold: 0.0,
            pass: disagreements == 0,
        });
    }

    if matches!(suite, Suite::Feedback | Suite::All) {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed + 1);
        let mut worst: f64 = 0.0;
        for trial in 0..trials {
            let e1 = 1 + trial % 2;
            let e2 = 1 + trial % 3;
            let x = trial % 3;
            let m = e2 + x;
            let g = random_contractive_realization(&mut rng, m, e1 + m, 0, 0.3, 0.98);
            let fp = feedback_pair(g.d(), e1, e2, config.check_tol)?;
            worst = worst.max(fp.identity_residual(grid)?);
        }
        results.push(SuiteResult {
            suite: "feedback_identity".into(),
            trials,
            max_residual: worst,
            disagreements: 0,
            threshold: 1e-10,
            pass: worst <= 1e-10,
        });
    }

    if matches!(suite, Suite::Coupling | Suite::All) {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed + 2);
        let mut worst: f64 = 0.0;
        for trial in 0..trials {
            let dp = 1 + trial % 2;
            let d = 1 + trial % 2;
            let x = 1 + trial % 3;
            let m = d + x;
            let g = random_contractive_realization(&mut rng, dp + m, m, 0, 0.3, 0.98);
            let rep = coupling_identity(g.d(), dp, d, grid, config.check_tol)?;
            worst = worst.max(rep.max_residual);
        }
        results.push(SuiteResult {
            suite: "coupling_identity".into(),
            trials,
            max_residual: worst,
            disagreements: 0,
            threshold: 1e-10,
            pass: worst <= 1e-10,
        });
    }

    let pass = results.iter().all(|r| r.pass);
    Ok(IdentitiesReport { results, pass })
}
