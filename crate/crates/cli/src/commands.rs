//! Subcommand implementations. Every command renders its output in memory
//! so repeated runs can be compared byte for byte.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use privlp::elimination::slack_eta;
use privlp::gen::{self, GenKind, GenSpec};
use privlp::general::{self, GeneralSolveConfig, GeneralStatus};
use privlp::lp::{normalize, parse_lp, write_lp};
use privlp::mechanisms::advanced_composition;
use privlp::oracle::{margin_exact, MAX_ORACLE_DIM};
use privlp::perceptron::{self, NoiseOverride, PerceptronConfig, PerceptronConstants, PerceptronStatus};
use privlp::rational;
use privlp::sanitizer::{Private, Reference, Sanitizer};
use privlp::{HomogeneousLp, LpInstance, PrivacyBudget, SeededRng};

use crate::config::{
    BudgetArgs, ConstantArgs, GenArgs, GenKindArg, GeneralArgs, RunArgs, SanitizerArg, SolveArgs, SuiteArg, SweepArgs,
    VerifyArgs,
};
use crate::output::{csv_bytes, summary, TrialRow};
use crate::suites::{self, SuiteScale};
use crate::CliError;

/// Rendered results of a command.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Output {
    pub stdout: Vec<u8>,
    pub files: Vec<(PathBuf, Vec<u8>)>,
    /// Set when a verification suite failed.
    pub failed: bool,
}

impl Output {
    fn emit(&mut self, path: Option<&PathBuf>, bytes: Vec<u8>) {
        match path {
            Some(p) => self.files.push((p.clone(), bytes)),
            None => self.stdout.extend(bytes),
        }
    }
}

fn budget(b: &BudgetArgs) -> Result<PrivacyBudget, CliError> {
    PrivacyBudget::new(b.epsilon, b.delta, b.beta).map_err(|e| CliError::Config(e.to_string()))
}

fn perceptron_config(c: &ConstantArgs, noise_off: bool) -> PerceptronConfig {
    PerceptronConfig {
        c_t: c.c_t,
        c_tau: c.c_tau,
        c_nu: c.c_nu,
        noise: if noise_off { NoiseOverride::noiseless() } else { NoiseOverride::default() },
    }
}

fn check_run(run: &RunArgs) -> Result<(), CliError> {
    if run.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    if run.noise_off && !cfg!(debug_assertions) {
        return Err(CliError::Config("--noise-off is only available in test builds".into()));
    }
    Ok(())
}

fn elapsed_ms(start: Instant, record: bool) -> u64 {
    if record {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn finish(run: &RunArgs, command: &str, rows: &[TrialRow]) -> Result<Output, CliError> {
    let mut out = Output::default();
    out.emit(run.out.as_ref(), csv_bytes(rows));
    if let Some(p) = &run.summary {
        let mut json = serde_json::to_vec_pretty(&summary(command, rows)).expect("summary serialises");
        json.push(b'\n');
        out.files.push((p.clone(), json));
    }
    Ok(out)
}

/// Expands directories into their `.lp` files, sorted by name.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "lp"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(CliError::Config(format!("input {} does not exist", p.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::Config("no input instances".into()));
    }
    Ok(files)
}

fn load(path: &Path) -> Result<LpInstance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_lp(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Reads an instance whose rows mean `<a_i, x> >= 0` (all `b` zero).
pub fn load_homogeneous(path: &Path) -> Result<(LpInstance, HomogeneousLp), CliError> {
    let lp = load(path)?;
    if lp.b().iter().any(|&b| b != 0) {
        return Err(CliError::Config(format!("{}: homogeneous instances need b = 0", path.display())));
    }
    let h = normalize(lp.a())?;
    Ok((lp, h))
}

pub fn gen(args: &GenArgs) -> Result<Output, CliError> {
    let mut rng = SeededRng::new(args.seed, 0);
    let header = |kind: &str| vec![format!("kind {kind}"), format!("seed {}", args.seed)];
    let mut out = Output::default();
    match args.kind {
        GenKindArg::PositiveMargin => {
            let spec =
                GenSpec { d: args.d, n: args.n, u: args.u, kind: GenKind::PositiveMargin { rho_target: args.rho } };
            let (h, w, _) = gen::gen_positive_margin_with_direction(&spec, &mut rng)?;
            let lp = gen::integerize(&h, args.u)?;
            let mut comments = header("positive-margin");
            comments.push(format!("target margin {}", args.rho));
            comments.push(format!("certified margin {:.6}", gen::certified_margin(&lp, &w)));
            out.emit(args.out.as_ref(), write_lp(&lp, &comments).into_bytes());
        }
        GenKindArg::TightSubspace => {
            let kind = GenKind::TightSubspace { k: args.k, multiplicity: args.multiplicity, planted: None };
            let spec = GenSpec { d: args.d, n: args.n, u: args.u, kind };
            let (lp, eq) = gen::gen_tight_subspace(&spec, &mut rng)?;
            let mut comments = header("tight-subspace");
            comments.push(format!("planted equalities {}", eq.rank()));
            for (row, g) in eq.c().iter().zip(eq.g()) {
                let coeffs: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                comments.push(format!("equality {} = {g}", coeffs.join(" ")));
            }
            out.emit(args.out.as_ref(), write_lp(&lp, &comments).into_bytes());
        }
        GenKindArg::NeighborPair => {
            let Some(neighbor_out) = &args.neighbor_out else {
                return Err(CliError::Config("neighbor-pair needs --neighbor-out".into()));
            };
            let base = Box::new(GenKind::PositiveMargin { rho_target: args.rho });
            let spec = GenSpec { d: args.d, n: args.n, u: args.u, kind: GenKind::NeighborPair { base } };
            let (v, v_prime) = gen::gen_neighbor_pair(&spec, &mut rng)?;
            out.emit(args.out.as_ref(), write_lp(&v, &header("neighbor-pair base")).into_bytes());
            out.files.push((neighbor_out.clone(), write_lp(&v_prime, &header("neighbor-pair extended")).into_bytes()));
        }
    }
    Ok(out)
}

/// One perceptron run rendered as a row.
#[allow(clippy::too_many_arguments)]
pub fn homogeneous_trial(
    h: &HomogeneousLp,
    instance: &str,
    u: i64,
    rho0: f64,
    budget: &PrivacyBudget,
    cfg: &PerceptronConfig,
    seed: u64,
    trial: usize,
    rng: &SeededRng,
    record_timing: bool,
) -> Result<TrialRow, CliError> {
    let start = Instant::now();
    let res = perceptron::solve(h, rho0, budget, cfg, rng)?;
    let wall_ms = elapsed_ms(start, record_timing);
    let consts = PerceptronConstants::new(h.dim(), rho0, budget, cfg)?;
    let (status, violated) = match &res.status {
        PerceptronStatus::Feasible(x) => ("Feasible", perceptron::count_violations(h, x)),
        PerceptronStatus::Bottom => ("Bottom", h.n()),
    };
    let (eps_total, delta_total) = advanced_composition(&res.ledger, budget.delta)?;
    Ok(TrialRow {
        trial,
        instance: instance.to_string(),
        seed,
        d: h.dim(),
        n: h.n(),
        u,
        rho0,
        epsilon: budget.epsilon,
        delta: budget.delta,
        beta: budget.beta,
        status: status.into(),
        violated_strict: violated,
        violated_slack: violated,
        epochs: res.epochs_used,
        eps_total,
        delta_total,
        wall_ms,
        bound: consts.solution_violation_bound(budget),
    })
}

pub fn solve_homogeneous(args: &SolveArgs) -> Result<Output, CliError> {
    check_run(&args.run)?;
    let budget = budget(&args.budget)?;
    let cfg = perceptron_config(&args.constants, args.run.noise_off);
    let mut instances = Vec::new();
    for path in collect_inputs(&args.input)? {
        let (lp, h) = load_homogeneous(&path)?;
        let rho0 = match args.rho0 {
            Some(r) => r,
            None if h.dim() <= MAX_ORACLE_DIM => margin_exact(&h)?.value(),
            None => return Err(CliError::Config(format!("{}: pass --rho0 for d > {MAX_ORACLE_DIM}", path.display()))),
        };
        if !(rho0 > 0.0 && rho0 < 1.0) {
            return Err(CliError::Config(format!("{}: rho0 must lie in (0, 1), got {rho0}", path.display())));
        }
        instances.push((path.display().to_string(), lp.bound(), h, rho0));
    }
    let jobs: Vec<(usize, usize)> =
        (0..instances.len()).flat_map(|i| (0..args.run.trials).map(move |t| (i, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, trial)| {
            let (name, u, h, rho0) = &instances[i];
            let rng = SeededRng::new(args.run.seed, trial as u64).substream(&[i as u64]);
            homogeneous_trial(h, name, *u, *rho0, &budget, &cfg, args.run.seed, trial, &rng, args.run.record_timing)
        })
        .collect::<Result<Vec<_>, _>>()?;
    finish(&args.run, "solve-homogeneous", &rows)
}

/// One general-solver run rendered as a row.
#[allow(clippy::too_many_arguments)]
pub fn general_trial(
    lp: &LpInstance,
    instance: &str,
    cfg: &GeneralSolveConfig,
    sanitizer: &dyn Sanitizer,
    seed: u64,
    trial: usize,
    rng: &SeededRng,
    record_timing: bool,
) -> Result<TrialRow, CliError> {
    let start = Instant::now();
    let res = general::solve_general(lp, cfg, sanitizer, rng)?;
    let wall_ms = elapsed_ms(start, record_timing);
    let status = match res.status {
        GeneralStatus::Point(_) => "Point",
        GeneralStatus::SubspacePoint(_) => "SubspacePoint",
        GeneralStatus::Bottom => "Bottom",
    };
    let eta = rational::to_f64(&slack_eta(lp.d(), lp.bound()));
    let (eps_total, delta_total) = advanced_composition(&res.ledger, cfg.budget.delta)?;
    Ok(TrialRow {
        trial,
        instance: instance.to_string(),
        seed,
        d: lp.d(),
        n: lp.n(),
        u: lp.bound(),
        rho0: eta.powi(3),
        epsilon: cfg.budget.epsilon,
        delta: cfg.budget.delta,
        beta: cfg.budget.beta,
        status: status.into(),
        violated_strict: res.violated_strict,
        violated_slack: res.violated_slack,
        epochs: res.trace.iter().map(|t| t.perceptron_epochs).sum(),
        eps_total,
        delta_total,
        wall_ms,
        bound: res.drop_allowance,
    })
}

pub fn solve_general(args: &GeneralArgs) -> Result<Output, CliError> {
    check_run(&args.run)?;
    let budget = budget(&args.budget)?;
    let noise_off = args.run.noise_off;
    let mut cfg = if noise_off { GeneralSolveConfig::noiseless(budget) } else { GeneralSolveConfig::new(budget) };
    let pc = perceptron_config(&args.constants, noise_off);
    cfg.perceptron = PerceptronConfig { noise: cfg.perceptron.noise, ..pc };
    let sanitizer: Box<dyn Sanitizer> = match args.sanitizer {
        SanitizerArg::Reference => Box::new(Reference),
        SanitizerArg::Private => Box::new(Private { noise: !noise_off, max_rounds: None }),
    };
    let instances: Vec<(String, LpInstance)> = collect_inputs(&args.input)?
        .into_iter()
        .map(|p| Ok((p.display().to_string(), load(&p)?)))
        .collect::<Result<_, CliError>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..instances.len()).flat_map(|i| (0..args.run.trials).map(move |t| (i, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, trial)| {
            let (name, lp) = &instances[i];
            let rng = SeededRng::new(args.run.seed, trial as u64).substream(&[i as u64]);
            general_trial(lp, name, &cfg, sanitizer.as_ref(), args.run.seed, trial, &rng, args.run.record_timing)
        })
        .collect::<Result<Vec<_>, _>>()?;
    finish(&args.run, "solve-general", &rows)
}

pub fn sweep(args: &SweepArgs) -> Result<Output, CliError> {
    check_run(&args.run)?;
    let cfg = perceptron_config(&args.constants, args.run.noise_off);
    let mut grid = Vec::new();
    for &d in &args.dims {
        for &rho in &args.rhos {
            for &eps in &args.epsilons {
                for &delta in &args.deltas {
                    let b = PrivacyBudget::new(eps, delta, args.beta).map_err(|e| CliError::Config(e.to_string()))?;
                    grid.push((d, rho, b));
                }
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..args.run.trials).map(move |t| (g, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(g, trial)| {
            let (d, rho, budget) = grid[g];
            let base = SeededRng::new(args.run.seed, trial as u64);
            // Instances depend on (d, ρ, trial) only, so budgets are compared on equal inputs.
            let spec = GenSpec { d, n: args.n, u: 1, kind: GenKind::PositiveMargin { rho_target: rho } };
            let (h, _) = gen::gen_positive_margin(&spec, &mut base.substream(&[0, d as u64, rho.to_bits()]))?;
            let name = format!("d{d}-rho{rho}");
            let rng = base.substream(&[1, g as u64]);
            homogeneous_trial(&h, &name, 0, rho, &budget, &cfg, args.run.seed, trial, &rng, args.run.record_timing)
        })
        .collect::<Result<Vec<_>, _>>()?;
    finish(&args.run, "sweep", &rows)
}

pub fn verify(args: &VerifyArgs) -> Result<Output, CliError> {
    let scale = if args.quick { SuiteScale::Quick } else { SuiteScale::Full };
    let selected: Vec<SuiteArg> = match args.suite {
        SuiteArg::All => suites::ALL.to_vec(),
        s => vec![s],
    };
    let mut out = Output::default();
    for s in selected {
        let report = suites::run_suite(s, scale, args.seed)?;
        out.stdout.extend(format!("{report}\n").into_bytes());
        out.failed |= !report.passed;
    }
    Ok(out)
}
