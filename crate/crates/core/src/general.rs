//! Private feasibility for general systems `Ax <= b, x >= 0` whose margin
//! may be zero.
//!
//! Each iteration eliminates the equalities found so far, solves the slacked
//! and homogenised remainder with the perceptron, and turns the constraints
//! the point only satisfies within the slack into new equalities.

use log::{debug, warn};
use num_traits::Signed;

use crate::elimination::{eliminate, slack_eta, EqualitySystem, ReducedLp};
use crate::error::{Error, Result};
use crate::lp::{homogenize_rows, LpInstance};
use crate::mechanisms::{laplace_sample, CompositionLedger, PrivacyBudget, SeededRng};
use crate::oracle::{self, FeasibilityCertificate};
use crate::perceptron::{self, PerceptronConfig, PerceptronConstants, PerceptronStatus};
use crate::rational::{self, Q};
use crate::sanitizer::{SanitizeRequest, Sanitizer};

/// Largest denominator tried when rounding the perceptron's point.
pub const MAX_DENOMINATOR: u64 = 1 << 40;

/// Rows the float point clears by at least this normalised amount must
/// also hold exactly after rounding.
const ROBUST_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralSolveConfig {
    pub budget: PrivacyBudget,
    pub perceptron: PerceptronConfig,
    /// Laplace noise on the `|J₂|` and `|J₁|` counts.
    pub count_noise: bool,
    /// Replaces the early-return threshold on `|J₂|`.
    pub point_threshold: Option<f64>,
    /// Replaces the subspace-return threshold on `|J₁|`.
    pub subspace_threshold: Option<f64>,
}

impl GeneralSolveConfig {
    pub fn new(budget: PrivacyBudget) -> Self {
        Self {
            budget,
            perceptron: PerceptronConfig::default(),
            count_noise: true,
            point_threshold: None,
            subspace_threshold: None,
        }
    }

    /// Every noise source off. Both count tests then use threshold 0.5, so
    /// the solver stops at a point once no constraint is near-tight, and at a
    /// subspace once no constraint is left.
    pub fn noiseless(budget: PrivacyBudget) -> Self {
        Self {
            budget,
            perceptron: PerceptronConfig {
                noise: perceptron::NoiseOverride::noiseless(),
                ..PerceptronConfig::default()
            },
            count_noise: false,
            point_threshold: Some(0.5),
            subspace_threshold: Some(0.5),
        }
    }

    pub fn is_private(&self) -> bool {
        self.perceptron.noise.is_private()
            && self.count_noise
            && self.point_threshold.is_none()
            && self.subspace_threshold.is_none()
    }

    /// `d²/ε + ln(1/δ)`.
    pub fn point_threshold(&self, d: usize) -> f64 {
        self.point_threshold.unwrap_or_else(|| {
            let PrivacyBudget { epsilon, delta, .. } = self.budget;
            (d * d) as f64 / epsilon + (1.0 / delta).ln()
        })
    }

    /// `C_ν·(d²/ε)·ln²(d/(βδ))·√ln(1/ρ) + ln(1/δ)`.
    pub fn subspace_threshold(&self, d: usize, log_inv_rho: f64) -> f64 {
        self.subspace_threshold.unwrap_or_else(|| {
            let PrivacyBudget { epsilon, delta, beta } = self.budget;
            let l = (d as f64 / (beta * delta)).ln();
            self.perceptron.c_nu * (d * d) as f64 / epsilon * l * l * log_inv_rho.sqrt() + (1.0 / delta).ln()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneralStatus {
    /// Point returned once few constraints are near-tight.
    Point(Vec<Q>),
    /// A solution of the accumulated equalities.
    SubspacePoint(Vec<Q>),
    Bottom,
}

impl GeneralStatus {
    pub fn point(&self) -> Option<&[Q]> {
        match self {
            Self::Point(x) | Self::SubspacePoint(x) => Some(x),
            Self::Bottom => None,
        }
    }
}

/// Where the dropped constraints of a run were counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropComponents {
    /// Rows beyond `b + η` at the perceptron's point.
    pub perceptron: usize,
    /// Sanitizer drop bounds.
    pub sanitizer: usize,
    /// `|J₂|` at a point exit, or `|J₁|` at a subspace exit.
    pub exit: usize,
}

impl DropComponents {
    pub fn total(&self) -> usize {
        self.perceptron + self.sanitizer + self.exit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// Working rows at the start of the iteration.
    pub working: usize,
    pub j1: usize,
    pub j2: usize,
    pub overflow: usize,
    /// Input rows found near-tight.
    pub near_tight: Vec<usize>,
    pub perceptron_epochs: usize,
    /// Rank of the equality system after the iteration.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSolveResult {
    pub status: GeneralStatus,
    pub iterations: usize,
    pub dropped_estimate: usize,
    pub drops: DropComponents,
    /// Sum of the per-step high-probability drop allowances of this run.
    pub drop_allowance: f64,
    /// Three `(ε, δ)` entries per iteration.
    pub ledger: CompositionLedger,
    /// Fine-grained record of the perceptron runs, for inspection.
    pub perceptron_ledger: CompositionLedger,
    /// Accumulated equalities.
    pub equalities: EqualitySystem,
    /// Rows of the input with `<a_j, x> > b_j`; all rows on `Bottom`.
    pub violated_strict: usize,
    /// Rows of the input with `<a_j, x> > b_j + η`; all rows on `Bottom`.
    pub violated_slack: usize,
    pub trace: Vec<IterationTrace>,
}

/// Exact three-way split of the rows of `lp` at `x`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Classification {
    /// `<a_j, x> <= b_j`.
    pub j1: Vec<usize>,
    /// `b_j < <a_j, x> <= b_j + η`.
    pub j2: Vec<usize>,
    /// `<a_j, x> > b_j + η`.
    pub overflow: Vec<usize>,
}

pub fn classify_constraints(lp: &LpInstance, x: &[Q], eta: &Q) -> Result<Classification> {
    classify_rows(lp, &(0..lp.n()).collect::<Vec<_>>(), x, eta)
}

fn classify_rows(lp: &LpInstance, rows: &[usize], x: &[Q], eta: &Q) -> Result<Classification> {
    if x.len() != lp.d() {
        return Err(Error::DimensionMismatch { expected: lp.d(), found: x.len() });
    }
    let mut out = Classification::default();
    for &j in rows {
        let excess = -lp.slack_at(j, x);
        if !excess.is_positive() {
            out.j1.push(j);
        } else if &excess <= eta {
            out.j2.push(j);
        } else {
            out.overflow.push(j);
        }
    }
    Ok(out)
}

/// Whether the rows `j1` together with the rows `j2` turned into equalities
/// are feasible with `x >= 0`, decided by the exact oracle. Vacuously true
/// when the premise fails, i.e. when no `x >= 0` satisfies the rows `j1`
/// with every row of `j2` in `[b_j, b_j + η]`.
pub fn verify_tightness_implication(lp: &LpInstance, j1: &[usize], j2: &[usize]) -> Result<bool> {
    let eta = slack_eta(lp.d(), lp.bound());
    let row = |j: usize| -> Vec<Q> { lp.row(j).iter().map(|&v| rational::q(v)).collect() };
    let rhs = |j: usize| rational::q(lp.b()[j]);
    let mut a: Vec<Vec<Q>> = j1.iter().map(|&j| row(j)).collect();
    let mut b: Vec<Q> = j1.iter().map(|&j| rhs(j)).collect();
    for &j in j2 {
        a.push(row(j));
        b.push(rhs(j) + &eta);
        a.push(row(j).into_iter().map(|v| -v).collect());
        b.push(-rhs(j));
    }
    if !oracle::feasible_exact(&a, &b, None)?.is_feasible() {
        return Ok(true);
    }
    let rows: Vec<Vec<Q>> = j2.iter().map(|&j| row(j).into_iter().chain(std::iter::once(rhs(j))).collect()).collect();
    let Some(eq) = EqualitySystem::canonical(&rows, lp.d()) else {
        return Ok(false);
    };
    let a1: Vec<Vec<Q>> = j1.iter().map(|&j| row(j)).collect();
    let b1: Vec<Q> = j1.iter().map(|&j| rhs(j)).collect();
    Ok(oracle::feasible_exact(&a1, &b1, Some(&eq))?.is_feasible())
}

/// Ledger entries for one iteration: the perceptron run, the `|J₂|` count,
/// and the sanitizer bundled with the `|J₁|` count, each `(ε, δ)`.
pub fn charge_iteration(ledger: &mut CompositionLedger, budget: &PrivacyBudget) -> Result<()> {
    for _ in 0..3 {
        ledger.push(budget.epsilon, budget.delta, 1.0)?;
    }
    Ok(())
}

/// Runs at most `d` iterations of: eliminate, perceptron on the slacked
/// system, classify, then stop or sanitize the near-tight rows and recurse.
pub fn solve_general(
    lp: &LpInstance,
    cfg: &GeneralSolveConfig,
    sanitizer: &dyn Sanitizer,
    rng: &SeededRng,
) -> Result<GeneralSolveResult> {
    cfg.budget.validate()?;
    let d = lp.d();
    let budget = cfg.budget;
    let eps = budget.epsilon;
    let eta = slack_eta(d, lp.bound());
    // ρ = η³, kept in log form since it underflows quickly.
    let log_inv_rho = -3.0 * rational::to_f64(&eta).ln();
    let rho = (-log_inv_rho).exp();
    if !(rho > 0.0) {
        return Err(Error::InvalidSpec(format!("margin parameter η³ underflows for d = {d}, U = {}", lp.bound())));
    }
    let point_thr = cfg.point_threshold(d);
    let subspace_thr = cfg.subspace_threshold(d, log_inv_rho);

    let mut out = GeneralSolveResult {
        status: GeneralStatus::Bottom,
        iterations: 0,
        dropped_estimate: 0,
        drops: DropComponents::default(),
        drop_allowance: 0.0,
        ledger: CompositionLedger::new(),
        perceptron_ledger: CompositionLedger::new(),
        equalities: EqualitySystem::empty(d),
        violated_strict: lp.n(),
        violated_slack: lp.n(),
        trace: Vec::new(),
    };
    let mut working: Vec<usize> = (0..lp.n()).collect();

    for t in 1..=d {
        out.iterations = t;
        charge_iteration(&mut out.ledger, &budget)?;
        let mut count_rng = rng.substream(&[t as u64, 1]);
        let mut count_noise = |m: usize| -> Result<f64> {
            let z = if cfg.count_noise { laplace_sample(&mut count_rng, 1.0 / eps)? } else { 0.0 };
            Ok(m as f64 + z)
        };

        if working.is_empty() {
            // Nothing left to satisfy except x >= 0 on the current subspace.
            let x = nonnegative_completion(&out.equalities)?;
            out.status = GeneralStatus::SubspacePoint(x);
            break;
        }
        let sub = lp.select_rows(&working)?;
        let reduced = eliminate(&sub, &out.equalities, &eta)?;

        let (x_tilde, epochs) = if reduced.dim() == 0 {
            (Vec::new(), 0)
        } else {
            let Some((x_tilde, epochs, allowance)) =
                perceptron_point(&reduced, rho, cfg, rng.substream(&[t as u64, 0]), &mut out)?
            else {
                debug!("iteration {t}: perceptron returned bottom");
                break;
            };
            out.drop_allowance += allowance;
            (x_tilde, epochs)
        };
        let x = reduced.back_map(&x_tilde)?;

        let split = classify_rows(lp, &working, &x, &eta)?;
        out.drops.perceptron += split.overflow.len();
        let mut trace = IterationTrace {
            working: working.len(),
            j1: split.j1.len(),
            j2: split.j2.len(),
            overflow: split.overflow.len(),
            near_tight: split.j2.clone(),
            perceptron_epochs: epochs,
            rank: out.equalities.rank(),
        };

        if count_noise(split.j2.len())? <= point_thr {
            out.drops.exit += split.j2.len();
            out.drop_allowance += point_thr + (1.0 / budget.beta).ln() / eps;
            out.trace.push(trace);
            out.status = GeneralStatus::Point(x);
            break;
        }

        let eqs: Vec<Vec<Q>> = split
            .j2
            .iter()
            .map(|&j| lp.row(j).iter().chain(std::iter::once(&lp.b()[j])).map(|&v| rational::q(v)).collect())
            .collect();
        let req = SanitizeRequest::new(eqs, d, budget)?;
        let san = sanitizer.sanitize(&req, &mut rng.substream(&[t as u64, 2]))?;
        out.drops.sanitizer += san.dropped_bound;
        out.drop_allowance += (d * d) as f64 / eps * (split.j2.len() as f64 * d as f64 / budget.delta).ln();

        let Some(merged) = out.equalities.union(&san.system) else {
            warn!("iteration {t}: sanitized equalities contradict earlier ones");
            out.trace.push(trace);
            break;
        };
        trace.rank = merged.rank();
        out.trace.push(trace);
        if merged.rank() <= out.equalities.rank() {
            warn!("iteration {t}: equality rank did not grow");
            break;
        }
        let s = merged.rank();
        out.equalities = merged;

        if s == d || count_noise(split.j1.len())? < subspace_thr {
            out.drops.exit += split.j1.len();
            out.drop_allowance += subspace_thr + (1.0 / budget.beta).ln() / eps;
            let free: Vec<Q> = out.equalities.free_columns().iter().map(|&j| x[j].clone()).collect();
            out.status = GeneralStatus::SubspacePoint(out.equalities.complete(&free)?);
            break;
        }
        working = split.j1;
    }

    out.dropped_estimate = out.drops.total();
    if let Some(x) = out.status.point() {
        let all = classify_constraints(lp, x, &eta)?;
        out.violated_slack = all.overflow.len();
        out.violated_strict = all.overflow.len() + all.j2.len();
    }
    Ok(out)
}

/// Runs the perceptron on the homogenised reduced system and rounds its
/// point. Returns `None` on bottom or when the scaling coordinate is not
/// positive.
fn perceptron_point(
    reduced: &ReducedLp,
    rho: f64,
    cfg: &GeneralSolveConfig,
    rng: SeededRng,
    out: &mut GeneralSolveResult,
) -> Result<Option<(Vec<Q>, usize, f64)>> {
    let dim = reduced.dim();
    let rows: Vec<(Vec<f64>, f64)> = (0..reduced.n())
        .map(|i| {
            let a = reduced.a_tilde[i].iter().map(|v| rational::to_f64(&Q::from_integer(v.clone()))).collect();
            (a, rational::to_f64(&reduced.row_rhs(i)))
        })
        .collect();
    let h = homogenize_rows(rows.iter().cloned(), dim)?;
    let consts = PerceptronConstants::new(dim + 1, rho, &cfg.budget, &cfg.perceptron)?;
    let allowance = consts.solution_violation_bound(&cfg.budget);
    let res = perceptron::solve(&h, rho, &cfg.budget, &cfg.perceptron, &rng)?;
    out.perceptron_ledger.extend(&res.ledger);
    let PerceptronStatus::Feasible(y) = res.status else {
        return Ok(None);
    };
    let y0 = y[dim];
    if !(y0 > 0.0) {
        debug!("perceptron point has scaling coordinate {y0}");
        return Ok(None);
    }

    // Rows the clamped float point clears robustly; rounding must keep them.
    let xf: Vec<f64> = y[..dim].iter().map(|v| (v / y0).max(0.0)).collect();
    let x_norm = (xf.iter().map(|v| v * v).sum::<f64>() + 1.0).sqrt();
    let robust: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, (a, rhs))| {
            let val = rhs - a.iter().zip(&xf).map(|(ai, xi)| ai * xi).sum::<f64>();
            let scale = (a.iter().map(|v| v * v).sum::<f64>() + rhs * rhs).sqrt() * x_norm;
            val > ROBUST_MARGIN * scale
        })
        .map(|(i, _)| i)
        .collect();

    let y0q = rational::from_f64_exact(y0);
    let dyadic: Vec<Q> =
        y[..dim].iter().map(|&v| (rational::from_f64_exact(v) / &y0q).max(Q::from_integer(0.into()))).collect();
    let rounded: Vec<Q> = dyadic.iter().map(|v| rational::best_rational(v, MAX_DENOMINATOR)).collect();
    let holds = |x: &[Q], i: usize| reduced.row_lhs(i, x) <= reduced.row_rhs(i);
    let dyadic_rows: Vec<usize> = (0..reduced.n()).filter(|&i| holds(&dyadic, i)).collect();
    let x = if dyadic_rows.iter().all(|&i| holds(&rounded, i)) { rounded } else { dyadic };
    if let Some(&bad) = robust.iter().find(|&&i| !holds(&x, i)) {
        return Err(Error::InvariantViolation(format!(
            "rounded perceptron point violates reduced row {bad}, which the float point satisfies"
        )));
    }
    Ok(Some((x, res.epochs_used, allowance)))
}

/// A nonnegative solution of `eq` if the exact oracle finds one, else any
/// solution.
fn nonnegative_completion(eq: &EqualitySystem) -> Result<Vec<Q>> {
    let zero = Q::from_integer(0.into());
    let free = vec![zero; eq.dim() - eq.rank()];
    let fallback = eq.complete(&free)?;
    if fallback.iter().all(|v| !v.is_negative()) {
        return Ok(fallback);
    }
    match oracle::feasible_exact(&[], &[], Some(eq)) {
        Ok(FeasibilityCertificate::Feasible(x)) => Ok(x),
        _ => Ok(fallback),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::sanitizer::Reference;

    fn budget() -> PrivacyBudget {
        PrivacyBudget::new(1.0, 1e-6, 0.05).unwrap()
    }

    fn lp(a: Vec<Vec<i64>>, b: Vec<i64>, u: i64) -> LpInstance {
        LpInstance::new(a, b, u).unwrap()
    }

    #[test]
    fn classification_boundaries() {
        let inst = lp(vec![vec![1, 0], vec![0, 1], vec![1, 1]], vec![1, 1, 1], 1);
        let eta = rational::q_frac(1, 10);
        let x = vec![q(1), rational::q_frac(11, 10)];
        let c = classify_constraints(&inst, &x, &eta).unwrap();
        assert_eq!(c.j1, vec![0]);
        assert_eq!(c.j2, vec![1]);
        assert_eq!(c.overflow, vec![2]);
    }

    #[test]
    fn interior_point_has_no_near_tight_rows() {
        let inst = lp(vec![vec![1, 0], vec![0, 1]], vec![2, 2], 2);
        let c = classify_constraints(&inst, &[q(1), q(1)], &slack_eta(2, 2)).unwrap();
        assert!(c.j2.is_empty() && c.overflow.is_empty());
    }

    #[test]
    fn full_dimensional_returns_point_first_iteration() {
        let inst = lp(vec![vec![1, 0], vec![0, 1]], vec![2, 2], 2);
        let cfg = GeneralSolveConfig::noiseless(budget());
        let res = solve_general(&inst, &cfg, &Reference, &SeededRng::new(1, 0)).unwrap();
        let GeneralStatus::Point(x) = &res.status else { panic!("{:?}", res.status) };
        assert_eq!(res.iterations, 1);
        assert_eq!(res.trace[0].j2, 0);
        assert!(x.iter().all(|v| !v.is_negative()));
        assert_eq!(res.violated_strict, 0);
        assert_eq!(res.ledger.entries().len(), 3);
    }

    #[test]
    fn one_tight_constraint_is_pinned() {
        let inst = lp(vec![vec![1, 0], vec![-1, 0], vec![0, 1]], vec![0, 0, 1], 1);
        let cfg = GeneralSolveConfig::noiseless(budget());
        let res = solve_general(&inst, &cfg, &Reference, &SeededRng::new(2, 0)).unwrap();
        let GeneralStatus::Point(x) = &res.status else { panic!("{:?}", res.status) };
        assert_eq!(x[0], q(0));
        assert_eq!(res.equalities.rank(), 1);
        assert_eq!(res.violated_strict, 0);
        assert_eq!(res.ledger.entries().len(), 3 * res.iterations);
    }

    #[test]
    fn full_rank_tightness_returns_subspace_point() {
        let inst = lp(vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]], vec![0, 0, 0, 0], 1);
        let cfg = GeneralSolveConfig::noiseless(budget());
        let res = solve_general(&inst, &cfg, &Reference, &SeededRng::new(3, 0)).unwrap();
        assert_eq!(res.status, GeneralStatus::SubspacePoint(vec![q(0), q(0)]));
        assert_eq!(res.equalities.rank(), 2);
    }

    #[test]
    fn tightness_implication_on_small_cases() {
        let inst = lp(vec![vec![1, 0], vec![-1, 0], vec![0, 1]], vec![0, 0, 1], 1);
        assert!(verify_tightness_implication(&inst, &[1, 2], &[0]).unwrap());
        assert!(verify_tightness_implication(&inst, &[0, 1, 2], &[]).unwrap());
        // x1 + x2 <= 1 near-tight alongside x1 <= 1 tightens fine.
        let inst = lp(vec![vec![1, 1], vec![1, 0]], vec![1, 1], 1);
        assert!(verify_tightness_implication(&inst, &[1], &[0]).unwrap());
        // premise fails: x1 >= 2 cannot meet x1 <= 1
        let inst = lp(vec![vec![-1, 0], vec![1, 0]], vec![-2, 1], 2);
        assert!(verify_tightness_implication(&inst, &[1], &[0]).unwrap());
    }

    #[test]
    fn thresholds_follow_formulas() {
        let cfg = GeneralSolveConfig::new(budget());
        let t7 = cfg.point_threshold(3);
        assert!((t7 - (9.0 + (1e6f64).ln())).abs() < 1e-12);
        let l = (3.0f64 / (0.05 * 1e-6)).ln();
        let t10 = cfg.subspace_threshold(3, 4.0);
        assert!((t10 - (9.0 * l * l * 2.0 + (1e6f64).ln())).abs() < 1e-9);
    }
}
