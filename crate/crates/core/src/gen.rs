//! Synthetic instances with known structure.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::elimination::EqualitySystem;
use crate::error::{Error, Result};
use crate::lp::{dot, norm, HomogeneousLp, LpInstance};
use crate::mechanisms::{gaussian_vector, SeededRng};
use crate::rational::{self, Q};

#[derive(Debug, Clone, PartialEq)]
pub enum GenKind {
    /// Unit rows within angle `acos(rho_target)` of a hidden direction.
    PositiveMargin { rho_target: f64 },
    /// `k` equalities, each written as two opposite inequalities repeated
    /// `multiplicity` times, plus loose rows satisfied at a planted point.
    TightSubspace { k: usize, multiplicity: usize, planted: Option<Vec<i64>> },
    /// An instance from `base` and a copy with one extra row.
    NeighborPair { base: Box<GenKind> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub d: usize,
    pub n: usize,
    pub u: i64,
    pub kind: GenKind,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.u < 1 || self.n < self.d {
            return Err(Error::InvalidSpec(format!(
                "need d >= 1, U >= 1 and n >= d (d={}, n={}, U={})",
                self.d, self.n, self.u
            )));
        }
        validate_kind(&self.kind, self)
    }
}

fn validate_kind(kind: &GenKind, spec: &GenSpec) -> Result<()> {
    match kind {
        GenKind::PositiveMargin { rho_target } => {
            if !(*rho_target > 0.0 && *rho_target < 1.0) {
                return Err(Error::InvalidSpec(format!("rho_target must lie in (0, 1), got {rho_target}")));
            }
        }
        GenKind::TightSubspace { k, multiplicity, planted } => {
            if *k > spec.d {
                return Err(Error::InvalidSpec(format!("k = {k} exceeds d = {}", spec.d)));
            }
            if 2 * k * multiplicity > spec.n {
                return Err(Error::InvalidSpec(format!(
                    "2·k·multiplicity = {} exceeds n = {}",
                    2 * k * multiplicity,
                    spec.n
                )));
            }
            if let Some(p) = planted {
                if p.len() != spec.d || p.iter().any(|&v| v < 0) {
                    return Err(Error::InvalidSpec("planted point must be nonnegative with d entries".into()));
                }
            }
        }
        GenKind::NeighborPair { base } => {
            if matches!(**base, GenKind::NeighborPair { .. }) {
                return Err(Error::InvalidSpec("neighbor pairs cannot be nested".into()));
            }
            validate_kind(base, spec)?;
        }
    }
    Ok(())
}

const MAX_ATTEMPTS: u64 = 10_000_000;

fn unit_vector(rng: &mut SeededRng, d: usize) -> Vec<f64> {
    loop {
        let g = gaussian_vector(rng, d, 1.0).expect("positive sigma");
        let n = norm(&g);
        if n > 1e-12 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Returns the instance and `rho_target`, a lower bound on its margin
/// (the hidden direction attains it).
pub fn gen_positive_margin(spec: &GenSpec, rng: &mut SeededRng) -> Result<(HomogeneousLp, f64)> {
    let (h, _, rho) = gen_positive_margin_with_direction(spec, rng)?;
    Ok((h, rho))
}

/// Like [`gen_positive_margin`], also returning the hidden direction.
pub fn gen_positive_margin_with_direction(
    spec: &GenSpec,
    rng: &mut SeededRng,
) -> Result<(HomogeneousLp, Vec<f64>, f64)> {
    spec.validate()?;
    let GenKind::PositiveMargin { rho_target } = spec.kind else {
        return Err(Error::InvalidSpec("expected a positive-margin spec".into()));
    };
    let w = unit_vector(rng, spec.d);
    let mut rows = Vec::with_capacity(spec.n);
    let mut attempts = 0u64;
    while rows.len() < spec.n {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::RejectionBudgetExceeded { attempts: MAX_ATTEMPTS });
        }
        let r = unit_vector(rng, spec.d);
        if dot(&r, &w) >= rho_target {
            rows.push(r);
        }
    }
    Ok((HomogeneousLp::from_rows(rows)?, w, rho_target))
}

/// Rounds `scale · row` to integers (b = 0), for writing homogeneous
/// instances in the integer text format. Rows that would round to zero keep
/// the sign of their largest coordinate.
pub fn integerize(h: &HomogeneousLp, scale: i64) -> Result<LpInstance> {
    let a: Vec<Vec<i64>> = h
        .rows()
        .iter()
        .map(|r| {
            let mut v: Vec<i64> = r.iter().map(|x| (x * scale as f64).round() as i64).collect();
            if v.iter().all(|&x| x == 0) {
                let (j, x) =
                    r.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).expect("non-empty row");
                v[j] = if *x >= 0.0 { 1 } else { -1 };
            }
            v
        })
        .collect();
    let n = a.len();
    LpInstance::new(a, vec![0; n], scale)
}

/// Smallest `<ā_i, w>` over the rows of `lp` read as `a_i x >= 0`, a
/// certified lower bound on the margin when positive.
pub fn certified_margin(lp: &LpInstance, w: &[f64]) -> f64 {
    lp.a()
        .iter()
        .map(|r| {
            let r: Vec<f64> = r.iter().map(|&v| v as f64).collect();
            dot(&r, w) / norm(&r)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Returns the instance and the planted equalities in canonical form.
pub fn gen_tight_subspace(spec: &GenSpec, rng: &mut SeededRng) -> Result<(LpInstance, EqualitySystem)> {
    spec.validate()?;
    let GenKind::TightSubspace { k, multiplicity, ref planted } = spec.kind else {
        return Err(Error::InvalidSpec("expected a tight-subspace spec".into()));
    };
    let (d, u) = (spec.d, spec.u);
    let x_star: Vec<i64> = match planted {
        Some(p) => p.clone(),
        None => (0..d).map(|_| rng.random_range(1..=(u / 2).max(1))).collect(),
    };
    let mut attempts = 0u64;
    let mut bump = || -> Result<()> {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::RejectionBudgetExceeded { attempts: MAX_ATTEMPTS });
        }
        Ok(())
    };
    let random_row = |rng: &mut SeededRng| -> Vec<i64> {
        loop {
            let r: Vec<i64> = (0..d).map(|_| rng.random_range(-u..=u)).collect();
            if r.iter().any(|&v| v != 0) {
                return r;
            }
        }
    };
    let at = |r: &[i64]| -> i64 { r.iter().zip(&x_star).map(|(a, x)| a * x).sum() };

    // k independent equalities with |<a, x*>| <= U
    let mut eqs: Vec<(Vec<i64>, i64)> = Vec::new();
    while eqs.len() < k {
        bump()?;
        let r = random_row(rng);
        let beta = at(&r);
        if beta.abs() > u {
            continue;
        }
        let mut trial: Vec<Vec<Q>> = eqs.iter().map(|(a, _)| a.iter().map(|&v| rational::q(v)).collect()).collect();
        trial.push(r.iter().map(|&v| rational::q(v)).collect());
        if rational::rank(&trial) == trial.len() {
            eqs.push((r, beta));
        }
    }

    let mut rows: Vec<(Vec<i64>, i64)> = Vec::with_capacity(spec.n);
    for (a, beta) in &eqs {
        for _ in 0..multiplicity {
            rows.push((a.clone(), *beta));
            rows.push((a.iter().map(|v| -v).collect(), -beta));
        }
    }
    while rows.len() < spec.n {
        bump()?;
        let r = random_row(rng);
        let v = at(&r);
        if v + 1 > u {
            continue;
        }
        let b = rng.random_range((v + 1).max(-u)..=u);
        rows.push((r, b));
    }
    rows.shuffle(rng);

    let (a, b): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let lp = LpInstance::new(a, b, u)?;
    let aug: Vec<Vec<Q>> =
        eqs.iter().map(|(a, beta)| a.iter().chain(std::iter::once(beta)).map(|&v| rational::q(v)).collect()).collect();
    let tight = EqualitySystem::canonical(&aug, d).expect("planted equalities are consistent");
    debug_assert!({
        let xq: Vec<Q> = x_star.iter().map(|&v| rational::q(v)).collect();
        (0..lp.n()).all(|i| lp.slack_at(i, &xq) >= rational::q(0)) && tight.is_satisfied_by(&xq)
    });
    Ok((lp, tight))
}

/// `(V, V')` where `V'` is `V` with one extra random row appended.
pub fn gen_neighbor_pair(spec: &GenSpec, rng: &mut SeededRng) -> Result<(LpInstance, LpInstance)> {
    spec.validate()?;
    let GenKind::NeighborPair { base } = &spec.kind else {
        return Err(Error::InvalidSpec("expected a neighbor-pair spec".into()));
    };
    let base_spec = GenSpec { kind: (**base).clone(), ..spec.clone() };
    let v = match &**base {
        GenKind::PositiveMargin { .. } => integerize(&gen_positive_margin(&base_spec, rng)?.0, spec.u)?,
        GenKind::TightSubspace { .. } => gen_tight_subspace(&base_spec, rng)?.0,
        GenKind::NeighborPair { .. } => unreachable!("rejected by validate"),
    };
    let extra: Vec<i64> = loop {
        let r: Vec<i64> = (0..spec.d).map(|_| rng.random_range(-spec.u..=spec.u)).collect();
        if r.iter().any(|&x| x != 0) {
            break r;
        }
    };
    let extra_b = if v.b().iter().all(|&b| b == 0) { 0 } else { rng.random_range(-spec.u..=spec.u) };
    let mut a = v.a().to_vec();
    let mut b = v.b().to_vec();
    a.push(extra);
    b.push(extra_b);
    let v_prime = LpInstance::new(a, b, spec.u)?;
    Ok((v, v_prime))
}
