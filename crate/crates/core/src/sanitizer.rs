//! Release of a synthetic equation system whose solution set contains that
//! of the input equations.
//!
//! Two implementations are provided: an exact, non-private [`Reference`]
//! and a noisy-max selector [`Private`].

use std::collections::HashMap;

use num_traits::Zero;

use crate::elimination::EqualitySystem;
use crate::error::{Error, Result};
use crate::mechanisms::{laplace_sample, PrivacyBudget, SeededRng};
use crate::rational::{self, Q};

/// Equations `A₂x = b₂` as augmented rows `[a | b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SanitizeRequest {
    pub equations: Vec<Vec<Q>>,
    pub dim: usize,
    pub budget: PrivacyBudget,
}

impl SanitizeRequest {
    pub fn new(equations: Vec<Vec<Q>>, dim: usize, budget: PrivacyBudget) -> Result<Self> {
        if equations.is_empty() {
            return Err(Error::EmptyInstance);
        }
        if let Some(r) = equations.iter().find(|r| r.len() != dim + 1) {
            return Err(Error::DimensionMismatch { expected: dim + 1, found: r.len() });
        }
        Ok(Self { equations, dim, budget })
    }

    /// From integer rows and right-hand sides.
    pub fn from_ints(a: &[Vec<i64>], b: &[i64], budget: PrivacyBudget) -> Result<Self> {
        let dim = a.first().map(Vec::len).ok_or(Error::EmptyInstance)?;
        let rows = a
            .iter()
            .zip(b)
            .map(|(r, &bi)| r.iter().chain(std::iter::once(&bi)).map(|&v| rational::q(v)).collect())
            .collect();
        Self::new(rows, dim, budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SanitizeResult {
    /// Reduced row-echelon basis `[C | g]`.
    pub system: EqualitySystem,
    /// Bound on the number of input equations the output does not imply.
    pub dropped_bound: usize,
}

pub trait Sanitizer: Send + Sync {
    fn sanitize(&self, req: &SanitizeRequest, rng: &mut SeededRng) -> Result<SanitizeResult>;

    /// Whether the output is differentially private.
    fn is_private(&self) -> bool;
}

/// Incrementally maintained reduced row-echelon basis of augmented rows.
#[derive(Debug, Clone)]
struct Span {
    rows: Vec<Vec<Q>>,
    pivots: Vec<usize>,
    dim: usize,
}

enum Membership {
    Inside,
    Inconsistent,
    Outside(Vec<Q>),
}

impl Span {
    fn new(dim: usize) -> Self {
        Self { rows: Vec::new(), pivots: Vec::new(), dim }
    }

    fn classify(&self, row: &[Q]) -> Membership {
        let mut r = row.to_vec();
        for (basis, &p) in self.rows.iter().zip(&self.pivots) {
            if r[p].is_zero() {
                continue;
            }
            let f = r[p].clone();
            for (v, b) in r.iter_mut().zip(basis) {
                *v -= &f * b;
            }
        }
        if r[..self.dim].iter().all(Zero::is_zero) {
            if r[self.dim].is_zero() {
                Membership::Inside
            } else {
                Membership::Inconsistent
            }
        } else {
            Membership::Outside(r)
        }
    }

    fn insert_residual(&mut self, residual: Vec<Q>) {
        let mut all = self.rows.clone();
        all.push(residual);
        let (rows, pivots) = rational::rref(&all);
        self.rows = rows;
        self.pivots = pivots;
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    fn into_system(self) -> EqualitySystem {
        EqualitySystem::canonical(&self.rows, self.dim).expect("span is consistent by construction")
    }
}

/// Distinct rows with multiplicities, in order of first appearance.
fn distinct(rows: &[Vec<Q>]) -> Vec<(Vec<Q>, usize)> {
    let mut index: HashMap<&Vec<Q>, usize> = HashMap::new();
    let mut out: Vec<(Vec<Q>, usize)> = Vec::new();
    for r in rows {
        match index.get(r) {
            Some(&i) => out[i].1 += 1,
            None => {
                index.insert(r, out.len());
                out.push((r.clone(), 1));
            }
        }
    }
    out
}

/// Exact affine span of the input, built greedily in input order. Equations
/// inconsistent with the span so far are skipped and counted as dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct Reference;

impl Sanitizer for Reference {
    fn sanitize(&self, req: &SanitizeRequest, _rng: &mut SeededRng) -> Result<SanitizeResult> {
        let mut span = Span::new(req.dim);
        let mut dropped = 0;
        for (row, count) in distinct(&req.equations) {
            match span.classify(&row) {
                Membership::Inside => {}
                Membership::Inconsistent => dropped += count,
                Membership::Outside(res) => span.insert_residual(res),
            }
        }
        Ok(SanitizeResult { system: span.into_system(), dropped_bound: dropped })
    }

    fn is_private(&self) -> bool {
        false
    }
}

/// Noisy-max growth of the span. Each round scores every candidate
/// equation by how many input equations it newly brings into the span,
/// adds `Lap(2/ε)`, and accepts the best one if its noisy score reaches
/// `(1/ε)·ln(m₂·d/δ)`.
#[derive(Debug, Clone, Copy)]
pub struct Private {
    /// Turns the Laplace noise off (tests only).
    pub noise: bool,
    /// Round allowance; `None` means `d + 1`.
    pub max_rounds: Option<usize>,
}

impl Default for Private {
    fn default() -> Self {
        Self { noise: true, max_rounds: None }
    }
}

impl Private {
    pub fn threshold(req: &SanitizeRequest) -> f64 {
        let PrivacyBudget { epsilon, delta, .. } = req.budget;
        (req.equations.len() as f64 * req.dim as f64 / delta).ln() / epsilon
    }
}

impl Sanitizer for Private {
    fn sanitize(&self, req: &SanitizeRequest, rng: &mut SeededRng) -> Result<SanitizeResult> {
        req.budget.validate()?;
        let eps = req.budget.epsilon;
        let threshold = Self::threshold(req);
        let max_rounds = self.max_rounds.unwrap_or(req.dim + 1);
        let rows = distinct(&req.equations);
        let mut span = Span::new(req.dim);
        let mut rounds = 0;

        loop {
            if span.rank() == req.dim {
                break;
            }
            if rounds == max_rounds {
                return Err(Error::BudgetExhausted(max_rounds));
            }
            rounds += 1;

            let inside_now: Vec<bool> =
                rows.iter().map(|(r, _)| matches!(span.classify(r), Membership::Inside)).collect();
            let mut best: Option<(f64, Vec<Q>)> = None;
            for (ci, (cand, _)) in rows.iter().enumerate() {
                if inside_now[ci] {
                    continue;
                }
                let Membership::Outside(res) = span.classify(cand) else { continue };
                let mut grown = span.clone();
                grown.insert_residual(res.clone());
                let score: usize = rows
                    .iter()
                    .zip(&inside_now)
                    .filter(|((r, _), &inside)| !inside && matches!(grown.classify(r), Membership::Inside))
                    .map(|((_, c), _)| c)
                    .sum();
                let noisy = score as f64 + if self.noise { laplace_sample(rng, 2.0 / eps)? } else { 0.0 };
                if best.as_ref().is_none_or(|(s, _)| noisy > *s) {
                    best = Some((noisy, res));
                }
            }
            match best {
                Some((s, res)) if s >= threshold => span.insert_residual(res),
                _ => break,
            }
        }

        let unexplained: usize =
            rows.iter().filter(|(r, _)| !matches!(span.classify(r), Membership::Inside)).map(|(_, c)| c).sum();
        Ok(SanitizeResult {
            system: span.into_system(),
            dropped_bound: unexplained + threshold.ceil().max(0.0) as usize,
        })
    }

    fn is_private(&self) -> bool {
        true
    }
}
