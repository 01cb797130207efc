//! Ground-truth oracles: exact feasibility by vertex enumeration, margins
//! and cap maxima via nonnegative least squares, and Monte-Carlo volume
//! ratios of cones.

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::elimination::EqualitySystem;
use crate::error::{Error, Result};
use crate::lp::{dot, norm, HomogeneousLp, LpInstance, Margin};
use crate::mechanisms::{gaussian_vector, SeededRng};
use crate::rational::{self, Q};

/// Default cap on vertex-candidate subsets.
pub const MAX_SUBSETS: u128 = 10_000;

/// Largest dimension the continuous oracles accept.
pub const MAX_ORACLE_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityCertificate {
    Feasible(Vec<Q>),
    Infeasible,
}

impl FeasibilityCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible(_))
    }

    pub fn witness(&self) -> Option<&[Q]> {
        match self {
            Self::Feasible(x) => Some(x),
            Self::Infeasible => None,
        }
    }
}

/// Whether `x` satisfies `Ax <= b`, `x >= 0` and the equalities exactly.
pub fn satisfies(a: &[Vec<Q>], b: &[Q], eq: Option<&EqualitySystem>, x: &[Q]) -> bool {
    x.iter().all(|v| !v.is_negative())
        && a.iter().zip(b).all(|(row, bi)| &rational::dot(row, x) <= bi)
        && eq.is_none_or(|e| e.is_satisfied_by(x))
}

/// Exact feasibility of `{Ax <= b, x >= 0, Cx = g}` by enumerating vertices.
pub fn feasible_exact(a: &[Vec<Q>], b: &[Q], eq: Option<&EqualitySystem>) -> Result<FeasibilityCertificate> {
    feasible_exact_with_limit(a, b, eq, MAX_SUBSETS)
}

pub fn feasible_exact_with_limit(
    a: &[Vec<Q>],
    b: &[Q],
    eq: Option<&EqualitySystem>,
    limit: u128,
) -> Result<FeasibilityCertificate> {
    let d = match (a.first(), eq) {
        (Some(r), _) => r.len(),
        (None, Some(e)) => e.dim(),
        (None, None) => return Err(Error::EmptyInstance),
    };
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let eq_rows: Vec<(Vec<Q>, Q)> =
        eq.map(|e| e.c().iter().cloned().zip(e.g().iter().cloned()).collect()).unwrap_or_default();
    if let Some(e) = eq {
        if e.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: e.dim() });
        }
        if EqualitySystem::canonical(&e.augmented(), d).is_none() {
            return Ok(FeasibilityCertificate::Infeasible);
        }
    }

    let Some(ineq) = dedup_inequalities(a, b, d) else {
        return Ok(FeasibilityCertificate::Infeasible);
    };
    // EqualitySystem rows are independent, so k <= d.
    let choose = d - eq_rows.len();
    let candidates = binomial(ineq.len() as u128, choose as u128);
    if candidates > limit {
        return Err(Error::TooLarge { candidates });
    }

    let mut idx: Vec<usize> = (0..choose).collect();
    loop {
        let mut m: Vec<Vec<Q>> = eq_rows.iter().map(|(r, _)| r.clone()).collect();
        let mut rhs: Vec<Q> = eq_rows.iter().map(|(_, g)| g.clone()).collect();
        for &i in &idx {
            m.push(ineq[i].0.clone());
            rhs.push(ineq[i].1.clone());
        }
        if let Some(x) = rational::solve_square(&m, &rhs) {
            if x.iter().all(|v| !v.is_negative())
                && ineq.iter().all(|(r, bi)| &rational::dot(r, &x) <= bi)
                && satisfies(a, b, eq, &x)
            {
                return Ok(FeasibilityCertificate::Feasible(x));
            }
        }
        if !next_combination(&mut idx, ineq.len()) {
            return Ok(FeasibilityCertificate::Infeasible);
        }
    }
}

/// Integer instance with a uniform slack added to every right-hand side.
pub fn feasible_exact_lp(lp: &LpInstance, slack: &Q, eq: Option<&EqualitySystem>) -> Result<FeasibilityCertificate> {
    let a: Vec<Vec<Q>> = lp.a().iter().map(|r| r.iter().map(|&v| rational::q(v)).collect()).collect();
    let b: Vec<Q> = lp.b().iter().map(|&v| rational::q(v) + slack).collect();
    feasible_exact(&a, &b, eq)
}

/// Inequalities, led by `-x_j <= 0` so the origin is tried first, scaled so the first nonzero
/// coefficient has magnitude one, with parallel duplicates merged to the
/// tightest bound. `None` if a zero row has a negative right-hand side.
fn dedup_inequalities(a: &[Vec<Q>], b: &[Q], d: usize) -> Option<Vec<(Vec<Q>, Q)>> {
    let mut out: Vec<(Vec<Q>, Q)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let bounds = (0..d).map(|j| {
        let mut r = vec![Q::zero(); d];
        r[j] = rational::q(-1);
        (r, Q::zero())
    });
    for (row, bi) in bounds.chain(a.iter().cloned().zip(b.iter().cloned())) {
        let Some(lead) = row.iter().find(|v| !v.is_zero()).map(|v| v.abs()) else {
            if bi.is_negative() {
                return None;
            }
            continue;
        };
        let row: Vec<Q> = row.iter().map(|v| v / &lead).collect();
        let bi = bi / lead;
        match index.get(&row) {
            Some(&i) => {
                let cur: &mut (Vec<Q>, Q) = &mut out[i];
                if bi < cur.1 {
                    cur.1 = bi;
                }
            }
            None => {
                index.insert(row.clone(), out.len());
                out.push((row, bi));
            }
        }
    }
    Some(out)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Lawson–Hanson nonnegative least squares: `argmin_{u >= 0} ‖Eu − f‖`,
/// with `E` given by its columns.
pub fn nnls(columns: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    let n = columns.len();
    let m = f.len();
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let scale = columns.iter().map(|c| norm(c)).fold(norm(f), f64::max).max(1.0);
    let tol = 1e-12 * scale * scale * (n.max(m) as f64);

    let residual = |x: &[f64]| -> Vec<f64> {
        let mut r: Vec<f64> = f.iter().map(|v| -v).collect();
        for (c, &xi) in columns.iter().zip(x) {
            if xi != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri += xi * ci;
                }
            }
        }
        r
    };

    for _outer in 0..(3 * n + 10) {
        let r = residual(&x);
        // w = Eᵀ(f − Ex) = −Eᵀr
        let Some((j, w)) =
            (0..n).filter(|&j| !passive[j]).map(|j| (j, -dot(&columns[j], &r))).max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        if w <= tol {
            break;
        }
        passive[j] = true;

        for _inner in 0..(3 * n + 10) {
            let p: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let Some(s) = least_squares(columns, &p, f) else {
                // Dependent column: drop the newest and stop growing.
                passive[j] = false;
                return x;
            };
            if s.iter().all(|&v| v > 0.0) {
                for (&i, v) in p.iter().zip(&s) {
                    x[i] = *v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&i, &si) in p.iter().zip(&s) {
                if si <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - si));
                }
            }
            for (&i, &si) in p.iter().zip(&s) {
                x[i] += alpha * (si - x[i]);
                if x[i] <= 1e-15 * scale {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    x
}

/// Unconstrained least squares on the selected columns via the normal
/// equations; `None` if they are numerically dependent.
fn least_squares(columns: &[Vec<f64>], p: &[usize], f: &[f64]) -> Option<Vec<f64>> {
    let k = p.len();
    let mut g = vec![vec![0.0; k + 1]; k];
    for (a, &i) in p.iter().enumerate() {
        for (b, &j) in p.iter().enumerate() {
            g[a][b] = dot(&columns[i], &columns[j]);
        }
        g[a][k] = dot(&columns[i], f);
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&x, &y| g[x][c].abs().total_cmp(&g[y][c].abs()))?;
        if g[piv][c].abs() < 1e-14 {
            return None;
        }
        g.swap(c, piv);
        let pivot = g[c].clone();
        for (r, row) in g.iter_mut().enumerate() {
            if r != c {
                let f = row[c] / pivot[c];
                for (v, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                    *v -= f * p;
                }
            }
        }
    }
    Some((0..k).map(|i| g[i][k] / g[i][i]).collect())
}

fn check_dim(d: usize) -> Result<()> {
    if d > MAX_ORACLE_DIM {
        return Err(Error::DimensionTooLarge { max: MAX_ORACLE_DIM, got: d });
    }
    Ok(())
}

/// `ρ = max_{‖x‖<=1} min_i <ā_i, x>`, which is never negative (take x = 0).
///
/// Computed as `1/‖z*‖` for the least-norm `z` with `Āz >= 1` (zero if no
/// such `z` exists), using the least-distance reduction to NNLS.
pub fn margin_exact(h: &HomogeneousLp) -> Result<Margin> {
    check_dim(h.dim())?;
    Ok(Margin(margin_and_direction(h).0))
}

/// The margin and a unit maximiser (zero vector when the margin is zero).
pub fn margin_and_direction(h: &HomogeneousLp) -> (f64, Vec<f64>) {
    let d = h.dim();
    // columns of [Āᵀ; 1ᵀ]
    let columns: Vec<Vec<f64>> = h
        .rows()
        .iter()
        .map(|r| {
            let mut c = r.clone();
            c.push(1.0);
            c
        })
        .collect();
    let mut f = vec![0.0; d + 1];
    f[d] = 1.0;
    let u = nnls(&columns, &f);
    let mut r: Vec<f64> = f.iter().map(|v| -v).collect();
    for (c, &ui) in columns.iter().zip(&u) {
        for (ri, ci) in r.iter_mut().zip(c) {
            *ri += ui * ci;
        }
    }
    if norm(&r) < 1e-10 || r[d] >= 0.0 {
        return (0.0, vec![0.0; d]);
    }
    let z: Vec<f64> = r[..d].iter().map(|v| -v / r[d]).collect();
    let zn = norm(&z);
    if zn == 0.0 || !zn.is_finite() {
        return (0.0, vec![0.0; d]);
    }
    let x: Vec<f64> = z.iter().map(|v| v / zn).collect();
    // Report the attained value at the recovered maximiser.
    let attained = h.rows().iter().map(|a| dot(a, &x)).fold(f64::INFINITY, f64::min);
    (attained.max(0.0), x)
}

/// `max { <c̄, x> : Āx >= 0, ‖x‖ <= 1 }` for `c̄ = c/‖c‖`, i.e. the norm of
/// the projection of `c̄` onto the cone.
pub fn max_inner_over_cap(h: &HomogeneousLp, c: &[f64]) -> Result<f64> {
    check_dim(h.dim())?;
    if c.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: c.len() });
    }
    let cn = norm(c);
    if cn <= 1e-300 {
        return Err(Error::ZeroDirection);
    }
    let cbar: Vec<f64> = c.iter().map(|v| v / cn).collect();
    // Π_P(c̄) = c̄ + Āᵀλ*, λ* = argmin_{λ >= 0} ‖c̄ + Āᵀλ‖
    let neg: Vec<f64> = cbar.iter().map(|v| -v).collect();
    let lambda = nnls(h.rows(), &neg);
    let mut p = cbar.clone();
    for (row, &l) in h.rows().iter().zip(&lambda) {
        for (pi, ai) in p.iter_mut().zip(row) {
            *pi += l * ai;
        }
    }
    Ok(norm(&p).min(1.0))
}

/// Fraction of the unit ball inside a cone, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub ratio: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl VolumeEstimate {
    fn from_hits(hits: u64, samples: u64) -> Self {
        let p = hits as f64 / samples as f64;
        Self { ratio: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), samples }
    }
}

/// Ratio `vol(after ∩ B) / vol(before ∩ B)` with a delta-method error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRatio {
    pub before: VolumeEstimate,
    pub after: VolumeEstimate,
    pub ratio: f64,
    pub std_error: f64,
}

const SHARD: u64 = 1 << 16;

/// Monte-Carlo estimate of a cone's share of the unit ball. Both sets are
/// cones, so Gaussian directions give the same fraction as uniform points.
pub fn cone_fraction(h: &HomogeneousLp, rng: &SeededRng, samples: u64) -> Result<VolumeEstimate> {
    check_dim(h.dim())?;
    if samples == 0 {
        return Err(Error::InvalidSpec("need at least one sample".into()));
    }
    let shards = samples.div_ceil(SHARD);
    let hits: u64 = (0..shards)
        .into_par_iter()
        .map(|s| -> Result<u64> {
            let mut r = rng.substream(&[s]);
            let count = SHARD.min(samples - s * SHARD);
            let mut hits = 0;
            for _ in 0..count {
                let g = gaussian_vector(&mut r, h.dim(), 1.0)?;
                if h.rows().iter().all(|a| dot(a, &g) >= 0.0) {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(VolumeEstimate::from_hits(hits, samples))
}

pub fn cap_volume_ratio(
    before: &HomogeneousLp,
    after: &HomogeneousLp,
    rng: &SeededRng,
    samples: u64,
) -> Result<VolumeRatio> {
    if before.dim() != after.dim() {
        return Err(Error::DimensionMismatch { expected: before.dim(), found: after.dim() });
    }
    let b = cone_fraction(before, &rng.substream(&[0]), samples)?;
    let a = cone_fraction(after, &rng.substream(&[1]), samples)?;
    if b.ratio == 0.0 {
        return Err(Error::DegenerateBefore);
    }
    let ratio = a.ratio / b.ratio;
    let rel = (a.std_error / a.ratio.max(f64::MIN_POSITIVE)).powi(2) + (b.std_error / b.ratio).powi(2);
    Ok(VolumeRatio { before: b, after: a, ratio, std_error: ratio * rel.sqrt() })
}

/// Angular width (radians) of a planar cone `{x : <ā_i, x> >= 0}`, found by
/// scanning the candidate boundary directions. Zero for cones without
/// interior.
pub fn planar_cone_angle(h: &HomogeneousLp) -> Result<f64> {
    if h.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: h.dim() });
    }
    use std::f64::consts::PI;
    // Each row admits the half-circle of directions [φ_i − π/2, φ_i + π/2].
    let mut cuts: Vec<f64> = Vec::new();
    for r in h.rows() {
        let phi = r[1].atan2(r[0]);
        cuts.push((phi - PI / 2.0).rem_euclid(2.0 * PI));
        cuts.push((phi + PI / 2.0).rem_euclid(2.0 * PI));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for i in 0..cuts.len() {
        let lo = cuts[i];
        let hi = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + 2.0 * PI };
        let mid = 0.5 * (lo + hi);
        let dir = [mid.cos(), mid.sin()];
        if h.rows().iter().all(|a| dot(a, &dir) >= 0.0) {
            total += hi - lo;
        }
    }
    Ok(total)
}
