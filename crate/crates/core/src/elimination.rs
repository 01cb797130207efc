//! Exact variable elimination with an equality system `Cx = g`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::LpInstance;
use crate::rational::{self, Q};

/// Linearly independent equalities `Cx = g` with pivot columns `K` such
/// that `C_K` is invertible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualitySystem {
    c: Vec<Vec<Q>>,
    g: Vec<Q>,
    pivots: Vec<usize>,
    dim: usize,
}

impl EqualitySystem {
    /// The empty system over `dim` variables.
    pub fn empty(dim: usize) -> Self {
        Self { c: Vec::new(), g: Vec::new(), pivots: Vec::new(), dim }
    }

    /// Fails with `RankDeficient` if the rows are dependent.
    pub fn new(c: Vec<Vec<Q>>, g: Vec<Q>) -> Result<Self> {
        if c.len() != g.len() {
            return Err(Error::DimensionMismatch { expected: c.len(), found: g.len() });
        }
        let Some(dim) = c.first().map(Vec::len) else {
            return Err(Error::EmptyInstance);
        };
        if let Some(bad) = c.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        let pivots = select_pivot_columns(&c)?;
        Ok(Self { c, g, pivots, dim })
    }

    /// Canonical system spanning the same affine set as the augmented rows
    /// `[C | g]`: reduced row-echelon form. `None` if the rows are
    /// inconsistent (`0 = 1` appears).
    pub fn canonical(rows: &[Vec<Q>], dim: usize) -> Option<Self> {
        if rows.is_empty() {
            return Some(Self::empty(dim));
        }
        let (r, piv) = rational::rref(rows);
        if piv.last() == Some(&dim) {
            return None;
        }
        let c = r.iter().map(|row| row[..dim].to_vec()).collect();
        let g = r.iter().map(|row| row[dim].clone()).collect();
        Some(Self { c, g, pivots: piv, dim })
    }

    /// Canonical system for the union of both sets of equalities.
    pub fn union(&self, other: &EqualitySystem) -> Option<Self> {
        let rows: Vec<Vec<Q>> = self.augmented().into_iter().chain(other.augmented()).collect();
        Self::canonical(&rows, self.dim)
    }

    pub fn augmented(&self) -> Vec<Vec<Q>> {
        self.c
            .iter()
            .zip(&self.g)
            .map(|(r, gi)| {
                let mut v = r.clone();
                v.push(gi.clone());
                v
            })
            .collect()
    }

    pub fn c(&self) -> &[Vec<Q>] {
        &self.c
    }

    pub fn g(&self) -> &[Q] {
        &self.g
    }

    pub fn rank(&self) -> usize {
        self.c.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Columns not in `K`, ascending.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.dim).filter(|j| !self.pivots.contains(j)).collect()
    }

    pub fn is_satisfied_by(&self, x: &[Q]) -> bool {
        self.c.iter().zip(&self.g).all(|(r, gi)| &rational::dot(r, x) == gi)
    }

    /// The solution with the free variables set to `free` (ordered as
    /// [`free_columns`](Self::free_columns)).
    pub fn complete(&self, free: &[Q]) -> Result<Vec<Q>> {
        let fc = self.free_columns();
        if free.len() != fc.len() {
            return Err(Error::DimensionMismatch { expected: fc.len(), found: free.len() });
        }
        let mut x = vec![Q::zero(); self.dim];
        for (&j, v) in fc.iter().zip(free) {
            x[j] = v.clone();
        }
        if self.c.is_empty() {
            return Ok(x);
        }
        // C_K x_K = g - C_F x_F
        let ck: Vec<Vec<Q>> = self.c.iter().map(|r| self.pivots.iter().map(|&j| r[j].clone()).collect()).collect();
        let rhs: Vec<Q> = self
            .c
            .iter()
            .zip(&self.g)
            .map(|(r, gi)| gi - fc.iter().zip(free).fold(Q::zero(), |acc, (&j, v)| acc + &r[j] * v))
            .collect();
        let xk = rational::solve_square(&ck, &rhs).ok_or(Error::SingularPivot)?;
        for (&j, v) in self.pivots.iter().zip(xk) {
            x[j] = v;
        }
        Ok(x)
    }
}

/// Greedy leftmost pivot columns under fraction-free elimination.
pub fn select_pivot_columns(c: &[Vec<Q>]) -> Result<Vec<usize>> {
    let ints: Vec<Vec<BigInt>> = c.iter().map(|r| rational::clear_denominators(r).0).collect();
    let pivots = rational::bareiss_pivots(&ints);
    if pivots.len() < c.len() {
        return Err(Error::RankDeficient { rank: pivots.len(), rows: c.len() });
    }
    Ok(pivots)
}

/// Where a reduced row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOrigin {
    /// Row `j` of the input instance.
    Constraint(usize),
    /// Nonnegativity of the eliminated variable `x_j`.
    Eliminated(usize),
}

/// `Ãx̃ <= b̃ + slack, x̃ >= 0` over the free variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLp {
    pub a_tilde: Vec<Vec<BigInt>>,
    pub b_tilde: Vec<BigInt>,
    /// Per-row slack: the input slack times the row scaler, or zero for
    /// [`RowOrigin::Eliminated`] rows.
    pub slack: Vec<Q>,
    /// Positive integer each row was multiplied by to clear denominators.
    pub row_scalers: Vec<BigInt>,
    pub origin: Vec<RowOrigin>,
    pub eq: EqualitySystem,
}

impl ReducedLp {
    pub fn n(&self) -> usize {
        self.a_tilde.len()
    }

    /// Number of remaining variables `d − k`.
    pub fn dim(&self) -> usize {
        self.eq.dim() - self.eq.rank()
    }

    pub fn free_columns(&self) -> Vec<usize> {
        self.eq.free_columns()
    }

    /// Full-dimensional point for reduced variables `x̃`.
    pub fn back_map(&self, x_tilde: &[Q]) -> Result<Vec<Q>> {
        self.eq.complete(x_tilde)
    }

    /// Whether `x̃ >= 0` satisfies every reduced row including slack.
    pub fn is_feasible(&self, x_tilde: &[Q]) -> bool {
        x_tilde.iter().all(|v| !v.is_negative()) && (0..self.n()).all(|i| self.row_lhs(i, x_tilde) <= self.row_rhs(i))
    }

    pub fn row_lhs(&self, i: usize, x_tilde: &[Q]) -> Q {
        self.a_tilde[i].iter().zip(x_tilde).fold(Q::zero(), |acc, (a, x)| acc + x * a)
    }

    pub fn row_rhs(&self, i: usize) -> Q {
        Q::from_integer(self.b_tilde[i].clone()) + &self.slack[i]
    }

    /// Largest absolute entry of `Ã` and `b̃` over constraint rows.
    pub fn max_constraint_entry(&self) -> BigInt {
        self.origin
            .iter()
            .enumerate()
            .filter(|(_, o)| matches!(o, RowOrigin::Constraint(_)))
            .flat_map(|(i, _)| self.a_tilde[i].iter().chain(std::iter::once(&self.b_tilde[i])))
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }
}

/// Substitutes `x_K = C_K⁻¹(g − C_F x_F)` into `Ax <= b + slack` and adds
/// `x_K >= 0` as rows over the free variables. Each row is scaled by the lcm
/// of its denominators so the result is integral; the slack is scaled along.
pub fn eliminate(lp: &LpInstance, eq: &EqualitySystem, slack: &Q) -> Result<ReducedLp> {
    if eq.dim() != lp.d() {
        return Err(Error::DimensionMismatch { expected: lp.d(), found: eq.dim() });
    }
    select_pivot_columns(eq.c())?;
    let k = eq.rank();
    let free = eq.free_columns();
    let pivots = eq.pivots().to_vec();

    // R = C_K⁻¹ C restricted to free columns, r = C_K⁻¹ g, computed column by column.
    let ck: Vec<Vec<Q>> = eq.c().iter().map(|r| pivots.iter().map(|&j| r[j].clone()).collect()).collect();
    let mut r_free: Vec<Vec<Q>> = vec![Vec::with_capacity(free.len()); k];
    for &j in &free {
        let col: Vec<Q> = eq.c().iter().map(|r| r[j].clone()).collect();
        let sol = rational::solve_square(&ck, &col).ok_or(Error::SingularPivot)?;
        for (row, v) in r_free.iter_mut().zip(sol) {
            row.push(v);
        }
    }
    let r_rhs = if k == 0 { Vec::new() } else { rational::solve_square(&ck, eq.g()).ok_or(Error::SingularPivot)? };

    let mut out = ReducedLp {
        a_tilde: Vec::new(),
        b_tilde: Vec::new(),
        slack: Vec::new(),
        row_scalers: Vec::new(),
        origin: Vec::new(),
        eq: eq.clone(),
    };
    let mut push = |coef: Vec<Q>, rhs: Q, row_slack: Q, origin: RowOrigin| {
        let mut full = coef;
        full.push(rhs);
        let (ints, l) = rational::clear_denominators(&full);
        let mut ints = ints;
        let b = ints.pop().unwrap();
        out.slack.push(row_slack * Q::from_integer(l.clone()));
        out.a_tilde.push(ints);
        out.b_tilde.push(b);
        out.row_scalers.push(l);
        out.origin.push(origin);
    };

    for (j, (a, &b)) in lp.a().iter().zip(lp.b()).enumerate() {
        let ak: Vec<Q> = pivots.iter().map(|&p| rational::q(a[p])).collect();
        let coef: Vec<Q> = free
            .iter()
            .enumerate()
            .map(|(fi, &col)| {
                let sub = ak.iter().zip(&r_free).fold(Q::zero(), |acc, (akv, rr)| acc + akv * &rr[fi]);
                rational::q(a[col]) - sub
            })
            .collect();
        let rhs = rational::q(b) - rational::dot(&ak, &r_rhs);
        push(coef, rhs, slack.clone(), RowOrigin::Constraint(j));
    }
    // x_K = r − R_F x_F >= 0  ⇔  R_F x_F <= r
    for (pi, &p) in pivots.iter().enumerate() {
        push(r_free[pi].clone(), r_rhs[pi].clone(), Q::zero(), RowOrigin::Eliminated(p));
    }
    Ok(out)
}

/// `k²(k−1)!U^{k+1}`.
pub fn entry_growth_bound(k: usize, u: i64) -> BigInt {
    if k == 0 {
        return BigInt::from(u);
    }
    let fact: BigInt = (1..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    BigInt::from(k * k) * fact * BigInt::from(u).pow(k as u32 + 1)
}

/// Slack `η = 1/(2(d+1)((d+1)U)^{d+1})`.
pub fn slack_eta(d: usize, u: i64) -> Q {
    let base = BigInt::from((d as i64 + 1) * u).pow(d as u32 + 1);
    Q::new(BigInt::one(), BigInt::from(2 * (d as i64 + 1)) * base)
}

/// `η / ((d+1)U)^{2(d+1)}`, a lower bound on the margin of the slacked,
/// reduced and homogenised system.
pub fn margin_lower_bound(d: usize, u: i64, _k: usize, eta: &Q) -> Q {
    let base = BigInt::from((d as i64 + 1) * u).pow(2 * (d as u32 + 1));
    eta / Q::from_integer(base)
}

/// `((d+1)U)^{d+1}`, a bound on every coordinate of a vertex of an integer
/// system with entries at most `U`.
pub fn vertex_coordinate_bound(d: usize, u: i64) -> BigInt {
    BigInt::from((d as i64 + 1) * u).pow(d as u32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};

    fn eqs(rows: &[&[i64]]) -> EqualitySystem {
        let aug: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect();
        let dim = aug[0].len() - 1;
        EqualitySystem::new(
            aug.iter().map(|r| r[..dim].to_vec()).collect(),
            aug.iter().map(|r| r[dim].clone()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pivot_examples() {
        let id = vec![vec![q(1), q(0)], vec![q(0), q(1)]];
        assert_eq!(select_pivot_columns(&id).unwrap(), vec![0, 1]);
        assert_eq!(select_pivot_columns(&[vec![q(0), q(2), q(1)]]).unwrap(), vec![1]);
        assert_eq!(
            select_pivot_columns(&[vec![q(1), q(2)], vec![q(2), q(4)]]),
            Err(Error::RankDeficient { rank: 1, rows: 2 })
        );
    }

    #[test]
    fn eliminate_substitutes_by_hand() {
        let lp = LpInstance::new(vec![vec![1, 1]], vec![3], 3).unwrap();
        let eq = eqs(&[&[0, 1, 1]]);
        let red = eliminate(&lp, &eq, &q(0)).unwrap();
        assert_eq!(red.dim(), 1);
        assert_eq!(red.a_tilde[0], vec![BigInt::from(1)]);
        assert_eq!(red.b_tilde[0], BigInt::from(2));
        assert_eq!(red.origin[0], RowOrigin::Constraint(0));
        assert_eq!(red.back_map(&[q(5)]).unwrap(), vec![q(5), q(1)]);
        // x₂ = 1 ≥ 0 becomes 0·x₁ <= 1
        assert_eq!(red.origin[1], RowOrigin::Eliminated(1));
        assert_eq!(red.a_tilde[1], vec![BigInt::zero()]);
        assert_eq!(red.b_tilde[1], BigInt::from(1));
    }

    #[test]
    fn back_map_satisfies_equalities() {
        let eq = eqs(&[&[2, 1, -1, 3], &[0, 3, 1, 1]]);
        let lp = LpInstance::new(vec![vec![1, 1, 1]], vec![3], 3).unwrap();
        let red = eliminate(&lp, &eq, &q_frac(1, 7)).unwrap();
        for v in [q(0), q_frac(3, 5), q(-4)] {
            let x = red.back_map(&[v]).unwrap();
            assert!(eq.is_satisfied_by(&x));
        }
        assert_eq!(red.slack[0], q_frac(1, 7) * Q::from_integer(red.row_scalers[0].clone()));
    }

    #[test]
    fn growth_bound_values_and_small_k_counterexample() {
        assert_eq!(entry_growth_bound(1, 1), BigInt::from(1));
        assert_eq!(entry_growth_bound(2, 3), BigInt::from(4 * 27));
        assert_eq!(entry_growth_bound(3, 2), BigInt::from(9 * 2 * 16));

        // One tight row x₁ + x₂ = 0 eliminating x₁ from x₁ − x₂ <= 0 gives −2x₂,
        // above U² = 1.
        let lp = LpInstance::new(vec![vec![1, -1]], vec![0], 1).unwrap();
        let red = eliminate(&lp, &eqs(&[&[1, 1, 0]]), &q(0)).unwrap();
        assert_eq!(red.a_tilde[0], vec![BigInt::from(-2)]);
    }

    #[test]
    fn margin_bound_examples() {
        assert_eq!(margin_lower_bound(1, 1, 0, &q_frac(1, 8)), q_frac(1, 128));
        let eta = q_frac(1, 8);
        assert!(margin_lower_bound(1, 2, 0, &eta) < margin_lower_bound(1, 1, 0, &eta));
        assert!(margin_lower_bound(2, 1, 0, &eta) < margin_lower_bound(1, 1, 0, &eta));
        for d in 1..=4 {
            for u in 1..=4 {
                let eta = slack_eta(d, u);
                let cube = &eta * &eta * &eta;
                assert!(margin_lower_bound(d, u, 0, &eta) >= cube);
            }
        }
        assert_eq!(slack_eta(1, 1), q_frac(1, 16));
    }

    #[test]
    fn canonical_union_and_inconsistency() {
        let a = EqualitySystem::canonical(&[vec![q(1), q(1), q(2)]], 2).unwrap();
        let b = EqualitySystem::canonical(&[vec![q(1), q(-1), q(0)]], 2).unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.c(), &[vec![q(1), q(0)], vec![q(0), q(1)]]);
        assert_eq!(u.g(), &[q(1), q(1)]);
        let bad = EqualitySystem::canonical(&[vec![q(1), q(0), q(1)], vec![q(1), q(0), q(2)]], 2);
        assert!(bad.is_none());
    }
}
