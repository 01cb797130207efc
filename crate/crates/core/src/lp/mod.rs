//! LP data types, row normalisation, homogenisation and the rescaling map.
//!
//! A general instance is `Ax <= b, x >= 0` with integer data. The homogeneous
//! form `Ax >= 0, x != 0` is kept with unit-norm rows, which is the only form
//! the perceptron ever consumes.

mod format;

pub use format::{parse_lp, write_lp};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

/// `Ax <= b, x >= 0` with integer entries bounded by `U` in absolute value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpInstance {
    a: Vec<Vec<i64>>,
    b: Vec<i64>,
    bound: i64,
}

impl LpInstance {
    pub fn new(a: Vec<Vec<i64>>, b: Vec<i64>, bound: i64) -> Result<Self> {
        if a.is_empty() || a[0].is_empty() {
            return Err(Error::EmptyInstance);
        }
        if bound < 1 {
            return Err(Error::InvalidSpec(format!("entry bound must be positive, got {bound}")));
        }
        let d = a[0].len();
        if b.len() != a.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            if row.iter().all(|&v| v == 0) {
                return Err(Error::ZeroRow(i));
            }
            for (j, &v) in row.iter().chain(std::iter::once(&b[i])).enumerate() {
                if v.abs() > bound {
                    return Err(Error::EntryOutOfBounds { row: i, col: j, value: v, bound });
                }
            }
        }
        Ok(Self { a, b, bound })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn d(&self) -> usize {
        self.a[0].len()
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn a(&self) -> &[Vec<i64>] {
        &self.a
    }

    pub fn b(&self) -> &[i64] {
        &self.b
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.a[i]
    }

    /// The instance restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let a = rows.iter().map(|&i| self.a[i].clone()).collect();
        let b = rows.iter().map(|&i| self.b[i]).collect();
        Self::new(a, b, self.bound)
    }

    /// Exact slack `b_i - <a_i, x>`.
    pub fn slack_at(&self, i: usize, x: &[Q]) -> Q {
        rational::q(self.b[i]) - rational::dot_int(&self.a[i], x)
    }
}

/// The homogeneous system `Ax >= 0` with unit-norm rows.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousLp {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

/// Rows shorter than this are treated as zero.
const ZERO_ROW_NORM: f64 = 1e-100;

impl HomogeneousLp {
    /// Normalises real rows; fails on zero rows or ragged input.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyInstance)?;
        if dim == 0 {
            return Err(Error::EmptyInstance);
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
                }
                let norm = norm(&row);
                if !(norm > ZERO_ROW_NORM) {
                    return Err(Error::ZeroRow(i));
                }
                Ok(row.into_iter().map(|v| v / norm).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows, dim })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Copy with one row removed (a neighbouring instance).
    pub fn without_row(&self, i: usize) -> Option<Self> {
        if self.rows.len() <= 1 {
            return None;
        }
        let mut rows = self.rows.clone();
        rows.remove(i);
        Some(Self { rows, dim: self.dim })
    }

    /// Copy with one (already normalised on insertion) row appended.
    pub fn with_row(&self, row: Vec<f64>) -> Result<Self> {
        let mut rows = self.rows.clone();
        rows.push(row);
        Self::from_rows(rows)
    }
}

/// Normalises the rows of an integer matrix.
pub fn normalize(a: &[Vec<i64>]) -> Result<HomogeneousLp> {
    HomogeneousLp::from_rows(a.iter().map(|row| row.iter().map(|&v| v as f64).collect()).collect())
}

/// Homogenises `Ax <= b + slack, x >= 0` into `[-A | b + slack; I] y >= 0`
/// over `d + 1` variables, the last one being the scaling variable `x0`.
pub fn homogenize(lp: &LpInstance, slack: &Q) -> Result<HomogeneousLp> {
    let rows = lp.a().iter().zip(lp.b()).map(|(a, &b)| {
        let rhs = rational::to_f64(&(rational::q(b) + slack));
        (a.iter().map(|&v| v as f64).collect::<Vec<_>>(), rhs)
    });
    homogenize_rows(rows, lp.d())
}

/// Homogenises generic rows `<a, x> <= rhs`. Rows that become identically
/// zero (`0 <= 0`) are skipped; identity rows for `x >= 0, x0 >= 0` are
/// appended last.
pub fn homogenize_rows(rows: impl IntoIterator<Item = (Vec<f64>, f64)>, d: usize) -> Result<HomogeneousLp> {
    let mut out: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|(a, rhs)| {
            let mut r: Vec<f64> = a.iter().map(|v| -v).collect();
            r.push(rhs);
            r
        })
        .filter(|r| norm(r) > ZERO_ROW_NORM)
        .collect();
    for j in 0..=d {
        let mut e = vec![0.0; d + 1];
        e[j] = 1.0;
        out.push(e);
    }
    HomogeneousLp::from_rows(out)
}

/// Maps a homogeneous point back to `x = y[..d] / y[d]`; `None` when the
/// scaling coordinate is not strictly positive.
pub fn dehomogenize(y: &[f64]) -> Option<Vec<f64>> {
    let (&y0, head) = y.split_last()?;
    (y0 > 0.0).then(|| head.iter().map(|v| v / y0).collect())
}

/// Applies `A <- A (I - c̄c̄ᵀ/2)` and re-normalises every row.
pub fn rescale(h: &HomogeneousLp, c: &[f64]) -> Result<HomogeneousLp> {
    if c.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: c.len() });
    }
    let cn = norm(c);
    if cn <= 1e-300 {
        return Err(Error::ZeroDirection);
    }
    let cbar: Vec<f64> = c.iter().map(|v| v / cn).collect();
    let rows = h
        .rows()
        .iter()
        .map(|a| {
            let s = 0.5 * dot(a, &cbar);
            let r: Vec<f64> = a.iter().zip(&cbar).map(|(ai, ci)| ai - s * ci).collect();
            debug_assert!(norm(&r) >= ZERO_ROW_NORM);
            r
        })
        .collect();
    HomogeneousLp::from_rows(rows)
}

/// Accumulated map from rescaled coordinates back to the original ones.
///
/// After rescalings by `M_1, ..., M_t` (each `I - c̄c̄ᵀ/2`) the working rows
/// are `A M_1 ... M_t`, so a solution `y` of the rescaled system maps back
/// to `M_1 ... M_t y`; each new factor is multiplied on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct RescalingState {
    b: Vec<Vec<f64>>,
    steps: usize,
}

impl RescalingState {
    pub fn identity(d: usize) -> Self {
        let b = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { b, steps: 0 }
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn step_count(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Records one rescaling along `c`.
    pub fn push(&mut self, c: &[f64]) -> Result<()> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: c.len() });
        }
        let cn = norm(c);
        if cn <= 1e-300 {
            return Err(Error::ZeroDirection);
        }
        let cbar: Vec<f64> = c.iter().map(|v| v / cn).collect();
        // B <- B (I - c̄c̄ᵀ/2) = B - (B c̄) c̄ᵀ / 2
        for row in self.b.iter_mut() {
            let s = 0.5 * dot(row, &cbar);
            for (v, ci) in row.iter_mut().zip(&cbar) {
                *v -= s * ci;
            }
        }
        self.steps += 1;
        Ok(())
    }

    pub fn apply_inverse_map(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: y.len() });
        }
        Ok(self.b.iter().map(|row| dot(row, y)).collect())
    }
}

/// Margin `max_{|x| <= 1} min_i <ā_i, x>`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Margin(pub f64);

impl Margin {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Indices `i` with `<ā_i, x̄> <= 0`. At `x = 0` every index qualifies.
pub fn violated_set(h: &HomogeneousLp, x: &[f64]) -> Vec<usize> {
    let xn = norm(x);
    if xn == 0.0 {
        return (0..h.n()).collect();
    }
    h.rows().iter().enumerate().filter(|(_, a)| dot(a, x) / xn <= 0.0).map(|(i, _)| i).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
