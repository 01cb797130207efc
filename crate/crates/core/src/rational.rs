//! Exact rational helpers shared by elimination, sanitization and the oracles.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_frac(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Lossless conversion: every finite `f64` is a dyadic rational.
pub fn from_f64_exact(v: f64) -> Q {
    Q::from_float(v).expect("finite float")
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        // num-rational gives up on huge numerators/denominators; go through logs.
        let n = v.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = v.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn dot(a: &[Q], x: &[Q]) -> Q {
    a.iter().zip(x).fold(Q::zero(), |acc, (ai, xi)| acc + ai * xi)
}

pub fn dot_int(a: &[i64], x: &[Q]) -> Q {
    a.iter().zip(x).filter(|(ai, _)| **ai != 0).fold(Q::zero(), |acc, (ai, xi)| acc + xi * BigInt::from(*ai))
}

/// Reduced row-echelon form. Zero rows are removed; returns the rows and the
/// pivot column of each.
pub fn rref(rows: &[Vec<Q>]) -> (Vec<Vec<Q>>, Vec<usize>) {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(rows: &[Vec<Q>]) -> usize {
    rref(rows).1.len()
}

/// Solves a square system exactly; `None` when singular.
pub fn solve_square(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, p);
        let inv = m[c][c].recip();
        for v in m[c].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot_row = m[c].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == c || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Multiplies a rational row by the lcm of its denominators, returning the
/// integer row and the (positive) multiplier.
pub fn clear_denominators(row: &[Q]) -> (Vec<BigInt>, BigInt) {
    let l = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints = row.iter().map(|v| (v * Q::from_integer(l.clone())).to_integer()).collect();
    (ints, l)
}

/// Fraction-free (Bareiss) forward elimination over the integers.
/// Returns the pivot columns, chosen greedily left to right.
pub fn bareiss_pivots(rows: &[Vec<BigInt>]) -> Vec<usize> {
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in (r + 1)..m.len() {
            for j in (c + 1)..ncols {
                let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Best rational approximation with denominator at most `max_den`, via
/// continued-fraction convergents and the final semiconvergent.
pub fn best_rational(x: &Q, max_den: u64) -> Q {
    let max_den = BigInt::from(max_den);
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut r = x.clone();
    loop {
        let a = r.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > max_den {
            let k = (&max_den - &q0) / &q1;
            let semi = Q::new(&p0 + &k * &p1, &q0 + &k * &q1);
            let conv = Q::new(p1, q1);
            return if (&semi - x).abs() < (&conv - x).abs() { semi } else { conv };
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = &r - Q::from_integer(a);
        if frac.is_zero() {
            return Q::new(p1, q1);
        }
        r = frac.recip();
    }
}
