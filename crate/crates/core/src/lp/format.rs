//! Plain-text instance format.
//!
//! ```text
//! # optional comments
//! n d U
//! a_11 ... a_1d b_1
//! ...
//! ```

use std::fmt::Write as _;

use super::LpInstance;
use crate::error::{Error, Result};

pub fn parse_lp(text: &str) -> Result<LpInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let header = ints(hline, header)?;
    let [n, d, u] = header[..] else {
        return Err(Error::Parse { line: hline, msg: "header must be `n d U`".into() });
    };
    if n < 1 || d < 1 || u < 1 {
        return Err(Error::Parse { line: hline, msg: "n, d and U must be positive".into() });
    }
    let (n, d) = (n as usize, d as usize);

    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for (line, body) in lines.by_ref().take(n) {
        let mut row = ints(line, body)?;
        if row.len() != d + 1 {
            return Err(Error::Parse { line, msg: format!("expected {} integers, found {}", d + 1, row.len()) });
        }
        b.push(row.pop().unwrap());
        a.push(row);
    }
    if a.len() != n {
        return Err(Error::Parse { line: text.lines().count(), msg: format!("expected {n} rows, found {}", a.len()) });
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse { line, msg: "trailing data after last row".into() });
    }
    LpInstance::new(a, b, u)
}

fn ints(line: usize, s: &str) -> Result<Vec<i64>> {
    s.split_whitespace()
        .map(|tok| tok.parse::<i64>().map_err(|e| Error::Parse { line, msg: format!("`{tok}`: {e}") }))
        .collect()
}

/// Serialises an instance, preceded by `comments` rendered as `#` lines.
pub fn write_lp(lp: &LpInstance, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{} {} {}", lp.n(), lp.d(), lp.bound());
    for (row, b) in lp.a().iter().zip(lp.b()) {
        for v in row {
            let _ = write!(out, "{v} ");
        }
        let _ = writeln!(out, "{b}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let lp = LpInstance::new(vec![vec![1, -2], vec![0, 3]], vec![4, -1], 4).unwrap();
        let text = write_lp(&lp, &["seed 7".to_string()]);
        assert!(text.starts_with("# seed 7\n2 2 4\n"));
        assert_eq!(parse_lp(&text).unwrap(), lp);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\n1 2 3 # n d U\n  1 2   3 # row\n";
        let lp = parse_lp(text).unwrap();
        assert_eq!(lp.a(), &[vec![1, 2]]);
        assert_eq!(lp.b(), &[3]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse_lp(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_lp("1 2 3\n1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_lp("2 1 3\n1 2\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_lp("1 1 3\n1 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_lp("1 1 1\n2 0\n"), Err(Error::EntryOutOfBounds { .. })));
    }
}
