//! k-CNF to 0/1 feasibility program, `A x >= b`, and fixed-format MPS output.
//!
//! A literal `p_j` becomes `x_j` and `¬p_j` becomes `1 - x_j`; a clause is the
//! constraint "sum of its literal terms >= 1". Folding the constants of the
//! negative literals into the right-hand side gives `A ∈ {-1,0,1}^{m×n}` and
//! `b_i = 1 - neg_i`.

use std::fmt::Write as _;

use crate::cnf::Formula;
use crate::error::MilpError;

/// Largest `n` accepted by [`feasible_bruteforce`].
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpInstance {
    num_vars: usize,
    /// Sparse rows of `A`: `(column, coefficient)` sorted by column.
    rows: Vec<Vec<(usize, i8)>>,
    rhs: Vec<i64>,
}

impl MilpInstance {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn row(&self, i: usize) -> &[(usize, i8)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, i8)>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[i64] {
        &self.rhs
    }

    /// `A[i][j]` with 0-based indices.
    pub fn coefficient(&self, i: usize, j: usize) -> i8 {
        self.rows[i].iter().find(|&&(c, _)| c == j).map_or(0, |&(_, a)| a)
    }

    pub fn dense(&self) -> Vec<Vec<i8>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![0i8; self.num_vars];
                for &(j, a) in r {
                    row[j] = a;
                }
                row
            })
            .collect()
    }

    /// True iff `A x >= b` for the 0/1 vector `x`.
    pub fn satisfied_by(&self, x: &[bool]) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, &b)| {
            let lhs: i64 = row.iter().map(|&(j, a)| if x[j] { i64::from(a) } else { 0 }).sum();
            lhs >= b
        })
    }
}

/// Encodes `f` row by row in clause order.
pub fn encode(f: &Formula) -> MilpInstance {
    let mut rows = Vec::with_capacity(f.num_clauses());
    let mut rhs = Vec::with_capacity(f.num_clauses());
    for c in f.clauses() {
        // literals are sorted by variable, so the row is sorted by column
        let row: Vec<(usize, i8)> =
            c.literals().iter().map(|l| (l.var() as usize - 1, if l.is_positive() { 1 } else { -1 })).collect();
        rhs.push(1 - c.negative_count() as i64);
        rows.push(row);
    }
    MilpInstance { num_vars: f.num_vars(), rows, rhs }
}

/// Some feasible 0/1 vector, searching `{0,1}^n` in binary order.
pub fn find_feasible(m: &MilpInstance) -> Result<Option<Vec<bool>>, MilpError> {
    let n = m.num_vars();
    if n > BRUTE_FORCE_CAP {
        return Err(MilpError::CapExceeded { num_vars: n, cap: BRUTE_FORCE_CAP });
    }
    let mut x = vec![false; n];
    for bits in 0..(1u64 << n) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = (bits >> j) & 1 == 1;
        }
        if m.satisfied_by(&x) {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

pub fn feasible_bruteforce(m: &MilpInstance) -> Result<bool, MilpError> {
    find_feasible(m).map(|x| x.is_some())
}

fn field(out: &mut String, text: &str, width: usize) {
    let _ = write!(out, "{text:<width$}");
}

/// Fixed-format MPS. One `G` row `c{i}` per constraint, binary columns
/// `x{j}` between integer markers, every right-hand side (zeros included)
/// and a `BV` bound per column. The free row `obj` carries no coefficients.
pub fn to_mps(m: &MilpInstance, name: &str) -> String {
    let mut out = String::new();
    // fields start at columns 2, 5, 15, 25, 40, 50 (1-based)
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    out.push_str(" N  obj\n");
    for i in 0..m.num_rows() {
        let _ = writeln!(out, " G  c{}", i + 1);
    }
    out.push_str("COLUMNS\n");
    let mut by_column: Vec<Vec<(usize, i8)>> = vec![Vec::new(); m.num_vars()];
    for (i, row) in m.rows().iter().enumerate() {
        for &(j, a) in row {
            by_column[j].push((i, a));
        }
    }
    if m.num_vars() > 0 {
        out.push_str("    MARKER                 'MARKER'                 'INTORG'\n");
    }
    for (j, entries) in by_column.iter().enumerate() {
        let col = format!("x{}", j + 1);
        if entries.is_empty() {
            // keep the column declared
            out.push_str("    ");
            field(&mut out, &col, 10);
            field(&mut out, "obj", 10);
            out.push_str(&format!("{:>12}\n", 0));
        }
        for &(i, a) in entries {
            out.push_str("    ");
            field(&mut out, &col, 10);
            field(&mut out, &format!("c{}", i + 1), 10);
            out.push_str(&format!("{a:>12}\n"));
        }
    }
    if m.num_vars() > 0 {
        out.push_str("    MARKER                 'MARKER'                 'INTEND'\n");
    }
    out.push_str("RHS\n");
    for (i, b) in m.rhs().iter().enumerate() {
        out.push_str("    ");
        field(&mut out, "RHS", 10);
        field(&mut out, &format!("c{}", i + 1), 10);
        out.push_str(&format!("{b:>12}\n"));
    }
    out.push_str("BOUNDS\n");
    for j in 0..m.num_vars() {
        let _ = writeln!(out, " BV BND       x{}", j + 1);
    }
    out.push_str("ENDATA\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::examples::*;
    use crate::cnf::{Clause, Formula};

    #[test]
    fn example1_matrix() {
        let m = encode(&example1());
        assert_eq!(m.dense(), vec![vec![1, 1], vec![1, -1], vec![-1, 1]]);
        assert_eq!(m.rhs(), &[1, 0, 0]);
        assert!(feasible_bruteforce(&m).unwrap());
        assert_eq!(find_feasible(&m).unwrap(), Some(vec![true, true]));
    }

    #[test]
    fn single_clauses() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        let m = encode(&f);
        assert_eq!(m.dense(), vec![vec![1, 1]]);
        assert_eq!(m.rhs(), &[1]);

        let f = Formula::new(3, 3, vec![Clause::from_dimacs(&[-1, -2, -3]).unwrap()]).unwrap();
        let m = encode(&f);
        assert_eq!(m.dense(), vec![vec![-1, -1, -1]]);
        assert_eq!(m.rhs(), &[-2]);
    }

    #[test]
    fn xor_pair_instances() {
        let phi = encode(&xor_hexagon());
        assert!(phi.satisfied_by(&[true, false, true, false, true, false]));
        assert!(feasible_bruteforce(&phi).unwrap());
        assert!(!feasible_bruteforce(&encode(&xor_triangles())).unwrap());
        for (row, &b) in phi.rows().iter().zip(phi.rhs()) {
            let a = row[0].1;
            assert!(row.iter().all(|&(_, x)| x == a));
            assert_eq!(b, i64::from(a));
        }
    }

    #[test]
    fn cap() {
        let f = Formula::empty(2, 25).unwrap();
        assert!(feasible_bruteforce(&encode(&f)).is_err());
    }

    #[test]
    fn mps_layout() {
        let mps = to_mps(&encode(&example1()), "example1");
        let g_rows = mps.lines().filter(|l| l.starts_with(" G  ")).count();
        assert_eq!(g_rows, 3);
        let bv = mps.lines().filter(|l| l.starts_with(" BV ")).count();
        assert_eq!(bv, 2);
        let rhs: Vec<i64> = mps
            .lines()
            .skip_while(|l| *l != "RHS")
            .skip(1)
            .take_while(|l| l.starts_with(' '))
            .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
            .collect();
        assert_eq!(rhs, vec![1, 0, 0]);
        assert!(!mps.contains("OBJSENSE"));
        assert!(mps.lines().any(|l| l == "    x1        c2                   1"));
        assert!(mps.ends_with("ENDATA\n"));
    }

    #[test]
    fn empty_mps() {
        let mps = to_mps(&encode(&Formula::empty(2, 0).unwrap()), "empty");
        assert_eq!(mps, "NAME          empty\nROWS\n N  obj\nCOLUMNS\nRHS\nBOUNDS\nENDATA\n");
    }
}
