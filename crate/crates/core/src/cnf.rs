//! Propositional k-CNF formulae, worlds, permutations and DIMACS I/O.
//!
//! Literals inside a clause are kept sorted (by variable, negative before
//! positive) so two clauses with the same literal set compare equal. Clause
//! order inside a [`Formula`] is preserved because it fixes the row order of
//! the MILP encoding and the constraint-node order of the graph; equality of
//! formulae ignores it.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::CnfError;

/// Default bound on the alphabet size accepted by [`enumerate_models`].
pub const DEFAULT_MODEL_CAP: usize = 24;

/// `p_var` or `¬p_var`. Variables are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    var: u32,
    positive: bool,
}

impl Literal {
    pub fn new(var: u32, positive: bool) -> Result<Self, CnfError> {
        if var == 0 {
            return Err(CnfError::ZeroVariable);
        }
        Ok(Literal { var, positive })
    }

    pub fn pos(var: u32) -> Self {
        Literal::new(var, true).expect("variable index must be >= 1")
    }

    pub fn neg(var: u32) -> Self {
        Literal::new(var, false).expect("variable index must be >= 1")
    }

    /// Builds a literal from a signed DIMACS integer.
    pub fn from_dimacs(value: i64) -> Result<Self, CnfError> {
        let var = u32::try_from(value.unsigned_abs()).map_err(|_| CnfError::VariableOutOfRange(value))?;
        Literal::new(var, value > 0)
    }

    pub fn var(self) -> u32 {
        self.var
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    pub fn complement(self) -> Self {
        Literal { var: self.var, positive: !self.positive }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            i64::from(self.var)
        } else {
            -i64::from(self.var)
        }
    }

    /// Truth value of the literal under `w`. `None` if `w` does not cover it.
    pub fn value_in(self, w: &World) -> Option<bool> {
        w.get(self.var).map(|v| v == self.positive)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "p{}", self.var)
        } else {
            write!(f, "¬p{}", self.var)
        }
    }
}

/// A disjunction of literals over pairwise distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(mut literals: Vec<Literal>) -> Result<Self, CnfError> {
        literals.sort_unstable();
        for pair in literals.windows(2) {
            if pair[0].var == pair[1].var {
                return Err(CnfError::RepeatedVariable(pair[0].var));
            }
        }
        Ok(Clause { literals })
    }

    /// Convenience constructor from signed DIMACS integers.
    pub fn from_dimacs(values: &[i64]) -> Result<Self, CnfError> {
        let lits = values.iter().map(|&v| Literal::from_dimacs(v)).collect::<Result<Vec<_>, _>>()?;
        Clause::new(lits)
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn negative_count(&self) -> usize {
        self.literals.iter().filter(|l| !l.positive).count()
    }

    fn max_var(&self) -> u32 {
        self.literals.iter().map(|l| l.var).max().unwrap_or(0)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// A k-CNF formula over the alphabet `p_1..p_n`.
///
/// `comments` holds the text of DIMACS `c` lines seen on parse; dataset files
/// use them to carry labels. `renaming`, when present, maps each dense variable
/// `j` (at position `j - 1`) back to the index it had in the source file.
#[derive(Debug, Clone)]
pub struct Formula {
    k: usize,
    num_vars: usize,
    clauses: Vec<Clause>,
    comments: Vec<String>,
    renaming: Option<Vec<u32>>,
}

impl Formula {
    /// Validates and builds a formula. Clause order is kept as given.
    pub fn new(k: usize, num_vars: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        if k < 2 {
            return Err(CnfError::WidthTooSmall(k));
        }
        let mut seen = HashSet::with_capacity(clauses.len());
        for (i, c) in clauses.iter().enumerate() {
            if c.len() != k {
                return Err(CnfError::NonUniformWidth { clause: i, expected: k, found: c.len() });
            }
            let top = c.max_var() as usize;
            if top > num_vars {
                return Err(CnfError::VariableAboveAlphabet { var: top as u32, num_vars });
            }
            if !seen.insert(c) {
                return Err(CnfError::DuplicateClause(i));
            }
        }
        Ok(Formula { k, num_vars, clauses, comments: Vec::new(), renaming: None })
    }

    /// Empty conjunction over `num_vars` letters.
    pub fn empty(k: usize, num_vars: usize) -> Result<Self, CnfError> {
        Formula::new(k, num_vars, Vec::new())
    }

    /// Builds a formula from rows of signed DIMACS integers; `n` is the largest
    /// variable mentioned.
    pub fn from_dimacs_clauses(k: usize, rows: &[&[i64]]) -> Result<Self, CnfError> {
        let clauses = rows.iter().map(|r| Clause::from_dimacs(r)).collect::<Result<Vec<_>, _>>()?;
        let n = clauses.iter().map(|c| c.max_var() as usize).max().unwrap_or(0);
        Formula::new(k, n, clauses)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn renaming(&self) -> Option<&[u32]> {
        self.renaming.as_deref()
    }

    pub fn with_comments(mut self, comments: Vec<String>) -> Self {
        self.comments = comments;
        self
    }

    pub fn push_comment(&mut self, comment: impl Into<String>) {
        self.comments.push(comment.into());
    }

    /// Looks up a `c <key> <value>` comment, returning the value text.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let rest = c.strip_prefix(key)?;
            rest.starts_with(' ').then(|| rest.trim())
        })
    }

    /// Truth value of the formula under `w`.
    pub fn evaluate(&self, w: &World) -> Result<bool, CnfError> {
        if w.len() < self.num_vars {
            return Err(CnfError::WorldTooSmall { world: w.len(), num_vars: self.num_vars });
        }
        Ok(self
            .clauses
            .iter()
            .all(|c| c.literals.iter().any(|l| l.value_in(w) == Some(true))))
    }

    /// Clause `i` of the result is clause `clause_perm[i]` of `self`, with
    /// each variable `j` renamed to `var_perm[j]`. Both maps are 0-based.
    pub fn apply_permutation(&self, perm: &FormulaPermutation) -> Result<Formula, CnfError> {
        if perm.clause_perm.len() != self.clauses.len() || perm.var_perm.len() != self.num_vars {
            return Err(CnfError::PermutationMismatch {
                clauses: (perm.clause_perm.len(), self.clauses.len()),
                vars: (perm.var_perm.len(), self.num_vars),
            });
        }
        let clauses = perm
            .clause_perm
            .iter()
            .map(|&src| {
                let lits = self.clauses[src]
                    .literals
                    .iter()
                    .map(|l| Literal { var: perm.var_perm[l.var as usize - 1] as u32 + 1, positive: l.positive })
                    .collect();
                Clause::new(lits)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Formula::new(self.k, self.num_vars, clauses)
    }

    /// Number of distinct variables occurring in some clause.
    pub fn occurring_vars(&self) -> usize {
        let mut seen = vec![false; self.num_vars];
        for c in &self.clauses {
            for l in &c.literals {
                seen[l.var as usize - 1] = true;
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    fn sorted_clauses(&self) -> Vec<&Clause> {
        let mut v: Vec<&Clause> = self.clauses.iter().collect();
        v.sort_unstable();
        v
    }
}

/// Equality ignores clause order, comments and the parse renaming.
impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.num_vars == other.num_vars
            && self.clauses.len() == other.clauses.len()
            && self.sorted_clauses() == other.sorted_clauses()
    }
}

impl Eq for Formula {}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// A total truth assignment over `p_1..p_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct World {
    values: Vec<bool>,
}

impl World {
    pub fn new(values: Vec<bool>) -> Self {
        World { values }
    }

    /// The `index`-th world in binary order: bit `j` of `index` is `p_{j+1}`.
    pub fn from_bits(num_vars: usize, index: u64) -> Self {
        World { values: (0..num_vars).map(|j| (index >> j) & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, var: u32) -> Option<bool> {
        self.values.get((var as usize).checked_sub(1)?).copied()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Variable `var_perm[j] + 1` of the result carries the value of `j + 1`.
    pub fn permute(&self, var_perm: &[usize]) -> Result<World, CnfError> {
        if var_perm.len() != self.values.len() || !is_bijection(var_perm) {
            return Err(CnfError::PermutationMismatch {
                clauses: (0, 0),
                vars: (var_perm.len(), self.values.len()),
            });
        }
        let mut out = vec![false; self.values.len()];
        for (j, &target) in var_perm.iter().enumerate() {
            out[target] = self.values[j];
        }
        Ok(World { values: out })
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, &v) in self.values.iter().enumerate() {
            if v {
                write!(f, "p{}", j + 1)?;
            } else {
                write!(f, "¬p{}", j + 1)?;
            }
        }
        Ok(())
    }
}

/// A pair of 0-based bijections: `clause_perm` on clause indices and
/// `var_perm` on variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaPermutation {
    clause_perm: Vec<usize>,
    var_perm: Vec<usize>,
}

impl FormulaPermutation {
    pub fn new(clause_perm: Vec<usize>, var_perm: Vec<usize>) -> Result<Self, CnfError> {
        if !is_bijection(&clause_perm) || !is_bijection(&var_perm) {
            return Err(CnfError::NotABijection);
        }
        Ok(FormulaPermutation { clause_perm, var_perm })
    }

    pub fn identity(m: usize, n: usize) -> Self {
        FormulaPermutation { clause_perm: (0..m).collect(), var_perm: (0..n).collect() }
    }

    pub fn random<R: rand::Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut clause_perm: Vec<usize> = (0..m).collect();
        let mut var_perm: Vec<usize> = (0..n).collect();
        clause_perm.shuffle(rng);
        var_perm.shuffle(rng);
        FormulaPermutation { clause_perm, var_perm }
    }

    pub fn clause_perm(&self) -> &[usize] {
        &self.clause_perm
    }

    pub fn var_perm(&self) -> &[usize] {
        &self.var_perm
    }
}

fn is_bijection(perm: &[usize]) -> bool {
    let mut hit = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || hit[p] {
            return false;
        }
        hit[p] = true;
    }
    true
}

/// Every world over `p_1..p_n` that satisfies `f`, in binary order.
pub fn enumerate_models(f: &Formula) -> Result<Vec<World>, CnfError> {
    enumerate_models_capped(f, DEFAULT_MODEL_CAP)
}

pub fn enumerate_models_capped(f: &Formula, cap: usize) -> Result<Vec<World>, CnfError> {
    let n = f.num_vars();
    if n > cap {
        return Err(CnfError::ModelCapExceeded { num_vars: n, cap });
    }
    // Clause masks: a world (as bits) falsifies clause c iff
    // (bits & pos_mask) == 0 and (!bits & neg_mask) == 0.
    let masks: Vec<(u64, u64)> = f
        .clauses()
        .iter()
        .map(|c| {
            c.literals().iter().fold((0u64, 0u64), |(p, q), l| {
                let bit = 1u64 << (l.var() - 1);
                if l.is_positive() {
                    (p | bit, q)
                } else {
                    (p, q | bit)
                }
            })
        })
        .collect();
    let mut models = Vec::new();
    for bits in 0..(1u64 << n) {
        if masks.iter().all(|&(p, q)| bits & p != 0 || !bits & q != 0) {
            models.push(World::from_bits(n, bits));
        }
    }
    Ok(models)
}

/// `2^k · C(n, k)`, the number of distinct k-clauses over `n` letters.
pub fn max_clause_count(n: usize, k: usize) -> Result<u128, CnfError> {
    if k < 2 || k > n {
        return Err(CnfError::WidthOutOfRange { k, n });
    }
    let mut binom: u128 = 1;
    for i in 0..k as u128 {
        binom = binom * (n as u128 - i) / (i + 1);
    }
    Ok(binom << k)
}

/// Width assigned to a parsed formula that has no clauses.
pub const EMPTY_FORMULA_WIDTH: usize = 3;

/// Parses DIMACS CNF text.
///
/// Variables are renumbered densely (in increasing order of their original
/// index) whenever the occurring variables are not exactly `1..=n`; the
/// original indices are kept in [`Formula::renaming`].
pub fn parse_dimacs(text: &str) -> Result<Formula, CnfError> {
    let mut comments = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut current: Vec<i64> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                comments.push(rest.trim().to_string());
                continue;
            }
        }
        if line.starts_with('%') {
            // SATLIB trailer
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(CnfError::MalformedHeader(format!("second header on line {}", lineno + 1)));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(CnfError::MalformedHeader(line.to_string()));
            }
            let n = parts[2].parse().map_err(|_| CnfError::MalformedHeader(line.to_string()))?;
            let m = parts[3].parse().map_err(|_| CnfError::MalformedHeader(line.to_string()))?;
            header = Some((n, m));
            continue;
        }
        let Some((declared_n, _)) = header else {
            return Err(CnfError::MalformedHeader(format!("clause data before header on line {}", lineno + 1)));
        };
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| CnfError::BadToken { line: lineno + 1, token: tok.to_string() })?;
            if v == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if v.unsigned_abs() as usize > declared_n {
                    return Err(CnfError::VariableOutOfRange(v));
                }
                current.push(v);
            }
        }
    }
    if !current.is_empty() {
        clauses.push(current);
    }
    let (declared_n, declared_m) = header.ok_or_else(|| CnfError::MalformedHeader("missing header".into()))?;
    if clauses.len() != declared_m {
        return Err(CnfError::ClauseCountMismatch { declared: declared_m, found: clauses.len() });
    }

    let mut present = vec![false; declared_n + 1];
    for c in &clauses {
        for &v in c {
            present[v.unsigned_abs() as usize] = true;
        }
    }
    let occurring: Vec<u32> = (1..=declared_n as u32).filter(|&v| present[v as usize]).collect();
    let (num_vars, renaming) = if occurring.len() == declared_n {
        (declared_n, None)
    } else {
        (occurring.len(), Some(occurring))
    };
    let remap = |v: i64| -> i64 {
        match &renaming {
            None => v,
            Some(orig) => {
                let dense = orig.binary_search(&(v.unsigned_abs() as u32)).expect("occurring variable") as i64 + 1;
                dense * v.signum()
            }
        }
    };

    let k = clauses.first().map_or(EMPTY_FORMULA_WIDTH, Vec::len);
    let built = clauses
        .iter()
        .map(|c| {
            let lits = c.iter().map(|&v| Literal::from_dimacs(remap(v))).collect::<Result<Vec<_>, _>>()?;
            Clause::new(lits)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut f = Formula::new(k, num_vars, built)?;
    f.comments = comments;
    f.renaming = renaming;
    Ok(f)
}

/// Writes DIMACS CNF text: comment lines first, then the header and one
/// clause per line.
pub fn emit_dimacs(f: &Formula) -> String {
    let mut out = String::new();
    for c in &f.comments {
        if c.is_empty() {
            out.push_str("c\n");
        } else {
            out.push_str("c ");
            out.push_str(c);
            out.push('\n');
        }
    }
    out.push_str(&format!("p cnf {} {}\n", f.num_vars, f.clauses.len()));
    for c in &f.clauses {
        for l in &c.literals {
            out.push_str(&l.to_dimacs().to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

impl FromStr for Formula {
    type Err = CnfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_dimacs(s)
    }
}

/// Formulae used throughout the tests and the CLI.
pub mod examples {
    use super::Formula;

    /// `{{p1,p2},{p1,¬p2},{¬p1,p2}}`, equivalent to `p1 ∧ p2`.
    pub fn example1() -> Formula {
        Formula::from_dimacs_clauses(2, &[&[1, 2], &[1, -2], &[-1, 2]]).expect("valid")
    }

    fn xor_chain(pairs: &[(i64, i64)]) -> Formula {
        let mut rows: Vec<[i64; 2]> = Vec::new();
        for &(a, b) in pairs {
            rows.push([a, b]);
            rows.push([-a, -b]);
        }
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        Formula::from_dimacs_clauses(2, &refs).expect("valid")
    }

    /// Exclusive-or constraints around the 6-cycle `p1..p6`; satisfiable.
    pub fn xor_hexagon() -> Formula {
        xor_chain(&[(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)])
    }

    /// Exclusive-or constraints around the triangles `p1p2p3` and `p4p5p6`;
    /// unsatisfiable.
    pub fn xor_triangles() -> Formula {
        xor_chain(&[(1, 2), (2, 3), (3, 1), (4, 5), (5, 6), (6, 4)])
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;

    #[test]
    fn parses_example1() {
        let f = parse_dimacs("p cnf 2 3\n1 2 0\n1 -2 0\n-1 2 0").unwrap();
        assert_eq!(f, example1());
        assert_eq!(f.k(), 2);
        assert_eq!(f.num_vars(), 2);
    }

    #[test]
    fn parses_empty_formula() {
        let f = parse_dimacs("p cnf 1 0\n").unwrap();
        assert_eq!(f.num_clauses(), 0);
        assert!(!enumerate_models(&f).unwrap().is_empty());
    }

    #[test]
    fn rejects_repeated_variable() {
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 1 0"), Err(CnfError::RepeatedVariable(1))));
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 -1 0"), Err(CnfError::RepeatedVariable(1))));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_dimacs("p dnf 2 1\n1 2 0"), Err(CnfError::MalformedHeader(_))));
        assert!(matches!(parse_dimacs("1 2 0"), Err(CnfError::MalformedHeader(_))));
        assert!(matches!(parse_dimacs("p cnf 3 2\n1 2 0\n1 2 3 0"), Err(CnfError::NonUniformWidth { .. })));
        assert!(matches!(parse_dimacs("p cnf 2 2\n1 2 0\n2 1 0"), Err(CnfError::DuplicateClause(1))));
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 3 0"), Err(CnfError::VariableOutOfRange(3))));
        assert!(matches!(parse_dimacs("p cnf 2 2\n1 2 0"), Err(CnfError::ClauseCountMismatch { .. })));
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 0"), Err(CnfError::WidthTooSmall(1))));
    }

    #[test]
    fn keeps_comments_and_renames_gaps() {
        let f = parse_dimacs("c label 1\nc n 2 m 2\np cnf 9 2\n3 9 0\n-3 9 0\n").unwrap();
        assert_eq!(f.comment_value("label"), Some("1"));
        assert_eq!(f.num_vars(), 2);
        assert_eq!(f.renaming(), Some(&[3u32, 9][..]));
        assert_eq!(f, Formula::from_dimacs_clauses(2, &[&[1, 2], &[-1, 2]]).unwrap());
    }

    #[test]
    fn clause_spanning_lines_and_trailer() {
        let f = parse_dimacs("p cnf 3 2\n1 2\n 3 0 -1 -2 -3 0\n%\n0\n").unwrap();
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.k(), 3);
    }

    #[test]
    fn emit_round_trips() {
        let e = emit_dimacs(&Formula::empty(2, 0).unwrap());
        assert_eq!(e, "p cnf 0 0\n");
        for f in [example1(), xor_hexagon(), xor_triangles()] {
            let text = emit_dimacs(&f);
            assert_eq!(parse_dimacs(&text).unwrap(), f);
        }
    }

    #[test]
    fn evaluates_example1() {
        let f = example1();
        assert!(f.evaluate(&World::new(vec![true, true])).unwrap());
        assert!(!f.evaluate(&World::new(vec![true, false])).unwrap());
        assert!(f.evaluate(&World::new(vec![true])).is_err());
        let w = World::new(vec![true, false, true, false, true, false]);
        assert!(xor_hexagon().evaluate(&w).unwrap());
    }

    #[test]
    fn models_of_examples() {
        assert_eq!(enumerate_models(&example1()).unwrap(), vec![World::new(vec![true, true])]);
        assert_eq!(enumerate_models(&Formula::empty(2, 1).unwrap()).unwrap().len(), 2);
        assert!(enumerate_models(&xor_triangles()).unwrap().is_empty());
        assert_eq!(enumerate_models(&xor_hexagon()).unwrap().len(), 2);
        let big = Formula::empty(2, 25).unwrap();
        assert!(matches!(enumerate_models(&big), Err(CnfError::ModelCapExceeded { .. })));
    }

    #[test]
    fn permutations() {
        let f = example1();
        assert_eq!(f.apply_permutation(&FormulaPermutation::identity(3, 2)).unwrap(), f);
        let swap = FormulaPermutation::new(vec![0, 1, 2], vec![1, 0]).unwrap();
        let g = f.apply_permutation(&swap).unwrap();
        let expected = Formula::from_dimacs_clauses(2, &[&[2, 1], &[2, -1], &[-2, 1]]).unwrap();
        assert_eq!(g, expected);
        assert!(!enumerate_models(&g).unwrap().is_empty());
        assert!(f.apply_permutation(&FormulaPermutation::identity(2, 2)).is_err());
        assert!(FormulaPermutation::new(vec![0, 0], vec![0]).is_err());
    }

    #[test]
    fn permute_world() {
        let w = World::new(vec![true, false]);
        assert_eq!(w.permute(&[0, 1]).unwrap(), w);
        assert_eq!(w.permute(&[1, 0]).unwrap(), World::new(vec![false, true]));
        assert!(w.permute(&[0]).is_err());
    }

    #[test]
    fn clause_count_bound() {
        assert_eq!(max_clause_count(3, 2).unwrap(), 12);
        assert_eq!(max_clause_count(4, 4).unwrap(), 16);
        assert_eq!(max_clause_count(6, 3).unwrap(), 160);
        assert!(max_clause_count(2, 3).is_err());
        assert!(max_clause_count(5, 1).is_err());
    }
}
