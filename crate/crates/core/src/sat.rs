//! Complete DPLL decision procedure used to label datasets.
//!
//! Unit propagation uses two watched literals per clause. Pure literals are
//! fixed once at the root. Branching picks the unassigned variable with the
//! most occurrences in the currently shortest unsatisfied clauses (lowest
//! index on ties) and tries the positive polarity first. Backtracking is
//! chronological; there is no clause learning.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cnf::{Formula, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SolveStatus {
    Sat,
    Unsat,
    Unknown,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Sat => "SAT",
            SolveStatus::Unsat => "UNSAT",
            SolveStatus::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub decisions: u64,
    pub propagations: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present iff `status` is SAT.
    pub model: Option<World>,
    pub stats: SolveStats,
}

/// Limits after which [`solve`] gives up with [`SolveStatus::Unknown`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveBudget {
    pub max_decisions: Option<u64>,
    pub wall_clock: Option<Duration>,
}

impl SolveBudget {
    pub const UNLIMITED: SolveBudget = SolveBudget { max_decisions: None, wall_clock: None };

    pub fn decisions(limit: u64) -> Self {
        SolveBudget { max_decisions: Some(limit), wall_clock: None }
    }
}

// Literal encoding: 2 * (var - 1) + (0 if positive else 1).
type Lit = usize;

#[inline]
fn lit_of(var0: usize, positive: bool) -> Lit {
    2 * var0 + usize::from(!positive)
}

#[inline]
fn neg(l: Lit) -> Lit {
    l ^ 1
}

#[inline]
fn var_of(l: Lit) -> usize {
    l >> 1
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    True,
    False,
    Unassigned,
}

struct Decision {
    trail_len: usize,
    lit: Lit,
    flipped: bool,
}

struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assign: Vec<Option<bool>>,
    trail: Vec<Lit>,
    qhead: usize,
    decisions: Vec<Decision>,
    stats: SolveStats,
}

impl Solver {
    fn new(f: &Formula) -> Self {
        let n = f.num_vars();
        let clauses: Vec<Vec<Lit>> = f
            .clauses()
            .iter()
            .map(|c| c.literals().iter().map(|l| lit_of(l.var() as usize - 1, l.is_positive())).collect())
            .collect();
        let mut watches = vec![Vec::new(); 2 * n];
        for (ci, c) in clauses.iter().enumerate() {
            watches[c[0]].push(ci);
            watches[c[1]].push(ci);
        }
        Solver {
            clauses,
            watches,
            assign: vec![None; n],
            trail: Vec::with_capacity(n),
            qhead: 0,
            decisions: Vec::new(),
            stats: SolveStats::default(),
        }
    }

    #[inline]
    fn value(&self, l: Lit) -> Value {
        match self.assign[var_of(l)] {
            None => Value::Unassigned,
            Some(v) => {
                if v == (l & 1 == 0) {
                    Value::True
                } else {
                    Value::False
                }
            }
        }
    }

    fn enqueue(&mut self, l: Lit) {
        self.assign[var_of(l)] = Some(l & 1 == 0);
        self.trail.push(l);
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let falsified = neg(self.trail[self.qhead]);
            self.qhead += 1;
            let mut watching = std::mem::take(&mut self.watches[falsified]);
            let mut keep = 0;
            let mut conflict = false;
            let mut idx = 0;
            while idx < watching.len() {
                let ci = watching[idx];
                idx += 1;
                if conflict {
                    watching[keep] = ci;
                    keep += 1;
                    continue;
                }
                let clause = &mut self.clauses[ci];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let other = clause[0];
                let other_val = match self.assign[var_of(other)] {
                    None => Value::Unassigned,
                    Some(v) if v == (other & 1 == 0) => Value::True,
                    Some(_) => Value::False,
                };
                if other_val == Value::True {
                    watching[keep] = ci;
                    keep += 1;
                    continue;
                }
                let mut moved = false;
                for pos in 2..clause.len() {
                    let cand = clause[pos];
                    let cand_false = matches!(self.assign[var_of(cand)], Some(v) if v != (cand & 1 == 0));
                    if !cand_false {
                        clause.swap(1, pos);
                        self.watches[cand].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                watching[keep] = ci;
                keep += 1;
                if other_val == Value::False {
                    conflict = true;
                } else {
                    self.stats.propagations += 1;
                    self.enqueue(other);
                }
            }
            watching.truncate(keep);
            self.watches[falsified] = watching;
            if conflict {
                return false;
            }
        }
        true
    }

    fn assign_pure_literals(&mut self) {
        loop {
            let n = self.assign.len();
            let mut pos = vec![false; n];
            let mut negs = vec![false; n];
            for c in &self.clauses {
                if c.iter().any(|&l| self.value(l) == Value::True) {
                    continue;
                }
                for &l in c {
                    if self.assign[var_of(l)].is_none() {
                        if l & 1 == 0 {
                            pos[var_of(l)] = true;
                        } else {
                            negs[var_of(l)] = true;
                        }
                    }
                }
            }
            let mut changed = false;
            for v in 0..n {
                if self.assign[v].is_none() && pos[v] != negs[v] {
                    self.enqueue(lit_of(v, pos[v]));
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Most occurrences in the shortest unsatisfied clauses; `None` when every
    /// clause is satisfied.
    fn pick_branch(&self) -> Option<usize> {
        let n = self.assign.len();
        let mut shortest = usize::MAX;
        let mut counts = vec![0u32; n];
        for c in &self.clauses {
            let mut free = 0;
            let mut satisfied = false;
            for &l in c {
                match self.value(l) {
                    Value::True => {
                        satisfied = true;
                        break;
                    }
                    Value::Unassigned => free += 1,
                    Value::False => {}
                }
            }
            if satisfied || free == 0 {
                continue;
            }
            if free < shortest {
                shortest = free;
                counts.iter_mut().for_each(|x| *x = 0);
            }
            if free == shortest {
                for &l in c {
                    if self.assign[var_of(l)].is_none() {
                        counts[var_of(l)] += 1;
                    }
                }
            }
        }
        if shortest == usize::MAX {
            return None;
        }
        let mut best = None;
        let mut best_count = 0;
        for (v, &cnt) in counts.iter().enumerate() {
            if cnt > best_count {
                best = Some(v);
                best_count = cnt;
            }
        }
        best
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let l = self.trail.pop().expect("non-empty trail");
            self.assign[var_of(l)] = None;
        }
        self.qhead = len;
    }

    /// Chronological backtrack to the last unflipped decision. False when the
    /// search space is exhausted.
    fn backtrack(&mut self) -> bool {
        while let Some(d) = self.decisions.pop() {
            self.undo_to(d.trail_len);
            if !d.flipped {
                let flipped = neg(d.lit);
                self.decisions.push(Decision { trail_len: d.trail_len, lit: flipped, flipped: true });
                self.enqueue(flipped);
                return true;
            }
        }
        false
    }

    fn run(&mut self, budget: SolveBudget, start: Instant) -> SolveStatus {
        self.assign_pure_literals();
        if !self.propagate() {
            return SolveStatus::Unsat;
        }
        loop {
            match self.pick_branch() {
                None => return SolveStatus::Sat,
                Some(v) => {
                    if budget.max_decisions.is_some_and(|limit| self.stats.decisions >= limit)
                        || budget.wall_clock.is_some_and(|limit| start.elapsed() >= limit)
                    {
                        return SolveStatus::Unknown;
                    }
                    self.stats.decisions += 1;
                    let lit = lit_of(v, true);
                    self.decisions.push(Decision { trail_len: self.trail.len(), lit, flipped: false });
                    self.enqueue(lit);
                }
            }
            while !self.propagate() {
                if !self.backtrack() {
                    return SolveStatus::Unsat;
                }
            }
        }
    }
}

/// Decides satisfiability of `f` within `budget`.
pub fn solve(f: &Formula, budget: SolveBudget) -> SolveResult {
    let start = Instant::now();
    let mut solver = Solver::new(f);
    let status = solver.run(budget, start);
    let model = (status == SolveStatus::Sat)
        .then(|| World::new(solver.assign.iter().map(|a| a.unwrap_or(true)).collect()));
    let mut stats = solver.stats;
    stats.elapsed = start.elapsed();
    SolveResult { status, model, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::examples::*;
    use crate::cnf::{enumerate_models, Formula};
    use crate::generator::gen_formula;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example1_is_sat_with_unique_model() {
        let r = solve(&example1(), SolveBudget::UNLIMITED);
        assert_eq!(r.status, SolveStatus::Sat);
        assert_eq!(r.model.unwrap(), World::new(vec![true, true]));
    }

    #[test]
    fn triangles_unsat_hexagon_sat() {
        assert_eq!(solve(&xor_triangles(), SolveBudget::UNLIMITED).status, SolveStatus::Unsat);
        let r = solve(&xor_hexagon(), SolveBudget::UNLIMITED);
        assert_eq!(r.status, SolveStatus::Sat);
        assert!(xor_hexagon().evaluate(r.model.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn empty_formula_is_sat() {
        let r = solve(&Formula::empty(3, 4).unwrap(), SolveBudget::UNLIMITED);
        assert_eq!(r.status, SolveStatus::Sat);
        assert_eq!(r.model.unwrap().len(), 4);
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = gen_formula(3, 60, 256, &mut rng).unwrap();
        let r = solve(&f, SolveBudget::decisions(0));
        // Pure literals and propagation alone rarely settle a formula this size.
        if r.status == SolveStatus::Unknown {
            assert!(r.model.is_none());
        }
        let r = solve(&f, SolveBudget { max_decisions: None, wall_clock: Some(Duration::ZERO) });
        assert!(matches!(r.status, SolveStatus::Unknown) || r.stats.decisions == 0);
    }

    #[test]
    fn agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let k = rng.gen_range(2..=3);
            let n = rng.gen_range(k.max(3)..=12);
            let m = rng.gen_range(1..=7 * n);
            let f = gen_formula(k, n, m.min(crate::cnf::max_clause_count(n, k).unwrap() as usize), &mut rng).unwrap();
            let r = solve(&f, SolveBudget::UNLIMITED);
            let sat = !enumerate_models(&f).unwrap().is_empty();
            assert_eq!(r.status == SolveStatus::Sat, sat, "{f}");
            assert_eq!(r.status == SolveStatus::Unsat, !sat);
            if let Some(w) = r.model {
                assert!(f.evaluate(&w).unwrap());
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = gen_formula(3, 40, 170, &mut rng).unwrap();
        let a = solve(&f, SolveBudget::UNLIMITED);
        let b = solve(&f, SolveBudget::UNLIMITED);
        assert_eq!(a.status, b.status);
        assert_eq!(a.model, b.model);
        assert_eq!(a.stats.decisions, b.stats.decisions);
    }
}
