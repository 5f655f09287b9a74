//! 1-WL colour refinement on MILP graphs, its lift to formulae, foldability
//! and indistinguishability.
//!
//! Colours come from a [`ColourDictionary`] that assigns the next unused
//! integer to each new key. Keys carry the node side and the iteration, so
//! constraint and variable colours never collide and every iteration
//! introduces fresh ids.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::cnf::Formula;
use crate::error::WlError;
use crate::graph::{to_graph, BipartiteGraph};
use crate::milp::encode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Constraint,
    Variable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ColourKey {
    Initial { side: Side, label: Option<i64> },
    Refined { side: Side, iteration: usize, previous: u32, neighbours: Vec<(u32, i8)> },
}

/// Injective map from colour keys to natural numbers.
#[derive(Debug, Default)]
pub struct ColourDictionary {
    ids: HashMap<ColourKey, u32>,
}

impl ColourDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    fn id(&mut self, key: ColourKey) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(key).or_insert(next)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Per-iteration node colours; index 0 is the initial colouring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colouring {
    pub constraint: Vec<Vec<u32>>,
    pub variable: Vec<Vec<u32>>,
}

impl Colouring {
    /// Number of refinement iterations (excluding the initial colouring).
    pub fn iterations(&self) -> usize {
        self.constraint.len() - 1
    }

    pub fn final_constraint(&self) -> &[u32] {
        self.constraint.last().expect("initial colouring")
    }

    pub fn final_variable(&self) -> &[u32] {
        self.variable.last().expect("initial colouring")
    }

    /// `(constraint, variable)` colour counts at iteration `t`.
    pub fn histogram(&self, t: usize) -> (BTreeMap<u32, usize>, BTreeMap<u32, usize>) {
        (histogram(&self.constraint[t]), histogram(&self.variable[t]))
    }

    /// Number of colour classes at iteration `t`, both sides together.
    pub fn class_count(&self, t: usize) -> usize {
        let (c, v) = self.histogram(t);
        c.len() + v.len()
    }
}

fn histogram(colours: &[u32]) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for &c in colours {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

/// Adjacency of a base graph, prepared for refinement.
struct Refiner {
    labels: Vec<i64>,
    constraint_adj: Vec<Vec<(usize, i8)>>,
    variable_adj: Vec<Vec<(usize, i8)>>,
}

impl Refiner {
    fn new(g: &BipartiteGraph) -> Result<Self, WlError> {
        if g.feature_dims() != (1, 0) {
            return Err(WlError::NotBaseGraph(g.feature_dims()));
        }
        let labels = g.constraint_features().iter().map(|&b| b as i64).collect();
        let mut constraint_adj = vec![Vec::new(); g.num_constraints()];
        let mut variable_adj = vec![Vec::new(); g.num_variables()];
        for e in g.edges() {
            constraint_adj[e.c].push((e.v, e.weight));
            variable_adj[e.v].push((e.c, e.weight));
        }
        Ok(Refiner { labels, constraint_adj, variable_adj })
    }

    fn initial(&self, dict: &mut ColourDictionary) -> (Vec<u32>, Vec<u32>) {
        let c = self.labels.iter().map(|&b| dict.id(ColourKey::Initial { side: Side::Constraint, label: Some(b) })).collect();
        let v = (0..self.variable_adj.len())
            .map(|_| dict.id(ColourKey::Initial { side: Side::Variable, label: None }))
            .collect();
        (c, v)
    }

    fn step(&self, dict: &mut ColourDictionary, iteration: usize, prev_c: &[u32], prev_v: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let side_step = |dict: &mut ColourDictionary, side: Side, adj: &[Vec<(usize, i8)>], own: &[u32], other: &[u32]| {
            adj.iter()
                .zip(own)
                .map(|(nbrs, &previous)| {
                    let mut neighbours: Vec<(u32, i8)> = nbrs.iter().map(|&(u, w)| (other[u], w)).collect();
                    neighbours.sort_unstable();
                    dict.id(ColourKey::Refined { side, iteration, previous, neighbours })
                })
                .collect::<Vec<u32>>()
        };
        let c = side_step(dict, Side::Constraint, &self.constraint_adj, prev_c, prev_v);
        let v = side_step(dict, Side::Variable, &self.variable_adj, prev_v, prev_c);
        (c, v)
    }

    fn order(&self) -> usize {
        self.labels.len() + self.variable_adj.len()
    }
}

/// Runs `m + n` refinement iterations on a base graph.
pub fn wl_colour(g: &BipartiteGraph) -> Result<Colouring, WlError> {
    let refiner = Refiner::new(g)?;
    let mut dict = ColourDictionary::new();
    Ok(run(&refiner, &mut dict, refiner.order()))
}

fn run(refiner: &Refiner, dict: &mut ColourDictionary, iterations: usize) -> Colouring {
    let (c0, v0) = refiner.initial(dict);
    let mut constraint = vec![c0];
    let mut variable = vec![v0];
    for t in 1..=iterations {
        let (c, v) = refiner.step(dict, t, &constraint[t - 1], &variable[t - 1]);
        constraint.push(c);
        variable.push(v);
    }
    Colouring { constraint, variable }
}

/// Colouring of the clauses (constraint side) and letters (variable side) of
/// `f`.
pub fn wl_kcnf(f: &Formula) -> Colouring {
    wl_colour(&to_graph(&encode(f))).expect("encoded graphs carry base features")
}

/// True iff two clauses or two letters share a colour after refinement.
pub fn is_foldable(f: &Formula) -> bool {
    let col = wl_kcnf(f);
    has_repeat(col.final_constraint()) || has_repeat(col.final_variable())
}

fn has_repeat(colours: &[u32]) -> bool {
    let mut sorted = colours.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Runs refinement on both graphs with a shared dictionary and compares the
/// constraint and variable colour histograms at every iteration.
pub fn graphs_indistinguishable(g: &BipartiteGraph, h: &BipartiteGraph) -> Result<bool, WlError> {
    Ok(compare(g, h)?.indistinguishable)
}

pub fn indistinguishable(f: &Formula, h: &Formula) -> bool {
    graphs_indistinguishable(&to_graph(&encode(f)), &to_graph(&encode(h))).expect("base graphs")
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramRow {
    pub iteration: usize,
    pub constraint: Vec<(u32, usize)>,
    pub variable: Vec<(u32, usize)>,
}

fn rows(col: &Colouring) -> Vec<HistogramRow> {
    (0..=col.iterations())
        .map(|t| {
            let (c, v) = col.histogram(t);
            HistogramRow { iteration: t, constraint: c.into_iter().collect(), variable: v.into_iter().collect() }
        })
        .collect()
}

/// Single-formula report for the command line.
#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub clauses: usize,
    pub letters: usize,
    pub foldable: bool,
    pub histograms: Vec<HistogramRow>,
}

pub fn fold_report(f: &Formula) -> FoldReport {
    let col = wl_kcnf(f);
    FoldReport {
        clauses: f.num_clauses(),
        letters: f.num_vars(),
        foldable: has_repeat(col.final_constraint()) || has_repeat(col.final_variable()),
        histograms: rows(&col),
    }
}

/// Pairwise report; `first_difference` is the first iteration at which the
/// histograms differ.
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub indistinguishable: bool,
    pub first_difference: Option<usize>,
    pub left: Vec<HistogramRow>,
    pub right: Vec<HistogramRow>,
}

pub fn compare(g: &BipartiteGraph, h: &BipartiteGraph) -> Result<PairReport, WlError> {
    let rg = Refiner::new(g)?;
    let rh = Refiner::new(h)?;
    let mut dict = ColourDictionary::new();
    let iterations = rg.order().max(rh.order());
    // interleave the two runs so both see the same dictionary state per key
    let (gc0, gv0) = rg.initial(&mut dict);
    let (hc0, hv0) = rh.initial(&mut dict);
    let mut left = Colouring { constraint: vec![gc0], variable: vec![gv0] };
    let mut right = Colouring { constraint: vec![hc0], variable: vec![hv0] };
    for t in 1..=iterations {
        let (c, v) = rg.step(&mut dict, t, &left.constraint[t - 1], &left.variable[t - 1]);
        left.constraint.push(c);
        left.variable.push(v);
        let (c, v) = rh.step(&mut dict, t, &right.constraint[t - 1], &right.variable[t - 1]);
        right.constraint.push(c);
        right.variable.push(v);
    }
    let first_difference = (0..=iterations).find(|&t| left.histogram(t) != right.histogram(t));
    Ok(PairReport {
        indistinguishable: first_difference.is_none(),
        first_difference,
        left: rows(&left),
        right: rows(&right),
    })
}

/// The satisfiable/unsatisfiable pair that 1-WL cannot tell apart:
/// exclusive-or constraints around a 6-cycle and around two triangles.
pub fn counterexample_pair() -> (Formula, Formula) {
    (crate::cnf::examples::xor_hexagon(), crate::cnf::examples::xor_triangles())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::examples::*;
    use crate::cnf::{Clause, World};
    use crate::sat::{solve, SolveBudget, SolveStatus};

    fn classes(colours: &[u32]) -> usize {
        histogram(colours).len()
    }

    #[test]
    fn example1_refinement() {
        let col = wl_kcnf(&example1());
        // b = 1 versus b = 0, b = 0
        let c0 = &col.constraint[0];
        assert_ne!(c0[0], c0[1]);
        assert_eq!(c0[1], c0[2]);
        assert_eq!(col.iterations(), 5);
        // swapping p1 and p2 while exchanging clauses 2 and 3 is an
        // automorphism, so the refinement can never split those pairs
        for t in 0..=col.iterations() {
            assert_eq!(col.constraint[t][1], col.constraint[t][2]);
            assert_eq!(col.variable[t][0], col.variable[t][1]);
            assert_ne!(col.constraint[t][0], col.constraint[t][1]);
        }
    }

    #[test]
    fn example1_is_foldable() {
        assert!(is_foldable(&example1()));
    }

    #[test]
    fn star_graph_keeps_leaves_together() {
        let f = Formula::from_dimacs_clauses(3, &[&[1, 2, 3]]).unwrap();
        let col = wl_kcnf(&f);
        for t in 0..=col.iterations() {
            assert_eq!(classes(&col.variable[t]), 1);
        }
        let mixed = Formula::new(3, 3, vec![Clause::from_dimacs(&[1, -2, 3]).unwrap()]).unwrap();
        let col = wl_kcnf(&mixed);
        let last = col.final_variable();
        assert_eq!(last[0], last[2]);
        assert_ne!(last[0], last[1]);
    }

    #[test]
    fn hexagon_histograms() {
        let col = wl_kcnf(&xor_hexagon());
        for t in 0..=col.iterations() {
            let (c, v) = col.histogram(t);
            assert_eq!(c.values().copied().collect::<Vec<_>>(), vec![6, 6]);
            assert_eq!(v.values().copied().collect::<Vec<_>>(), vec![6]);
        }
    }

    #[test]
    fn fresh_ids_and_refinement() {
        let col = wl_kcnf(&xor_hexagon());
        let mut previous: std::collections::HashSet<u32> = std::collections::HashSet::new();
        for t in 0..=col.iterations() {
            let now: std::collections::HashSet<u32> =
                col.constraint[t].iter().chain(&col.variable[t]).copied().collect();
            assert!(now.is_disjoint(&previous));
            previous.extend(now);
        }
        assert!(matches!(wl_colour(&crate::graph::apply_rni(
            &to_graph(&encode(&example1())),
            &crate::graph::RniConfig::new(1.0, 0).unwrap()
        )), Err(WlError::NotBaseGraph((2, 1)))));
    }

    #[test]
    fn xor_pair_is_indistinguishable() {
        let (phi, psi) = counterexample_pair();
        assert!(phi.evaluate(&World::new(vec![true, false, true, false, true, false])).unwrap());
        assert_eq!(solve(&psi, SolveBudget::UNLIMITED).status, SolveStatus::Unsat);
        assert!(indistinguishable(&phi, &psi));
        assert!(is_foldable(&phi));
        assert!(is_foldable(&psi));
    }

    #[test]
    fn distinguishes_by_size() {
        let single = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
        assert!(indistinguishable(&example1(), &example1()));
        let r = compare(&to_graph(&encode(&example1())), &to_graph(&encode(&single))).unwrap();
        assert!(!r.indistinguishable);
        assert_eq!(r.first_difference, Some(0));
    }

    #[test]
    fn unfoldable_formula_exists() {
        // p1 in three clauses, p2 in two, p3 in one: degrees separate all letters
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2], &[1, -2], &[-1, 3]]).unwrap();
        assert!(!is_foldable(&f));
    }
}
