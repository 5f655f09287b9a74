//! Weighted bipartite graphs of feasibility programs.
//!
//! Constraint node `v_i` carries the feature `b_i`; variable nodes carry the
//! empty feature. Each nonzero `A[i][j]` becomes one undirected edge
//! `(v_i, w_j)` of weight `A[i][j]`. Random node initialisation appends one
//! extra feature slot to every node.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::milp::MilpInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    /// Constraint node index.
    pub c: usize,
    /// Variable node index.
    pub v: usize,
    pub weight: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    m: usize,
    n: usize,
    edges: Vec<Edge>,
    constraint_dim: usize,
    variable_dim: usize,
    /// Row-major `m × constraint_dim`.
    constraint_features: Vec<f64>,
    /// Row-major `n × variable_dim`.
    variable_features: Vec<f64>,
}

impl BipartiteGraph {
    pub fn new(
        m: usize,
        n: usize,
        mut edges: Vec<Edge>,
        feature_dims: (usize, usize),
        constraint_features: Vec<f64>,
        variable_features: Vec<f64>,
    ) -> Result<Self, GraphError> {
        let bad = |msg: String| Err(GraphError::Inconsistent(msg));
        if constraint_features.len() != m * feature_dims.0 || variable_features.len() != n * feature_dims.1 {
            return bad("feature table sizes do not match node counts".into());
        }
        edges.sort_unstable();
        for w in edges.windows(2) {
            if (w[0].c, w[0].v) == (w[1].c, w[1].v) {
                return bad(format!("duplicate edge ({}, {})", w[0].c, w[0].v));
            }
        }
        for e in &edges {
            if e.c >= m || e.v >= n || e.weight == 0 {
                return bad(format!("bad edge {e:?}"));
            }
        }
        Ok(BipartiteGraph {
            m,
            n,
            edges,
            constraint_dim: feature_dims.0,
            variable_dim: feature_dims.1,
            constraint_features,
            variable_features,
        })
    }

    pub fn num_constraints(&self) -> usize {
        self.m
    }

    pub fn num_variables(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m + self.n
    }

    /// Sorted by `(constraint, variable)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn feature_dims(&self) -> (usize, usize) {
        (self.constraint_dim, self.variable_dim)
    }

    pub fn constraint_features(&self) -> &[f64] {
        &self.constraint_features
    }

    pub fn variable_features(&self) -> &[f64] {
        &self.variable_features
    }

    pub fn constraint_feature(&self, i: usize) -> &[f64] {
        &self.constraint_features[i * self.constraint_dim..(i + 1) * self.constraint_dim]
    }

    pub fn variable_feature(&self, j: usize) -> &[f64] {
        &self.variable_features[j * self.variable_dim..(j + 1) * self.variable_dim]
    }

    pub fn constraint_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.m];
        self.edges.iter().for_each(|e| d[e.c] += 1);
        d
    }

    pub fn variable_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        self.edges.iter().for_each(|e| d[e.v] += 1);
        d
    }

    /// Relabels nodes: constraint `i` moves to `constraint_perm[i]`, variable
    /// `j` to `variable_perm[j]`.
    pub fn permute(&self, constraint_perm: &[usize], variable_perm: &[usize]) -> Result<Self, GraphError> {
        if constraint_perm.len() != self.m || variable_perm.len() != self.n {
            return Err(GraphError::Inconsistent("permutation size mismatch".into()));
        }
        let mut cf = vec![0.0; self.constraint_features.len()];
        for (i, &t) in constraint_perm.iter().enumerate() {
            cf[t * self.constraint_dim..(t + 1) * self.constraint_dim].copy_from_slice(self.constraint_feature(i));
        }
        let mut vf = vec![0.0; self.variable_features.len()];
        for (j, &t) in variable_perm.iter().enumerate() {
            vf[t * self.variable_dim..(t + 1) * self.variable_dim].copy_from_slice(self.variable_feature(j));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { c: constraint_perm[e.c], v: variable_perm[e.v], weight: e.weight })
            .collect();
        BipartiteGraph::new(self.m, self.n, edges, self.feature_dims(), cf, vf)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            m: self.m,
            n: self.n,
            edges: self.edges.iter().map(|e| [e.c as i64, e.v as i64, i64::from(e.weight)]).collect(),
            constraint_features: self.constraint_features.chunks(self.constraint_dim.max(1)).map(<[f64]>::to_vec).collect(),
            variable_features: if self.variable_dim == 0 {
                vec![Vec::new(); self.n]
            } else {
                self.variable_features.chunks(self.variable_dim).map(<[f64]>::to_vec).collect()
            },
        }
    }

    pub fn from_json(j: &GraphJson) -> Result<Self, GraphError> {
        let cdim = j.constraint_features.first().map_or(1, Vec::len);
        let vdim = j.variable_features.first().map_or(0, Vec::len);
        if j.constraint_features.len() != j.m
            || j.variable_features.len() != j.n
            || j.constraint_features.iter().any(|f| f.len() != cdim)
            || j.variable_features.iter().any(|f| f.len() != vdim)
        {
            return Err(GraphError::Inconsistent("ragged feature table".into()));
        }
        let mut edges = Vec::with_capacity(j.edges.len());
        for &[c, v, w] in &j.edges {
            let weight = i8::try_from(w).map_err(|_| GraphError::Inconsistent(format!("weight {w}")))?;
            if c < 0 || v < 0 {
                return Err(GraphError::Inconsistent("negative node index".into()));
            }
            edges.push(Edge { c: c as usize, v: v as usize, weight });
        }
        BipartiteGraph::new(
            j.m,
            j.n,
            edges,
            (cdim, vdim),
            j.constraint_features.concat(),
            j.variable_features.concat(),
        )
    }
}

/// Debug/interchange form of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub m: usize,
    pub n: usize,
    pub edges: Vec<[i64; 3]>,
    pub constraint_features: Vec<Vec<f64>>,
    pub variable_features: Vec<Vec<f64>>,
}

/// Builds the graph of `milp`: feature dims `(1, 0)`.
pub fn to_graph(milp: &MilpInstance) -> BipartiteGraph {
    let edges = milp
        .rows()
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, a)| Edge { c: i, v: j, weight: a }))
        .collect();
    let cf = milp.rhs().iter().map(|&b| b as f64).collect();
    BipartiteGraph::new(milp.num_rows(), milp.num_vars(), edges, (1, 0), cf, Vec::new())
        .expect("encoded program yields a consistent graph")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RniConfig {
    pub fraction: f64,
    pub seed: u64,
}

impl RniConfig {
    pub fn new(fraction: f64, seed: u64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(GraphError::BadFraction(fraction));
        }
        Ok(RniConfig { fraction, seed })
    }

    /// Number of nodes of an `order`-node graph that receive a random value.
    pub fn selected(&self, order: usize) -> usize {
        ((self.fraction * order as f64).floor() as usize).min(order)
    }
}

/// Appends one random slot per node: `⌊fraction·(m+n)⌋` nodes chosen
/// uniformly over all nodes get an independent `U[0,1]` value, the others
/// 0.0. With `fraction == 0` the graph is returned unchanged.
pub fn apply_rni(g: &BipartiteGraph, cfg: &RniConfig) -> BipartiteGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    apply_rni_with(g, cfg.fraction, &mut rng)
}

pub fn apply_rni_with<R: Rng + ?Sized>(g: &BipartiteGraph, fraction: f64, rng: &mut R) -> BipartiteGraph {
    if fraction <= 0.0 {
        return g.clone();
    }
    let order = g.order();
    let count = ((fraction * order as f64).floor() as usize).min(order);
    let mut slot = vec![0.0; order];
    let mut chosen: Vec<usize> = sample(rng, order, count).into_vec();
    chosen.sort_unstable();
    for node in chosen {
        slot[node] = rng.gen::<f64>();
    }
    let (cd, vd) = g.feature_dims();
    let mut cf = Vec::with_capacity(g.m * (cd + 1));
    for (i, &r) in slot[..g.m].iter().enumerate() {
        cf.extend_from_slice(g.constraint_feature(i));
        cf.push(r);
    }
    let mut vf = Vec::with_capacity(g.n * (vd + 1));
    for j in 0..g.n {
        vf.extend_from_slice(g.variable_feature(j));
        vf.push(slot[g.m + j]);
    }
    BipartiteGraph {
        m: g.m,
        n: g.n,
        edges: g.edges.clone(),
        constraint_dim: cd + 1,
        variable_dim: vd + 1,
        constraint_features: cf,
        variable_features: vf,
    }
}

/// Disjoint union of member graphs. Member `g` owns constraint nodes
/// `constraint_offsets[g]..constraint_offsets[g+1]` and likewise for
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedGraph {
    union: BipartiteGraph,
    constraint_offsets: Vec<usize>,
    variable_offsets: Vec<usize>,
    constraint_member: Vec<usize>,
    variable_member: Vec<usize>,
}

impl BatchedGraph {
    pub fn graph(&self) -> &BipartiteGraph {
        &self.union
    }

    pub fn members(&self) -> usize {
        self.constraint_offsets.len() - 1
    }

    pub fn constraint_member(&self) -> &[usize] {
        &self.constraint_member
    }

    pub fn variable_member(&self) -> &[usize] {
        &self.variable_member
    }

    pub fn constraint_range(&self, g: usize) -> std::ops::Range<usize> {
        self.constraint_offsets[g]..self.constraint_offsets[g + 1]
    }

    pub fn variable_range(&self, g: usize) -> std::ops::Range<usize> {
        self.variable_offsets[g]..self.variable_offsets[g + 1]
    }
}

pub fn batch<G: std::borrow::Borrow<BipartiteGraph>>(graphs: &[G]) -> Result<BatchedGraph, GraphError> {
    let dims = graphs.first().map_or((1, 0), |g| g.borrow().feature_dims());
    let mut edges = Vec::new();
    let mut cf = Vec::new();
    let mut vf = Vec::new();
    let mut constraint_offsets = vec![0];
    let mut variable_offsets = vec![0];
    let mut constraint_member = Vec::new();
    let mut variable_member = Vec::new();
    for (idx, g) in graphs.iter().enumerate() {
        let g = g.borrow();
        if g.feature_dims() != dims {
            return Err(GraphError::MixedFeatureDims(dims, g.feature_dims()));
        }
        let (co, vo) = (*constraint_offsets.last().unwrap(), *variable_offsets.last().unwrap());
        edges.extend(g.edges.iter().map(|e| Edge { c: e.c + co, v: e.v + vo, weight: e.weight }));
        cf.extend_from_slice(&g.constraint_features);
        vf.extend_from_slice(&g.variable_features);
        constraint_member.extend(std::iter::repeat_n(idx, g.m));
        variable_member.extend(std::iter::repeat_n(idx, g.n));
        constraint_offsets.push(co + g.m);
        variable_offsets.push(vo + g.n);
    }
    let union = BipartiteGraph {
        m: *constraint_offsets.last().unwrap(),
        n: *variable_offsets.last().unwrap(),
        edges,
        constraint_dim: dims.0,
        variable_dim: dims.1,
        constraint_features: cf,
        variable_features: vf,
    };
    Ok(BatchedGraph { union, constraint_offsets, variable_offsets, constraint_member, variable_member })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::examples::*;
    use crate::cnf::Formula;
    use crate::milp::encode;

    #[test]
    fn example1_graph() {
        let g = to_graph(&encode(&example1()));
        assert_eq!((g.num_constraints(), g.num_variables()), (3, 2));
        let weights: Vec<i8> = g.edges().iter().map(|e| e.weight).collect();
        assert_eq!(weights, vec![1, 1, 1, -1, -1, 1]);
        assert_eq!(g.constraint_features(), &[1.0, 0.0, 0.0]);
        assert_eq!(g.feature_dims(), (1, 0));
    }

    #[test]
    fn single_clause_graph() {
        let g = to_graph(&encode(&Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap()));
        assert_eq!(g.order(), 3);
        assert_eq!(g.edges().len(), 2);
        assert!(g.edges().iter().all(|e| e.weight == 1));
        assert_eq!(g.constraint_features(), &[1.0]);
    }

    #[test]
    fn hexagon_graph_counts() {
        let g = to_graph(&encode(&xor_hexagon()));
        assert_eq!((g.num_constraints(), g.num_variables(), g.edges().len()), (12, 6, 24));
        assert!(g.constraint_degrees().iter().all(|&d| d == 2));
        assert!(g.variable_degrees().iter().all(|&d| d == 4));
        let pos = g.edges().iter().filter(|e| e.weight == 1).count();
        assert_eq!(pos, 12);
    }

    #[test]
    fn rni_slots() {
        let g = to_graph(&encode(&example1()));
        assert_eq!(apply_rni(&g, &RniConfig::new(0.0, 1).unwrap()), g);
        let full = apply_rni(&g, &RniConfig::new(1.0, 1).unwrap());
        assert_eq!(full.feature_dims(), (2, 1));
        assert!((0..3).all(|i| full.constraint_feature(i)[1] > 0.0));
        assert!((0..2).all(|j| full.variable_feature(j)[0] > 0.0));
        assert_eq!(full.constraint_feature(0)[0], 1.0);
        assert!(RniConfig::new(1.5, 0).is_err());
    }

    #[test]
    fn half_rni_on_ten_nodes() {
        // 6 constraints + 4 variables
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2], &[2, 3], &[3, 4], &[-1, -2], &[-2, -3], &[-3, -4]]).unwrap();
        let g = to_graph(&encode(&f));
        assert_eq!(g.order(), 10);
        for seed in 0..50 {
            let r = apply_rni(&g, &RniConfig::new(0.5, seed).unwrap());
            let nonzero = (0..6).filter(|&i| r.constraint_feature(i)[1] != 0.0).count()
                + (0..4).filter(|&j| r.variable_feature(j)[0] != 0.0).count();
            assert_eq!(nonzero, 5);
        }
    }

    #[test]
    fn batching() {
        let g = to_graph(&encode(&example1()));
        let h = to_graph(&encode(&xor_hexagon()));
        let b = batch(&[&g]).unwrap();
        assert_eq!(b.graph(), &g);
        let b = batch(&[g.clone(), h.clone()]).unwrap();
        assert_eq!(b.members(), 2);
        assert_eq!(b.graph().order(), g.order() + h.order());
        assert_eq!(b.constraint_range(1), 3..15);
        assert_eq!(b.variable_member(), &[0, 0, 1, 1, 1, 1, 1, 1]);
        let rni = apply_rni(&h, &RniConfig::new(1.0, 0).unwrap());
        assert!(matches!(batch(&[g, rni]), Err(GraphError::MixedFeatureDims(..))));
    }

    #[test]
    fn json_round_trip() {
        let g = to_graph(&encode(&example1()));
        let j = g.to_json();
        assert_eq!(j.edges[3], [1, 1, -1]);
        let text = serde_json::to_string(&j).unwrap();
        let back: GraphJson = serde_json::from_str(&text).unwrap();
        assert_eq!(BipartiteGraph::from_json(&back).unwrap(), g);
        let r = apply_rni(&g, &RniConfig::new(1.0, 3).unwrap());
        assert_eq!(BipartiteGraph::from_json(&r.to_json()).unwrap(), r);
    }
}
