//! Message-passing network over weighted bipartite MILP graphs.
//!
//! Input maps embed constraint features and variable features into `R^d`.
//! Each round then updates both sides from the previous round's values:
//!
//! ```text
//! h_V <- g_V(h_V, Σ_j E_ij · f_W(h_W_j))
//! h_W <- g_W(h_W, Σ_i E_ij · f_V(h_V_i))
//! ```
//!
//! and the readout is `logistic(out(Σ h_V, Σ h_W))` per batch member.

use std::rc::Rc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satgnn_core::{batch, BatchedGraph, BipartiteGraph};
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::loss::LossKind;
use crate::tape::{Scatter, Tape, Var};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub d: usize,
    pub rounds: usize,
    pub rni_fraction: f64,
}

impl GnnConfig {
    pub fn new(d: usize, rounds: usize, rni_fraction: f64) -> Result<Self, NnError> {
        if d == 0 {
            return Err(NnError::Config("embedding dimension must be positive".into()));
        }
        if !(0.0..=1.0).contains(&rni_fraction) {
            return Err(NnError::Config(format!("RNI fraction {rni_fraction} outside [0, 1]")));
        }
        Ok(GnnConfig { d, rounds, rni_fraction })
    }

    pub fn uses_rni(&self) -> bool {
        self.rni_fraction > 0.0
    }

    /// Feature dimensions of the graphs this model accepts.
    pub fn feature_dims(&self) -> (usize, usize) {
        if self.uses_rni() {
            (2, 1)
        } else {
            (1, 0)
        }
    }
}

/// A two-layer perceptron `in → d → out` with a rectified hidden layer.
/// Its four tensors (`w1`, `b1`, `w2`, `b2`) sit consecutively in the
/// model's parameter list starting at `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mlp {
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    offset: usize,
}

impl Mlp {
    pub fn shapes(&self) -> [(usize, usize); 4] {
        [(self.in_dim, self.hidden), (1, self.hidden), (self.hidden, self.out_dim), (1, self.out_dim)]
    }

    fn apply(&self, tape: &mut Tape, params: &[Var], x: Var) -> Var {
        let p = &params[self.offset..self.offset + 4];
        let h = tape.matmul(x, p[0]);
        let h = tape.add_row(h, p[1]);
        let h = tape.relu(h);
        let o = tape.matmul(h, p[2]);
        tape.add_row(o, p[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VariableInput {
    /// Index of a shared `1 × d` embedding.
    Constant(usize),
    Perceptron(Mlp),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Round {
    f_v: Mlp,
    f_w: Mlp,
    g_v: Mlp,
    g_w: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    in_v: Mlp,
    in_w: VariableInput,
    rounds: Vec<Round>,
    out: Mlp,
    names: Vec<String>,
    shapes: Vec<(usize, usize)>,
}

impl Layout {
    fn new(cfg: &GnnConfig) -> Self {
        let mut names = Vec::new();
        let mut shapes = Vec::new();
        let d = cfg.d;
        let mut mlp = |name: &str, in_dim: usize, out_dim: usize| {
            let m = Mlp { in_dim, hidden: d, out_dim, offset: names.len() };
            for (part, shape) in ["w1", "b1", "w2", "b2"].iter().zip(m.shapes()) {
                names.push(format!("{name}.{part}"));
                shapes.push(shape);
            }
            m
        };
        let (cdim, vdim) = cfg.feature_dims();
        let in_v = mlp("in_v", cdim, d);
        let in_w = if vdim == 0 {
            None
        } else {
            Some(mlp("in_w", vdim, d))
        };
        let rounds = (1..=cfg.rounds)
            .map(|r| Round {
                f_v: mlp(&format!("round{r}.f_v"), d, d),
                f_w: mlp(&format!("round{r}.f_w"), d, d),
                g_v: mlp(&format!("round{r}.g_v"), 2 * d, d),
                g_w: mlp(&format!("round{r}.g_w"), 2 * d, d),
            })
            .collect();
        let out = mlp("out", 2 * d, 1);
        let in_w = match in_w {
            Some(m) => VariableInput::Perceptron(m),
            None => {
                names.push("in_w".into());
                shapes.push((1, d));
                VariableInput::Constant(names.len() - 1)
            }
        };
        Layout { in_v, in_w, rounds, out, names, shapes }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    config: GnnConfig,
    layout: Layout,
    params: Vec<Tensor>,
}

/// Output of a differentiated forward pass.
#[derive(Debug, Clone)]
pub struct Backward {
    pub loss: f64,
    pub predictions: Vec<f64>,
    /// One tensor per parameter, aligned with [`GnnModel::params`].
    pub grads: Vec<Tensor>,
}

impl GnnModel {
    /// All weights and biases zero.
    pub fn zeros(config: GnnConfig) -> Self {
        let layout = Layout::new(&config);
        let params = layout.shapes.iter().map(|&(r, c)| Tensor::zeros(r, c)).collect();
        GnnModel { config, layout, params }
    }

    /// Glorot-uniform weights, zero biases. The constant variable embedding
    /// is drawn like a `1 × d` weight.
    pub fn init(config: GnnConfig, seed: u64) -> Self {
        let mut model = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, t) in model.layout.names.iter().zip(model.params.iter_mut()) {
            if name.ends_with(".b1") || name.ends_with(".b2") {
                continue;
            }
            let bound = (6.0 / (t.rows() + t.cols()) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            t.data_mut().iter_mut().for_each(|x| *x = dist.sample(&mut rng));
        }
        model
    }

    /// Rebuilds a model from named tensors, checking names and shapes.
    pub fn from_params(config: GnnConfig, named: Vec<(String, Tensor)>) -> Result<Self, NnError> {
        let layout = Layout::new(&config);
        if named.len() != layout.names.len() {
            return Err(NnError::Checkpoint(format!(
                "expected {} parameter tensors, found {}",
                layout.names.len(),
                named.len()
            )));
        }
        let mut params = Vec::with_capacity(named.len());
        for ((name, t), (want, &(r, c))) in named.into_iter().zip(layout.names.iter().zip(&layout.shapes)) {
            if &name != want {
                return Err(NnError::Checkpoint(format!("expected parameter {want}, found {name}")));
            }
            if t.shape() != [r, c] {
                return Err(NnError::Checkpoint(format!("{name}: expected shape [{r}, {c}], found {:?}", t.shape())));
            }
            params.push(t);
        }
        Ok(GnnModel { config, layout, params })
    }

    pub fn config(&self) -> &GnnConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_names(&self) -> &[String] {
        &self.layout.names
    }

    pub fn named_params(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.layout.names.iter().map(String::as_str).zip(&self.params)
    }

    pub fn num_weights(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    fn check_dims(&self, g: &BipartiteGraph) -> Result<(), NnError> {
        let expected = self.config.feature_dims();
        if g.feature_dims() != expected {
            return Err(NnError::DimensionMismatch { expected, found: g.feature_dims() });
        }
        Ok(())
    }

    /// Records the forward pass; returns the parameter leaves and the
    /// `members × 1` prediction node.
    fn record(&self, tape: &mut Tape, g: &BatchedGraph) -> Result<(Vec<Var>, Var), NnError> {
        let u = g.graph();
        self.check_dims(u)?;
        let (m, n) = (u.num_constraints(), u.num_variables());
        let (cdim, vdim) = u.feature_dims();
        let params: Vec<Var> = self.params.iter().map(|t| tape.leaf(t.clone())).collect();

        let xv = tape.leaf(Tensor::from_rows(m, cdim, u.constraint_features().to_vec()));
        let mut hv = self.layout.in_v.apply(tape, &params, xv);
        let mut hw = match self.layout.in_w {
            VariableInput::Constant(idx) => tape.broadcast(params[idx], n),
            VariableInput::Perceptron(mlp) => {
                let xw = tape.leaf(Tensor::from_rows(n, vdim, u.variable_features().to_vec()));
                mlp.apply(tape, &params, xw)
            }
        };

        let to_constraints = Rc::new(Scatter {
            entries: u.edges().iter().map(|e| (e.c, e.v, f64::from(e.weight))).collect(),
            out_rows: m,
        });
        let to_variables = Rc::new(Scatter {
            entries: u.edges().iter().map(|e| (e.v, e.c, f64::from(e.weight))).collect(),
            out_rows: n,
        });
        for round in &self.layout.rounds {
            let msg_w = round.f_w.apply(tape, &params, hw);
            let agg_v = tape.scatter(msg_w, to_constraints.clone());
            let msg_v = round.f_v.apply(tape, &params, hv);
            let agg_w = tape.scatter(msg_v, to_variables.clone());
            let cat_v = tape.concat(hv, agg_v);
            let cat_w = tape.concat(hw, agg_w);
            hv = round.g_v.apply(tape, &params, cat_v);
            hw = round.g_w.apply(tape, &params, cat_w);
        }

        let members = g.members();
        let sv = tape.segment_sum(hv, Rc::new(g.constraint_member().to_vec()), members);
        let sw = tape.segment_sum(hw, Rc::new(g.variable_member().to_vec()), members);
        let pooled = tape.concat(sv, sw);
        let logit = self.layout.out.apply(tape, &params, pooled);
        Ok((params, tape.sigmoid(logit)))
    }

    /// Per-member predictions in `(0, 1)`.
    pub fn forward(&self, g: &BatchedGraph) -> Result<Vec<f64>, NnError> {
        let mut tape = Tape::new();
        let (_, y) = self.record(&mut tape, g)?;
        Ok(tape.value(y).data().to_vec())
    }

    pub fn forward_graph(&self, g: &BipartiteGraph) -> Result<f64, NnError> {
        Ok(self.forward(&batch(&[g])?)?[0])
    }

    /// Loss over the batch and its gradient with respect to every parameter.
    /// Parameters without a path to the loss get exact zeros.
    pub fn backward(&self, g: &BatchedGraph, targets: &[f64], kind: LossKind) -> Result<Backward, NnError> {
        if targets.len() != g.members() {
            return Err(NnError::LengthMismatch { predictions: g.members(), targets: targets.len() });
        }
        let mut tape = Tape::new();
        let (params, y) = self.record(&mut tape, g)?;
        let targets = Rc::new(targets.to_vec());
        let l = match kind {
            LossKind::Bce => tape.bce(y, targets),
            LossKind::Mse => tape.mse(y, targets),
        };
        let mut grads = tape.backward(l);
        let grads = params
            .iter()
            .zip(&self.params)
            .map(|(&v, p)| grads.take(v).unwrap_or_else(|| Tensor::zeros_like(p)))
            .collect();
        Ok(Backward { loss: tape.value(l).data()[0], predictions: tape.value(y).data().to_vec(), grads })
    }

    /// Rectifier sign pattern of a forward pass, for locating kinks.
    pub fn relu_pattern(&self, g: &BatchedGraph) -> Result<Vec<bool>, NnError> {
        let mut tape = Tape::new();
        self.record(&mut tape, g)?;
        Ok(tape.relu_pattern())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use satgnn_core::cnf::examples::*;
    use satgnn_core::{encode, to_graph};

    fn example_batch() -> BatchedGraph {
        batch(&[to_graph(&encode(&example1()))]).unwrap()
    }

    #[test]
    fn layout_names_and_shapes() {
        let m = GnnModel::zeros(GnnConfig::new(4, 2, 0.0).unwrap());
        assert_eq!(m.param_names().len(), 4 + 2 * 16 + 4 + 1);
        assert!(m.param_names().iter().any(|n| n == "round2.g_w.w1"));
        let (_, w) = m.named_params().find(|(n, _)| *n == "round1.g_v.w1").unwrap();
        assert_eq!(w.shape(), &[8, 4]);
        let rni = GnnModel::zeros(GnnConfig::new(4, 1, 1.0).unwrap());
        assert!(rni.param_names().iter().any(|n| n == "in_w.w1"));
        assert!(!rni.param_names().iter().any(|n| n == "in_w"));
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = GnnModel::zeros(GnnConfig::new(8, 3, 0.0).unwrap());
        assert_eq!(m.forward(&example_batch()).unwrap(), vec![0.5]);
    }

    #[test]
    fn zero_model_output_bias_gradient() {
        let m = GnnModel::zeros(GnnConfig::new(4, 1, 0.0).unwrap());
        for y in [0.0, 1.0] {
            let b = m.backward(&example_batch(), &[y], LossKind::Bce).unwrap();
            let idx = m.param_names().iter().position(|n| n == "out.b2").unwrap();
            // d/dz BCE(logistic(z), y) at z = 0 is 0.5 - y
            assert!((b.grads[idx].data()[0] - (0.5 - y)).abs() < 1e-15);
            assert!((b.loss - std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = GnnModel::init(GnnConfig::new(4, 1, 0.5).unwrap(), 0);
        assert!(matches!(m.forward(&example_batch()), Err(NnError::DimensionMismatch { .. })));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let cfg = GnnConfig::new(8, 2, 0.0).unwrap();
        assert_eq!(GnnModel::init(cfg, 3), GnnModel::init(cfg, 3));
        assert_ne!(GnnModel::init(cfg, 3), GnnModel::init(cfg, 4));
        let m = GnnModel::init(cfg, 3);
        for (name, t) in m.named_params() {
            if name.ends_with(".b1") || name.ends_with(".b2") {
                assert_eq!(t.max_abs(), 0.0);
            } else {
                let bound = (6.0 / (t.rows() + t.cols()) as f64).sqrt();
                assert!(t.max_abs() <= bound && t.max_abs() > 0.0, "{name}");
            }
        }
        let y = m.forward(&example_batch()).unwrap()[0];
        assert!(y > 0.0 && y < 1.0);
    }

    #[test]
    fn from_params_rejects_wrong_shapes() {
        let cfg = GnnConfig::new(4, 1, 0.0).unwrap();
        let m = GnnModel::init(cfg, 1);
        let named: Vec<(String, Tensor)> = m.named_params().map(|(n, t)| (n.to_string(), t.clone())).collect();
        assert_eq!(GnnModel::from_params(cfg, named.clone()).unwrap(), m);
        let bigger = GnnConfig::new(8, 1, 0.0).unwrap();
        assert!(GnnModel::from_params(bigger, named.clone()).is_err());
        let deeper = GnnConfig::new(4, 2, 0.0).unwrap();
        assert!(GnnModel::from_params(deeper, named).is_err());
    }
}
