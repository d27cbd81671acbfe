//! Central finite-difference verification of every gradient rule.
//!
//! The numeric side only ever runs forward passes, so it is independent of
//! the backward rules it checks. An entry is skipped, not scored, when the
//! perturbation crosses a non-differentiable point (a ReLU mask, max winner
//! or pooled node set changes between `x - h`, `x` and `x + h`); the skip
//! count is reported and bounded.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construct::build_graph;
use crate::error::{Error, Result};
use crate::graph::{batch_graphs, Graph, GraphBatch, Topology};
use crate::layers::{fuse, graph_centers, readout, GcnLayer, SagPoolLayer};
use crate::model::{Bound, Model, ModelConfig, Variant};
use crate::rng;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Gradients smaller than this are compared in absolute terms.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Largest tolerated fraction of entries skipped at kinks.
pub const MAX_SKIP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckConfig {
    pub instances: usize,
    pub step: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Entries sampled per instance when checking the full-size model.
    pub full_size_entries: usize,
    pub full_size_instances: usize,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            instances: 20,
            step: 1e-5,
            tolerance: 1e-4,
            seed: 0,
            full_size_entries: 150,
            full_size_instances: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntryStats {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
}

impl EntryStats {
    fn merge(&mut self, other: EntryStats) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub instances: usize,
    pub stats: EntryStats,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub step: f64,
    pub tolerance: f64,
    pub checks: Vec<CheckOutcome>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn record(tape: &mut Tape, inputs: &[Tensor]) -> Vec<Var> {
    inputs.iter().map(|t| tape.leaf(t.clone().with_grad())).collect()
}

fn eval<F>(f: &F, inputs: &[Tensor]) -> Result<(f64, u64)>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars = record(&mut tape, inputs);
    let out = f(&mut tape, &vars)?;
    Ok((tape.value(out).item(), tape.decision_signature()))
}

/// Compares the tape's gradient of scalar `f` with central differences.
///
/// `entries` restricts the check to `(input, flat index)` pairs; `None`
/// checks every entry of every input.
pub fn check_function<F>(
    inputs: &[Tensor],
    f: F,
    step: f64,
    entries: Option<&[(usize, usize)]>,
) -> Result<EntryStats>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars = record(&mut tape, inputs);
    let out = f(&mut tape, &vars)?;
    if tape.value(out).len() != 1 {
        return Err(Error::Contract("gradient check needs a scalar function".into()));
    }
    let base_signature = tape.decision_signature();
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, t)| tape.grad(v).map_or_else(|| vec![0.0; t.len()], |g| g.to_vec()))
        .collect();

    let all: Vec<(usize, usize)>;
    let entries = match entries {
        Some(e) => e,
        None => {
            all = inputs
                .iter()
                .enumerate()
                .flat_map(|(i, t)| (0..t.len()).map(move |j| (i, j)))
                .collect();
            &all
        }
    };

    let mut stats = EntryStats::default();
    let mut work = inputs.to_vec();
    for &(i, j) in entries {
        let orig = work[i].data()[j];
        work[i].data_mut()[j] = orig + step;
        let (plus, sig_plus) = eval(&f, &work)?;
        work[i].data_mut()[j] = orig - step;
        let (minus, sig_minus) = eval(&f, &work)?;
        work[i].data_mut()[j] = orig;
        if sig_plus != base_signature || sig_minus != base_signature {
            stats.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * step);
        stats.checked += 1;
        stats.max_rel_error = stats.max_rel_error.max(relative_error(analytic[i][j], numeric));
    }
    Ok(stats)
}

fn uniform(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// `Σ R ⊙ x` with a fixed pseudo-random `R`, so every output entry matters.
fn weighted_sum(tape: &mut Tape, x: Var, seed: u64) -> Result<Var> {
    let shape = tape.value(x).shape().to_vec();
    let weights = uniform(&mut rng::stream(seed, "gradcheck.readout_weights"), shape);
    let w = tape.constant(weights);
    let y = tape.mul(x, w)?;
    Ok(tape.sum(y))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Graph {
    build_graph(uniform(rng, vec![n, dim])).expect("random features have nonzero norm")
}

fn random_batch(rng: &mut ChaCha8Rng, graphs: usize, max_nodes: usize, dim: usize) -> GraphBatch {
    let gs: Vec<Graph> = (0..graphs)
        .map(|_| {
            let n = rng.random_range(1..=max_nodes);
            random_graph(rng, n, dim)
        })
        .collect();
    let refs: Vec<&Graph> = gs.iter().collect();
    batch_graphs(&refs).unwrap()
}

/// Small architecture that exercises every code path of `variant`.
pub fn small_config(variant: Variant) -> ModelConfig {
    ModelConfig {
        input_dim: 5,
        gcn_dims: vec![6, 4],
        fc_hidden: vec![5, 4],
        variant,
        ..ModelConfig::default()
    }
}

struct Suite<'a> {
    cfg: &'a GradcheckConfig,
    checks: Vec<CheckOutcome>,
}

impl Suite<'_> {
    fn run(
        &mut self,
        name: &str,
        instances: usize,
        mut one: impl FnMut(u64) -> Result<EntryStats>,
    ) -> Result<()> {
        let mut stats = EntryStats::default();
        for k in 0..instances {
            let s = one(self.cfg.seed.wrapping_mul(1_000_003).wrapping_add(k as u64))?;
            stats.merge(s);
        }
        let total = stats.checked + stats.skipped;
        let passed = stats.checked > 0
            && stats.max_rel_error < self.cfg.tolerance
            && (stats.skipped as f64) <= MAX_SKIP_FRACTION * total as f64;
        log::info!(
            "gradcheck {name}: {} entries, {} skipped, max rel {:.3e} -> {}",
            stats.checked,
            stats.skipped,
            stats.max_rel_error,
            if passed { "ok" } else { "FAIL" }
        );
        self.checks.push(CheckOutcome {
            name: name.into(),
            instances,
            stats,
            passed,
        });
        Ok(())
    }
}

fn model_check(model: &Model, image: &GraphBatch, text: &GraphBatch, labels: &[usize], step: f64, entries: Option<&[(usize, usize)]>) -> Result<EntryStats> {
    let inputs: Vec<Tensor> = model.params().iter().map(|p| p.tensor.clone()).collect();
    check_function(
        &inputs,
        |tape, vars| {
            let bound = Bound::from_vars(vars.to_vec());
            let logits = model.logits(tape, &bound, image, text)?;
            tape.softmax_cross_entropy(logits, labels)
        },
        step,
        entries,
    )
}

/// Runs every layer-level and model-level check.
pub fn run_suite(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let h = cfg.step;
    let n = cfg.instances;
    let mut suite = Suite {
        cfg,
        checks: Vec::new(),
    };

    suite.run("matmul", n, |seed| {
        let mut r = rng::stream(seed, "gradcheck.matmul");
        let inputs = [uniform(&mut r, vec![3, 4]), uniform(&mut r, vec![4, 2])];
        check_function(&inputs, |t, v| {
            let c = t.matmul(v[0], v[1])?;
            weighted_sum(t, c, seed)
        }, h, None)
    })?;

    suite.run("gcn_layer", n, |seed| {
        let mut r = rng::stream(seed, "gradcheck.gcn");
        let batch = random_batch(&mut r, 2, 6, 3);
        let inputs = [batch.features.clone(), uniform(&mut r, vec![3, 4])];
        let topo = batch.topology.clone();
        check_function(&inputs, |t, v| {
            let out = GcnLayer { weight: v[1] }.forward(t, &topo, v[0])?;
            weighted_sum(t, out, seed)
        }, h, None)
    })?;

    suite.run("fusion", n, |seed| {
        let mut r = rng::stream(seed, "gradcheck.fusion");
        let own = random_batch(&mut r, 3, 5, 4);
        let other = random_batch(&mut r, 3, 5, 4);
        let inputs = [
            own.features.clone(),
            other.features.clone(),
            uniform(&mut r, vec![]),
        ];
        let (t_own, t_other) = (own.topology.clone(), other.topology.clone());
        check_function(&inputs, |t, v| {
            let center = graph_centers(t, &t_other, v[1])?;
            let out = fuse(t, &t_own, v[0], center, v[2])?;
            weighted_sum(t, out, seed)
        }, h, None)
    })?;

    suite.run("sag_pool", n, |seed| {
        let mut r = rng::stream(seed, "gradcheck.pool");
        let batch = random_batch(&mut r, 3, 7, 3);
        let inputs = [batch.features.clone(), uniform(&mut r, vec![3, 1])];
        let topo = batch.topology.clone();
        check_function(&inputs, |t, v| {
            let pooled = SagPoolLayer { score_weight: v[1], ratio: 0.8, gating: true }
                .forward(t, &topo, v[0])?;
            // Exercise the pooled adjacency too.
            let w = t.constant(Tensor::from_rows(&[[0.7, -0.4], [0.2, 0.9], [-0.5, 0.3]])?);
            let mixed = t.matmul(pooled.features, w)?;
            let mixed = t.spmm(pooled.topology.adjacency().matrix(), mixed)?;
            let mixed = t.tanh(mixed);
            weighted_sum(t, mixed, seed)
        }, h, None)
    })?;

    suite.run("readout", n, |seed| {
        let mut r = rng::stream(seed, "gradcheck.readout");
        let batch = random_batch(&mut r, 3, 6, 4);
        let topo: Topology = batch.topology.clone();
        check_function(core::slice::from_ref(&batch.features), |t, v| {
            let out = readout(t, &topo, v[0])?;
            weighted_sum(t, out, seed)
        }, h, None)
    })?;

    suite.run("softmax_cross_entropy", n, |seed| {
        let mut r = rng::stream(seed, "gradcheck.ce");
        let b = r.random_range(1..=5);
        let labels: Vec<usize> = (0..b).map(|_| r.random_range(0..2)).collect();
        let logits = uniform(&mut r, vec![b, 2]);
        check_function(&[logits], |t, v| t.softmax_cross_entropy(v[0], &labels), h, None)
    })?;

    for variant in Variant::ALL {
        suite.run(&format!("model.{variant}"), n, |seed| {
            let mut r = rng::stream(seed, "gradcheck.model");
            let mut config = small_config(variant);
            config.mu_init = r.random_range(-1.0..1.0);
            let model = Model::new(config, seed)?;
            let b = r.random_range(1..=3);
            let image = random_batch(&mut r, b, 6, 5);
            let text = random_batch(&mut r, b, 8, 5);
            let labels: Vec<usize> = (0..b).map(|_| r.random_range(0..2)).collect();
            model_check(&model, &image, &text, &labels, h, None)
        })?;
    }

    suite.run("model.collaborative.full_size", cfg.full_size_instances, |seed| {
        let mut r = rng::stream(seed, "gradcheck.full");
        let model = Model::new(ModelConfig::default(), seed)?;
        let image = random_batch(&mut r, 2, 8, 256);
        let text = random_batch(&mut r, 2, 12, 256);
        let labels = [0, 1];
        let entries: Vec<(usize, usize)> = (0..cfg.full_size_entries)
            .map(|_| {
                let i = r.random_range(0..model.params().len());
                (i, r.random_range(0..model.params()[i].tensor.len()))
            })
            .collect();
        model_check(&model, &image, &text, &labels, h, Some(&entries))
    })?;

    Ok(GradcheckReport {
        step: cfg.step,
        tolerance: cfg.tolerance,
        checks: suite.checks,
    })
}
