//! Seeded synthetic problem instances: a connected random graph, its mixing
//! matrix, and one Gaussian least-squares cost per agent.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::costs::{CostFunction, QuadraticCost};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mixing::{metropolis_weights_with, MixingMatrix, Violation, WeightRule};
use crate::netgraph::{self, CommGraph, GRAPH_RETRY_CAP, MAX_AGENTS};
use crate::rng;

/// Largest `m` or `d` accepted by [`generate`] and the instance parser.
pub const MAX_COST_DIM: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub link_prob: f64,
    pub seed: u64,
    pub scale: f64,
    #[serde(default)]
    pub weights: WeightRule,
}

impl InstanceMeta {
    pub fn new(n: usize, m: usize, d: usize, link_prob: f64, seed: u64) -> Self {
        InstanceMeta {
            n,
            m,
            d,
            link_prob,
            seed,
            scale: 0.5,
            weights: WeightRule::default(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.n < 2 || self.n > MAX_AGENTS {
            return Err(Error::InvalidArgument(format!(
                "n must lie in 2..={MAX_AGENTS}, got {}",
                self.n
            )));
        }
        for (name, v) in [("m", self.m), ("d", self.d)] {
            if v == 0 || v > MAX_COST_DIM {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in 1..={MAX_COST_DIM}, got {v}"
                )));
            }
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if !(self.link_prob > 0.0 && self.link_prob <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "link probability must lie in (0, 1], got {}",
                self.link_prob
            )));
        }
        Ok(())
    }
}

/// Violations a weight rule is allowed to produce. The plain max-degree rule
/// leaves a zero diagonal at every maximum-degree node by construction, so
/// only that violation is tolerated for it.
pub fn acceptable_weights(m: &MixingMatrix, rule: WeightRule) -> std::result::Result<(), String> {
    let bad: Vec<Violation> = m
        .validate()
        .into_iter()
        .filter(|v| !(rule == WeightRule::MaxDegree && matches!(v, Violation::ZeroDiagonal { .. })))
        .collect();
    if let Some(v) = bad.first() {
        return Err(v.to_string());
    }
    if !(m.rho_w() < 1.0) {
        return Err(format!("rho_w = {} is not below 1", m.rho_w()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    graph: CommGraph,
    w: MixingMatrix,
    costs: Vec<QuadraticCost>,
    meta: InstanceMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    graph: CommGraph,
    w: MixingMatrix,
    costs: Vec<QuadraticCost>,
    meta: InstanceMeta,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::from_parts(raw.graph, raw.w, raw.costs, raw.meta)
    }
}

impl From<Instance> for RawInstance {
    fn from(i: Instance) -> Self {
        RawInstance {
            graph: i.graph,
            w: i.w,
            costs: i.costs,
            meta: i.meta,
        }
    }
}

impl Instance {
    /// Assembles an instance and checks that every part agrees with `meta`:
    /// sizes, cost scale, and `w` being exactly the weights `meta.weights`
    /// assigns to `graph`.
    pub fn from_parts(
        graph: CommGraph,
        w: MixingMatrix,
        costs: Vec<QuadraticCost>,
        meta: InstanceMeta,
    ) -> Result<Self> {
        meta.check()?;
        if graph.n() != meta.n || w.n() != meta.n || costs.len() != meta.n {
            return Err(Error::dims(
                format!("{} agents", meta.n),
                format!(
                    "graph {}, weights {}, costs {}",
                    graph.n(),
                    w.n(),
                    costs.len()
                ),
            ));
        }
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        for (i, c) in costs.iter().enumerate() {
            if c.a().rows() != meta.m || c.dim() != meta.d {
                return Err(Error::dims(
                    format!("{}x{} data matrix", meta.m, meta.d),
                    format!("{}x{} for agent {i}", c.a().rows(), c.dim()),
                ));
            }
            if c.scale() != meta.scale {
                return Err(Error::Parse(format!(
                    "agent {i} has scale {} but meta says {}",
                    c.scale(),
                    meta.scale
                )));
            }
        }
        let expected = metropolis_weights_with(&graph, meta.weights)?;
        if expected.w() != w.w() {
            return Err(Error::Parse(format!(
                "w is not the {} weight matrix of the graph",
                meta.weights
            )));
        }
        acceptable_weights(&w, meta.weights).map_err(Error::Parse)?;
        Ok(Instance {
            graph,
            w,
            costs,
            meta,
        })
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn mixing(&self) -> &MixingMatrix {
        &self.w
    }

    pub fn costs(&self) -> &[QuadraticCost] {
        &self.costs
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn d(&self) -> usize {
        self.meta.d
    }

    /// Compact canonical JSON followed by a newline. Identical instances give
    /// identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("instance serialization is infallible");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Builds the instance described by `meta`.
///
/// The graph is drawn on substreams `0, 1, ...` until it is connected and its
/// weights are acceptable, at most [`GRAPH_RETRY_CAP`] times. Costs are drawn
/// from [`rng::COST_STREAM`]: for each agent in order, `A_i` row by row, then
/// `y_i`, all standard normal.
pub fn generate(meta: &InstanceMeta) -> Result<Instance> {
    meta.check()?;
    let mut last_reason = String::from("no connected sample");
    let mut accepted = None;
    for attempt in 0..GRAPH_RETRY_CAP {
        let g = netgraph::sample_graph(meta.n, meta.link_prob, meta.seed, u64::from(attempt))?;
        if !g.is_connected() {
            continue;
        }
        let w = metropolis_weights_with(&g, meta.weights)?;
        match acceptable_weights(&w, meta.weights) {
            Ok(()) => {
                accepted = Some((g, w));
                break;
            }
            Err(reason) => last_reason = reason,
        }
    }
    let (graph, w) = accepted.ok_or(Error::RetryCapExceeded {
        attempts: GRAPH_RETRY_CAP,
        reason: last_reason,
    })?;

    let mut rng = rng::stream(meta.seed, rng::COST_STREAM);
    let mut costs = Vec::with_capacity(meta.n);
    for _ in 0..meta.n {
        let a: Vec<f64> = (0..meta.m * meta.d)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let y: Vec<f64> = (0..meta.m).map(|_| rng.sample(StandardNormal)).collect();
        costs.push(QuadraticCost::new(
            Mat::from_row_major(meta.m, meta.d, a)?,
            y,
            meta.scale,
        )?);
    }
    Instance::from_parts(graph, w, costs, meta.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_instance_is_deterministic() {
        let meta = InstanceMeta::new(2, 1, 1, 1.0, 7);
        let a = generate(&meta).unwrap();
        let b = generate(&meta).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.graph().edges(), &[(0, 1)]);
        assert_eq!(
            a.mixing().w().to_rows(),
            vec![vec![0.5, 0.5], vec![0.5, 0.5]]
        );
        assert_eq!(Instance::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn seeds_give_different_instances() {
        let a = generate(&InstanceMeta::new(6, 2, 3, 0.5, 1)).unwrap();
        let b = generate(&InstanceMeta::new(6, 2, 3, 0.5, 2)).unwrap();
        assert_ne!(a.costs(), b.costs());
    }

    #[test]
    fn default_scale_instances() {
        for seed in 0..3 {
            let inst = generate(&InstanceMeta::new(20, 5, 10, 0.4, seed)).unwrap();
            assert!(inst.graph().is_connected());
            assert!(inst.mixing().validate().is_empty());
            assert_eq!(inst.costs().len(), 20);
            assert!(inst
                .costs()
                .iter()
                .all(|c| c.a().rows() == 5 && c.dim() == 10));
            let back = Instance::from_json(&inst.to_json()).unwrap();
            assert_eq!(back.to_json(), inst.to_json());
        }
    }

    #[test]
    fn literal_max_degree_rule_is_accepted_with_zero_diagonal() {
        let mut meta = InstanceMeta::new(20, 5, 10, 0.4, 3);
        meta.weights = WeightRule::MaxDegree;
        let inst = generate(&meta).unwrap();
        assert!(inst
            .mixing()
            .validate()
            .iter()
            .all(|v| matches!(v, Violation::ZeroDiagonal { .. })));
        assert!(inst.mixing().rho_w() < 1.0);
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn parser_rejects_inconsistent_meta() {
        let inst = generate(&InstanceMeta::new(4, 2, 3, 0.7, 5)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&inst.to_json()).unwrap();
        let edit = |f: &dyn Fn(&mut serde_json::Value)| {
            let mut v = v.clone();
            f(&mut v);
            Instance::from_json(&v.to_string())
        };
        assert!(edit(&|_| {}).is_ok());
        assert!(edit(&|v| v["meta"]["n"] = 5.into()).is_err());
        assert!(edit(&|v| v["meta"]["d"] = 2.into()).is_err());
        assert!(edit(&|v| v["meta"]["scale"] = 1.0.into()).is_err());
        assert!(edit(&|v| v["meta"]["weights"] = "max-degree".into()).is_err());
        assert!(edit(&|v| v["extra"] = 1.into()).is_err());
        assert!(edit(&|v| {
            v["costs"].as_array_mut().unwrap().pop();
        })
        .is_err());
    }

    #[test]
    fn bad_meta_is_rejected() {
        assert!(generate(&InstanceMeta::new(1, 1, 1, 1.0, 0)).is_err());
        assert!(generate(&InstanceMeta::new(3, 0, 1, 1.0, 0)).is_err());
        assert!(generate(&InstanceMeta::new(3, 1, 1, 0.0, 0)).is_err());
        let mut meta = InstanceMeta::new(3, 1, 1, 1.0, 0);
        meta.scale = -1.0;
        assert!(generate(&meta).is_err());
        assert!(matches!(
            generate(&InstanceMeta::new(60, 1, 1, 1e-6, 0)),
            Err(Error::RetryCapExceeded { .. })
        ));
    }
}
