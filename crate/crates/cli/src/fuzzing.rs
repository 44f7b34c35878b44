//! Parser entry points shared by the fuzz targets and the corpus smoke test.
//! Each accepts arbitrary bytes, must never panic on invalid input, and checks
//! that anything it accepts re-serializes to a fixed point.

use dppa_core::algorithms::{parse_trajectory_csv, rows_to_csv};
use dppa_core::costs::QuadraticCost;
use dppa_core::instance::Instance;
use dppa_core::mixing::MixingMatrix;
use dppa_core::netgraph::CommGraph;

use crate::eta::EtaSpec;
use crate::manifest::RunManifest;

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn instance_json(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(inst) = Instance::from_json(s) {
        let out = inst.to_json();
        let again = Instance::from_json(&out).expect("canonical instance reparses");
        assert_eq!(again.to_json(), out);
    }
}

pub fn graph_json(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(g) = CommGraph::from_json(s) {
        assert!(g.is_connected());
        assert_eq!(
            CommGraph::from_json(&g.to_json()).expect("graph reparses"),
            g
        );
    }
}

pub fn mixing_json(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(m) = MixingMatrix::from_json(s) {
        let out = m.to_json();
        let again = MixingMatrix::from_json(&out).expect("mixing matrix reparses");
        assert_eq!(again.to_json(), out);
    }
}

pub fn quadratic_cost_json(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(q) = serde_json::from_str::<QuadraticCost>(s) {
        let out = serde_json::to_string(&q).expect("cost serializes");
        let again: QuadraticCost = serde_json::from_str(&out).expect("cost reparses");
        assert_eq!(serde_json::to_string(&again).unwrap(), out);
    }
}

pub fn trajectory_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(rows) = parse_trajectory_csv(s) {
        let out = rows_to_csv(&rows);
        let again = parse_trajectory_csv(&out).expect("canonical trajectory reparses");
        assert_eq!(rows_to_csv(&again), out);
    }
}

pub fn manifest_json(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(m) = RunManifest::from_json(s) {
        let out = m.to_json();
        let again = RunManifest::from_json(&out).expect("manifest reparses");
        assert_eq!(again.to_json(), out);
    }
}

pub fn eta_expr(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(e) = s.parse::<EtaSpec>() {
        let shown = e.to_string();
        if let Ok(back) = shown.parse::<EtaSpec>() {
            assert_eq!(back.to_string(), shown);
        }
    }
}

pub type Entry = fn(&[u8]);

/// Every entry point with the corpus directory name it reads seeds from.
pub const TARGETS: [(&str, Entry); 7] = [
    ("instance_json", instance_json),
    ("graph_json", graph_json),
    ("mixing_json", mixing_json),
    ("quadratic_cost_json", quadratic_cost_json),
    ("trajectory_csv", trajectory_csv),
    ("manifest_json", manifest_json),
    ("eta_expr", eta_expr),
];
