//! `cuga bounds`: curvature-based price-of-anarchy bounds over a
//! (p_max, edges) sweep of random markets.

use std::path::Path;

use cuga_core::games::{poa_bound, PoaKind};
use cuga_core::instances::random_market;

use crate::config::ExperimentConfig;
use crate::runner::run_all;
use crate::svg;

pub struct BoundsRow {
    pub p_max: f64,
    pub edges: usize,
    pub seed: u64,
    pub alpha: f64,
    pub bound: f64,
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> std::io::Result<Vec<BoundsRow>> {
    // Jobs in output order: sorted by (p_max, edges, seed).
    let mut cells = Vec::new();
    let mut p_maxes = cfg.p_max_sweep.clone();
    p_maxes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut edge_counts = cfg.edges_sweep.clone();
    edge_counts.sort_unstable();
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    for &p_max in &p_maxes {
        for &edges in &edge_counts {
            for &seed in &seeds {
                cells.push((p_max, edges, seed));
            }
        }
    }

    let n = cfg.advertisers;
    let d = cfg.channels;
    let t = cfg.customers;
    let rows = run_all(cells, |&(p_max, edges, seed)| {
        let game = random_market::<f64>(n, d, t, edges, p_max, seed)
            .expect("sweep parameters validated");
        let alpha = game.curvature_bound().expect("positive activation probabilities");
        let bound = poa_bound(PoaKind::Curvature, alpha).expect("alpha in [0,1]").bound;
        BoundsRow { p_max, edges, seed, alpha, bound }
    });

    let mut csv = String::from("p_max,edges,seed,alpha,bound\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.p_max, r.edges, r.seed, r.alpha, r.bound));
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("bounds.csv"), csv)?;

    // Heat map of the seed-averaged bound per sweep cell.
    let values: Vec<Vec<f64>> = p_maxes
        .iter()
        .map(|&p_max| {
            edge_counts
                .iter()
                .map(|&edges| {
                    let cell: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.p_max == p_max && r.edges == edges)
                        .map(|r| r.bound)
                        .collect();
                    cell.iter().sum::<f64>() / cell.len() as f64
                })
                .collect()
        })
        .collect();
    let svg = svg::heatmap(
        "PoA_CCE bound (1 + alpha), seed average",
        "reference: generic valid-utility bound = 2",
        &p_maxes.iter().map(|p| format!("{p}")).collect::<Vec<_>>(),
        &edge_counts.iter().map(|e| format!("{e}")).collect::<Vec<_>>(),
        &values,
    );
    std::fs::write(out.join("bounds.svg"), svg)?;
    Ok(rows)
}
