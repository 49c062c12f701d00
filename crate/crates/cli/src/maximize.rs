//! `cuga maximize`: Frank-Wolfe vs D-noRegret vs random sampling on the
//! sensor-coverage instance, swept over iteration counts and budgets.

use std::path::Path;
use std::time::Instant;

use cuga_core::dynamics::{d_no_regret, frank_wolfe, random_baseline, RunConfig, StepRule};
use cuga_core::instances::{random_sensor, SensorCoverage};
use cuga_core::vectorspace::BudgetPolytope;

use crate::config::ExperimentConfig;
use crate::runner::run_all;
use crate::svg;

pub struct MaximizeRow {
    pub axis: f64, // K for the iteration sweep, b for the budget sweep
    pub seed: u64,
    pub method: &'static str,
    pub gamma_final: f64,
    pub gamma_mean_trace: f64,
    pub time_ms_per_iter: f64,
}

const METHODS: [&str; 3] = ["frank_wolfe", "d_no_regret", "random"];

fn with_budget(sc: &SensorCoverage<f64>, budget: f64) -> SensorCoverage<f64> {
    let sets = sc
        .sets
        .iter()
        .map(|p| {
            BudgetPolytope::new(p.cost().clone(), budget, p.upper().clone())
                .expect("validated instance")
        })
        .collect();
    SensorCoverage { detect: sc.detect.clone(), weights: sc.weights.clone(), sets }
}

fn run_cell(
    sc: &SensorCoverage<f64>,
    axis: f64,
    k: usize,
    seed: u64,
    method: &str,
    step_scale: f64,
) -> MaximizeRow {
    let game = sc.game();
    match method {
        "frank_wolfe" => {
            let t = frank_wolfe(&game, &RunConfig::new(k, seed, StepRule::FwOneOverK)).unwrap();
            MaximizeRow {
                axis,
                seed,
                method: "frank_wolfe",
                gamma_final: t.final_gamma(),
                gamma_mean_trace: t.mean_gamma(),
                time_ms_per_iter: t.total_time_ms() / k as f64,
            }
        }
        "d_no_regret" => {
            let mut cfg = RunConfig::new(k, seed, StepRule::OgaOneOverSqrtK);
            cfg.step_scale = step_scale;
            let t = d_no_regret(&game, &cfg).unwrap();
            MaximizeRow {
                axis,
                seed,
                method: "d_no_regret",
                gamma_final: t.final_gamma(),
                gamma_mean_trace: t.mean_gamma(),
                time_ms_per_iter: t.total_time_ms() / k as f64,
            }
        }
        _ => {
            // Random baseline with a matched budget of K samples.
            let start = Instant::now();
            let (_, best) = random_baseline(game.social(), game.sets(), k, seed).unwrap();
            let ms = start.elapsed().as_secs_f64() * 1e3;
            MaximizeRow {
                axis,
                seed,
                method: "random",
                gamma_final: best,
                gamma_mean_trace: best,
                time_ms_per_iter: ms / k as f64,
            }
        }
    }
}

fn write_csv(path: &Path, axis_name: &str, rows: &[MaximizeRow]) -> std::io::Result<()> {
    let mut csv = format!("{axis_name},seed,method,gamma_final,gamma_mean_trace,time_ms_per_iter\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.axis, r.seed, r.method, r.gamma_final, r.gamma_mean_trace, r.time_ms_per_iter
        ));
    }
    std::fs::write(path, csv)
}

fn seed_mean(rows: &[MaximizeRow], axis: f64, method: &str) -> f64 {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.axis == axis && r.method == method)
        .map(|r| r.gamma_final)
        .collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> std::io::Result<Vec<MaximizeRow>> {
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    let mut ks = cfg.k_sweep.clone();
    ks.sort_unstable();

    // Iteration sweep: rows sorted by (K, seed, method).
    let mut cells = Vec::new();
    for &k in &ks {
        for &seed in &seeds {
            for method in METHODS {
                cells.push((k as f64, k, seed, method, 1.0));
            }
        }
    }
    // Budget sweep at fixed K.
    let mut budgets = cfg.budget_sweep.clone();
    budgets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut budget_cells = Vec::new();
    for &b in &budgets {
        for &seed in &seeds {
            for method in METHODS {
                budget_cells.push((b, cfg.budget_k, seed, method, b));
            }
        }
    }

    let step_scale = cfg.step_scale;
    let sensors = cfg.sensors;
    let locations = cfg.locations;
    let p = cfg.p;
    let rows = run_all(cells, |&(axis, k, seed, method, _)| {
        let sc = random_sensor::<f64>(sensors, locations, p, seed).unwrap();
        run_cell(&sc, axis, k, seed, method, step_scale)
    });
    let budget_rows = run_all(budget_cells, |&(axis, k, seed, method, b)| {
        let sc = with_budget(&random_sensor::<f64>(sensors, locations, p, seed).unwrap(), b);
        run_cell(&sc, axis, k, seed, method, step_scale)
    });

    std::fs::create_dir_all(out)?;
    write_csv(&out.join("maximize.csv"), "K", &rows)?;
    if !budget_rows.is_empty() {
        write_csv(&out.join("maximize_budget.csv"), "b", &budget_rows)?;
    }

    let k_labels: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
    let series: Vec<(String, Vec<f64>)> = METHODS
        .iter()
        .map(|&m| {
            (m.to_string(), ks.iter().map(|&k| seed_mean(&rows, k as f64, m)).collect())
        })
        .collect();
    std::fs::write(
        out.join("gamma_vs_k.svg"),
        svg::line_plot("gamma(x_K) vs K, seed average", "K", &k_labels, &series),
    )?;
    if !budget_rows.is_empty() {
        let b_labels: Vec<String> = budgets.iter().map(|b| format!("{b}")).collect();
        let b_series: Vec<(String, Vec<f64>)> = METHODS
            .iter()
            .map(|&m| {
                (m.to_string(), budgets.iter().map(|&b| seed_mean(&budget_rows, b, m)).collect())
            })
            .collect();
        std::fs::write(
            out.join("gamma_vs_budget.svg"),
            svg::line_plot("gamma at fixed K vs budget, seed average", "b", &b_labels, &b_series),
        )?;
    }
    Ok(rows)
}
