//! The four experiment commands: single run, capacity/strategy sweep, miner
//! game, and trace-driven validation. All results land as CSV files in the
//! output directory; every write is atomic.

use std::path::Path;

use backlogsim_core::engine::{run_simulation, run_trace_simulation, SimConfig, TraceArrivals};
use backlogsim_core::game::{build_payoff_matrix, EquilibriumReport, GameMode, PayoffMatrix};
use backlogsim_core::mempool::Strategy;
use backlogsim_core::metrics::{quartile_report, summarize, QuantileKey, SummaryMetrics};
use backlogsim_core::scalar::Scalar;
use rayon::prelude::*;

use crate::config::{echo_config, ExperimentSpec};
use crate::error::CliError;
use crate::output::{atomic_write, csv_body, prepare_output_dir, sig6, thin_ecdf};
use crate::trace::write_trace;

const SUMMARY_HEADER: &str =
    "capacity_bytes,strategy,mean_wait_min,std_wait_min,fill_mean,fill_std";
const QUARTILES_HEADER: &str = "capacity_bytes,strategy,key,bucket,mean_wait_min";
const ECDF_HEADER: &str = "wait_min,cum_fraction";
const VALIDATE_HEADER: &str = "capacity_bytes,trace_mean_wait_min,model_mean_wait_min,rel_error";
const MAX_ECDF_POINTS: usize = 1024;

/// Materializes the output directory and records the resolved configuration
/// (all defaults applied) next to the results.
fn start_outputs(spec: &ExperimentSpec) -> Result<(), CliError> {
    prepare_output_dir(&spec.output_dir)?;
    atomic_write(&spec.output_dir.join("config_echo.toml"), echo_config(spec).as_bytes())
}

fn summary_row(capacity: u64, strategy: Strategy, m: &SummaryMetrics<Scalar>) -> Vec<String> {
    vec![
        capacity.to_string(),
        strategy.label().into(),
        sig6(m.mean_wait_min),
        sig6(m.std_wait_min),
        sig6(m.fill_mean),
        sig6(m.fill_std),
    ]
}

// ============================================================================
// simulate
// ============================================================================

pub fn cmd_simulate(
    spec: &ExperimentSpec,
    emit_trace: bool,
    emit_transactions: bool,
) -> Result<(), CliError> {
    start_outputs(spec)?;
    let result = run_simulation(&spec.base)?;
    let m = summarize(&result, spec.base.warmup)
        .map_err(|e| CliError::Config(format!("summary unavailable: {e}")))?;

    atomic_write(
        &spec.output_dir.join("summary.csv"),
        &csv_body(
            SUMMARY_HEADER,
            &[summary_row(spec.base.capacity, spec.base.strategy, &m)],
        ),
    )?;

    let block_rows: Vec<Vec<String>> = result
        .blocks
        .iter()
        .map(|b| {
            vec![
                b.block_id.to_string(),
                sig6(b.creation_time),
                b.miner_id.to_string(),
                b.tx_ids.len().to_string(),
                b.used_bytes.to_string(),
                sig6(b.fill_rate),
                sig6(b.collected_fee),
            ]
        })
        .collect();
    atomic_write(
        &spec.output_dir.join("blocks.csv"),
        &csv_body(
            "block_id,creation_time_s,miner_id,tx_count,used_bytes,fill_rate,collected_fee_satoshi",
            &block_rows,
        ),
    )?;

    if emit_trace {
        write_trace(&spec.output_dir.join("trace.csv"), &result)?;
    }
    if emit_transactions {
        let tx_rows: Vec<Vec<String>> = result
            .transactions
            .iter()
            .map(|t| {
                vec![
                    t.id.to_string(),
                    sig6(t.arrival_time),
                    t.size.to_string(),
                    sig6(t.fee),
                    sig6(t.fee_per_byte),
                    t.waiting_time.map(sig6).unwrap_or_default(),
                    t.block_id.map(|b| b.to_string()).unwrap_or_default(),
                    if t.is_included() { "true" } else { "false" }.into(),
                ]
            })
            .collect();
        atomic_write(
            &spec.output_dir.join("transactions.csv"),
            &csv_body(
                "id,arrival_time_s,size_bytes,fee_satoshi,fee_per_byte,waiting_time_s,block_id,included",
                &tx_rows,
            ),
        )?;
    }

    println!(
        "simulate: {} transactions, {} blocks, mean wait {} min, fill {}",
        result.transactions.len(),
        result.blocks.len(),
        sig6(m.mean_wait_min),
        sig6(m.fill_mean)
    );
    Ok(())
}

// ============================================================================
// sweep
// ============================================================================

struct CellOutput {
    capacity: u64,
    strategy: Strategy,
    summary: SummaryMetrics<Scalar>,
    /// (key, bucket index) -> mean wait over replications, minutes.
    quartile_rows: Vec<(QuantileKey, usize, f64)>,
    /// First-replication ECDFs keyed by fee-per-byte bucket.
    ecdfs: [Vec<(f64, f64)>; 4],
}

fn run_cell(
    spec: &ExperimentSpec,
    capacity: u64,
    strategy: Strategy,
) -> Result<CellOutput, CliError> {
    let reps = spec.replications;
    let mut mean_acc = SummaryAcc::default();
    let mut bucket_acc: Vec<[f64; 4]> = vec![[0.0; 4]; 2];
    let mut bucket_seen: Vec<[u32; 4]> = vec![[0; 4]; 2];
    let mut ecdfs: [Vec<(f64, f64)>; 4] = Default::default();

    for rep in 0..reps {
        let config = SimConfig {
            capacity,
            strategy,
            seed: spec.base.seed.wrapping_add(rep as u64),
            ..spec.base
        };
        let result = run_simulation(&config)?;
        let m = summarize(&result, config.warmup)
            .map_err(|e| CliError::Config(format!("summary unavailable: {e}")))?;
        mean_acc.add(&m);

        for (ki, key) in [QuantileKey::Fee, QuantileKey::FeePerByte]
            .into_iter()
            .enumerate()
        {
            if let Ok(q) = quartile_report(&result, key, config.warmup) {
                for b in 0..4 {
                    bucket_acc[ki][b] += q.bucket_mean_wait[b];
                    bucket_seen[ki][b] += 1;
                }
                if rep == 0 && key == QuantileKey::FeePerByte {
                    ecdfs = q.bucket_ecdf;
                }
            }
        }
    }

    let mut quartile_rows = Vec::new();
    for (ki, key) in [QuantileKey::Fee, QuantileKey::FeePerByte]
        .into_iter()
        .enumerate()
    {
        for b in 0..4 {
            if bucket_seen[ki][b] > 0 {
                quartile_rows.push((key, b, bucket_acc[ki][b] / bucket_seen[ki][b] as f64));
            }
        }
    }

    Ok(CellOutput {
        capacity,
        strategy,
        summary: mean_acc.mean(),
        quartile_rows,
        ecdfs,
    })
}

/// Averages per-replication summary metrics.
#[derive(Default)]
struct SummaryAcc {
    n: u32,
    mean_wait: f64,
    std_wait: f64,
    fill_mean: f64,
    fill_std: f64,
    included: usize,
    pending: usize,
}

impl SummaryAcc {
    fn add(&mut self, m: &SummaryMetrics<Scalar>) {
        self.n += 1;
        self.mean_wait += m.mean_wait_min;
        self.std_wait += m.std_wait_min;
        self.fill_mean += m.fill_mean;
        self.fill_std += m.fill_std;
        self.included += m.included_count;
        self.pending += m.pending_count;
    }

    fn mean(&self) -> SummaryMetrics<Scalar> {
        let n = self.n.max(1) as f64;
        SummaryMetrics {
            mean_wait_min: self.mean_wait / n,
            std_wait_min: self.std_wait / n,
            fill_mean: self.fill_mean / n,
            fill_std: self.fill_std / n,
            included_count: self.included,
            pending_count: self.pending,
        }
    }
}

pub fn cmd_sweep(spec: &ExperimentSpec) -> Result<(), CliError> {
    start_outputs(spec)?;

    let cells: Vec<(u64, Strategy)> = spec
        .sweep_capacities
        .iter()
        .flat_map(|&c| spec.sweep_strategies.iter().map(move |&s| (c, s)))
        .collect();

    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(capacity, strategy)| run_cell(spec, capacity, strategy))
        .collect::<Result<_, _>>()?;

    let summary_rows: Vec<Vec<String>> = outputs
        .iter()
        .map(|o| summary_row(o.capacity, o.strategy, &o.summary))
        .collect();
    atomic_write(
        &spec.output_dir.join("summary.csv"),
        &csv_body(SUMMARY_HEADER, &summary_rows),
    )?;

    let quartile_rows: Vec<Vec<String>> = outputs
        .iter()
        .flat_map(|o| {
            o.quartile_rows.iter().map(|&(key, bucket, wait)| {
                vec![
                    o.capacity.to_string(),
                    o.strategy.label().into(),
                    key.label().into(),
                    format!("q{}", bucket + 1),
                    sig6(wait),
                ]
            })
        })
        .collect();
    atomic_write(
        &spec.output_dir.join("quartiles.csv"),
        &csv_body(QUARTILES_HEADER, &quartile_rows),
    )?;

    for o in &outputs {
        for (b, points) in o.ecdfs.iter().enumerate() {
            if points.is_empty() {
                continue;
            }
            let rows: Vec<Vec<String>> = thin_ecdf(points, MAX_ECDF_POINTS)
                .into_iter()
                .map(|(w, f)| vec![sig6(w), sig6(f)])
                .collect();
            let name = format!("ecdf_{}_{}_q{}.csv", o.capacity, o.strategy.label(), b + 1);
            atomic_write(&spec.output_dir.join(name), &csv_body(ECDF_HEADER, &rows))?;
        }
    }

    println!(
        "sweep: {} cells x {} replications -> {}",
        cells.len(),
        spec.replications,
        spec.output_dir.display()
    );
    Ok(())
}

// ============================================================================
// game
// ============================================================================

fn equilibrium_rows(report: &EquilibriumReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let opt = |s: Option<Strategy>| {
        s.map(|x| x.label().to_string())
            .unwrap_or_else(|| "none".into())
    };
    rows.push(vec![
        "dominant".into(),
        "p1".into(),
        String::new(),
        opt(report.dominant_p1),
    ]);
    rows.push(vec![
        "dominant".into(),
        "p2".into(),
        String::new(),
        opt(report.dominant_p2),
    ]);
    for &(opponent, reply) in &report.best_responses_p1 {
        rows.push(vec![
            "best_response".into(),
            "p1".into(),
            opponent.label().into(),
            reply.label().into(),
        ]);
    }
    for &(opponent, reply) in &report.best_responses_p2 {
        rows.push(vec![
            "best_response".into(),
            "p2".into(),
            opponent.label().into(),
            reply.label().into(),
        ]);
    }
    if report.pure_nash.is_empty() {
        rows.push(vec![
            "pure_nash".into(),
            String::new(),
            "none".into(),
            "none".into(),
        ]);
    } else {
        for &(s1, s2) in &report.pure_nash {
            rows.push(vec![
                "pure_nash".into(),
                String::new(),
                s1.label().into(),
                s2.label().into(),
            ]);
        }
    }
    rows
}

const EQUILIBRIUM_HEADER: &str = "record,player,given,choice";

pub fn cmd_game(
    spec: &ExperimentSpec,
    mode: GameMode,
    fixture: Option<&Path>,
) -> Result<(), CliError> {
    prepare_output_dir(&spec.output_dir)?;

    if let Some(path) = fixture {
        let file = std::fs::File::open(path).map_err(CliError::io(path.display().to_string()))?;
        let matrix = PayoffMatrix::<Scalar>::from_csv_reader(file)?;
        let report = matrix.equilibrium_report();
        atomic_write(
            &spec.output_dir.join("equilibrium_fixture.csv"),
            &csv_body(EQUILIBRIUM_HEADER, &equilibrium_rows(&report)),
        )?;
        println!(
            "game: fixture {} -> pure Nash cells: {}",
            path.display(),
            if report.pure_nash.is_empty() {
                "none".into()
            } else {
                format!("{:?}", report.pure_nash)
            }
        );
        return Ok(());
    }

    for &capacity in &spec.sweep_capacities {
        let config = SimConfig {
            capacity,
            ..spec.base
        };
        let matrix = build_payoff_matrix(
            &config,
            &spec.game.strategies,
            mode,
            spec.game.replications,
            spec.game.common_random_numbers,
        )?;
        atomic_write(
            &spec
                .output_dir
                .join(format!("payoff_matrix_{capacity}.csv")),
            matrix.to_csv_string(sig6).as_bytes(),
        )?;
        let report = matrix.equilibrium_report();
        atomic_write(
            &spec.output_dir.join(format!("equilibrium_{capacity}.csv")),
            &csv_body(EQUILIBRIUM_HEADER, &equilibrium_rows(&report)),
        )?;
        println!(
            "game: capacity {capacity}: dominant=({},{}) pure_nash={}",
            report.dominant_p1.map(|s| s.label()).unwrap_or("none"),
            report.dominant_p2.map(|s| s.label()).unwrap_or("none"),
            if report.pure_nash.is_empty() {
                "none".into()
            } else {
                format!("{}", report.pure_nash.len())
            }
        );
    }
    Ok(())
}

// ============================================================================
// validate
// ============================================================================

pub fn cmd_validate(
    spec: &ExperimentSpec,
    trace: &TraceArrivals<Scalar>,
) -> Result<(), CliError> {
    start_outputs(spec)?;

    let rows: Vec<Vec<String>> = spec
        .sweep_capacities
        .par_iter()
        .map(|&capacity| -> Result<Vec<String>, CliError> {
            let config = SimConfig {
                capacity,
                ..spec.base
            };
            let traced = run_trace_simulation(trace, &config)?;
            let trace_m = summarize(&traced, config.warmup)
                .map_err(|e| CliError::Config(format!("trace summary at {capacity}: {e}")))?;
            let synthetic = run_simulation(&config)?;
            let model_m = summarize(&synthetic, config.warmup)
                .map_err(|e| CliError::Config(format!("model summary at {capacity}: {e}")))?;
            let rel = if trace_m.mean_wait_min > 0.0 {
                (model_m.mean_wait_min - trace_m.mean_wait_min).abs() / trace_m.mean_wait_min
            } else {
                0.0
            };
            Ok(vec![
                capacity.to_string(),
                sig6(trace_m.mean_wait_min),
                sig6(model_m.mean_wait_min),
                sig6(rel),
            ])
        })
        .collect::<Result<_, _>>()?;

    atomic_write(
        &spec.output_dir.join("validate.csv"),
        &csv_body(VALIDATE_HEADER, &rows),
    )?;
    println!(
        "validate: {} capacities -> {}",
        rows.len(),
        spec.output_dir.display()
    );
    Ok(())
}
