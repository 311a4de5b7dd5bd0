//! Equilibrium analysis checked against exhaustive enumeration, plus
//! Monte-Carlo symmetry of repeated games.

use backlogsim_core::engine::SimConfig;
use backlogsim_core::game::{run_game, GameMode, MinerProfile, PayoffGrid, Player};
use backlogsim_core::mempool::Strategy;
use backlogsim_core::stochastic::IntensityFunction;
use proptest::prelude::*;
use proptest::strategy::Strategy as PropStrategy;

/// Brute-force mutual-best-response enumeration.
fn nash_oracle(grid: &PayoffGrid<f64>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..grid.rows() {
        for j in 0..grid.cols() {
            let (p1, p2) = grid.get(i, j);
            let mut best = true;
            for other in 0..grid.rows() {
                if grid.get(other, j).0 > p1 {
                    best = false;
                }
            }
            for other in 0..grid.cols() {
                if grid.get(i, other).1 > p2 {
                    best = false;
                }
            }
            if best {
                out.push((i, j));
            }
        }
    }
    out
}

fn grids(max_dim: usize) -> impl PropStrategy<Value = PayoffGrid<f64>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(rows, cols)| {
        // Small integer payoffs force plenty of ties.
        prop::collection::vec((0i32..6, 0i32..6), rows * cols).prop_map(move |cells| {
            let cells = cells
                .into_iter()
                .map(|(a, b)| (a as f64, b as f64))
                .collect();
            PayoffGrid::new(rows, cols, cells).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn pure_nash_matches_exhaustive_enumeration(grid in grids(5)) {
        prop_assert_eq!(grid.pure_nash_indices(), nash_oracle(&grid));
    }

    #[test]
    fn dominant_pair_is_always_a_nash_cell(grid in grids(5)) {
        if let (Some(r), Some(c)) = grid.dominant_indices() {
            prop_assert!(grid.pure_nash_indices().contains(&(r, c)));
        }
    }

    #[test]
    fn best_response_matches_linear_scan(grid in grids(5)) {
        for j in 0..grid.cols() {
            let got = grid.best_response_index(Player::One, j);
            let want = (0..grid.rows())
                .max_by(|&a, &b| {
                    grid.get(a, j).0.partial_cmp(&grid.get(b, j).0).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            prop_assert_eq!(got, want);
        }
        for i in 0..grid.rows() {
            let got = grid.best_response_index(Player::Two, i);
            let want = (0..grid.cols())
                .max_by(|&a, &b| {
                    grid.get(i, a).1.partial_cmp(&grid.get(i, b).1).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            prop_assert_eq!(got, want);
        }
    }
}

fn day_config(seed: u64) -> SimConfig<f64> {
    SimConfig::with_defaults(
        IntensityFunction::sinusoid(3.0, 3.3, 3600.0).unwrap(),
        1_000_000,
        Strategy::FeePerByte,
        86_400.0,
        seed,
    )
}

#[test]
fn equal_strategy_two_miner_games_split_the_reward() {
    let reps = 5;
    let mut share_sum = 0.0;
    for rep in 0..reps {
        let config = day_config(1000 + rep);
        let miners = [
            MinerProfile {
                miner_id: 0,
                strategy: Strategy::FeeBased,
                win_probability: 0.5,
            },
            MinerProfile {
                miner_id: 1,
                strategy: Strategy::FeeBased,
                win_probability: 0.5,
            },
        ];
        let (outcome, result) = run_game(&config, &miners).unwrap();
        share_sum += outcome.per_miner_share[0];

        // Per-game fee conservation.
        let collected: f64 = result.blocks.iter().map(|b| b.collected_fee).sum();
        let distributed: f64 = outcome.per_miner_fee.iter().sum();
        assert!((collected - distributed).abs() < 1e-9 * collected.max(1.0));
    }
    let mean_share = share_sum / reps as f64;
    assert!((mean_share - 0.5).abs() < 0.05, "mean share {mean_share}");
}

#[test]
fn five_equal_miners_split_the_reward() {
    let config = day_config(77);
    let miners: Vec<MinerProfile<f64>> = (0..5)
        .map(|id| MinerProfile {
            miner_id: id,
            strategy: Strategy::Fifo,
            win_probability: 0.2,
        })
        .collect();
    let (outcome, _) = run_game(&config, &miners).unwrap();
    let total_blocks: u64 = outcome.blocks_won.iter().sum();
    assert!(total_blocks > 0);
    for share in &outcome.per_miner_share {
        assert!((share - 0.2).abs() < 0.08, "share {share}");
    }
}

#[test]
fn crn_mode_reuses_seeds_across_cells() {
    use backlogsim_core::game::build_payoff_matrix;
    let config = day_config(5);
    let strategies = [Strategy::FeeBased];
    let a = build_payoff_matrix(&config, &strategies, GameMode::TwoMiner, 2, true).unwrap();
    let b = build_payoff_matrix(&config, &strategies, GameMode::TwoMiner, 2, true).unwrap();
    assert_eq!(a.grid().get(0, 0), b.grid().get(0, 0));
}
