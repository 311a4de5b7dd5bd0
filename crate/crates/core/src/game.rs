//! Multi-miner competitions over a shared backlog and payoff-matrix analysis.
//!
//! Each block event first draws the winning miner by win probability, then
//! packs the block with *that miner's* strategy; every block is accepted.
//! Payoffs are the fees each miner collects. Matrices built from repeated
//! games feed the equilibrium analysis (strict dominance, weak-best-response
//! pure Nash detection).

use std::io;

use thiserror::Error;

use crate::engine::{
    run_with_miner_policy, stream_rng, MinerPolicy, SimConfig, SimError, SimResult, StreamKind,
};
use crate::mempool::Strategy;
use crate::scalar::{cast, SimScalar};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid miner set: {0}")]
    InvalidMiners(String),
    #[error("unknown strategy {0} for this matrix")]
    UnknownStrategy(Strategy),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("bad payoff matrix fixture: {0}")]
    BadFixture(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

// ============================================================================
// Game execution
// ============================================================================

/// One competitor: its selection strategy and block-win probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerProfile<F> {
    pub miner_id: u32,
    pub strategy: Strategy,
    /// Chance this miner produces any given block, in [0, 1].
    pub win_probability: F,
}

/// Per-miner payoffs of one game, indexed like the `miners` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome<F> {
    /// Total fee collected by each miner, satoshi.
    pub per_miner_fee: Vec<F>,
    /// Each miner's fraction of all collected fees (zeros if none collected).
    pub per_miner_share: Vec<F>,
    /// Blocks won by each miner.
    pub blocks_won: Vec<u64>,
}

/// Runs the standard event loop with the block winner drawn per block.
///
/// Reduces exactly to [`crate::engine::run_simulation`] when a single miner
/// has probability one. Returns the outcome plus the full run record.
pub fn run_game<F: SimScalar>(
    config: &SimConfig<F>,
    miners: &[MinerProfile<F>],
) -> Result<(GameOutcome<F>, SimResult<F>), GameError> {
    if miners.is_empty() {
        return Err(GameError::InvalidMiners("need at least one miner".into()));
    }
    let mut sum = F::zero();
    for m in miners {
        if !(m.win_probability.is_finite()
            && m.win_probability >= F::zero()
            && m.win_probability <= F::one())
        {
            return Err(GameError::InvalidMiners(format!(
                "win_probability of miner {} must lie in [0, 1], got {}",
                m.miner_id, m.win_probability
            )));
        }
        sum = sum + m.win_probability;
    }
    if (sum - F::one()).abs() > cast(1e-6) {
        return Err(GameError::InvalidMiners(format!(
            "win probabilities must sum to 1, got {sum}"
        )));
    }

    let mut cumulative = Vec::with_capacity(miners.len());
    let mut acc = F::zero();
    for m in miners {
        acc = acc + m.win_probability;
        cumulative.push(acc);
    }
    // Guard the top against rounding so the final miner absorbs u close to 1.
    if let Some(last) = cumulative.last_mut() {
        *last = F::one();
    }

    let mut policy = MinerPolicy {
        cumulative,
        strategies: miners.iter().map(|m| m.strategy).collect(),
        miner_ids: miners.iter().map(|m| m.miner_id).collect(),
        rng: stream_rng(config.seed, StreamKind::MinerWins),
        wins: vec![0; miners.len()],
    };

    let result = run_with_miner_policy(config, &mut policy)?;

    let mut per_miner_fee = vec![F::zero(); miners.len()];
    let mut blocks_won = vec![0u64; miners.len()];
    for block in &result.blocks {
        let idx = miners
            .iter()
            .position(|m| m.miner_id == block.miner_id)
            .expect("block won by configured miner");
        per_miner_fee[idx] = per_miner_fee[idx] + block.collected_fee;
        blocks_won[idx] += 1;
    }
    debug_assert_eq!(
        blocks_won.iter().sum::<u64>(),
        policy.wins.iter().sum::<u64>()
    );

    let total: F = per_miner_fee.iter().copied().sum();
    let per_miner_share = if total > F::zero() {
        per_miner_fee.iter().map(|&f| f / total).collect()
    } else {
        vec![F::zero(); miners.len()]
    };

    Ok((
        GameOutcome {
            per_miner_fee,
            per_miner_share,
            blocks_won,
        },
        result,
    ))
}

/// Two-miner duel or one deviant against a four-miner group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameMode {
    /// Two miners, each winning half of the blocks.
    TwoMiner,
    /// Five equal miners: M1 plays the row strategy, four others share the
    /// column strategy; the column payoff is reported per group member.
    OneVsFour,
}

/// Builds the payoff matrix for every strategy pair by averaging repeated
/// games with derived seeds.
///
/// With `common_random_numbers` every cell replays the same arrival/block
/// randomness per replication; otherwise each cell gets its own seeds.
pub fn build_payoff_matrix<F: SimScalar>(
    config: &SimConfig<F>,
    strategy_set: &[Strategy],
    mode: GameMode,
    replications: u32,
    common_random_numbers: bool,
) -> Result<PayoffMatrix<F>, GameError> {
    if strategy_set.is_empty() {
        return Err(GameError::InvalidMiners(
            "strategy set must be nonempty".into(),
        ));
    }
    if replications == 0 {
        return Err(GameError::InvalidMiners("replications must be >= 1".into()));
    }

    let n = strategy_set.len();
    let mut cells = Vec::with_capacity(n * n);
    for (i, &s1) in strategy_set.iter().enumerate() {
        for (j, &s2) in strategy_set.iter().enumerate() {
            let cell_index = (i * n + j) as u64;
            let mut p1 = F::zero();
            let mut p2 = F::zero();
            for rep in 0..replications as u64 {
                let seed = if common_random_numbers {
                    config.seed.wrapping_add(rep)
                } else {
                    config
                        .seed
                        .wrapping_add(cell_index.wrapping_mul(replications as u64))
                        .wrapping_add(rep)
                };
                let mut run_config = *config;
                run_config.seed = seed;
                let (fees_p1, fees_p2) = play_cell(&run_config, s1, s2, mode)?;
                p1 = p1 + fees_p1;
                p2 = p2 + fees_p2;
            }
            let r = cast::<F>(replications as f64);
            cells.push((p1 / r, p2 / r));
        }
    }

    PayoffMatrix::new(strategy_set.to_vec(), PayoffGrid::new(n, n, cells)?)
}

fn play_cell<F: SimScalar>(
    config: &SimConfig<F>,
    s1: Strategy,
    s2: Strategy,
    mode: GameMode,
) -> Result<(F, F), GameError> {
    match mode {
        GameMode::TwoMiner => {
            let half = cast::<F>(0.5);
            let miners = [
                MinerProfile {
                    miner_id: 0,
                    strategy: s1,
                    win_probability: half,
                },
                MinerProfile {
                    miner_id: 1,
                    strategy: s2,
                    win_probability: half,
                },
            ];
            let (outcome, _) = run_game(config, &miners)?;
            Ok((outcome.per_miner_fee[0], outcome.per_miner_fee[1]))
        }
        GameMode::OneVsFour => {
            let fifth = cast::<F>(0.2);
            let mut miners = vec![MinerProfile {
                miner_id: 0,
                strategy: s1,
                win_probability: fifth,
            }];
            for id in 1..5u32 {
                miners.push(MinerProfile {
                    miner_id: id,
                    strategy: s2,
                    win_probability: fifth,
                });
            }
            let (outcome, _) = run_game(config, &miners)?;
            let group: F = outcome.per_miner_fee[1..].iter().copied().sum();
            Ok((outcome.per_miner_fee[0], group / cast(4.0)))
        }
    }
}

// ============================================================================
// Payoff matrices and equilibrium analysis
// ============================================================================

/// Rectangular grid of `(payoff_p1, payoff_p2)` cells; rows belong to player
/// one, columns to player two.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffGrid<F> {
    rows: usize,
    cols: usize,
    cells: Vec<(F, F)>,
}

impl<F: SimScalar> PayoffGrid<F> {
    pub fn new(rows: usize, cols: usize, cells: Vec<(F, F)>) -> Result<Self, GameError> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols {
            return Err(GameError::BadFixture(format!(
                "grid shape {rows}x{cols} does not match {} cells",
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> (F, F) {
        self.cells[row * self.cols + col]
    }

    /// Strictly dominant row/column: the strategy whose payoff beats every
    /// alternative against every opponent choice. `None` when no strict
    /// dominance exists.
    pub fn dominant_indices(&self) -> (Option<usize>, Option<usize>) {
        let row = (0..self.rows).find(|&i| {
            (0..self.rows)
                .filter(|&other| other != i)
                .all(|other| (0..self.cols).all(|j| self.get(i, j).0 > self.get(other, j).0))
        });
        let col = (0..self.cols).find(|&j| {
            (0..self.cols)
                .filter(|&other| other != j)
                .all(|other| (0..self.rows).all(|i| self.get(i, j).1 > self.get(i, other).1))
        });
        (row, col)
    }

    /// All cells that are mutual weak best responses: the row payoff is
    /// maximal in its column and the column payoff maximal in its row. Ties
    /// admit multiple equilibria.
    pub fn pure_nash_indices(&self) -> Vec<(usize, usize)> {
        let mut nash = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let (p1, p2) = self.get(i, j);
                let row_best = (0..self.rows).all(|other| self.get(other, j).0 <= p1);
                let col_best = (0..self.cols).all(|other| self.get(i, other).1 <= p2);
                if row_best && col_best {
                    nash.push((i, j));
                }
            }
        }
        nash
    }

    /// Index of the best reply for the given player against a fixed opponent
    /// index; ties resolve to the lowest index.
    pub fn best_response_index(&self, player: Player, opponent_index: usize) -> usize {
        match player {
            Player::One => (0..self.rows)
                .max_by(|&a, &b| {
                    self.get(a, opponent_index)
                        .0
                        .partial_cmp(&self.get(b, opponent_index).0)
                        .expect("finite payoffs")
                        .then(b.cmp(&a))
                })
                .expect("nonempty grid"),
            Player::Two => (0..self.cols)
                .max_by(|&a, &b| {
                    self.get(opponent_index, a)
                        .1
                        .partial_cmp(&self.get(opponent_index, b).1)
                        .expect("finite payoffs")
                        .then(b.cmp(&a))
                })
                .expect("nonempty grid"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    One,
    Two,
}

/// Square payoff grid labeled by an ordered strategy set.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<F> {
    strategies: Vec<Strategy>,
    grid: PayoffGrid<F>,
}

/// Dominance, best replies and pure Nash cells of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub dominant_p1: Option<Strategy>,
    pub dominant_p2: Option<Strategy>,
    /// Player one's best reply to each player-two strategy, in set order.
    pub best_responses_p1: Vec<(Strategy, Strategy)>,
    /// Player two's best reply to each player-one strategy, in set order.
    pub best_responses_p2: Vec<(Strategy, Strategy)>,
    pub pure_nash: Vec<(Strategy, Strategy)>,
}

impl<F: SimScalar> PayoffMatrix<F> {
    pub fn new(strategies: Vec<Strategy>, grid: PayoffGrid<F>) -> Result<Self, GameError> {
        if grid.rows() != strategies.len() || grid.cols() != strategies.len() {
            return Err(GameError::BadFixture(format!(
                "{}x{} grid does not match {} strategies",
                grid.rows(),
                grid.cols(),
                strategies.len()
            )));
        }
        Ok(Self { strategies, grid })
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn grid(&self) -> &PayoffGrid<F> {
        &self.grid
    }

    pub fn payoffs(&self, s1: Strategy, s2: Strategy) -> Option<(F, F)> {
        let i = self.index_of(s1)?;
        let j = self.index_of(s2)?;
        Some(self.grid.get(i, j))
    }

    fn index_of(&self, s: Strategy) -> Option<usize> {
        self.strategies.iter().position(|&x| x == s)
    }

    /// Strictly dominant strategies for both players, if any.
    pub fn find_dominant_strategies(&self) -> (Option<Strategy>, Option<Strategy>) {
        let (r, c) = self.grid.dominant_indices();
        (r.map(|i| self.strategies[i]), c.map(|j| self.strategies[j]))
    }

    /// Pure Nash cells under weak best responses.
    pub fn find_pure_nash(&self) -> Vec<(Strategy, Strategy)> {
        self.grid
            .pure_nash_indices()
            .into_iter()
            .map(|(i, j)| (self.strategies[i], self.strategies[j]))
            .collect()
    }

    /// Best reply of `player` against the opponent playing `opponent_strategy`.
    pub fn best_response(
        &self,
        player: Player,
        opponent_strategy: Strategy,
    ) -> Result<Strategy, GameError> {
        let idx = self
            .index_of(opponent_strategy)
            .ok_or(GameError::UnknownStrategy(opponent_strategy))?;
        Ok(self.strategies[self.grid.best_response_index(player, idx)])
    }

    pub fn equilibrium_report(&self) -> EquilibriumReport {
        let (dominant_p1, dominant_p2) = self.find_dominant_strategies();
        let best_responses_p1 = self
            .strategies
            .iter()
            .map(|&opponent| {
                (
                    opponent,
                    self.best_response(Player::One, opponent)
                        .expect("own strategy"),
                )
            })
            .collect();
        let best_responses_p2 = self
            .strategies
            .iter()
            .map(|&opponent| {
                (
                    opponent,
                    self.best_response(Player::Two, opponent)
                        .expect("own strategy"),
                )
            })
            .collect();
        EquilibriumReport {
            dominant_p1,
            dominant_p2,
            best_responses_p1,
            best_responses_p2,
            pure_nash: self.find_pure_nash(),
        }
    }

    // ------------------------------------------------------------------
    // CSV fixtures: rows are player-one strategies, columns carry paired
    // payoffs per player-two strategy:
    //   strategy,fee_based_p1,fee_based_p2,fee_per_byte_p1,...
    // ------------------------------------------------------------------

    /// Parses a matrix fixture, e.g. a published table, from CSV.
    pub fn from_csv_reader<R: io::Read>(reader: R) -> Result<Self, GameError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv_reader.headers().map_err(bad_csv)?.clone();
        if headers.len() < 3 || headers.get(0) != Some("strategy") {
            return Err(GameError::BadFixture(
                "header must start with `strategy` followed by `<name>_p1,<name>_p2` pairs".into(),
            ));
        }
        let mut col_strategies = Vec::new();
        let mut k = 1;
        while k < headers.len() {
            let p1 = headers.get(k).unwrap_or("");
            let p2 = headers.get(k + 1).unwrap_or("");
            let name = p1.strip_suffix("_p1").ok_or_else(|| {
                GameError::BadFixture(format!("expected `<name>_p1` column, got `{p1}`"))
            })?;
            if p2 != format!("{name}_p2") {
                return Err(GameError::BadFixture(format!(
                    "expected `{name}_p2` after `{p1}`, got `{p2}`"
                )));
            }
            let strategy: Strategy = name.parse().map_err(|e: String| GameError::BadFixture(e))?;
            col_strategies.push(strategy);
            k += 2;
        }

        let mut row_strategies = Vec::new();
        let mut cells = Vec::new();
        for record in csv_reader.records() {
            let record = record.map_err(bad_csv)?;
            let strategy: Strategy = record
                .get(0)
                .unwrap_or("")
                .parse()
                .map_err(|e: String| GameError::BadFixture(e))?;
            row_strategies.push(strategy);
            for k in 0..col_strategies.len() {
                let p1 = parse_cell(&record, 1 + 2 * k)?;
                let p2 = parse_cell(&record, 2 + 2 * k)?;
                cells.push((p1, p2));
            }
        }
        if row_strategies != col_strategies {
            return Err(GameError::BadFixture(
                "row strategies must match column strategies in the same order".into(),
            ));
        }
        let n = row_strategies.len();
        Self::new(row_strategies, PayoffGrid::new(n, n, cells)?)
    }

    /// Serializes the matrix in the fixture format accepted by
    /// [`PayoffMatrix::from_csv_reader`]. Payoff formatting is provided by
    /// the caller so output rounding stays under its control.
    pub fn to_csv_string(&self, mut format: impl FnMut(F) -> String) -> String {
        let mut out = String::from("strategy");
        for s in &self.strategies {
            out.push_str(&format!(",{}_p1,{}_p2", s.label(), s.label()));
        }
        out.push('\n');
        for (i, s) in self.strategies.iter().enumerate() {
            out.push_str(s.label());
            for j in 0..self.strategies.len() {
                let (p1, p2) = self.grid.get(i, j);
                out.push_str(&format!(",{},{}", format(p1), format(p2)));
            }
            out.push('\n');
        }
        out
    }
}

fn bad_csv(e: csv::Error) -> GameError {
    GameError::BadFixture(e.to_string())
}

fn parse_cell<F: SimScalar>(record: &csv::StringRecord, idx: usize) -> Result<F, GameError> {
    let raw = record
        .get(idx)
        .ok_or_else(|| GameError::BadFixture(format!("missing payoff column {idx}")))?;
    let value: f64 = raw
        .parse()
        .map_err(|_| GameError::BadFixture(format!("payoff `{raw}` is not a number")))?;
    F::from_f64(value).ok_or_else(|| GameError::BadFixture(format!("payoff `{raw}` out of range")))
}
