//! Discrete-event loop: arrivals feed the backlog, exponentially spaced block
//! events select, stamp and remove transactions.
//!
//! # Randomness discipline
//!
//! A run owns independent deterministic sub-streams derived from its single
//! seed: arrivals, attributes, block intervals, miner wins. Changing the
//! capacity or strategy therefore never perturbs the arrival sample, which is
//! what makes common-random-number comparisons across configurations valid.

use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::mempool::{Backlog, Strategy, Transaction};
use crate::scalar::{cast, SimScalar};
use crate::stochastic::{
    sample_arrival_times, sample_attribute_pair, AttributeModel, IntensityFunction, ModelError,
};

/// Simulation failure: bad configuration or malformed trace input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trace row {row}: {reason}")]
    InvalidTrace { row: usize, reason: String },
}

// ============================================================================
// Random sub-streams
// ============================================================================

/// The independent random sub-streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Arrivals = 0,
    Attributes = 1,
    BlockIntervals = 2,
    MinerWins = 3,
}

/// Deterministic RNG for one sub-stream of the given seed.
pub fn stream_rng(seed: u64, kind: StreamKind) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(splitmix64(
        seed ^ (kind as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    ))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

// ============================================================================
// Configuration
// ============================================================================

/// One experiment: arrival model, block process, capacity, strategy, horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<F> {
    pub intensity: IntensityFunction<F>,
    pub attributes: AttributeModel<F>,
    /// Block-generation rate, blocks per second.
    pub mu: F,
    /// Block byte capacity.
    pub capacity: u64,
    pub strategy: Strategy,
    /// Simulated duration, seconds.
    pub horizon: F,
    /// Records before this time are excluded from summaries, seconds.
    pub warmup: F,
    pub seed: u64,
}

impl<F: SimScalar> SimConfig<F> {
    /// Config with Bitcoin-flavoured defaults: one block per 10 minutes,
    /// default attribute model, warmup of 10% of the horizon.
    pub fn with_defaults(
        intensity: IntensityFunction<F>,
        capacity: u64,
        strategy: Strategy,
        horizon: F,
        seed: u64,
    ) -> Self {
        Self {
            intensity,
            attributes: AttributeModel::default(),
            mu: F::one() / cast(600.0),
            capacity,
            strategy,
            horizon,
            warmup: horizon / cast(10.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.attributes.validate()?;
        if !(self.mu.is_finite() && self.mu > F::zero()) {
            return Err(SimError::InvalidConfig {
                field: "mu",
                reason: format!("block rate must be > 0, got {}", self.mu),
            });
        }
        if self.capacity < self.attributes.min_size {
            return Err(SimError::InvalidConfig {
                field: "capacity",
                reason: format!(
                    "capacity {} bytes cannot hold the minimum transaction size {}",
                    self.capacity, self.attributes.min_size
                ),
            });
        }
        if !(self.horizon.is_finite() && self.horizon > F::zero()) {
            return Err(SimError::InvalidConfig {
                field: "horizon",
                reason: format!("horizon must be > 0, got {}", self.horizon),
            });
        }
        if !(self.warmup >= F::zero() && self.warmup < self.horizon) {
            return Err(SimError::InvalidConfig {
                field: "warmup",
                reason: format!(
                    "warmup must satisfy 0 <= warmup < horizon, got {} (horizon {})",
                    self.warmup, self.horizon
                ),
            });
        }
        Ok(())
    }
}

// ============================================================================
// Results
// ============================================================================

/// One batch-service event.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<F> {
    pub block_id: u64,
    /// Creation timestamp, seconds.
    pub creation_time: F,
    /// Ids of the included transactions, in selection order.
    pub tx_ids: Vec<u64>,
    pub used_bytes: u64,
    /// `used_bytes / capacity`, in [0, 1].
    pub fill_rate: F,
    /// Sum of included fees, satoshi.
    pub collected_fee: F,
    /// Winning miner (0 in single-miner runs).
    pub miner_id: u32,
}

/// Full per-transaction and per-block record of a run.
///
/// `transactions` holds every generated arrival in ascending id order;
/// transactions still pending at the horizon keep `waiting_time == None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<F> {
    pub transactions: Vec<Transaction<F>>,
    pub blocks: Vec<Block<F>>,
    pub config_echo: SimConfig<F>,
}

impl<F: SimScalar> SimResult<F> {
    /// Transactions that made it into a block.
    pub fn included(&self) -> impl Iterator<Item = &Transaction<F>> {
        self.transactions.iter().filter(|tx| tx.is_included())
    }

    pub fn included_count(&self) -> usize {
        self.included().count()
    }

    /// Transactions still pending at the horizon (right-censored).
    pub fn pending_count(&self) -> usize {
        self.transactions.len() - self.included_count()
    }
}

// ============================================================================
// Sampling
// ============================================================================

/// Exponential block interval with mean `1/mu`, by inverse transform.
pub fn sample_block_interval<F: SimScalar, R: rand::Rng + ?Sized>(mu: F, rng: &mut R) -> F {
    let u = F::sample_open01(rng);
    -u.ln() / mu
}

/// Block creation times on `(0, horizon]`.
fn sample_block_times<F: SimScalar>(mu: F, horizon: F, rng: &mut ChaCha12Rng) -> Vec<F> {
    let mut times = Vec::new();
    let mut t = F::zero();
    loop {
        t = t + sample_block_interval(mu, rng);
        if t > horizon {
            break;
        }
        times.push(t);
    }
    times
}

// ============================================================================
// Trace input
// ============================================================================

/// One externally supplied arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<F> {
    pub arrival_time: F,
    pub fee: F,
    pub size: u64,
}

/// Ordered arrival trace used to bypass the stochastic arrival model.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceArrivals<F> {
    rows: Vec<TraceRow<F>>,
}

impl<F: SimScalar> TraceArrivals<F> {
    /// Validates monotone timestamps and positive attributes. Row indices in
    /// errors are zero-based.
    pub fn new(rows: Vec<TraceRow<F>>) -> Result<Self, SimError> {
        let mut last = F::neg_infinity();
        for (row, r) in rows.iter().enumerate() {
            if !(r.arrival_time.is_finite() && r.arrival_time >= F::zero()) {
                return Err(SimError::InvalidTrace {
                    row,
                    reason: format!(
                        "arrival_time must be finite and >= 0, got {}",
                        r.arrival_time
                    ),
                });
            }
            if r.arrival_time < last {
                return Err(SimError::InvalidTrace {
                    row,
                    reason: format!(
                        "arrival_time {} decreases below previous {}",
                        r.arrival_time, last
                    ),
                });
            }
            if !(r.fee.is_finite() && r.fee > F::zero()) {
                return Err(SimError::InvalidTrace {
                    row,
                    reason: format!("fee must be > 0, got {}", r.fee),
                });
            }
            if r.size == 0 {
                return Err(SimError::InvalidTrace {
                    row,
                    reason: "size must be >= 1".into(),
                });
            }
            last = r.arrival_time;
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TraceRow<F>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

// ============================================================================
// Event loop
// ============================================================================

/// Decides, for each block event, which miner wins and which strategy packs
/// the block. Single-miner runs always answer `(0, config.strategy)`.
trait BlockPolicy<F> {
    fn pick(&mut self, block_index: u64) -> (u32, Strategy);
}

struct FixedPolicy(Strategy);

impl<F> BlockPolicy<F> for FixedPolicy {
    fn pick(&mut self, _block_index: u64) -> (u32, Strategy) {
        (0, self.0)
    }
}

/// Merges the arrival stream with the block times and runs the batch-service
/// loop. Arrivals at a block's exact timestamp are processed before the block
/// (a block picks up whatever is available).
fn run_event_loop<F: SimScalar, A, P>(
    arrivals: A,
    block_times: &[F],
    capacity: u64,
    strategies_in_play: &[Strategy],
    policy: &mut P,
) -> (Vec<Transaction<F>>, Vec<Block<F>>)
where
    A: Iterator<Item = (F, F, u64)>,
    P: BlockPolicy<F>,
{
    let mut arrivals = arrivals.peekable();
    let mut backlog: Backlog<F> = Backlog::for_strategies(strategies_in_play);
    let mut done: Vec<Transaction<F>> = Vec::new();
    let mut blocks: Vec<Block<F>> = Vec::new();
    let mut next_id: u64 = 0;

    let push_arrivals_until = |t: F,
                               backlog: &mut Backlog<F>,
                               arrivals: &mut std::iter::Peekable<A>,
                               next_id: &mut u64| {
        while let Some(&(at, fee, size)) = arrivals.peek() {
            if at <= t {
                let tx = Transaction::new(*next_id, at, fee, size);
                *next_id += 1;
                backlog.insert(tx).expect("generator produced duplicate id");
                arrivals.next();
            } else {
                break;
            }
        }
    };

    for (block_index, &block_time) in block_times.iter().enumerate() {
        push_arrivals_until(block_time, &mut backlog, &mut arrivals, &mut next_id);

        let (miner_id, strategy) = policy.pick(block_index as u64);
        let block_id = block_index as u64;
        let mut selection = backlog.select_block(capacity, strategy);
        backlog
            .remove_all(&selection)
            .expect("selection came from the backlog");

        let mut used_bytes = 0u64;
        let mut collected_fee = F::zero();
        let mut tx_ids = Vec::with_capacity(selection.len());
        for tx in &mut selection {
            tx.mark_included(block_id, block_time);
            used_bytes += tx.size;
            collected_fee = collected_fee + tx.fee;
            tx_ids.push(tx.id);
        }
        done.extend_from_slice(&selection);

        blocks.push(Block {
            block_id,
            creation_time: block_time,
            tx_ids,
            used_bytes,
            fill_rate: F::from_u64(used_bytes).expect("bytes representable")
                / F::from_u64(capacity).expect("capacity representable"),
            collected_fee,
            miner_id,
        });
    }

    // Arrivals after the last block stay pending until the horizon.
    push_arrivals_until(F::infinity(), &mut backlog, &mut arrivals, &mut next_id);
    done.extend(backlog.drain_sorted());
    done.sort_unstable_by_key(|tx| tx.id);

    (done, blocks)
}

/// Arrival stream drawn lazily from the model so only the backlog and the
/// result records occupy memory.
struct ModelArrivals<'a, F> {
    times: std::vec::IntoIter<F>,
    attributes: &'a AttributeModel<F>,
    rng: ChaCha12Rng,
}

impl<F: SimScalar> Iterator for ModelArrivals<'_, F> {
    type Item = (F, F, u64);

    fn next(&mut self) -> Option<Self::Item> {
        let t = self.times.next()?;
        let (fee, size) = sample_attribute_pair(self.attributes, &mut self.rng);
        Some((t, fee, size))
    }
}

/// Runs one synthetic experiment.
pub fn run_simulation<F: SimScalar>(config: &SimConfig<F>) -> Result<SimResult<F>, SimError> {
    config.validate()?;

    let mut arrivals_rng = stream_rng(config.seed, StreamKind::Arrivals);
    let times = sample_arrival_times(&config.intensity, config.horizon, &mut arrivals_rng);
    let arrivals = ModelArrivals {
        times: times.into_iter(),
        attributes: &config.attributes,
        rng: stream_rng(config.seed, StreamKind::Attributes),
    };

    let mut blocks_rng = stream_rng(config.seed, StreamKind::BlockIntervals);
    let block_times = sample_block_times(config.mu, config.horizon, &mut blocks_rng);

    let mut policy = FixedPolicy(config.strategy);
    let (transactions, blocks) = run_event_loop(
        arrivals,
        &block_times,
        config.capacity,
        &[config.strategy],
        &mut policy,
    );

    Ok(SimResult {
        transactions,
        blocks,
        config_echo: *config,
    })
}

/// Runs the identical loop with arrivals read from a trace instead of the
/// stochastic model. Rows beyond the configured horizon are ignored; the
/// block process still comes from the config's seed.
pub fn run_trace_simulation<F: SimScalar>(
    trace: &TraceArrivals<F>,
    config: &SimConfig<F>,
) -> Result<SimResult<F>, SimError> {
    config.validate()?;

    let horizon = config.horizon;
    let arrivals = trace
        .rows()
        .iter()
        .take_while(move |r| r.arrival_time <= horizon)
        .map(|r| (r.arrival_time, r.fee, r.size));

    let mut blocks_rng = stream_rng(config.seed, StreamKind::BlockIntervals);
    let block_times = sample_block_times(config.mu, config.horizon, &mut blocks_rng);

    let mut policy = FixedPolicy(config.strategy);
    let (transactions, blocks) = run_event_loop(
        arrivals,
        &block_times,
        config.capacity,
        &[config.strategy],
        &mut policy,
    );

    Ok(SimResult {
        transactions,
        blocks,
        config_echo: *config,
    })
}

// Game runs share the same loop with a randomized winner per block.
pub(crate) struct MinerPolicy<F> {
    pub cumulative: Vec<F>,
    pub strategies: Vec<Strategy>,
    pub miner_ids: Vec<u32>,
    pub rng: ChaCha12Rng,
    pub wins: Vec<u64>,
}

impl<F: SimScalar> BlockPolicy<F> for MinerPolicy<F> {
    fn pick(&mut self, _block_index: u64) -> (u32, Strategy) {
        let u = F::sample_open01(&mut self.rng);
        let mut winner = self.cumulative.len() - 1;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if u <= c {
                winner = i;
                break;
            }
        }
        self.wins[winner] += 1;
        (self.miner_ids[winner], self.strategies[winner])
    }
}

pub(crate) fn run_with_miner_policy<F: SimScalar>(
    config: &SimConfig<F>,
    policy: &mut MinerPolicy<F>,
) -> Result<SimResult<F>, SimError> {
    config.validate()?;

    let mut arrivals_rng = stream_rng(config.seed, StreamKind::Arrivals);
    let times = sample_arrival_times(&config.intensity, config.horizon, &mut arrivals_rng);
    let arrivals = ModelArrivals {
        times: times.into_iter(),
        attributes: &config.attributes,
        rng: stream_rng(config.seed, StreamKind::Attributes),
    };

    let mut blocks_rng = stream_rng(config.seed, StreamKind::BlockIntervals);
    let block_times = sample_block_times(config.mu, config.horizon, &mut blocks_rng);

    let strategies: Vec<Strategy> = policy.strategies.clone();
    let (transactions, blocks) =
        run_event_loop(arrivals, &block_times, config.capacity, &strategies, policy);
    Ok(SimResult {
        transactions,
        blocks,
        config_echo: *config,
    })
}
