//! Discrete-event simulator of a Bitcoin-style transaction backlog.
//!
//! Transactions arrive from an inhomogeneous Poisson process, wait in an
//! unbounded backlog, and are packed into blocks generated at exponential
//! intervals. Blocks select transactions under a configurable strategy
//! (fee per byte, fee, FIFO), which makes it possible to quantify how miner
//! incentives shape waiting times and to run multi-miner payoff games.
//!
//! Everything is generic over the scalar type (see [`scalar::SimScalar`]);
//! the aliases at the crate root fix it to `f64`.

pub mod engine;
pub mod game;
pub mod mempool;
pub mod metrics;
pub mod scalar;
pub mod stochastic;

pub use mempool::Strategy;
pub use scalar::{Scalar, SimScalar};

/// Arrival intensity with the default scalar.
pub type IntensityFunction = stochastic::IntensityFunction<Scalar>;
/// Attribute model with the default scalar.
pub type AttributeModel = stochastic::AttributeModel<Scalar>;
/// Transaction record with the default scalar.
pub type Transaction = mempool::Transaction<Scalar>;
/// Backlog with the default scalar.
pub type Backlog = mempool::Backlog<Scalar>;
/// Simulation config with the default scalar.
pub type SimConfig = engine::SimConfig<Scalar>;
/// Block record with the default scalar.
pub type Block = engine::Block<Scalar>;
/// Simulation result with the default scalar.
pub type SimResult = engine::SimResult<Scalar>;
/// Arrival trace with the default scalar.
pub type TraceArrivals = engine::TraceArrivals<Scalar>;
/// Trace row with the default scalar.
pub type TraceRow = engine::TraceRow<Scalar>;
/// Summary metrics with the default scalar.
pub type SummaryMetrics = metrics::SummaryMetrics<Scalar>;
/// Quartile summary with the default scalar.
pub type QuantileSummary = metrics::QuantileSummary<Scalar>;
/// Miner profile with the default scalar.
pub type MinerProfile = game::MinerProfile<Scalar>;
/// Game outcome with the default scalar.
pub type GameOutcome = game::GameOutcome<Scalar>;
/// Payoff grid with the default scalar.
pub type PayoffGrid = game::PayoffGrid<Scalar>;
/// Payoff matrix with the default scalar.
pub type PayoffMatrix = game::PayoffMatrix<Scalar>;
