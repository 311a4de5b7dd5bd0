//! Backlog of pending transactions and block selection strategies.
//!
//! The backlog keeps a sorted index per selection strategy (the way real
//! mempools do), so block packing costs are proportional to the block, not to
//! the backlog. Under heavy overload the pending set grows into the millions
//! and a sort-per-block would dominate the whole simulation.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::SimScalar;

/// One transaction: the arrival record plus inclusion bookkeeping.
///
/// `waiting_time` and `block_id` start unset and are stamped together exactly
/// once when the transaction enters a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction<F> {
    pub id: u64,
    /// Arrival timestamp, seconds.
    pub arrival_time: F,
    /// Serialized size, bytes.
    pub size: u64,
    /// Fee, satoshi.
    pub fee: F,
    /// `fee / size`, satoshi per byte.
    pub fee_per_byte: F,
    /// Delay from arrival to block inclusion, seconds. `None` while pending.
    pub waiting_time: Option<F>,
    /// Block that included this transaction. `None` while pending.
    pub block_id: Option<u64>,
}

impl<F: SimScalar> Transaction<F> {
    pub fn new(id: u64, arrival_time: F, fee: F, size: u64) -> Self {
        let fee_per_byte = fee / F::from_u64(size).expect("size representable");
        Self {
            id,
            arrival_time,
            size,
            fee,
            fee_per_byte,
            waiting_time: None,
            block_id: None,
        }
    }

    pub fn is_included(&self) -> bool {
        self.block_id.is_some()
    }

    /// Inclusion timestamp (arrival plus waiting time), if included.
    pub fn inclusion_time(&self) -> Option<F> {
        self.waiting_time.map(|w| self.arrival_time + w)
    }

    /// Stamps the inclusion record. Both fields are set together, once.
    pub(crate) fn mark_included(&mut self, block_id: u64, inclusion_time: F) {
        debug_assert!(
            self.block_id.is_none(),
            "transaction {} included twice",
            self.id
        );
        debug_assert!(inclusion_time >= self.arrival_time);
        self.waiting_time = Some(inclusion_time - self.arrival_time);
        self.block_id = Some(block_id);
    }
}

/// Transaction-selection strategy applied at block generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Descending fee-per-byte (Bitcoin's default ordering).
    FeePerByte,
    /// Descending absolute fee.
    FeeBased,
    /// Ascending arrival time.
    Fifo,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::FeePerByte, Strategy::FeeBased, Strategy::Fifo];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::FeePerByte => "fee_per_byte",
            Strategy::FeeBased => "fee_based",
            Strategy::Fifo => "fifo",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fee_per_byte" => Ok(Strategy::FeePerByte),
            "fee_based" => Ok(Strategy::FeeBased),
            "fifo" => Ok(Strategy::Fifo),
            other => Err(format!(
                "unknown strategy `{other}` (expected fee_per_byte, fee_based or fifo)"
            )),
        }
    }
}

/// Backlog consistency failure; indicates a bug in the driving code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BacklogError {
    #[error("transaction {0} is already pending")]
    DuplicateTransaction(u64),
    #[error("transaction {0} is not pending")]
    UnknownTransaction(u64),
}

/// Ranking key: strategy-specific primary order, then ascending arrival time,
/// then ascending id. Floats map to their IEEE bit patterns (all keys are
/// non-negative), so index order equals comparator order.
type PriorityKey = (Reverse<u64>, u64, u64);
type FifoKey = (u64, u64);

fn fpb_key<F: SimScalar>(tx: &Transaction<F>) -> PriorityKey {
    (
        Reverse(tx.fee_per_byte.order_key()),
        tx.arrival_time.order_key(),
        tx.id,
    )
}

fn fee_key<F: SimScalar>(tx: &Transaction<F>) -> PriorityKey {
    (
        Reverse(tx.fee.order_key()),
        tx.arrival_time.order_key(),
        tx.id,
    )
}

fn fifo_key<F: SimScalar>(tx: &Transaction<F>) -> FifoKey {
    (tx.arrival_time.order_key(), tx.id)
}

/// Unbounded set of pending transactions with byte and fee aggregates.
#[derive(Debug, Clone)]
pub struct Backlog<F> {
    pending: HashMap<u64, Transaction<F>>,
    by_fee_per_byte: Option<BTreeSet<PriorityKey>>,
    by_fee: Option<BTreeSet<PriorityKey>>,
    by_arrival: Option<BTreeSet<FifoKey>>,
    /// Multiset of pending sizes; its minimum bounds what can still fit.
    sizes: BTreeMap<u64, u32>,
    total_bytes: u64,
    total_fee: F,
}

impl<F: SimScalar> Default for Backlog<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: SimScalar> Backlog<F> {
    /// Backlog with sorted indexes for every strategy.
    pub fn new() -> Self {
        Self::for_strategies(&Strategy::ALL)
    }

    /// Backlog that maintains sorted indexes only for the given strategies.
    /// Ranking by an unindexed strategy still works via a full sort.
    pub fn for_strategies(strategies: &[Strategy]) -> Self {
        Self {
            pending: HashMap::new(),
            by_fee_per_byte: strategies
                .contains(&Strategy::FeePerByte)
                .then(BTreeSet::new),
            by_fee: strategies.contains(&Strategy::FeeBased).then(BTreeSet::new),
            by_arrival: strategies.contains(&Strategy::Fifo).then(BTreeSet::new),
            sizes: BTreeMap::new(),
            total_bytes: 0,
            total_fee: F::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Sum of sizes over pending transactions, bytes.
    pub fn total_bytes(&self) -> u64 {
        self.total_bytes
    }

    /// Sum of fees over pending transactions, satoshi.
    pub fn total_fee(&self) -> F {
        self.total_fee
    }

    pub fn contains(&self, id: u64) -> bool {
        self.pending.contains_key(&id)
    }

    pub fn get(&self, id: u64) -> Option<&Transaction<F>> {
        self.pending.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transaction<F>> {
        self.pending.values()
    }

    /// Adds a transaction. Duplicate ids are rejected.
    pub fn insert(&mut self, tx: Transaction<F>) -> Result<(), BacklogError> {
        if self.pending.contains_key(&tx.id) {
            return Err(BacklogError::DuplicateTransaction(tx.id));
        }
        if let Some(ix) = &mut self.by_fee_per_byte {
            ix.insert(fpb_key(&tx));
        }
        if let Some(ix) = &mut self.by_fee {
            ix.insert(fee_key(&tx));
        }
        if let Some(ix) = &mut self.by_arrival {
            ix.insert(fifo_key(&tx));
        }
        *self.sizes.entry(tx.size).or_insert(0) += 1;
        self.total_bytes += tx.size;
        self.total_fee = self.total_fee + tx.fee;
        self.pending.insert(tx.id, tx);
        Ok(())
    }

    /// Ids of the pending transactions in strategy order.
    fn ranked_ids<'a>(&'a self, strategy: Strategy) -> Box<dyn Iterator<Item = u64> + 'a> {
        match strategy {
            Strategy::FeePerByte => {
                if let Some(ix) = &self.by_fee_per_byte {
                    return Box::new(ix.iter().map(|&(_, _, id)| id));
                }
            }
            Strategy::FeeBased => {
                if let Some(ix) = &self.by_fee {
                    return Box::new(ix.iter().map(|&(_, _, id)| id));
                }
            }
            Strategy::Fifo => {
                if let Some(ix) = &self.by_arrival {
                    return Box::new(ix.iter().map(|&(_, id)| id));
                }
            }
        }
        // Unindexed fallback: full copy and sort under the same total order.
        let mut ranked: Vec<&Transaction<F>> = self.pending.values().collect();
        ranked.sort_unstable_by(|a, b| strategy_order(a, b, strategy));
        Box::new(
            ranked
                .into_iter()
                .map(|tx| tx.id)
                .collect::<Vec<_>>()
                .into_iter(),
        )
    }

    /// Pending transactions ordered by the strategy.
    ///
    /// Ties break by ascending arrival time, then ascending id, which makes
    /// the order total and the output deterministic.
    pub fn rank(&self, strategy: Strategy) -> Vec<Transaction<F>> {
        self.ranked_ids(strategy)
            .map(|id| self.pending[&id])
            .collect()
    }

    /// Greedy block selection: walk the rank order, take every transaction
    /// that fits the remaining capacity, skip the ones that do not, and keep
    /// scanning. Does not mutate the backlog.
    ///
    /// The scan stops once the remaining capacity drops below the smallest
    /// pending size, where nothing further can fit.
    pub fn select_block(&self, capacity: u64, strategy: Strategy) -> Vec<Transaction<F>> {
        let min_pending = self.sizes.keys().next().copied().unwrap_or(u64::MAX);
        let mut remaining = capacity;
        let mut selection = Vec::new();
        for id in self.ranked_ids(strategy) {
            if remaining < min_pending {
                break;
            }
            let tx = self.pending[&id];
            if tx.size <= remaining {
                remaining -= tx.size;
                selection.push(tx);
            }
        }
        selection
    }

    /// Removes the given transactions. Fails without mutating if any of them
    /// is not pending.
    pub fn remove_all(&mut self, txs: &[Transaction<F>]) -> Result<(), BacklogError> {
        for tx in txs {
            if !self.pending.contains_key(&tx.id) {
                return Err(BacklogError::UnknownTransaction(tx.id));
            }
        }
        for tx in txs {
            let removed = self.pending.remove(&tx.id).expect("presence checked above");
            if let Some(ix) = &mut self.by_fee_per_byte {
                ix.remove(&fpb_key(&removed));
            }
            if let Some(ix) = &mut self.by_fee {
                ix.remove(&fee_key(&removed));
            }
            if let Some(ix) = &mut self.by_arrival {
                ix.remove(&fifo_key(&removed));
            }
            match self.sizes.get_mut(&removed.size) {
                Some(count) if *count > 1 => *count -= 1,
                _ => {
                    self.sizes.remove(&removed.size);
                }
            }
            self.total_bytes -= removed.size;
            self.total_fee = self.total_fee - removed.fee;
        }
        Ok(())
    }

    /// Empties the backlog, returning the pending transactions by ascending id.
    pub fn drain_sorted(&mut self) -> Vec<Transaction<F>> {
        let mut rest: Vec<Transaction<F>> = self.pending.drain().map(|(_, tx)| tx).collect();
        rest.sort_unstable_by_key(|tx| tx.id);
        if let Some(ix) = &mut self.by_fee_per_byte {
            ix.clear();
        }
        if let Some(ix) = &mut self.by_fee {
            ix.clear();
        }
        if let Some(ix) = &mut self.by_arrival {
            ix.clear();
        }
        self.sizes.clear();
        self.total_bytes = 0;
        self.total_fee = F::zero();
        rest
    }
}

fn strategy_order<F: SimScalar>(
    a: &Transaction<F>,
    b: &Transaction<F>,
    strategy: Strategy,
) -> Ordering {
    let primary = match strategy {
        Strategy::FeePerByte => b
            .fee_per_byte
            .partial_cmp(&a.fee_per_byte)
            .unwrap_or(Ordering::Equal),
        Strategy::FeeBased => b.fee.partial_cmp(&a.fee).unwrap_or(Ordering::Equal),
        Strategy::Fifo => a
            .arrival_time
            .partial_cmp(&b.arrival_time)
            .unwrap_or(Ordering::Equal),
    };
    primary
        .then_with(|| {
            a.arrival_time
                .partial_cmp(&b.arrival_time)
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.id.cmp(&b.id))
}
