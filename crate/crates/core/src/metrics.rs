//! Summary statistics over simulation results: waiting-time and fill-rate
//! moments, quartile-bucketed waits, and empirical CDF point sets.
//!
//! Waiting times are stored in seconds and reported in minutes.

use thiserror::Error;

use crate::engine::SimResult;
use crate::scalar::{cast, SimScalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no transactions were included after the warmup window")]
    NoIncludedTransactions,
    #[error("need at least {needed} included transactions, got {got}")]
    TooFewTransactions { needed: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
}

/// Headline statistics of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryMetrics<F> {
    /// Mean waiting time of included transactions, minutes.
    pub mean_wait_min: F,
    /// Sample standard deviation of waiting time, minutes.
    pub std_wait_min: F,
    /// Mean block fill rate.
    pub fill_mean: F,
    /// Sample standard deviation of the fill rate.
    pub fill_std: F,
    /// Included transactions counted in the waiting-time statistics.
    pub included_count: usize,
    /// Transactions still pending at the horizon (right-censored, excluded).
    pub pending_count: usize,
}

/// Attribute used to partition transactions into quartile buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantileKey {
    Fee,
    FeePerByte,
}

impl QuantileKey {
    pub fn label(&self) -> &'static str {
        match self {
            QuantileKey::Fee => "fee",
            QuantileKey::FeePerByte => "fee_per_byte",
        }
    }
}

/// Quartile-bucketed waiting times of one run.
///
/// Bucket 0 holds the lowest quartile of the key; boundary values fall into
/// the lower bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSummary<F> {
    pub key: QuantileKey,
    /// Q1/Q2/Q3 cut points of the key over the included transactions.
    pub thresholds: [F; 3],
    /// Mean waiting time per bucket, minutes.
    pub bucket_mean_wait: [F; 4],
    /// ECDF point set per bucket: (waiting time in minutes, cumulative fraction).
    pub bucket_ecdf: [Vec<(F, F)>; 4],
    /// Bucket populations; they partition the included set.
    pub bucket_counts: [usize; 4],
}

const SECONDS_PER_MINUTE: f64 = 60.0;

/// Waiting-time and fill statistics over everything recorded after `warmup`.
///
/// A transaction counts when its *inclusion* happens after the warmup; a
/// block counts when it is created after the warmup. Zero eligible
/// transactions is an explicit error, never a NaN.
pub fn summarize<F: SimScalar>(
    result: &SimResult<F>,
    warmup: F,
) -> Result<SummaryMetrics<F>, MetricsError> {
    let waits_min: Vec<F> = result
        .transactions
        .iter()
        .filter(|tx| tx.inclusion_time().map(|t| t > warmup).unwrap_or(false))
        .map(|tx| tx.waiting_time.expect("included") / cast(SECONDS_PER_MINUTE))
        .collect();

    if waits_min.is_empty() {
        return Err(MetricsError::NoIncludedTransactions);
    }

    let fills: Vec<F> = result
        .blocks
        .iter()
        .filter(|b| b.creation_time > warmup)
        .map(|b| b.fill_rate)
        .collect();

    let (mean_wait_min, std_wait_min) = mean_and_std(&waits_min);
    let (fill_mean, fill_std) = if fills.is_empty() {
        (F::zero(), F::zero())
    } else {
        mean_and_std(&fills)
    };

    Ok(SummaryMetrics {
        mean_wait_min,
        std_wait_min,
        fill_mean,
        fill_std,
        included_count: waits_min.len(),
        pending_count: result.pending_count(),
    })
}

/// Quartile report over transactions included after `warmup`, keyed by fee or
/// fee-per-byte. Requires at least four eligible transactions.
pub fn quartile_report<F: SimScalar>(
    result: &SimResult<F>,
    key: QuantileKey,
    warmup: F,
) -> Result<QuantileSummary<F>, MetricsError> {
    let txs: Vec<(F, F)> = result
        .transactions
        .iter()
        .filter(|tx| tx.inclusion_time().map(|t| t > warmup).unwrap_or(false))
        .map(|tx| {
            let k = match key {
                QuantileKey::Fee => tx.fee,
                QuantileKey::FeePerByte => tx.fee_per_byte,
            };
            (
                k,
                tx.waiting_time.expect("included") / cast(SECONDS_PER_MINUTE),
            )
        })
        .collect();

    if txs.len() < 4 {
        return Err(MetricsError::TooFewTransactions {
            needed: 4,
            got: txs.len(),
        });
    }

    let mut keys: Vec<F> = txs.iter().map(|&(k, _)| k).collect();
    keys.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite keys"));
    let thresholds = [
        quantile(&keys, cast(0.25)),
        quantile(&keys, cast(0.50)),
        quantile(&keys, cast(0.75)),
    ];

    let mut bucket_waits: [Vec<F>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for &(k, wait) in &txs {
        let bucket = if k <= thresholds[0] {
            0
        } else if k <= thresholds[1] {
            1
        } else if k <= thresholds[2] {
            2
        } else {
            3
        };
        bucket_waits[bucket].push(wait);
    }

    let mut bucket_mean_wait = [F::zero(); 4];
    let mut bucket_counts = [0usize; 4];
    let mut bucket_ecdf: [Vec<(F, F)>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (i, waits) in bucket_waits.iter().enumerate() {
        bucket_counts[i] = waits.len();
        if !waits.is_empty() {
            bucket_mean_wait[i] = waits.iter().copied().sum::<F>() / cast(waits.len() as f64);
            bucket_ecdf[i] = ecdf(waits).expect("bucket is nonempty");
        }
    }

    Ok(QuantileSummary {
        key,
        thresholds,
        bucket_mean_wait,
        bucket_ecdf,
        bucket_counts,
    })
}

/// Empirical CDF as sorted step-function points `(value, fraction)`; repeated
/// values collapse into one point, the final fraction is 1.
pub fn ecdf<F: SimScalar>(values: &[F]) -> Result<Vec<(F, F)>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = cast::<F>(sorted.len() as f64);
    let mut points: Vec<(F, F)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = cast::<F>((i + 1) as f64) / n;
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => points.push((v, frac)),
        }
    }
    Ok(points)
}

/// Linear-interpolation empirical quantile over a sorted slice.
pub fn quantile<F: SimScalar>(sorted: &[F], p: F) -> F {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * cast::<F>((n - 1) as f64);
    let lo = h.floor();
    let idx = lo.to_usize().expect("index in range").min(n - 1);
    if idx + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo;
    sorted[idx] + frac * (sorted[idx + 1] - sorted[idx])
}

fn mean_and_std<F: SimScalar>(values: &[F]) -> (F, F) {
    let n = cast::<F>(values.len() as f64);
    let mean = values.iter().copied().sum::<F>() / n;
    if values.len() < 2 {
        return (mean, F::zero());
    }
    let ss = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>();
    let std = (ss / (n - F::one())).sqrt();
    (mean, std)
}
