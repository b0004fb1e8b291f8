//! Retrieval latency benchmark: times per-frame classification against a
//! loaded store over random unit queries and reports the measured
//! distribution. Thresholds live in the acceptance tests, not here.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::embedding::{l2_normalize, Embedding};
use crate::error::{Error, Result};
use crate::store::ReferenceStore;

/// Fraction of queries treated as warm-up and excluded from the stats.
const WARMUP_FRACTION: f64 = 0.10;

/// Measured latency distribution (milliseconds) with the run configuration
/// echoed back.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub store_size: usize,
    pub dim: usize,
    pub requested_queries: usize,
    pub warmup_queries: usize,
    pub measured_queries: usize,
    pub seed: u64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub mean_ms: f64,
    pub throughput_per_sec: f64,
}

/// Runs `classify` over `queries` random unit vectors, timing each call
/// individually. The first 10% of queries warm caches and are excluded.
pub fn bench_store(store: &ReferenceStore, queries: usize, seed: u64) -> Result<BenchReport> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    if queries == 0 {
        return Err(Error::InvalidArgument("benchmark needs at least one query".into()));
    }
    let warmup = ((queries as f64 * WARMUP_FRACTION).ceil() as usize).min(queries - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = store.dim();
    let pool: Vec<Embedding> = (0..queries)
        .map(|_| {
            let values: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            l2_normalize(&Embedding::new(values)?)
        })
        .collect::<Result<_>>()?;

    let mut latencies_ms = Vec::with_capacity(queries - warmup);
    for (i, query) in pool.iter().enumerate() {
        let started = Instant::now();
        let hit = store.classify(query)?;
        let elapsed = started.elapsed();
        std::hint::black_box(hit);
        if i >= warmup {
            latencies_ms.push(elapsed.as_secs_f64() * 1000.0);
        }
    }
    latencies_ms.sort_by(|a, b| a.partial_cmp(b).expect("latencies are finite"));
    let n = latencies_ms.len();
    let mean_ms = latencies_ms.iter().sum::<f64>() / n as f64;
    Ok(BenchReport {
        store_size: store.len(),
        dim,
        requested_queries: queries,
        warmup_queries: warmup,
        measured_queries: n,
        seed,
        p50_ms: latencies_ms[n * 50 / 100],
        p95_ms: latencies_ms[(n * 95 / 100).min(n - 1)],
        max_ms: latencies_ms[n - 1],
        mean_ms,
        throughput_per_sec: if mean_ms > 0.0 { 1000.0 / mean_ms } else { f64::INFINITY },
    })
}
