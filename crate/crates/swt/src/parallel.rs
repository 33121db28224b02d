//! Multi-threaded batch training. Each group gets its own seeded generator,
//! so the result does not depend on the thread count or scheduling.

use rayon::prelude::*;
use swt_core::corpus::SenseGroup;
use swt_core::swt::{train_group, TrainConfig, TrainReport};

use crate::{Error, Result};

/// Trains every group on a pool of `threads` workers (0 = all cores).
/// Failed groups become diagnostics in group order.
pub fn train_all_parallel(groups: &[SenseGroup<'_>], config: &TrainConfig, threads: usize) -> Result<TrainReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| groups.par_iter().map(|g| (g.sense_id, train_group(g, config))).collect());
    let mut report = TrainReport::default();
    for (sense, result) in results {
        report.record(sense, result);
    }
    Ok(report)
}
