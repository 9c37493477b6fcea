//! Mini-batch data-loading simulator.

mod report;
mod sampler;
mod sim;

pub use report::{render_csv, render_text, report, BreakdownRow, Variant};
pub use sampler::{sample_batches, MiniBatch, SamplerConfig};
pub use sim::{
    simulate_epoch, simulate_workers, static_cache, CacheConfig, CachePolicy, CodecCost, CostModel,
    MultiWorkerReport, SimReport, Workload, DEFAULT_LOAD_FRACTION,
};
