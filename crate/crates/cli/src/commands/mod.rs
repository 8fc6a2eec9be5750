pub mod associate;
pub mod cluster;
pub mod ingest;
pub mod intervene;
pub mod pipeline;
pub mod residuals;
pub mod simulate;
pub mod stationary;
