//! Sequential file I/O toolkit.
//!
//! The crate is organized around the access patterns it measures:
//!
//! * [`size`], [`rng`], [`types`], [`checksum`]: shared value types used everywhere.
//! * [`engine`]: file opening with explicit dispositions, preallocation, sector
//!   geometry, aligned buffers, direct-I/O validation, block transfer and flush.
//! * [`pipeline`]: the ring-of-buffers asynchronous copy and its request schedule.
//! * [`bench`]: duration-bounded throughput and CPU-cost measurement.
//! * [`workloads`]: byte/line/block/typed read and write kernels.
//! * [`fragger`]: create/delete cycles that fragment a volume.
//! * [`report`]: CSV rows and SVG plots.
//! * [`integration`]: end-to-end scenarios and figure regeneration.

pub mod bench;
pub mod checksum;
pub mod engine;
pub mod fragger;
pub mod integration;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod size;
pub mod types;
pub mod workloads;

pub use checksum::Checksum;
pub use rng::{make_rng, SeedValue, SeededRng};
pub use size::{format_size, parse_size, ByteSize, SizeError};
pub use types::{Direction, OpenDisposition};
