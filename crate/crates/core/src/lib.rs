pub mod bench;
pub mod cae;
pub mod datagen;
pub mod deepsmp;
pub mod error;
pub mod geometry;
pub mod neural;
pub mod parallel;
pub mod rng;
pub mod sampler;
pub mod smp;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    struct Quickstart;
    #[doc = include_str!("../../../book/src/workspaces.md")]
    struct Workspaces;
    #[doc = include_str!("../../../book/src/datasets.md")]
    struct Datasets;
    #[doc = include_str!("../../../book/src/training.md")]
    struct Training;
    #[doc = include_str!("../../../book/src/deepsmp.md")]
    struct DeepSmp;
    #[doc = include_str!("../../../book/src/bench.md")]
    struct Bench;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
