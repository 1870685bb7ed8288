//! Classical, random and quantum values of cooperative rendezvous and
//! domination tasks on small graphs.

pub mod catalog;
pub mod classical;
pub mod cli;
pub mod error;
pub mod graphs;
pub mod npa;
pub mod rational;
pub mod sdp;
pub mod seesaw;
pub mod tables;
pub mod tasks;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs-and-tasks.md")]
    mod graphs_and_tasks {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/npa.md")]
    mod npa {}
    #[doc = include_str!("../../../book/src/seesaw.md")]
    mod seesaw {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
