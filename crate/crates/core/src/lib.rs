//! Stream fusion by staging: pipelines of stream combinators compile to
//! single loops with no intermediate allocation and no calls.

pub mod api;
pub mod backend;
pub mod bench;
pub mod cc;
pub mod cgen;
pub mod fusion_scan;
pub mod interp;
mod ir;
pub mod peval;
pub mod pipeline;
pub mod stream;
