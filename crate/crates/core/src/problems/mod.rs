//! Benchmark instances of [`MinMaxProblem`](crate::problem::MinMaxProblem).

mod bilinear;
mod channel;
mod jamming;
mod lse;
mod maxmin;
mod robust;

pub use bilinear::{BilinearDomain, BilinearProblem};
pub use channel::ChannelModel;
pub use jamming::{JammingProblem, THETA_SAMPLES};
pub use lse::{lse_min, LseBaseline, LseSolution};
pub use maxmin::MaxMinProblem;
pub use robust::{Domain, RobustProblem};
