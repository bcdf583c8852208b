//! Leak-tolerant KL projection for block-partitioned image distributions.
//!
//! A grid distribution `p` is coarse-grained into block masses `w(p)`. The
//! crate provides the potentials `V` and `V_δ`, the closed-form projection
//! onto `{π : |w_j(π) − w_ref_j| ≤ δ}`, block-preserving forward blur, a toy
//! reverse kernel, and an experiment harness that compares reverse diffusion
//! with and without the projection.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod potentials;
pub mod projection;

pub use dynamics::{
    forward_block_blur, reverse_step, run_forward, run_forward_schedule, run_reverse_pair,
    ForwardParams, ReversePair, ReverseParams,
};
pub use error::{Error, Result};
pub use grid::{block_conditional, block_masses, Block, BlockPartition, MassVector, PmfGrid, EPS_PMF};
pub use potentials::{
    e_block, e_pix, kl_divergence, potential_v, potential_v_delta, solve_w_star, ToleranceBand,
    WStarSolution,
};
pub use projection::{is_in_band, project};
