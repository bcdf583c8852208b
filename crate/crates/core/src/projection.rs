//! KL projection onto the leak-tolerant set.
//!
//! The projection rescales each block uniformly so that its mass becomes
//! `w*_j`, which leaves every within-block conditional untouched.

use crate::error::Result;
use crate::grid::{block_masses, BlockPartition, PmfGrid};
use crate::potentials::{solve_w_star, ToleranceBand};

/// Slack on band membership checks.
pub const BAND_SLACK: f64 = 1e-12;

/// Projects `p` onto `{π : a_j ≤ w_j(π) ≤ b_j}` in the KL sense.
///
/// Blocks with zero mass cannot be scaled and are left at zero; the final
/// normalization absorbs whatever mass `w*` assigned to them.
pub fn project(p: &PmfGrid, part: &BlockPartition, band: &ToleranceBand) -> Result<PmfGrid> {
    let w = block_masses(p, part)?;
    let sol = solve_w_star(&w, band)?;

    let ly = p.ly();
    let mut out = vec![0.0; p.len()];
    for (j, block) in part.blocks().iter().enumerate() {
        if w[j] <= 0.0 {
            continue;
        }
        let scale = sol.w_star[j] / w[j];
        for i in block.x.clone() {
            let row = i * ly + block.y.start..i * ly + block.y.end;
            for (o, &v) in out[row.clone()].iter_mut().zip(&p.values()[row]) {
                *o = v * scale;
            }
        }
    }
    PmfGrid::normalize(p.lx(), p.ly(), out)
}

/// True iff every block mass of `p` lies inside the band (with [`BAND_SLACK`]).
pub fn is_in_band(p: &PmfGrid, part: &BlockPartition, band: &ToleranceBand) -> Result<bool> {
    let w = block_masses(p, part)?;
    if w.len() != band.len() {
        return Err(crate::Error::Dimension(format!(
            "{} blocks vs band of {}",
            w.len(),
            band.len()
        )));
    }
    Ok(band.contains(&w, BAND_SLACK))
}
