//! Forward block-preserving blur and the toy reverse kernel.
//!
//! Gaussian filtering is separable, truncated at `ceil(4σ)` pixels, and uses
//! half-sample symmetric reflection (`d c b a | a b c d | d c b a`). With a
//! symmetric kernel that boundary rule makes each 1-D pass a symmetric,
//! doubly stochastic matrix, so the within-block uniform distribution is a
//! fixed point of the block blur.
//!
//! Trajectories are stored in execution order: index 0 is the starting state.

use crate::error::{Error, Result};
use crate::grid::{block_masses, BlockPartition, PmfGrid, EPS_PMF};
use crate::potentials::ToleranceBand;
use crate::projection::project;

/// Truncation radius in standard deviations.
const TRUNCATE: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardParams {
    /// Gaussian standard deviation in pixels.
    pub sigma_fwd: f64,
    pub steps: usize,
}

impl ForwardParams {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma_fwd.is_finite() || self.sigma_fwd <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma_fwd must be positive, got {}",
                self.sigma_fwd
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReverseParams {
    /// Weight of `q_data` in the geometric mean, in `[0, 1]`.
    pub beta: f64,
    /// Whole-grid smoothing width in pixels; 0 disables smoothing.
    pub sigma_smooth: f64,
    pub steps: usize,
}

impl ReverseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !self.sigma_smooth.is_finite() || self.sigma_smooth < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma_smooth must be nonnegative, got {}",
                self.sigma_smooth
            )));
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(4σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (TRUNCATE * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|x| (-0.5 * (x as f64 / sigma).powi(2)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Maps an out-of-range index back into `0..n` by half-sample reflection.
#[inline]
fn reflect(idx: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = idx.rem_euclid(period) as usize;
    if m >= n {
        period as usize - 1 - m
    } else {
        m
    }
}

/// Filters a `rows × cols` row-major buffer along both axes.
fn blur_2d(buf: &[f64], rows: usize, cols: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; buf.len()];
    // Along rows (axis 0).
    for i in 0..rows {
        for (t, &wt) in taps.iter().enumerate() {
            let src = reflect(i as isize + t as isize - r, rows);
            let (dst_row, src_row) = (i * cols, src * cols);
            for k in 0..cols {
                tmp[dst_row + k] += wt * buf[src_row + k];
            }
        }
    }
    // Along columns (axis 1).
    let mut out = vec![0.0; buf.len()];
    let src_cols: Vec<Vec<usize>> = (0..cols)
        .map(|k| {
            (0..taps.len())
                .map(|t| reflect(k as isize + t as isize - r, cols))
                .collect()
        })
        .collect();
    for i in 0..rows {
        let row = &tmp[i * cols..(i + 1) * cols];
        for (k, idx) in src_cols.iter().enumerate() {
            out[i * cols + k] = idx.iter().zip(taps).map(|(&s, &w)| w * row[s]).sum();
        }
    }
    out
}

/// Whole-grid Gaussian smoothing with reflection at the grid edges.
pub fn gaussian_smooth(values: &[f64], lx: usize, ly: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return values.to_vec();
    }
    blur_2d(values, lx, ly, &gaussian_kernel(sigma))
}

/// Blurs each block independently, reflecting at block edges.
///
/// Each block is rescaled afterwards so its mass matches the input exactly.
pub fn forward_block_blur(p: &PmfGrid, part: &BlockPartition, sigma_fwd: f64) -> Result<PmfGrid> {
    if !sigma_fwd.is_finite() || sigma_fwd < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sigma_fwd must be nonnegative, got {sigma_fwd}"
        )));
    }
    let w_in = block_masses(p, part)?;
    if sigma_fwd == 0.0 {
        return Ok(p.clone());
    }
    let taps = gaussian_kernel(sigma_fwd);
    let ly = p.ly();
    let mut out = p.values().to_vec();
    for (j, block) in part.blocks().iter().enumerate() {
        let local = crate::grid::block_values(p, block);
        let mut blurred = blur_2d(&local, block.width(), block.height(), &taps);
        let w_out: f64 = blurred.iter().sum();
        if w_out > 0.0 {
            let scale = w_in[j] / w_out;
            blurred.iter_mut().for_each(|v| *v *= scale);
        }
        for (r, i) in block.x.clone().enumerate() {
            let h = block.height();
            out[i * ly + block.y.start..i * ly + block.y.end]
                .copy_from_slice(&blurred[r * h..(r + 1) * h]);
        }
    }
    Ok(PmfGrid::from_parts(p.lx(), p.ly(), out))
}

/// One toy reverse step: `p^(1−β) q^β`, normalized, then smoothed over the whole grid.
///
/// The smoothing ignores block boundaries, which is where block mass leaks.
pub fn reverse_step(p: &PmfGrid, q_data: &PmfGrid, params: &ReverseParams) -> Result<PmfGrid> {
    params.validate()?;
    p.check_same_shape(q_data)?;
    let beta = params.beta;
    let mixed: Vec<f64> = p
        .values()
        .iter()
        .zip(q_data.values())
        .map(|(&a, &b)| {
            let la = a.max(EPS_PMF).ln();
            let lb = b.max(EPS_PMF).ln();
            ((1.0 - beta) * la + beta * lb).exp()
        })
        .collect();
    let mixed = PmfGrid::normalize(p.lx(), p.ly(), mixed)?;
    if params.sigma_smooth == 0.0 {
        return Ok(mixed);
    }
    let smoothed = gaussian_smooth(mixed.values(), p.lx(), p.ly(), params.sigma_smooth);
    PmfGrid::normalize(p.lx(), p.ly(), smoothed)
}

/// `[p0, p1, …, p_steps]` under repeated block blur with a fixed width.
pub fn run_forward(p0: &PmfGrid, part: &BlockPartition, params: &ForwardParams) -> Result<Vec<PmfGrid>> {
    params.validate()?;
    run_forward_schedule(p0, part, &vec![params.sigma_fwd; params.steps])
}

/// Forward trajectory with a per-step blur width (time-inhomogeneous dynamics).
pub fn run_forward_schedule(p0: &PmfGrid, part: &BlockPartition, sigmas: &[f64]) -> Result<Vec<PmfGrid>> {
    part.check_grid(p0)?;
    let mut traj = Vec::with_capacity(sigmas.len() + 1);
    traj.push(p0.clone());
    for &s in sigmas {
        let next = forward_block_blur(traj.last().unwrap(), part, s)?;
        traj.push(next);
    }
    Ok(traj)
}

/// Baseline and projected reverse trajectories from a shared start.
#[derive(Clone, Debug)]
pub struct ReversePair {
    pub baseline: Vec<PmfGrid>,
    pub projected: Vec<PmfGrid>,
    /// `‖w(p̃_n) − w_ref‖₁` of the projected run just before each projection,
    /// for steps `n = 1..=T`.
    pub pre_projection_drift: Vec<f64>,
}

pub fn run_reverse_pair(
    p_t: &PmfGrid,
    q_data: &PmfGrid,
    part: &BlockPartition,
    band: &ToleranceBand,
    params: &ReverseParams,
) -> Result<ReversePair> {
    params.validate()?;
    part.check_grid(p_t)?;
    p_t.check_same_shape(q_data)?;

    let n = params.steps + 1;
    let mut baseline = Vec::with_capacity(n);
    let mut projected = Vec::with_capacity(n);
    let mut drift = Vec::with_capacity(params.steps);
    baseline.push(p_t.clone());
    projected.push(p_t.clone());

    for _ in 0..params.steps {
        let base = reverse_step(baseline.last().unwrap(), q_data, params)?;
        let tilde = reverse_step(projected.last().unwrap(), q_data, params)?;
        let w = block_masses(&tilde, part)?;
        drift.push(
            w.iter()
                .zip(band.w_ref().iter())
                .map(|(a, b)| (a - b).abs())
                .sum(),
        );
        let proj = project(&tilde, part, band)?;
        baseline.push(base);
        projected.push(proj);
    }
    Ok(ReversePair {
        baseline,
        projected,
        pre_projection_drift: drift,
    })
}
