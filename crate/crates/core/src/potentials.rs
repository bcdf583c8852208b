//! KL potentials over block-partitioned grids.
//!
//! * `V(p)`: mass-weighted KL of each block conditional against the
//!   within-block uniform distribution.
//! * `V_δ(p)`: KL from the block masses `w(p)` to the closest masses inside
//!   the tolerance band `[w_ref − δ, w_ref + δ]`, solved in closed form by
//!   scaling and clipping: `w*_j = clip(w_j / τ*, a_j, b_j)` with `τ*` the
//!   root of `Σ_j w*_j(τ) = 1`.
//! * `E_block`, `E_pix`: L1 block-mass error and pixelwise mean squared error.
//!
//! All logarithms are natural; potentials are in nats. Terms with zero mass
//! contribute zero (`0 · ln 0 = 0`).

use crate::error::{Error, Result};
use crate::grid::{block_masses, block_values, BlockPartition, MassVector, PmfGrid};

/// Slack used when checking band feasibility and the unit sum of `w`.
const FEASIBILITY_SLACK: f64 = 1e-12;
const MASS_SUM_TOL: f64 = 1e-9;

/// Bisection settings for the scaling root `τ*`.
pub const TAU_LO: f64 = 1e-6;
pub const TAU_HI: f64 = 1e6;
pub const TAU_TOL: f64 = 1e-10;
pub const TAU_MAX_ITER: usize = 80;
/// Decades the bracket may be widened on each side before giving up.
const MAX_BRACKET_DECADES: usize = 30;

/// `D_KL(p ‖ q)` in nats, summed over entries where both `p` and `q` are positive.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "kl_divergence: {} vs {} entries",
            p.len(),
            q.len()
        )));
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| a * (a.ln() - b.ln()))
        .sum())
}

/// `V(p) = Σ_b w_b · D_KL(p_b ‖ u_b)`.
pub fn potential_v(p: &PmfGrid, part: &BlockPartition) -> Result<f64> {
    part.check_grid(p)?;
    let mut v = 0.0;
    for block in part.blocks() {
        let mut cond = block_values(p, block);
        let w: f64 = cond.iter().sum();
        if w <= 0.0 {
            continue;
        }
        cond.iter_mut().for_each(|x| *x /= w);
        let uniform = vec![1.0 / block.size() as f64; block.size()];
        v += w * kl_divergence(&cond, &uniform)?;
    }
    Ok(v)
}

/// Reference masses with a symmetric tolerance `δ`, clamped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToleranceBand {
    w_ref: MassVector,
    delta: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ToleranceBand {
    /// Builds `a_j = clamp(w_ref_j − δ, 0, 1)` and `b_j = clamp(w_ref_j + δ, 0, 1)`.
    ///
    /// `δ = 0` is accepted: it pins the masses exactly to `w_ref`.
    pub fn new(w_ref: MassVector, delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InfeasibleBand(format!(
                "delta must be finite and nonnegative, got {delta}"
            )));
        }
        if w_ref.is_empty() {
            return Err(Error::InfeasibleBand("empty reference masses".into()));
        }
        if w_ref.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InfeasibleBand(
                "reference masses must lie in [0, 1]".into(),
            ));
        }
        let lower: Vec<f64> = w_ref.iter().map(|&x| (x - delta).clamp(0.0, 1.0)).collect();
        let upper: Vec<f64> = w_ref.iter().map(|&x| (x + delta).clamp(0.0, 1.0)).collect();
        let (sa, sb) = (lower.iter().sum::<f64>(), upper.iter().sum::<f64>());
        if sa > 1.0 + FEASIBILITY_SLACK || sb < 1.0 - FEASIBILITY_SLACK {
            return Err(Error::InfeasibleBand(format!(
                "need sum(a) <= 1 <= sum(b), got sum(a) = {sa}, sum(b) = {sb}"
            )));
        }
        Ok(Self {
            w_ref,
            delta,
            lower,
            upper,
        })
    }

    /// Band around the block masses of `q`.
    pub fn from_reference(q: &PmfGrid, part: &BlockPartition, delta: f64) -> Result<Self> {
        Self::new(block_masses(q, part)?, delta)
    }

    pub fn w_ref(&self) -> &MassVector {
        &self.w_ref
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// True iff every `w_j` lies in `[a_j − slack, b_j + slack]`.
    pub fn contains(&self, w: &[f64], slack: f64) -> bool {
        w.len() == self.len()
            && w.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&a, &b))| x >= a - slack && x <= b + slack)
    }

    /// `clip(w_j / τ, a_j, b_j)` for every block.
    pub fn clipped(&self, w: &[f64], tau: f64) -> Vec<f64> {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&a, &b))| (x / tau).max(a).min(b))
            .collect()
    }

    /// `Σ_j clip(w_j / τ, a_j, b_j) − 1`; nonincreasing in `τ`.
    pub fn residual(&self, w: &[f64], tau: f64) -> f64 {
        self.clipped(w, tau).iter().sum::<f64>() - 1.0
    }
}

/// Optimal block masses and the scaling root that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct WStarSolution {
    pub tau_star: f64,
    pub w_star: MassVector,
}

/// Solves `Σ_j clip(w_j / τ, a_j, b_j) = 1` for `τ` by bisection.
///
/// When every coordinate clips the root is a whole interval of `τ`; `w_star`
/// is still unique and is the quantity callers should rely on.
pub fn solve_w_star(w: &[f64], band: &ToleranceBand) -> Result<WStarSolution> {
    if w.len() != band.len() {
        return Err(Error::Dimension(format!(
            "{} block masses vs band of {}",
            w.len(),
            band.len()
        )));
    }
    if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidDistribution(
            "block masses must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > MASS_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "block masses sum to {total}, expected 1"
        )));
    }

    let f = |tau: f64| band.residual(w, tau);

    let (mut lo, mut hi) = (TAU_LO, TAU_HI);
    let mut decades = 0;
    while f(lo) < -TAU_TOL {
        if decades == MAX_BRACKET_DECADES {
            return Err(Error::SolverFailure(format!(
                "residual still negative at tau = {lo:e}"
            )));
        }
        lo *= 0.1;
        decades += 1;
    }
    decades = 0;
    while f(hi) > TAU_TOL {
        if decades == MAX_BRACKET_DECADES {
            return Err(Error::SolverFailure(format!(
                "residual still positive at tau = {hi:e}"
            )));
        }
        hi *= 10.0;
        decades += 1;
    }

    let mut tau = 0.5 * (lo + hi);
    for _ in 0..TAU_MAX_ITER {
        tau = 0.5 * (lo + hi);
        let val = f(tau);
        if val.abs() < TAU_TOL {
            break;
        }
        if val > 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
    }

    let tau = polish_root(w, band, tau);
    let w_star = band.clipped(w, tau);
    let resid = w_star.iter().sum::<f64>() - 1.0;
    if resid.abs() > 1e-8 {
        return Err(Error::SolverFailure(format!(
            "bisection ended with residual {resid:e}"
        )));
    }
    Ok(WStarSolution {
        tau_star: tau,
        w_star: MassVector::new(w_star),
    })
}

/// Recomputes `τ` exactly from the active set found by bisection.
///
/// With the clipped coordinates fixed at their bounds, the free ones satisfy
/// `Σ_free w_j / τ = 1 − Σ_clipped bound_j`. The refined root is kept only if
/// it does not increase the residual.
fn polish_root(w: &[f64], band: &ToleranceBand, tau: f64) -> f64 {
    let (mut free, mut fixed) = (0.0, 0.0);
    for (&x, (&a, &b)) in w.iter().zip(band.lower().iter().zip(band.upper())) {
        let s = x / tau;
        if s <= a {
            fixed += a;
        } else if s >= b {
            fixed += b;
        } else {
            free += x;
        }
    }
    let room = 1.0 - fixed;
    if free > 0.0 && room > 0.0 {
        let refined = free / room;
        if band.residual(w, refined).abs() <= band.residual(w, tau).abs() {
            return refined;
        }
    }
    tau
}

/// `V_δ(p) = Σ_j w_j ln(w_j / w*_j)` over blocks with `w_j, w*_j > 0`.
pub fn potential_v_delta(p: &PmfGrid, part: &BlockPartition, band: &ToleranceBand) -> Result<f64> {
    let w = block_masses(p, part)?;
    let sol = solve_w_star(&w, band)?;
    kl_divergence(&w, &sol.w_star)
}

/// `E_block = Σ_j |w_j(p) − w_ref_j|`.
pub fn e_block(p: &PmfGrid, part: &BlockPartition, w_ref: &[f64]) -> Result<f64> {
    let w = block_masses(p, part)?;
    if w.len() != w_ref.len() {
        return Err(Error::Dimension(format!(
            "{} blocks vs {} reference masses",
            w.len(),
            w_ref.len()
        )));
    }
    Ok(w.iter().zip(w_ref).map(|(a, b)| (a - b).abs()).sum())
}

/// Mean squared pixel difference between `p` and `x_data`.
pub fn e_pix(p: &PmfGrid, x_data: &PmfGrid) -> Result<f64> {
    p.check_same_shape(x_data)?;
    let sq: f64 = p
        .values()
        .iter()
        .zip(x_data.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sq / p.len() as f64)
}
