//! Probability grids, rectangular block partitions and block-mass aggregation.
//!
//! Grids are dense `lx × ly` arrays stored row-major: pixel `(i, k)` with
//! `i < lx`, `k < ly` lives at `i * ly + k`. Blocks are enumerated row-major
//! over `(b_x, b_y)`, so block `j` has `b_x = j / B_y` and `b_y = j % B_y`.

use std::ops::{Deref, Range};

use crate::error::{Error, Result};

/// Positivity floor applied before any logarithm is taken.
pub const EPS_PMF: f64 = 1e-12;

/// Absolute tolerance on the unit-sum invariant.
pub const SUM_TOL: f64 = 1e-12;

/// A nonnegative `lx × ly` array whose entries sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct PmfGrid {
    lx: usize,
    ly: usize,
    values: Vec<f64>,
}

impl PmfGrid {
    /// Clamps entries below at [`EPS_PMF`] and divides by their sum.
    ///
    /// The input must have a positive, finite raw sum; negative entries are
    /// clamped like any other value below the floor.
    pub fn normalize(lx: usize, ly: usize, mut values: Vec<f64>) -> Result<Self> {
        check_shape(lx, ly, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite entry".into()));
        }
        let raw: f64 = values.iter().sum();
        if !raw.is_finite() || raw <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "entries must have a positive sum, got {raw}"
            )));
        }
        for v in values.iter_mut() {
            if *v < EPS_PMF {
                *v = EPS_PMF;
            }
        }
        let s: f64 = values.iter().sum();
        for v in values.iter_mut() {
            *v /= s;
        }
        Ok(Self { lx, ly, values })
    }

    /// Wraps values that already form a distribution, without flooring.
    ///
    /// Exact zeros are kept, which is what point-mass test fixtures need.
    pub fn from_pmf(lx: usize, ly: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(lx, ly, values.len())?;
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(
                "entries must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = values.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {s}, expected 1"
            )));
        }
        Ok(Self { lx, ly, values })
    }

    pub fn uniform(lx: usize, ly: usize) -> Self {
        let n = lx * ly;
        Self {
            lx,
            ly,
            values: vec![1.0 / n as f64; n],
        }
    }

    /// Unit mass at pixel `(i, k)`, zero elsewhere.
    pub fn point_mass(lx: usize, ly: usize, i: usize, k: usize) -> Self {
        let mut values = vec![0.0; lx * ly];
        values[i * ly + k] = 1.0;
        Self { lx, ly, values }
    }

    /// Internal constructor for operators that preserve the distribution
    /// property up to rounding.
    pub(crate) fn from_parts(lx: usize, ly: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), lx * ly);
        Self { lx, ly, values }
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.ly + k]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute per-entry difference.
    pub fn max_abs_diff(&self, other: &PmfGrid) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_shape(&self, other: &PmfGrid) -> Result<()> {
        if self.lx != other.lx || self.ly != other.ly {
            return Err(Error::Dimension(format!(
                "grid {}x{} vs grid {}x{}",
                self.lx, self.ly, other.lx, other.ly
            )));
        }
        Ok(())
    }
}

fn check_shape(lx: usize, ly: usize, len: usize) -> Result<()> {
    if lx == 0 || ly == 0 {
        return Err(Error::Dimension("grid dimensions must be positive".into()));
    }
    if lx * ly != len {
        return Err(Error::Dimension(format!(
            "{lx}x{ly} grid needs {} values, got {len}",
            lx * ly
        )));
    }
    Ok(())
}

/// One rectangle of a partition, as half-open pixel ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub x: Range<usize>,
    pub y: Range<usize>,
}

impl Block {
    pub fn width(&self) -> usize {
        self.x.len()
    }

    pub fn height(&self) -> usize {
        self.y.len()
    }

    /// Number of pixels in the block.
    pub fn size(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn contains(&self, i: usize, k: usize) -> bool {
        self.x.contains(&i) && self.y.contains(&k)
    }
}

/// Disjoint rectangular tiling of an `lx × ly` grid into `bx · by` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    lx: usize,
    ly: usize,
    bx: usize,
    by: usize,
    blocks: Vec<Block>,
}

impl BlockPartition {
    pub fn new(lx: usize, ly: usize, bx: usize, by: usize) -> Result<Self> {
        if lx == 0 || ly == 0 || bx == 0 || by == 0 {
            return Err(Error::InvalidPartition(format!(
                "dimensions must be positive (L={lx}x{ly}, B={bx}x{by})"
            )));
        }
        if !lx.is_multiple_of(bx) || !ly.is_multiple_of(by) {
            return Err(Error::InvalidPartition(format!(
                "{lx}x{ly} grid is not divisible into {bx}x{by} blocks"
            )));
        }
        let (hx, hy) = (lx / bx, ly / by);
        let blocks = (0..bx)
            .flat_map(|ix| {
                (0..by).map(move |iy| Block {
                    x: ix * hx..(ix + 1) * hx,
                    y: iy * hy..(iy + 1) * hy,
                })
            })
            .collect();
        Ok(Self {
            lx,
            ly,
            bx,
            by,
            blocks,
        })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn bx(&self) -> usize {
        self.bx
    }

    pub fn by(&self) -> usize {
        self.by
    }

    /// Number of blocks `m`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &Block {
        &self.blocks[j]
    }

    /// `(b_x, b_y)` coordinates of block `j`.
    pub fn block_coords(&self, j: usize) -> (usize, usize) {
        (j / self.by, j % self.by)
    }

    /// Index of the block containing pixel `(i, k)`.
    pub fn block_of(&self, i: usize, k: usize) -> usize {
        let (hx, hy) = (self.lx / self.bx, self.ly / self.by);
        (i / hx) * self.by + k / hy
    }

    pub(crate) fn check_grid(&self, p: &PmfGrid) -> Result<()> {
        if p.lx() != self.lx || p.ly() != self.ly {
            return Err(Error::Dimension(format!(
                "grid {}x{} vs partition of {}x{}",
                p.lx(),
                p.ly(),
                self.lx,
                self.ly
            )));
        }
        Ok(())
    }
}

/// Block masses `w_j(p)`, indexed in partition order.
#[derive(Clone, Debug, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(w: Vec<f64>) -> Self {
        Self(w)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for MassVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for MassVector {
    fn from(w: Vec<f64>) -> Self {
        Self(w)
    }
}

/// Sum of `p` over each block of the partition.
pub fn block_masses(p: &PmfGrid, part: &BlockPartition) -> Result<MassVector> {
    part.check_grid(p)?;
    let ly = p.ly();
    let v = p.values();
    let w = part
        .blocks()
        .iter()
        .map(|b| {
            b.x.clone()
                .map(|i| v[i * ly + b.y.start..i * ly + b.y.end].iter().sum::<f64>())
                .sum()
        })
        .collect();
    Ok(MassVector(w))
}

/// `p` restricted to block `j` and divided by the block mass.
///
/// The result is laid out row-major over the block (`width × height`).
pub fn block_conditional(p: &PmfGrid, part: &BlockPartition, j: usize) -> Result<Vec<f64>> {
    part.check_grid(p)?;
    if j >= part.len() {
        return Err(Error::Dimension(format!(
            "block index {j} out of range for {} blocks",
            part.len()
        )));
    }
    let block = part.block(j);
    let mut out = block_values(p, block);
    let w: f64 = out.iter().sum();
    if w.is_nan() || w <= 0.0 {
        return Err(Error::ZeroMassBlock(j));
    }
    for v in out.iter_mut() {
        *v /= w;
    }
    Ok(out)
}

/// Copies the entries of one block, row-major over the block.
pub(crate) fn block_values(p: &PmfGrid, block: &Block) -> Vec<f64> {
    let ly = p.ly();
    let v = p.values();
    let mut out = Vec::with_capacity(block.size());
    for i in block.x.clone() {
        out.extend_from_slice(&v[i * ly + block.y.start..i * ly + block.y.end]);
    }
    out
}
