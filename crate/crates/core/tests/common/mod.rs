//! Test-only oracles. Nothing here calls into the solver or projection code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vdelta::PmfGrid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut impl Rng, lx: usize, ly: usize) -> PmfGrid {
    let v = (0..lx * ly).map(|_| rng.gen::<f64>() + 1e-3).collect();
    PmfGrid::normalize(lx, ly, v).unwrap()
}

/// Grid whose blocks carry very different masses, so projections are active.
pub fn lumpy_grid(rng: &mut impl Rng, lx: usize, ly: usize, bx: usize, by: usize) -> PmfGrid {
    let levels: Vec<f64> = (0..bx * by).map(|_| rng.gen::<f64>().powi(3) + 1e-3).collect();
    let (hx, hy) = (lx / bx, ly / by);
    let v = (0..lx * ly)
        .map(|idx| {
            let (i, k) = (idx / ly, idx % ly);
            levels[(i / hx) * by + k / hy] * (0.2 + rng.gen::<f64>())
        })
        .collect();
    PmfGrid::normalize(lx, ly, v).unwrap()
}

pub fn random_simplex(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// `Σ w ln(w / v)` with `0 ln 0 = 0`, accumulated term by term.
pub fn kl_oracle(w: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in w.iter().zip(v) {
        if x > 0.0 {
            acc += x * (x / y).ln();
        }
    }
    acc
}

/// Band bounds clamped into [0, 1], recomputed independently.
pub fn band_bounds(w_ref: &[f64], delta: f64) -> (Vec<f64>, Vec<f64>) {
    (
        w_ref.iter().map(|x| (x - delta).clamp(0.0, 1.0)).collect(),
        w_ref.iter().map(|x| (x + delta).clamp(0.0, 1.0)).collect(),
    )
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if hi < lo {
        return vec![];
    }
    let n = ((hi - lo) / step).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if *v.last().unwrap() < hi {
        v.push(hi);
    }
    v
}

/// Exhaustive search for `argmin_v KL(w ‖ v)` over `{(v, 1 − v)} ∩ band`.
pub fn grid_search_m2(w: &[f64], a: &[f64], b: &[f64], step: f64) -> Vec<f64> {
    let lo = a[0].max(1.0 - b[1]);
    let hi = b[0].min(1.0 - a[1]);
    let mut best = (f64::INFINITY, 0.0);
    for v in axis(lo, hi, step) {
        let f = kl_oracle(w, &[v, 1.0 - v]);
        if f < best.0 {
            best = (f, v);
        }
    }
    vec![best.1, 1.0 - best.1]
}

fn search_m3(
    w: &[f64],
    a: &[f64],
    b: &[f64],
    r1: (f64, f64),
    r2: (f64, f64),
    step: f64,
) -> (f64, [f64; 3]) {
    let mut best = (f64::INFINITY, [0.0; 3]);
    for v1 in axis(r1.0.max(a[0]), r1.1.min(b[0]), step) {
        let mut cands = axis(r2.0.max(a[1]), r2.1.min(b[1]), step);
        // Points where the third coordinate sits exactly on its bounds.
        cands.push(1.0 - v1 - a[2]);
        cands.push(1.0 - v1 - b[2]);
        for v2 in cands {
            if v2 < a[1] || v2 > b[1] {
                continue;
            }
            let v3 = 1.0 - v1 - v2;
            if v3 < a[2] - 1e-15 || v3 > b[2] + 1e-15 {
                continue;
            }
            let f = kl_oracle(w, &[v1, v2, v3]);
            if f < best.0 {
                best = (f, [v1, v2, v3]);
            }
        }
    }
    best
}

/// Two-level exhaustive search over the band-restricted 2-simplex:
/// a coarse pass over the whole band, then a `step` grid around the winner.
pub fn grid_search_m3(w: &[f64], a: &[f64], b: &[f64], step: f64) -> Vec<f64> {
    let coarse = 10.0 * step;
    let (_, c) = search_m3(w, a, b, (a[0], b[0]), (a[1], b[1]), coarse);
    let r = 5.0 * coarse;
    let (_, f) = search_m3(w, a, b, (c[0] - r, c[0] + r), (c[1] - r, c[1] + r), step);
    f.to_vec()
}

/// Dense `n × n` matrix of a symmetric-padded 1-D Gaussian filter.
///
/// Built by physically mirroring the signal (`rev(x), x, rev(x), …`) and
/// convolving, one basis vector at a time.
pub fn dense_reflect_filter(n: usize, sigma: f64) -> Vec<Vec<f64>> {
    let r = (4.0 * sigma).ceil() as usize;
    let mut taps: Vec<f64> = (0..=2 * r)
        .map(|t| {
            let x = t as f64 - r as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);

    let copies = r / n + 2;
    let mut m = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let rev: Vec<f64> = e.iter().rev().copied().collect();
        // ... rev e rev e [e] rev e rev ...
        let mut ext = Vec::new();
        for c in 0..2 * copies + 1 {
            let flip = (c as isize - copies as isize).rem_euclid(2) == 1;
            ext.extend_from_slice(if flip { &rev } else { &e });
        }
        let origin = copies * n;
        for i in 0..n {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                acc += w * ext[origin + i + t - r];
            }
            m[i][col] = acc;
        }
    }
    m
}
