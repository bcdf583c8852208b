mod common;

use common::kl_oracle;
use proptest::prelude::*;
use vdelta::*;

fn simplex(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-4f64..1.0, m).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn grid(lx: usize, ly: usize) -> impl Strategy<Value = PmfGrid> {
    prop::collection::vec(1e-3f64..1.0, lx * ly)
        .prop_map(move |v| PmfGrid::normalize(lx, ly, v).unwrap())
}

/// Grid with strongly unequal block levels on an 8×8, 2×2 layout.
fn lumpy_grid() -> impl Strategy<Value = PmfGrid> {
    (prop::collection::vec(0.01f64..1.0, 4), prop::collection::vec(0.1f64..1.0, 64)).prop_map(
        |(levels, noise)| {
            let v = (0..64)
                .map(|idx| {
                    let (i, k) = (idx / 8, idx % 8);
                    levels[(i / 4) * 2 + k / 4].powi(3) * noise[idx]
                })
                .collect();
            PmfGrid::normalize(8, 8, v).unwrap()
        },
    )
}

fn part8() -> BlockPartition {
    BlockPartition::new(8, 8, 2, 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn w_star_is_in_band_with_unit_sum(
        (w, w_ref) in (2usize..12).prop_flat_map(|m| (simplex(m), simplex(m))),
        delta in 0.0f64..0.5,
    ) {
        let band = ToleranceBand::new(MassVector::new(w_ref), delta).unwrap();
        let sol = solve_w_star(&w, &band).unwrap();
        prop_assert!((sol.w_star.sum() - 1.0).abs() < 1e-8);
        prop_assert!(sol.tau_star > 0.0);
        for j in 0..w.len() {
            prop_assert!(sol.w_star[j] >= band.lower()[j] && sol.w_star[j] <= band.upper()[j]);
        }
        prop_assert!(band.residual(&w, sol.tau_star).abs() < 1e-10);
    }

    #[test]
    fn root_function_is_nonincreasing(
        (w, w_ref) in (2usize..8).prop_flat_map(|m| (simplex(m), simplex(m))),
        delta in 0.001f64..0.3,
    ) {
        let band = ToleranceBand::new(MassVector::new(w_ref), delta).unwrap();
        let mut prev = f64::INFINITY;
        for e in -60..=60 {
            let tau = 10f64.powf(e as f64 / 10.0);
            let r = band.residual(&w, tau);
            prop_assert!(r <= prev + 1e-15);
            prev = r;
        }
    }

    #[test]
    fn large_delta_gives_zero_v_delta(p in grid(8, 8), w_ref in simplex(4)) {
        let w = block_masses(&p, &part8()).unwrap();
        let spread = w.iter().zip(&w_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let band = ToleranceBand::new(MassVector::new(w_ref), spread).unwrap();
        prop_assert!(potential_v_delta(&p, &part8(), &band).unwrap().abs() < 1e-12);
    }

    #[test]
    fn project_is_idempotent_and_in_band(p in lumpy_grid(), w_ref in simplex(4), delta in 0.001f64..0.1) {
        let part = part8();
        let band = ToleranceBand::new(MassVector::new(w_ref), delta).unwrap();
        let q = project(&p, &part, &band).unwrap();
        prop_assert!(is_in_band(&q, &part, &band).unwrap());
        prop_assert!(potential_v_delta(&q, &part, &band).unwrap() <= 1e-9);
        let qq = project(&q, &part, &band).unwrap();
        prop_assert!(q.max_abs_diff(&qq).unwrap() < 1e-10);
    }

    #[test]
    fn project_keeps_block_shapes(p in lumpy_grid(), w_ref in simplex(4), delta in 0.001f64..0.1) {
        let part = part8();
        let band = ToleranceBand::new(MassVector::new(w_ref), delta).unwrap();
        let q = project(&p, &part, &band).unwrap();
        for j in 0..part.len() {
            let (cp, cq) = (block_conditional(&p, &part, j).unwrap(), block_conditional(&q, &part, j).unwrap());
            for (a, b) in cp.iter().zip(&cq) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let u = vec![1.0 / 16.0; 16];
            prop_assert!((kl_oracle(&cp, &u) - kl_oracle(&cq, &u)).abs() < 1e-9);
        }
    }

    #[test]
    fn potentials_are_nonnegative(p in lumpy_grid(), x in grid(8, 8), w_ref in simplex(4), delta in 0.0f64..0.2) {
        let part = part8();
        let band = ToleranceBand::new(MassVector::new(w_ref.clone()), delta).unwrap();
        prop_assert!(potential_v(&p, &part).unwrap() >= -1e-10);
        prop_assert!(potential_v_delta(&p, &part, &band).unwrap() >= -1e-10);
        prop_assert!(e_block(&p, &part, &w_ref).unwrap() >= 0.0);
        prop_assert!(e_pix(&p, &x).unwrap() >= 0.0);
    }

    #[test]
    fn block_masses_sum_to_total(p in grid(12, 8)) {
        let part = BlockPartition::new(12, 8, 3, 4).unwrap();
        prop_assert!((block_masses(&p, &part).unwrap().sum() - p.total()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_blur_never_raises_v(p in grid(16, 16), sigmas in prop::collection::vec(0.3f64..2.0, 1..20)) {
        let part = BlockPartition::new(16, 16, 2, 2).unwrap();
        let w0 = block_masses(&p, &part).unwrap();
        let traj = run_forward_schedule(&p, &part, &sigmas).unwrap();
        for pair in traj.windows(2) {
            prop_assert!(potential_v(&pair[1], &part).unwrap() <= potential_v(&pair[0], &part).unwrap() + 1e-10);
            prop_assert!(e_block(&pair[1], &part, &w0).unwrap() <= 1e-12);
        }
    }
}
