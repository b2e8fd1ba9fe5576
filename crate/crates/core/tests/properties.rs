use std::collections::HashMap;
use std::path::Path;

use microevo::grain_growth::{
    draw_seeds, render_frame, voronoi_labels, GrainParams, OrderParameterSet,
};
use microevo::metrics::segment::{segment_grains, GrainLabeling, SegmentParams};
use microevo::metrics::{rmse, savitzky_golay, ssim};
use microevo::spinodal::{ch_step, ConcentrationField, SpinodalParams};
use microevo::tensor_io::{decode_tensor, encode_tensor, to_gray_levels};
use microevo::Field2D;
use proptest::prelude::*;

fn field(h: usize, w: usize) -> impl Strategy<Value = Field2D> {
    prop::collection::vec(0.0f64..1.0, h * w).prop_map(move |v| Field2D::from_values(h, w, v).unwrap())
}

fn same_partition(a: &GrainLabeling, b: &[u32]) -> bool {
    let mut fwd: HashMap<u32, u32> = HashMap::new();
    let mut back: HashMap<u32, u32> = HashMap::new();
    a.labels.iter().zip(b).all(|(&x, &y)| {
        (x == 0) == (y == 0) && *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x
    })
}

fn small_grain_set(h: usize, w: usize, n: usize, seed: u64) -> OrderParameterSet {
    let seeds = draw_seeds(h, w, n, seed);
    OrderParameterSet::from_labels(h, w, n, &voronoi_labels(h, w, &seeds)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_roundtrip_is_bit_exact(
        dims in (1usize..3, 1usize..4, 1usize..3, 1usize..6, 1usize..6),
        seed in any::<u64>(),
    ) {
        let dims = [dims.0, dims.1, dims.2, dims.3, dims.4];
        let n: usize = dims.iter().product();
        let payload: Vec<f32> = (0..n)
            .map(|k| f32::from_bits((seed.wrapping_mul(k as u64 + 1) >> 11) as u32 & 0x7f7f_ffff))
            .collect();
        let bytes = encode_tensor(&dims, &payload).unwrap();
        prop_assert_eq!(bytes.len(), 33 + 4 * n);
        let (d, p) = decode_tensor(&bytes, Path::new("mem")).unwrap();
        prop_assert_eq!(d, dims);
        prop_assert!(p.iter().zip(&payload).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn gray_levels_are_monotone(a in -0.5f64..1.5, b in -0.5f64..1.5) {
        let f = Field2D::from_values(1, 2, vec![a.min(b), a.max(b)]).unwrap();
        let g = to_gray_levels(&f, None);
        prop_assert!(g[0] <= g[1]);
        let g = to_gray_levels(&f, Some((0.0, 0.6)));
        prop_assert!(g[0] <= g[1]);
    }

    #[test]
    fn rmse_is_a_metric(x in field(6, 5), y in field(6, 5), z in field(6, 5)) {
        let dxy = rmse(&x, &y).unwrap();
        prop_assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        prop_assert_eq!(dxy, rmse(&y, &x).unwrap());
        prop_assert!(dxy > 0.0 || x == y);
        prop_assert!(dxy <= rmse(&x, &z).unwrap() + rmse(&z, &y).unwrap() + 1e-12);
    }

    #[test]
    fn ssim_identity_and_symmetry(x in field(7, 7), y in field(7, 7)) {
        prop_assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        prop_assert_eq!(ssim(&x, &y).unwrap(), ssim(&y, &x).unwrap());
    }

    #[test]
    fn periodic_segmentation_is_shift_invariant(
        bits in prop::collection::vec(any::<bool>(), 12 * 10),
        dr in 0usize..12,
        dc in 0usize..10,
        min_area in 1usize..5,
    ) {
        let f = Field2D::from_values(12, 10, bits.iter().map(|&b| f64::from(u8::from(b))).collect()).unwrap();
        let params = SegmentParams { min_area, ..SegmentParams::default() };
        let base = segment_grains(&f, &params);
        let shifted = segment_grains(&f.rolled(dr, dc), &params);
        // pull the shifted labels back onto the original grid
        let back: Vec<u32> = (0..12 * 10)
            .map(|p| shifted.labels[((p / 10 + dr) % 12) * 10 + (p % 10 + dc) % 10])
            .collect();
        prop_assert!(same_partition(&base, &back));
        let mut a = base.areas.clone();
        let mut b = shifted.areas.clone();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn savgol_reproduces_polynomials(
        coeffs in prop::collection::vec(-2.0f64..2.0, 1..4),
        len in 11usize..40,
    ) {
        let order = coeffs.len() - 1;
        let s: Vec<f64> = (0..len)
            .map(|i| {
                let x = i as f64 / len as f64;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            })
            .collect();
        let out = savitzky_golay(&s, 11, order.max(1).min(3)).unwrap();
        for (a, b) in s.iter().zip(&out) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grain_step_commutes_with_cyclic_shift(seed in any::<u64>(), dr in 0usize..20, dc in 0usize..16) {
        let params = GrainParams { height: 20, width: 16, n_grains: 6, rescan_interval: 0, ..GrainParams::default() };
        let set = small_grain_set(20, 16, 6, seed);
        let mut a = set.clone();
        let mut b = set.rolled(dr, dc);
        for _ in 0..15 {
            a.step(&params).unwrap();
            b.step(&params).unwrap();
        }
        for i in 0..6 {
            let expect = a.field(i).rolled(dr, dc);
            let got = b.field(i);
            prop_assert!(expect.values().iter().zip(got.values()).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn active_box_update_matches_full_grid(seed in any::<u64>(), steps in 1usize..40) {
        let tracked = GrainParams {
            height: 24,
            width: 24,
            n_grains: 8,
            rescan_interval: 0,
            ..GrainParams::default()
        };
        let full = GrainParams { track_active: false, ..tracked.clone() };
        let mut a = small_grain_set(24, 24, 8, seed);
        let mut b = a.clone();
        for _ in 0..steps {
            a.step(&tracked).unwrap();
            b.step(&full).unwrap();
        }
        for i in 0..8 {
            prop_assert!(a.eta(i).iter().zip(b.eta(i)).all(|(x, y)| (x - y).abs() <= 1e-12));
        }
        prop_assert_eq!(render_frame(&a), render_frame(&b));
    }

    #[test]
    fn spinodal_is_mirror_symmetric(u in prop::collection::vec(-0.05f64..0.05, 10 * 9)) {
        let params = SpinodalParams { height: 10, width: 9, ..SpinodalParams::default() };
        let (_, dt) = params.substeps();
        let mirrored: Vec<f64> = u.iter().map(|v| -v).collect();
        let mut a = ConcentrationField::from_deviation(10, 9, u).unwrap();
        let mut b = ConcentrationField::from_deviation(10, 9, mirrored).unwrap();
        for _ in 0..50 {
            ch_step(&mut a, &params, dt).unwrap();
            ch_step(&mut b, &params, dt).unwrap();
        }
        prop_assert!(a.deviation().iter().zip(b.deviation()).all(|(x, y)| *x == -*y));
    }
}
