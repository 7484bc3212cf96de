mod common;

use common::oracle;
use cscore::cam::{eigencam, gradcam, gradcam_pp, layercam, scorecam};
use cscore::engine::{class_cscore, GoldList, GoldMember};
use cscore::io::{assemble_series, read_f32_file, write_cscore_report, write_f32_file};
use cscore::trajectory::{detect_all, net_change, DetectorConfig, DEFAULT_PHASE_BOUNDARY};
use cscore::{
    bilinear_resize, fixtures, minmax_normalize, power_emphasis, ActivationBundle, CamMethod, Heatmap, Tensor2D,
    Tensor3D,
};
use proptest::prelude::*;

fn tensor2(max_side: usize, lo: f32, hi: f32) -> impl Strategy<Value = Tensor2D> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(h, w)| {
        prop::collection::vec(lo..hi, h * w).prop_map(move |d| Tensor2D::new(h, w, d).unwrap())
    })
}

/// Unit-range map on a 1/256 grid, so distinct values stay distinct under powers.
fn grid_heatmap(h: usize, w: usize) -> impl Strategy<Value = Heatmap> {
    prop::collection::vec(0u16..=256, h * w).prop_map(move |d| {
        let data = d.into_iter().map(|k| f32::from(k) / 256.0).collect();
        Heatmap::from_unit(Tensor2D::new(h, w, data).unwrap()).unwrap()
    })
}

fn unit_heatmap(h: usize, w: usize) -> impl Strategy<Value = Heatmap> {
    prop::collection::vec(0.0f32..=1.0, h * w)
        .prop_map(move |d| Heatmap::from_unit(Tensor2D::new(h, w, d).unwrap()).unwrap())
}

/// Activations, gradients and channel scores for one layer.
fn layer(max_side: usize, max_c: usize) -> impl Strategy<Value = (usize, usize, usize, Vec<f32>, Vec<f32>, Vec<f64>)> {
    (1..=max_side, 1..=max_side, 1..=max_c).prop_flat_map(|(h, w, c)| {
        let n = h * w * c;
        (
            Just(h),
            Just(w),
            Just(c),
            prop::collection::vec(-1.0f32..3.0, n),
            prop::collection::vec(-1.0f32..1.0, n),
            prop::collection::vec(-0.5f64..1.0, c),
        )
    })
}

fn bundle(h: usize, w: usize, c: usize, a: &[f32], g: &[f32], s: &[f64]) -> ActivationBundle {
    ActivationBundle::new("l", "i", 0, Tensor3D::new(h, w, c, a.to_vec()).unwrap())
        .with_gradients(Tensor3D::new(h, w, c, g.to_vec()).unwrap())
        .unwrap()
        .with_channel_scores(s.to_vec())
        .unwrap()
}

fn gold(confidences: &[f64]) -> GoldList {
    let members = confidences
        .iter()
        .enumerate()
        .map(|(i, &p)| GoldMember {
            image_id: format!("img{i:03}"),
            confidence: p,
        })
        .collect();
    GoldList::from_members(0, "E1", 0.5, members).unwrap()
}

fn ranks_agree(a: &[f32], b: &[f32]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i].partial_cmp(&a[j]) == b[i].partial_cmp(&b[j])))
}

fn check_unit_output(h: &Heatmap) -> Result<(), TestCaseError> {
    let d = h.data();
    prop_assert!(d.iter().all(|v| (0.0..=1.0).contains(v)));
    prop_assert!(d.contains(&0.0));
    if !h.is_degenerate() {
        prop_assert!(d.contains(&1.0));
    } else {
        prop_assert!(d.iter().all(|&v| v == 0.0));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalize_is_idempotent(t in tensor2(12, -5.0, 5.0)) {
        let once = minmax_normalize(&t);
        prop_assume!(!once.is_degenerate());
        let twice = minmax_normalize(once.tensor());
        prop_assert_eq!(twice.data(), once.data());
    }

    #[test]
    fn emphasis_preserves_ranking(h in grid_heatmap(5, 7), alpha in 0.25f64..4.0) {
        let e = power_emphasis(&h, alpha).unwrap();
        prop_assert!(ranks_agree(h.data(), e.data()));
        prop_assert_eq!(h.tensor().argmax(), e.tensor().argmax());
    }

    #[test]
    fn resize_matches_scalar_oracle(
        t in tensor2(16, -2.0, 2.0),
        out_h in 1usize..=37,
        out_w in 1usize..=23,
    ) {
        let (h, w) = t.shape();
        let got = bilinear_resize(&t, out_h, out_w).unwrap();
        let want = oracle::resize(t.data(), h, w, out_h, out_w);
        for (a, b) in got.data().iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    fn relu_is_idempotent(t in tensor2(10, -3.0, 3.0)) {
        let mut once = t.clone();
        once.relu_inplace();
        let mut twice = once.clone();
        twice.relu_inplace();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn cam_outputs_are_unit_maps((h, w, c, a, g, s) in layer(6, 5)) {
        let b = bundle(h, w, c, &a, &g, &s);
        for m in [gradcam(&b), gradcam_pp(&b), layercam(&b), eigencam(&b), scorecam(&b)] {
            check_unit_output(&m.unwrap())?;
        }
    }

    #[test]
    fn gradient_and_score_scaling_invariance((h, w, c, a, g, s) in layer(6, 5), k in -6i32..=6) {
        // powers of two scale the inputs without rounding
        let lambda = 2f64.powi(k);
        let b = bundle(h, w, c, &a, &g, &s);
        let gs: Vec<f32> = g.iter().map(|&x| x * lambda as f32).collect();
        let ss: Vec<f64> = s.iter().map(|&x| x * lambda).collect();
        let scaled = bundle(h, w, c, &a, &gs, &ss);
        prop_assert_eq!(gradcam(&b).unwrap(), gradcam(&scaled).unwrap());
        prop_assert_eq!(scorecam(&b).unwrap(), scorecam(&scaled).unwrap());
        let (l0, l1) = (layercam(&b).unwrap(), layercam(&scaled).unwrap());
        prop_assert!(ranks_agree(l0.data(), l1.data()));
        prop_assert_eq!(l0.tensor().argmax(), l1.tensor().argmax());
    }

    // Holds for non-negative activations only: with Σ A < 0 the pixel-weight
    // denominator 2g² + Σ A·g³ changes sign as g grows.
    #[test]
    fn gradient_scaling_keeps_single_channel_gradcam_pp_ranking(
        (h, w, _, a, g, s) in layer(6, 1),
        lambda in 0.05f32..20.0,
    ) {
        let a: Vec<f32> = a.into_iter().map(|x| x.max(0.0)).collect();
        let b = bundle(h, w, 1, &a, &g, &s);
        let gs: Vec<f32> = g.iter().map(|&x| x * lambda).collect();
        let (p0, p1) = (gradcam_pp(&b).unwrap(), gradcam_pp(&bundle(h, w, 1, &a, &gs, &s)).unwrap());
        prop_assert!(ranks_agree(p0.data(), p1.data()));
        prop_assert_eq!(p0.tensor().argmax(), p1.tensor().argmax());
    }

    #[test]
    fn eigencam_ignores_channel_order((h, w, c, a, g, s) in layer(6, 5), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..c).collect();
        let mut x = seed | 1;
        for i in (1..c).rev() {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            perm.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let pa: Vec<f32> = (0..h * w).flat_map(|p| perm.iter().map(move |&k| (p, k))).map(|(p, k)| a[p * c + k]).collect();
        let e0 = eigencam(&bundle(h, w, c, &a, &g, &s)).unwrap();
        let e1 = eigencam(&bundle(h, w, c, &pa, &g, &s)).unwrap();
        for (u, v) in e0.data().iter().zip(e1.data()) {
            prop_assert!((u - v).abs() <= 1e-4, "{} vs {}", u, v);
        }
    }

    #[test]
    fn single_nonnegative_channel_methods_coincide(t in tensor2(8, 0.0, 4.0)) {
        let (h, w) = t.shape();
        let ones = vec![1.0f32; h * w];
        let b = bundle(h, w, 1, t.data(), &ones, &[1.0]);
        let gc = gradcam(&b).unwrap();
        prop_assert_eq!(&gc, &layercam(&b).unwrap());
        prop_assert_eq!(&gc, &eigencam(&b).unwrap());
    }

    #[test]
    fn class_score_is_bounded_and_order_free(
        maps in prop::collection::vec(unit_heatmap(4, 4), 0..9),
        conf_seed in prop::collection::vec(0.5f64..=1.0, 9),
        alpha in 0.25f64..4.0,
        rotate in 0usize..9,
    ) {
        let n = maps.len();
        let conf = &conf_seed[..n];
        let g = gold(conf);
        let r = class_cscore(CamMethod::GradCam, &maps, &g, alpha).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.cscore));
        prop_assert_eq!(r.empty_gold, n == 0);
        prop_assert_eq!(r.singleton_gold, n == 1);

        let mut members = g.members().to_vec();
        let mut shuffled = maps.clone();
        if n > 0 {
            members.rotate_left(rotate % n);
            shuffled.rotate_left(rotate % n);
        }
        let g2 = GoldList::from_members(0, "E1", 0.5, members).unwrap();
        let r2 = class_cscore(CamMethod::GradCam, &shuffled, &g2, alpha).unwrap();
        prop_assert_eq!(r.cscore.to_bits(), r2.cscore.to_bits());
    }

    #[test]
    fn class_score_matches_oracle(
        maps in prop::collection::vec(unit_heatmap(5, 3), 2..8),
        conf in prop::collection::vec(0.5f64..=1.0, 8),
        alpha in 0.5f64..3.0,
    ) {
        let n = maps.len();
        let r = class_cscore(CamMethod::LayerCam, &maps, &gold(&conf[..n]), alpha).unwrap();
        let raw: Vec<Vec<f32>> = maps.iter().map(|m| m.data().to_vec()).collect();
        let want = oracle::class_cscore(&raw, &conf[..n], alpha);
        prop_assert!((r.cscore - want).abs() <= 1e-12, "{} vs {}", r.cscore, want);
    }

    #[test]
    fn zeroing_a_member_never_raises_the_score(
        maps in prop::collection::vec(unit_heatmap(4, 4), 2..7),
        conf in prop::collection::vec(0.5f64..=1.0, 7),
        victim in 0usize..7,
    ) {
        let n = maps.len();
        let g = gold(&conf[..n]);
        let before = class_cscore(CamMethod::ScoreCam, &maps, &g, 2.0).unwrap().cscore;
        let mut degraded = maps.clone();
        degraded[victim % n] = Heatmap::zeros(4, 4).unwrap();
        let after = class_cscore(CamMethod::ScoreCam, &degraded, &g, 2.0).unwrap().cscore;
        prop_assert!(after <= before, "{} > {}", after, before);
    }

    #[test]
    fn tensor_files_roundtrip(bits in prop::collection::vec(any::<u32>(), 0..64)) {
        let values: Vec<f32> = bits.into_iter().map(f32::from_bits).filter(|v| v.is_finite()).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.f32");
        write_f32_file(&p, &values).unwrap();
        let back = read_f32_file(&p).unwrap();
        prop_assert_eq!(
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn net_change_is_antisymmetric_and_detectors_pure() {
    let cfg = DetectorConfig::default();
    for arch in fixtures::Architecture::ALL {
        let series = assemble_series(&fixtures::epoch_metrics(arch), &fixtures::score_rows(arch), DEFAULT_PHASE_BOUNDARY)
            .unwrap();
        for m in CamMethod::ALL {
            for (a, b) in [(1, 30), (20, 25), (5, 15)] {
                let fwd = net_change(&series, m, a, b).unwrap();
                let back = net_change(&series, m, b, a).unwrap();
                assert_eq!(fwd, -back);
            }
        }
        assert_eq!(detect_all(&series, &cfg), detect_all(&series, &cfg));
    }
}

#[test]
fn report_bytes_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let rows = fixtures::score_rows(fixtures::Architecture::InceptionV3);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_cscore_report(&rows, &a).unwrap();
    write_cscore_report(&rows, &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}
