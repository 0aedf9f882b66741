//! Property tests over randomized inputs.

use proptest::prelude::*;

use abcd_core::boxloss::{self, BBox};
use abcd_core::dataio::{augment, decode_ppm, encode_ppm, AugmentOp, ImageRgb};
use abcd_core::eval::Detection;

fn arb_box() -> impl Strategy<Value = BBox> {
    (
        -50.0f64..50.0,
        -50.0f64..50.0,
        0.1f64..20.0,
        0.1f64..20.0,
    )
        .prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h).unwrap())
}

proptest! {
    #[test]
    fn iou_is_bounded_and_symmetric(a in arb_box(), b in arb_box()) {
        let ab = boxloss::iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, boxloss::iou(&b, &a));
        prop_assert!(boxloss::giou(&a, &b) <= ab + 1e-12);
    }

    #[test]
    fn loss_is_translation_invariant(a in arb_box(), b in arb_box(),
                                     dx in -100.0f64..100.0, dy in -100.0f64..100.0) {
        let before = boxloss::ciou_loss(&a, &b).unwrap();
        let after = boxloss::ciou_loss(&a.translated(dx, dy), &b.translated(dx, dy)).unwrap();
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn nms_output_is_a_thinned_subset(
        boxes in prop::collection::vec((arb_box(), 0.0f64..=1.0, 0usize..3), 0..20),
        thr in 0.05f64..1.0,
    ) {
        let dets: Vec<Detection> = boxes
            .into_iter()
            .map(|(b, score, class)| Detection::new("img".into(), class, score, b).unwrap())
            .collect();
        let kept = boxloss::nms(&dets, thr).unwrap();
        prop_assert!(kept.len() <= dets.len());
        for k in &kept {
            prop_assert!(dets.contains(k));
        }
        for (i, a) in kept.iter().enumerate() {
            for b in kept.iter().skip(i + 1) {
                if a.class_id == b.class_id {
                    prop_assert!(boxloss::iou(&a.bbox, &b.bbox) < thr);
                }
            }
        }
    }

    #[test]
    fn flip_round_trips_any_image(
        w in 1usize..12, h in 1usize..12,
        seed in prop::collection::vec(0u8..=255, 12 * 12 * 3),
    ) {
        let pixels: Vec<u8> = seed.iter().cycle().take(3 * w * h).copied().collect();
        let img = ImageRgb::new(w, h, pixels).unwrap();
        for op in [AugmentOp::HFlip, AugmentOp::VFlip] {
            let (once, _) = augment(&img, &[], &op).unwrap();
            let (twice, _) = augment(&once, &[], &op).unwrap();
            prop_assert_eq!(&twice, &img);
        }
        prop_assert_eq!(decode_ppm(&encode_ppm(&img)).unwrap(), img);
    }
}
