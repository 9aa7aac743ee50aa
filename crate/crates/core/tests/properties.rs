mod common;

use logodiffuser::coreattn::{off_mask_mass, select_core_tokens, CumulativeScore, ScoreMode, ScoreVector};
use logodiffuser::glyphkit::{glyph_mask_patches, rasterize_text, BitmapFont, GlyphImage, Layout, RasterOptions};
use logodiffuser::metrics::{char_f1, exact_match, mask_coverage};
use ndarray::Array2;
use proptest::prelude::*;

fn sv(scores: Vec<f64>) -> ScoreVector {
    ScoreVector {
        scores,
        step: 1,
        layer: 0,
        mode: ScoreMode::RowMass,
    }
}

const RATIOS: [f64; 5] = [0.125, 0.25, 0.5, 0.75, 1.0];

fn cells(g: &GlyphImage, n: usize, cell: usize, y0: usize, x0: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|i| {
            let mut m = Vec::with_capacity(cell * cell);
            for y in 0..cell {
                for x in 0..cell {
                    m.push(g.mask()[(y0 + y) * g.width() + x0 + i * cell + x]);
                }
            }
            m
        })
        .collect()
}

proptest! {
    #[test]
    fn selection_is_stable_under_positive_affine_maps(
        raw in proptest::collection::vec(0i32..40, 1..80),
        a in prop::sample::select(vec![0.25f64, 0.5, 1.0, 2.0, 3.0, 8.0]),
        b in -1000i32..1000,
        ri in 0usize..5,
    ) {
        let s: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
        let t: Vec<f64> = s.iter().map(|&v| a * v + b as f64).collect();
        let r = RATIOS[ri];
        prop_assert_eq!(
            select_core_tokens(&sv(s), r).unwrap().indices,
            select_core_tokens(&sv(t), r).unwrap().indices
        );
    }

    #[test]
    fn selection_commutes_with_token_permutation(
        perm in Just((0..64usize).collect::<Vec<_>>()).prop_shuffle(),
        values in Just((0..64).map(|i| i as f64 * 0.37).collect::<Vec<_>>()).prop_shuffle(),
        ri in 0usize..5,
    ) {
        let r = RATIOS[ri];
        let permuted: Vec<f64> = perm.iter().map(|&p| values[p]).collect();
        let base = select_core_tokens(&sv(values), r).unwrap().indices;
        let mut mapped: Vec<usize> = select_core_tokens(&sv(permuted), r)
            .unwrap()
            .indices
            .iter()
            .map(|&i| perm[i])
            .collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, base);
    }

    #[test]
    fn cumulative_mean_ignores_layer_order(
        layers in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 16), 1..12),
        order in Just((0..12usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let order: Vec<usize> = order.into_iter().filter(|&i| i < layers.len()).collect();
        let mut fwd = CumulativeScore::new(16);
        for l in &layers {
            fwd = fwd.update(&sv(l.clone())).unwrap();
        }
        let mut shuffled = CumulativeScore::new(16);
        for &i in &order {
            shuffled = shuffled.update(&sv(layers[i].clone())).unwrap();
        }
        for (x, y) in fwd.mean().iter().zip(shuffled.mean()) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn char_f1_precision_mirrors_recall(a in "[a-dA-D é]{0,12}", b in "[a-dA-D é]{0,12}") {
        let ab = char_f1(&a, &b);
        let ba = char_f1(&b, &a);
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
        prop_assert!(ab.f1 <= 1.0);
        let mut x: Vec<char> = a.trim().chars().collect();
        let mut y: Vec<char> = b.trim().chars().collect();
        x.sort_unstable();
        y.sort_unstable();
        prop_assert_eq!(ab.f1 == 1.0, x == y);
        if exact_match(&a, &b) {
            prop_assert_eq!(ab.f1, 1.0);
        }
    }

    #[test]
    fn coverage_and_shift_are_complementary(
        rows in proptest::collection::vec(proptest::collection::vec(0.001f64..1.0, 9), 9),
        mask in proptest::collection::vec(prop::sample::select(vec![0.0f64, 0.25, 0.5, 1.0]), 9),
        picked in proptest::collection::btree_set(0usize..9, 1..9),
    ) {
        let map = Array2::from_shape_vec((9, 9), rows.concat()).unwrap();
        let picked: Vec<usize> = picked.into_iter().collect();
        let shift = off_mask_mass(map.view(), &mask, &picked).unwrap();
        let cov = mask_coverage(map.view(), &mask, &picked).unwrap();
        prop_assert!((0.0..=1.0).contains(&cov));
        prop_assert!((cov + shift - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn mask_patch_fractions_count_every_ink_cell(text in "[ -~]{1,4}", scale in 1usize..3) {
        let opts = RasterOptions { width: 64, height: 32, patch: 8, scale };
        if let Ok(g) = rasterize_text(&text, &BitmapFont::builtin(), Layout::Horizontal, opts) {
            let fr = glyph_mask_patches(&g, 8).unwrap();
            let total: f64 = fr.iter().map(|f| f * 64.0).sum();
            prop_assert_eq!(total.round() as usize, g.mask_count());
            let again = rasterize_text(&text, &BitmapFont::builtin(), Layout::Horizontal, opts).unwrap();
            prop_assert_eq!(again, g);
        }
    }

    #[test]
    fn reversed_text_reverses_glyph_cells(text in "[!-~]{1,6}") {
        let opts = RasterOptions { width: 96, height: 16, patch: 8, scale: 2 };
        let font = BitmapFont::builtin();
        let fwd = rasterize_text(&text, &font, Layout::Horizontal, opts).unwrap();
        let rev_text: String = text.chars().rev().collect();
        let rev = rasterize_text(&rev_text, &font, Layout::Horizontal, opts).unwrap();
        let n = text.chars().count();
        let x0 = (96 - n * 16) / 2;
        let mut a = cells(&fwd, n, 16, 0, x0);
        a.reverse();
        prop_assert_eq!(a, cells(&rev, n, 16, 0, x0));
    }
}
