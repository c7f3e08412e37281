use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seeg_rank::gbdt::{train, GbdtModel, Tree, TreeNode};
use seeg_rank::montage::ChannelLabel;
use seeg_rank::shapley::{
    exact_shap_frame, exact_shapley, masked_margin, masked_margin_table, permutation_shapley, subset_table,
    tree_shap_frame, BackgroundSet, CoalitionGame, CoalitionPlayers, MaskedGame,
};
use seeg_rank::GbdtParams;

/// Game given by an explicit value per coalition.
struct TableGame(Vec<f64>, usize);

impl CoalitionGame for TableGame {
    fn n_players(&self) -> usize {
        self.1
    }
    fn value(&self, coalition: u64) -> f64 {
        self.0[coalition as usize]
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Per-player double loop re-evaluating the game for every term.
fn naive_shapley<G: CoalitionGame>(game: &G) -> Vec<f64> {
    let n = game.n_players();
    (0..n)
        .map(|c| {
            let mut phi = 0.0;
            for s in 0u64..1 << n {
                if s & (1 << c) != 0 {
                    continue;
                }
                let size = s.count_ones() as usize;
                let w = factorial(size) * factorial(n - size - 1) / factorial(n);
                phi += w * (game.value(s | 1 << c) - game.value(s));
            }
            phi
        })
        .collect()
}

fn players(n: usize, width: usize) -> CoalitionPlayers {
    let labels = (1..=n).map(|i| ChannelLabel::new("LA", i as u32).unwrap()).collect();
    let columns = (0..n).map(|p| p * width..(p + 1) * width).collect();
    CoalitionPlayers::new(labels, columns, n * width).unwrap()
}

/// Small model trained on random rows whose label depends on the first
/// `active` players' columns only.
fn random_model(seed: u64, n_players: usize, width: usize, active: usize) -> (GbdtModel, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = n_players * width;
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<bool> = rows
        .iter()
        .map(|r| {
            let s: f64 = (0..active * width).map(|j| r[j] * (1.0 + j as f64 * 0.3)).sum();
            s + 0.3 * rng.random_range(-1.0..1.0) > 0.0
        })
        .collect();
    let x: Vec<f64> = rows.iter().flatten().copied().collect();
    let params = GbdtParams {
        n_rounds: 6,
        max_depth: 3,
        ..GbdtParams::default()
    };
    (train(&x, d, &y, &params).unwrap(), rows)
}

fn background(rows: &[Vec<f64>], b: usize) -> BackgroundSet {
    let refs: Vec<&[f64]> = rows.iter().take(b).map(Vec::as_slice).collect();
    BackgroundSet::from_rows(&refs).unwrap()
}

#[test]
fn table_engine_matches_naive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..50 {
        let n = 3 + case % 8;
        let game = TableGame((0..1 << n).map(|_| rng.random_range(-5.0..5.0)).collect(), n);
        let fast = exact_shapley(&game, 15).unwrap();
        let slow = naive_shapley(&game);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn structured_table_equals_direct_evaluation() {
    for seed in 0..10 {
        let (model, rows) = random_model(seed, 5, 2, 3);
        let p = players(5, 2);
        let bg = background(&rows[40..], 4);
        let game = MaskedGame::new(&model, &rows[seed as usize], &p, &bg).unwrap();
        let direct = subset_table(&game);
        let fast = masked_margin_table(&model, &rows[seed as usize], &bg.rows(), p.player_of(), p.n());
        assert_eq!(direct, fast);
    }
}

#[test]
fn masked_margin_is_evaluated_once_per_coalition_and_background_row() {
    let (model, rows) = random_model(3, 6, 2, 2);
    let p = players(6, 2);
    for b in [1, 3] {
        let bg = background(&rows[50..], b);
        let game = MaskedGame::new(&model, &rows[0], &p, &bg).unwrap();
        exact_shapley(&game, 15).unwrap();
        assert_eq!(game.evaluations(), (1 << 6) * b as u64);
    }
}

#[test]
fn full_and_empty_coalitions() {
    let (model, rows) = random_model(5, 4, 2, 2);
    let p = players(4, 2);
    let one = background(&rows[60..], 1);
    let x = &rows[0];
    assert_eq!(
        masked_margin(&model, x, 0b1111, &p, &one).unwrap(),
        model.raw_margin(x).unwrap()
    );
    assert_eq!(
        masked_margin(&model, x, 0, &p, &one).unwrap(),
        model.raw_margin(&rows[60]).unwrap()
    );
}

#[test]
fn tree_path_matches_exact_on_small_models() {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let n = 2 + seed as usize % 7;
        let (model, rows) = random_model(seed, n, 2, n.min(3));
        let p = players(n, 2);
        let bg = background(&rows[70..], 4);
        for x in rows.iter().take(5) {
            let exact = exact_shap_frame(&model, x, &p, &bg, 15).unwrap();
            let fast = tree_shap_frame(&model, x, &p, &bg).unwrap();
            for (a, b) in exact.phi.iter().zip(&fast.phi) {
                worst = worst.max((a - b).abs());
            }
            assert_eq!(exact.f_full, fast.f_full);
        }
    }
    assert!(worst < 1e-12, "max deviation {worst}");
}

#[test]
fn permutation_estimate_approaches_exact() {
    let (model, rows) = random_model(9, 5, 2, 3);
    let p = players(5, 2);
    let bg = background(&rows[60..], 4);
    let game = MaskedGame::new(&model, &rows[1], &p, &bg).unwrap();
    let exact = exact_shapley(&game, 15).unwrap();
    let estimate = permutation_shapley(&game, 2000, 1);
    let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-9);
    for (a, b) in exact.iter().zip(&estimate) {
        assert!((a - b).abs() < 0.05 * scale, "{a} vs {b}");
    }
    // every antithetic pair preserves efficiency exactly up to rounding
    let total: f64 = estimate.iter().sum();
    assert!((total - (game.value(0b11111) - game.value(0))).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn efficiency(seed in 0u64..10_000, n in 2usize..8, frame in 0usize..40) {
        let (model, rows) = random_model(seed, n, 2, n.min(3));
        let p = players(n, 2);
        let bg = background(&rows[60..], 1 + seed as usize % 5);
        let v = exact_shap_frame(&model, &rows[frame], &p, &bg, 15).unwrap();
        prop_assert!(v.efficiency_gap().abs() < 1e-9);
    }

    #[test]
    fn dummy_players_get_exactly_zero(seed in 0u64..10_000, n in 3usize..8, frame in 0usize..40) {
        let (model, rows) = random_model(seed, n, 2, 2);
        let p = players(n, 2);
        let bg = background(&rows[60..], 3);
        let v = exact_shap_frame(&model, &rows[frame], &p, &bg, 15).unwrap();
        let used: Vec<usize> = model.trees.iter().flat_map(Tree::split_features).collect();
        for (c, cols) in p.columns().iter().enumerate() {
            if !used.iter().any(|j| cols.contains(j)) {
                prop_assert_eq!(v.phi[c], 0.0);
            }
        }
    }

    #[test]
    fn duplicated_players_are_symmetric(seed in 0u64..10_000, n in 3usize..7, frame in 0usize..40) {
        let (base, mut rows) = random_model(seed, n, 2, n);
        // player 1 becomes a copy of player 0 in the data, and the model is
        // made symmetric by mirroring every tree onto the other player
        for r in &mut rows {
            r[2] = r[0];
            r[3] = r[1];
        }
        let swap = |j: usize| match j { 0 => 2, 1 => 3, 2 => 0, 3 => 1, j => j };
        let mirrored: Vec<Tree> = base.trees.iter().map(|t| Tree {
            nodes: t.nodes.iter().map(|node| match *node {
                TreeNode::Split { feature, threshold, left, right, cover } =>
                    TreeNode::Split { feature: swap(feature), threshold, left, right, cover },
                ref leaf => leaf.clone(),
            }).collect(),
        }).collect();
        let model = base.with_trees(base.trees.iter().cloned().chain(mirrored).collect());
        let p = players(n, 2);
        let bg = background(&rows[60..], 4);
        let v = exact_shap_frame(&model, &rows[frame], &p, &bg, 15).unwrap();
        prop_assert!((v.phi[0] - v.phi[1]).abs() < 1e-12, "{} vs {}", v.phi[0], v.phi[1]);
    }

    #[test]
    fn linearity_over_trees(seed in 0u64..10_000, n in 2usize..7, frame in 0usize..40) {
        let (model, rows) = random_model(seed, n, 2, n.min(3));
        prop_assume!(model.trees.len() >= 2);
        let p = players(n, 2);
        let bg = background(&rows[60..], 3);
        let x = &rows[frame];
        let first = model.with_trees(vec![model.trees[0].clone()]);
        let second = model.with_trees(vec![model.trees[1].clone()]);
        let both = model.with_trees(model.trees[..2].to_vec());
        let a = exact_shap_frame(&first, x, &p, &bg, 15).unwrap().phi;
        let b = exact_shap_frame(&second, x, &p, &bg, 15).unwrap().phi;
        let ab = exact_shap_frame(&both, x, &p, &bg, 15).unwrap().phi;
        for c in 0..n {
            prop_assert!((ab[c] - (a[c] + b[c])).abs() < 1e-12);
        }
    }

    #[test]
    fn game_oracle_on_random_stub_games(seed in 0u64..10_000, n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = TableGame((0..1 << n).map(|_| rng.random_range(-3.0..3.0)).collect(), n);
        let fast = exact_shapley(&game, 15).unwrap();
        let slow = naive_shapley(&game);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = fast.iter().sum();
        prop_assert!((total - (game.0[(1 << n) - 1] - game.0[0])).abs() < 1e-9);
    }
}
