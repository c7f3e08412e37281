use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::exact::CoalitionGame;

/// Monte-Carlo Shapley estimate from `n_permutations` random player orders.
/// Each order is walked forward and its complement walked backward
/// (antithetic pairs), so `2 * n_permutations` orders are used in total.
pub fn permutation_shapley<G: CoalitionGame + ?Sized>(game: &G, n_permutations: usize, seed: u64) -> Vec<f64> {
    let n = game.n_players();
    let mut phi = vec![0.0; n];
    if n == 0 {
        return phi;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let empty = game.value(0);
    for _ in 0..n_permutations {
        order.shuffle(&mut rng);
        for pass in [order.as_slice(), &order.iter().rev().copied().collect::<Vec<_>>()] {
            let mut mask = 0u64;
            let mut prev = empty;
            for &player in pass {
                mask |= 1 << player;
                let next = game.value(mask);
                phi[player] += next - prev;
                prev = next;
            }
        }
    }
    let scale = 1.0 / (2 * n_permutations) as f64;
    for p in &mut phi {
        *p *= scale;
    }
    phi
}
