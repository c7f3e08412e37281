//! Exact Shapley values by subset enumeration over a memoized value table.

use crate::error::{Error, Result};

/// Hard ceiling on enumerated players (table of 2^n f64 values).
pub const ENUMERATION_LIMIT: usize = 30;

/// A cooperative game over players `0..n`. Coalitions are bitmasks: bit `c`
/// set means player `c` is present.
pub trait CoalitionGame {
    fn n_players(&self) -> usize;
    fn value(&self, coalition: u64) -> f64;
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `|S|! (n - |S| - 1)! / n!`, evaluated as `1 / (n * C(n-1, |S|))` with an
/// exact integer binomial and a single rounding.
pub fn coalition_weight(s_size: usize, n: usize) -> Result<f64> {
    if n == 0 || s_size >= n {
        return Err(Error::Domain(format!("coalition size {s_size} with {n} players")));
    }
    if n > 64 {
        return Err(Error::Domain(format!("{n} players exceed the weight table")));
    }
    let denom = n as u128 * binomial(n as u64 - 1, s_size as u64);
    Ok(1.0 / denom as f64)
}

/// Weights indexed by coalition size, `0..n`.
pub fn weight_table(n: usize) -> Vec<f64> {
    (0..n).map(|s| coalition_weight(s, n).expect("size below n")).collect()
}

/// Evaluates the game on every coalition exactly once, ascending bitmask.
pub fn subset_table<G: CoalitionGame + ?Sized>(game: &G) -> Vec<f64> {
    let n = game.n_players();
    (0..1u64 << n).map(|mask| game.value(mask)).collect()
}

/// Shapley values from a complete subset-value table.
pub fn shapley_from_table(table: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(table.len(), 1usize << n);
    let weights = weight_table(n);
    let mut phi = vec![0.0; n];
    for (mask, &without) in table.iter().enumerate() {
        let w = weights.get(mask.count_ones() as usize).copied().unwrap_or(0.0);
        for (c, p) in phi.iter_mut().enumerate() {
            if mask & (1 << c) == 0 {
                *p += w * (table[mask | (1 << c)] - without);
            }
        }
    }
    phi
}

/// Exact Shapley values; the game is evaluated `2^n` times.
pub fn exact_shapley<G: CoalitionGame + ?Sized>(game: &G, max_players: usize) -> Result<Vec<f64>> {
    let n = game.n_players();
    let max = max_players.min(ENUMERATION_LIMIT);
    if n > max {
        return Err(Error::TooManyPlayers { n, max });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(shapley_from_table(&subset_table(game), n))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Additive(usize);

    impl CoalitionGame for Additive {
        fn n_players(&self) -> usize {
            self.0
        }
        fn value(&self, coalition: u64) -> f64 {
            coalition.count_ones() as f64
        }
    }

    #[test]
    fn weights() {
        assert!((coalition_weight(1, 3).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((coalition_weight(0, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(coalition_weight(3, 3), Err(Error::Domain(_))));
        // factorial form for a mid-size case
        let fact = |k: u64| (1..=k).product::<u64>() as f64;
        let direct = fact(4) * fact(10 - 4 - 1) / fact(10);
        assert!((coalition_weight(4, 10).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=12usize {
            let total: f64 = (0..n)
                .map(|s| binomial(n as u64 - 1, s as u64) as f64 * coalition_weight(s, n).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n}: {total}");
        }
    }

    #[test]
    fn symmetric_additive_game() {
        let phi = exact_shapley(&Additive(3), 15).unwrap();
        assert_eq!(phi.len(), 3);
        for p in phi {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn player_cap() {
        assert!(matches!(
            exact_shapley(&Additive(16), 15),
            Err(Error::TooManyPlayers { n: 16, max: 15 })
        ));
    }
}
