//! Interventional Shapley values from tree structure.
//!
//! For one tree and one background row, the masked tree output is a game in
//! which a leaf pays out only when every player on its path that must take
//! the explained frame's value is present and every player that must take
//! the background value is absent. Such a unanimity-style game with `a`
//! required-present and `b` required-absent players has closed-form Shapley
//! values, so one traversal per (tree, background row) replaces the 2^n
//! enumeration. Players are tracked directly (not scalar features), so all
//! columns of a channel switch together exactly as in the enumeration.

use crate::gbdt::{GbdtModel, Tree, TreeNode};

use super::exact::coalition_weight;

/// `coef[a][b] = (a-1)! b! / (a+b)!` for the present-side share.
struct PathCoefficients {
    table: Vec<Vec<f64>>,
}

impl PathCoefficients {
    fn new(max_len: usize) -> Self {
        let table = (0..=max_len)
            .map(|a| {
                (0..=max_len)
                    .map(|b| {
                        if a == 0 {
                            0.0
                        } else {
                            // (a-1)! b! / (a+b)! is the Shapley weight of a coalition of
                            // size a-1 in a game of a+b players.
                            coalition_weight(a - 1, a + b).expect("a >= 1")
                        }
                    })
                    .collect()
            })
            .collect();
        Self { table }
    }

    #[inline]
    fn present(&self, a: usize, b: usize) -> f64 {
        self.table[a][b]
    }

    #[inline]
    fn absent(&self, a: usize, b: usize) -> f64 {
        // a! (b-1)! / (a+b)! mirrors the present side.
        self.table[b][a]
    }
}

struct Walker<'a> {
    tree: &'a Tree,
    x: &'a [f64],
    z: &'a [f64],
    player_of: &'a [usize],
    coef: &'a PathCoefficients,
}

impl Walker<'_> {
    fn walk(&self, idx: usize, present: u64, absent: u64, phi: &mut [f64]) {
        match self.tree.nodes[idx] {
            TreeNode::Leaf { value, .. } => {
                if value == 0.0 || (present == 0 && absent == 0) {
                    return;
                }
                let a = present.count_ones() as usize;
                let b = absent.count_ones() as usize;
                if a > 0 {
                    let share = value * self.coef.present(a, b);
                    for_each_bit(present, |p| phi[p] += share);
                }
                if b > 0 {
                    let share = value * self.coef.absent(a, b);
                    for_each_bit(absent, |p| phi[p] -= share);
                }
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let x_child = if self.x[feature] < threshold { left } else { right };
                let z_child = if self.z[feature] < threshold { left } else { right };
                let bit = 1u64 << self.player_of[feature];
                if x_child == z_child || present & bit != 0 {
                    self.walk(x_child, present, absent, phi);
                } else if absent & bit != 0 {
                    self.walk(z_child, present, absent, phi);
                } else {
                    self.walk(x_child, present | bit, absent, phi);
                    self.walk(z_child, present, absent | bit, phi);
                }
            }
        }
    }
}

fn for_each_bit(mut mask: u64, mut f: impl FnMut(usize)) {
    while mask != 0 {
        let bit = mask.trailing_zeros() as usize;
        f(bit);
        mask &= mask - 1;
    }
}

/// Per-player attributions of `model` at `x` against the mean over
/// `background` rows. `player_of[j]` is the player owning feature `j`.
pub fn tree_path_shapley(
    model: &GbdtModel,
    x: &[f64],
    background: &[&[f64]],
    player_of: &[usize],
    n_players: usize,
) -> Vec<f64> {
    debug_assert!(n_players <= 64);
    let max_len = model.trees.iter().map(Tree::depth).max().unwrap_or(0).min(n_players);
    let coef = PathCoefficients::new(max_len.max(1));
    let mut phi = vec![0.0; n_players];
    for z in background {
        for tree in &model.trees {
            let walker = Walker {
                tree,
                x,
                z,
                player_of,
                coef: &coef,
            };
            walker.walk(0, 0, 0, &mut phi);
        }
    }
    let scale = 1.0 / background.len() as f64;
    for p in &mut phi {
        *p *= scale;
    }
    phi
}
