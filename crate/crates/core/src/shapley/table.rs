//! Subset-value table of the masked-margin game, filled from tree structure.
//!
//! For a fixed background row, a tree's masked output on coalition `S` is
//! decided by the players met along the path: where the explained frame and
//! the background row branch the same way the coalition does not matter.
//! Walking each tree once per background row yields its reachable leaves,
//! each tagged with the players that must be present and absent to reach it.
//! Those leaves partition the coalitions, so adding every leaf's value to the
//! coalitions it covers touches each table entry exactly once per tree and
//! reproduces `base + tree_1 + tree_2 + ...` in the same order as a direct
//! model evaluation.

use crate::gbdt::{GbdtModel, Tree, TreeNode};

struct Filler<'a> {
    tree: &'a Tree,
    x: &'a [f64],
    z: &'a [f64],
    player_of: &'a [usize],
    full: u64,
}

impl Filler<'_> {
    fn walk(&self, idx: usize, present: u64, absent: u64, out: &mut [f64]) {
        match self.tree.nodes[idx] {
            TreeNode::Leaf { value, .. } => {
                let free = self.full & !(present | absent);
                let mut sub = free;
                loop {
                    out[(present | sub) as usize] += value;
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & free;
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
                    self.walk(x_child, present, absent, out);
                } else if absent & bit != 0 {
                    self.walk(z_child, present, absent, out);
                } else {
                    self.walk(x_child, present | bit, absent, out);
                    self.walk(z_child, present, absent | bit, out);
                }
            }
        }
    }
}

/// `table[S] = f(S)` for every coalition bitmask `S < 2^n_players`.
pub fn masked_margin_table(
    model: &GbdtModel,
    x: &[f64],
    background: &[&[f64]],
    player_of: &[usize],
    n_players: usize,
) -> Vec<f64> {
    let size = 1usize << n_players;
    let full = (size - 1) as u64;
    let mut table = vec![0.0; size];
    let mut row = vec![0.0; size];
    for z in background {
        row.fill(model.base_score);
        for tree in &model.trees {
            Filler {
                tree,
                x,
                z,
                player_of,
                full,
            }
            .walk(0, 0, 0, &mut row);
        }
        for (t, v) in table.iter_mut().zip(&row) {
            *t += v;
        }
    }
    let b = background.len() as f64;
    for t in &mut table {
        *t /= b;
    }
    table
}
