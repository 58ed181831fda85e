//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use tfim_lab::ground_state::HamiltonianOperator;
use tfim_lab::lattice::FieldProfile;

/// Lowest eigenpair by dense diagonalization.
pub fn dense_ground_state(profile: &FieldProfile) -> (f64, Vec<f64>) {
    let op = HamiltonianOperator::new(profile).unwrap();
    let dim = op.dim();
    let mut h = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for b in 0..dim {
        e[b] = 1.0;
        let col = op.apply(&e).unwrap();
        h.column_mut(b).copy_from_slice(&col);
        e[b] = 0.0;
    }
    let eig = SymmetricEigen::new(h);
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

/// Vertical intervals of a few columns over a common time window. Short
/// columns are cut into `horizon` unit intervals, long columns into intervals
/// of length `q`. Two intervals are adjacent when consecutive in one column or
/// when their closed supports overlap in neighbouring columns.
pub fn miniature_grid(long: &[bool], q: usize, horizon: usize) -> Vec<Vec<usize>> {
    let mut objects = Vec::new();
    for (c, &is_long) in long.iter().enumerate() {
        let step = if is_long { q } else { 1 };
        for t in (0..horizon).step_by(step) {
            objects.push((c, t, t + step));
        }
    }
    let n = objects.len();
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in 0..n {
            let (ca, sa, ea) = objects[a];
            let (cb, sb, eb) = objects[b];
            let touching = if ca == cb { ea == sb || eb == sa } else { ca.abs_diff(cb) == 1 && sa <= eb && sb <= ea };
            if a != b && touching {
                adj[a].push(b);
            }
        }
    }
    adj
}

/// `Σ η^{|R|}` over connected vertex sets containing `root`.
pub fn connected_sum(adj: &[Vec<usize>], root: usize, eta: f64) -> f64 {
    let n = adj.len();
    assert!(n <= 20);
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask & (1 << root) == 0 {
            continue;
        }
        let mut seen = 1u32 << root;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if mask & (1 << w) != 0 && seen & (1 << w) == 0 {
                    seen |= 1 << w;
                    stack.push(w);
                }
            }
        }
        if seen == mask {
            total += eta.powi(mask.count_ones() as i32);
        }
    }
    total
}

