//! Count-min sketches of per-supernode superedge-weight vectors.
//!
//! Supernode a's underlying vector has coordinate e_ai / sqrt(n_i) for each
//! superedge neighbor i, so the inner product of two such vectors is exactly
//! the cross-term sum_{i} e_ai e_bi / n_i needed by pair scoring. All
//! sketches in a run share the same seeds, which makes the row-wise products
//! of two sketches meaningful estimates of that inner product.

use crate::summary::{MergeOutcome, SuperId, Summary};
use crate::util::mix64;

/// Shared sketch geometry and hashing seeds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SketchParams {
    pub width: usize,
    pub depth: usize,
    seeds: Vec<u64>,
}

impl SketchParams {
    pub fn new(width: usize, depth: usize, master_seed: u64) -> SketchParams {
        assert!(width >= 1 && depth >= 1, "sketch needs width, depth >= 1");
        let seeds = (0..depth)
            .map(|i| mix64(master_seed ^ mix64(i as u64 + 1)))
            .collect();
        SketchParams {
            width,
            depth,
            seeds,
        }
    }

    /// Geometry from accuracy targets: width = ceil(1/epsilon) columns,
    /// depth = ceil(log2(1/delta)) rows.
    pub fn from_tolerances(epsilon: f64, delta: f64, master_seed: u64) -> SketchParams {
        assert!(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0);
        let width = (1.0 / epsilon).ceil() as usize;
        let depth = ((1.0 / delta).log2().ceil() as usize).max(1);
        SketchParams::new(width, depth, master_seed)
    }

    /// Column of `key` in row `row`.
    #[inline]
    pub fn column(&self, row: usize, key: SuperId) -> usize {
        (mix64(self.seeds[row] ^ (key as u64)) % self.width as u64) as usize
    }
}

/// One supernode's d x w table. Rows are linear in the underlying vector:
/// sketch(u + v) = sketch(u) + sketch(v), which is what makes signed
/// corrections and merge-by-addition possible.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSketch {
    table: Vec<f64>,
}

impl NodeSketch {
    pub fn zeros(params: &SketchParams) -> NodeSketch {
        NodeSketch {
            table: vec![0.0; params.width * params.depth],
        }
    }

    /// Add `delta` at `index`'s column in every row. Deltas may be negative;
    /// a sketch is always the one-pass sketch of its net update vector.
    pub fn update(&mut self, params: &SketchParams, index: SuperId, delta: f64) {
        for row in 0..params.depth {
            self.table[row * params.width + params.column(row, index)] += delta;
        }
    }

    pub fn row(&self, params: &SketchParams, row: usize) -> &[f64] {
        &self.table[row * params.width..(row + 1) * params.width]
    }

    /// Entrywise addition; by linearity this is the sketch of the summed
    /// vectors.
    pub fn add_assign(&mut self, other: &NodeSketch) {
        assert_eq!(self.table.len(), other.table.len(), "mismatched sketch params");
        for (a, b) in self.table.iter_mut().zip(&other.table) {
            *a += *b;
        }
    }
}

/// Count-min inner-product estimate: the minimum over rows of the row dot
/// products. For non-negative update histories this over-estimates the true
/// inner product, and is within epsilon * |u|_1 * |v|_1 of it with
/// probability at least 1 - delta.
pub fn inner_product_estimate(params: &SketchParams, a: &NodeSketch, b: &NodeSketch) -> f64 {
    assert_eq!(a.table.len(), b.table.len(), "mismatched sketch params");
    let mut best = f64::INFINITY;
    for row in 0..params.depth {
        let ra = a.row(params, row);
        let rb = b.row(params, row);
        let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
        best = best.min(dot);
    }
    best
}

/// Inner-product estimate between the sketches of two candidate supernodes,
/// with the mutual entries each sketch carries for the other endpoint
/// subtracted out per row before taking the minimum. `weight_ab` is the
/// superedge weight between them (0 if non-adjacent); sizes are the current
/// member counts. With collision-free hashing this equals the plain
/// cross-neighbor inner product exactly.
pub fn cross_term_estimate(
    params: &SketchParams,
    a: &NodeSketch,
    b: &NodeSketch,
    a_id: SuperId,
    b_id: SuperId,
    weight_ab: u64,
    size_a: u32,
    size_b: u32,
) -> f64 {
    assert_eq!(a.table.len(), b.table.len(), "mismatched sketch params");
    // a's vector holds e_ab / sqrt(n_b) at b's column; b's holds
    // e_ab / sqrt(n_a) at a's column.
    let ub = weight_ab as f64 / (size_b as f64).sqrt();
    let va = weight_ab as f64 / (size_a as f64).sqrt();
    let mut best = f64::INFINITY;
    for row in 0..params.depth {
        let ra = a.row(params, row);
        let rb = b.row(params, row);
        let mut dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
        if weight_ab > 0 {
            let ca = params.column(row, a_id);
            let cb = params.column(row, b_id);
            dot -= ub * rb[cb] + va * ra[ca];
            if ca == cb {
                dot += ub * va;
            }
        }
        best = best.min(dot);
    }
    best
}

/// How sketches are maintained across merges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SketchPolicy {
    /// Keep every live sketch exact for its current vector: rebuild the
    /// merged node's sketch from its final superedge list and retarget each
    /// touched neighbor's entries with signed updates.
    SignedCorrection,
    /// Merge sketches by entrywise addition only; neighbor sketches keep
    /// stale entries for the merged-away ids and old denominators.
    Drift,
}

/// Per-supernode sketches for one summarization run.
#[derive(Clone, Debug)]
pub struct SketchStore {
    pub params: SketchParams,
    pub policy: SketchPolicy,
    sketches: Vec<Option<NodeSketch>>,
}

impl SketchStore {
    /// Sketch every live supernode of `summary` from its superedge list.
    pub fn build(summary: &Summary, params: SketchParams, policy: SketchPolicy) -> SketchStore {
        let mut sketches = vec![None; summary.id_capacity()];
        for id in summary.live_ids() {
            sketches[id as usize] = Some(sketch_from_list(summary, &params, id));
        }
        SketchStore {
            params,
            policy,
            sketches,
        }
    }

    pub fn sketch(&self, id: SuperId) -> &NodeSketch {
        self.sketches[id as usize]
            .as_ref()
            .expect("no sketch for this supernode")
    }

    /// Bring the store in line with a merge that `summary` already applied.
    pub fn apply_merge(&mut self, summary: &Summary, outcome: &MergeOutcome) {
        let z = outcome.new_id;
        if self.sketches.len() < summary.id_capacity() {
            self.sketches.resize(summary.id_capacity(), None);
        }
        let (a, b) = outcome.merged;
        match self.policy {
            SketchPolicy::SignedCorrection => {
                let (n_a, n_b) = outcome.sizes;
                let inv_sqrt_a = 1.0 / (n_a as f64).sqrt();
                let inv_sqrt_b = 1.0 / (n_b as f64).sqrt();
                let n_z = summary.node(z).size as f64;
                let inv_sqrt_z = 1.0 / n_z.sqrt();
                for d in &outcome.neighbors {
                    let sk = self.sketches[d.id as usize]
                        .as_mut()
                        .expect("neighbor sketch missing");
                    if d.to_a > 0 {
                        sk.update(&self.params, a, -(d.to_a as f64) * inv_sqrt_a);
                    }
                    if d.to_b > 0 {
                        sk.update(&self.params, b, -(d.to_b as f64) * inv_sqrt_b);
                    }
                    sk.update(&self.params, z, (d.to_a + d.to_b) as f64 * inv_sqrt_z);
                }
                self.sketches[z as usize] = Some(sketch_from_list(summary, &self.params, z));
            }
            SketchPolicy::Drift => {
                let mut merged = self.sketches[a as usize]
                    .take()
                    .expect("sketch of merged node missing");
                if let Some(other) = &self.sketches[b as usize] {
                    merged.add_assign(other);
                }
                self.sketches[z as usize] = Some(merged);
            }
        }
        self.sketches[a as usize] = None;
        self.sketches[b as usize] = None;
    }
}

fn sketch_from_list(summary: &Summary, params: &SketchParams, id: SuperId) -> NodeSketch {
    let mut sk = NodeSketch::zeros(params);
    for e in summary.superedges(id) {
        let n_i = summary.node(e.to).size as f64;
        sk.update(params, e.to, e.weight as f64 / n_i.sqrt());
    }
    sk
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn params() -> SketchParams {
        SketchParams::new(64, 3, 42)
    }

    #[test]
    fn tolerances_map_to_geometry() {
        let p = SketchParams::from_tolerances(1.0 / 200.0, 0.25, 1);
        assert_eq!(p.width, 200);
        assert_eq!(p.depth, 2);
    }

    #[test]
    fn single_update_lands_in_every_row() {
        let p = params();
        let mut sk = NodeSketch::zeros(&p);
        sk.update(&p, 9, 2.5);
        for row in 0..p.depth {
            let r = sk.row(&p, row);
            let c = p.column(row, 9);
            assert_eq!(r[c], 2.5);
            assert_eq!(r.iter().filter(|&&x| x != 0.0).count(), 1);
        }
    }

    #[test]
    fn signed_update_restores_table() {
        let p = params();
        let mut sk = NodeSketch::zeros(&p);
        sk.update(&p, 3, 1.25);
        sk.update(&p, 7, 0.5);
        let snapshot = sk.clone();
        sk.update(&p, 3, 2.75);
        sk.update(&p, 3, -2.75);
        assert_eq!(sk, snapshot);
    }

    #[test]
    fn rebuild_equivalence_under_signed_updates() {
        // Dyadic deltas keep every partial sum exact, so incremental and
        // one-pass tables agree bit for bit.
        let p = params();
        let mut rng = StdRng::seed_from_u64(5);
        let mut sk = NodeSketch::zeros(&p);
        let mut net = std::collections::BTreeMap::new();
        for _ in 0..100 {
            let idx = rng.gen_range(0..40u32);
            let delta = rng.gen_range(-64i32..=64) as f64 / 16.0;
            sk.update(&p, idx, delta);
            *net.entry(idx).or_insert(0.0) += delta;
        }
        let mut rebuilt = NodeSketch::zeros(&p);
        for (&idx, &v) in &net {
            rebuilt.update(&p, idx, v);
        }
        assert_eq!(sk, rebuilt);
    }

    #[test]
    fn linearity_of_combination() {
        let p = params();
        let mut u = NodeSketch::zeros(&p);
        let mut v = NodeSketch::zeros(&p);
        u.update(&p, 1, 0.75);
        u.update(&p, 2, 1.5);
        v.update(&p, 2, 2.25);
        v.update(&p, 5, 0.25);
        let mut sum = u.clone();
        sum.add_assign(&v);
        let mut direct = NodeSketch::zeros(&p);
        direct.update(&p, 1, 0.75);
        direct.update(&p, 2, 1.5 + 2.25);
        direct.update(&p, 5, 0.25);
        assert_eq!(sum, direct);
    }

    #[test]
    fn inner_product_zero_cases() {
        let p = params();
        let zero = NodeSketch::zeros(&p);
        let mut v = NodeSketch::zeros(&p);
        v.update(&p, 4, 3.0);
        assert_eq!(inner_product_estimate(&p, &zero, &v), 0.0);
    }

    #[test]
    fn disjoint_support_with_collision_free_seeds() {
        // Search for seeds that are collision-free on the test support,
        // then assert the exact zero.
        let support: Vec<u32> = (0..8).collect();
        let p = (0u64..)
            .map(|seed| SketchParams::new(64, 3, seed))
            .find(|p| {
                (0..p.depth).all(|row| {
                    let cols: std::collections::HashSet<_> =
                        support.iter().map(|&k| p.column(row, k)).collect();
                    cols.len() == support.len()
                })
            })
            .unwrap();
        let mut u = NodeSketch::zeros(&p);
        let mut v = NodeSketch::zeros(&p);
        for &k in &support[..4] {
            u.update(&p, k, 1.0 + k as f64);
        }
        for &k in &support[4..] {
            v.update(&p, k, 2.0 + k as f64);
        }
        assert_eq!(inner_product_estimate(&p, &u, &v), 0.0);
    }

    #[test]
    fn over_estimates_nonnegative_inner_products() {
        let mut rng = StdRng::seed_from_u64(99);
        for trial in 0..200 {
            let p = SketchParams::new(16, 2, trial);
            let dim = 64u32;
            let mut u_vec = vec![0.0f64; dim as usize];
            let mut v_vec = vec![0.0f64; dim as usize];
            let mut u = NodeSketch::zeros(&p);
            let mut v = NodeSketch::zeros(&p);
            for _ in 0..24 {
                let i = rng.gen_range(0..dim);
                let x = rng.gen_range(1..32) as f64 / 8.0;
                u_vec[i as usize] += x;
                u.update(&p, i, x);
                let j = rng.gen_range(0..dim);
                let y = rng.gen_range(1..32) as f64 / 8.0;
                v_vec[j as usize] += y;
                v.update(&p, j, y);
            }
            let exact: f64 = u_vec.iter().zip(&v_vec).map(|(a, b)| a * b).sum();
            let est = inner_product_estimate(&p, &u, &v);
            assert!(
                est >= exact,
                "trial {trial}: estimate {est} below exact {exact}"
            );
        }
    }
}
