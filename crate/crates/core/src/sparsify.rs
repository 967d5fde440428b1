//! Superedge sparsification: drop the superedges whose removal costs the
//! least reconstruction error until the summary fits a bit budget.
//!
//! Dropping (a, b) zeroes that block of the expected adjacency, so the l1
//! error there becomes 2 e_ab (each real cross edge predicted as absent)
//! instead of 4 e_ab - 4 e_ab^2 / (n_a n_b); the change is
//! 4 e_ab^2 / (n_a n_b) - 2 e_ab, negative for blocks below half density.
//! Deltas of distinct superedges are independent and additive, so ranking
//! ascending and cutting the lowest is optimal at a fixed deletion count.

use crate::error::{Error, Result};
use crate::summary::{SuperId, Summary};

/// Which key orders the deletion candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankingKey {
    /// The closed-form RE change 2 e_ab (2 pi - 1); the default.
    TrueDelta,
    /// The conventional printed key 2 (pi - 1) e_ab, kept for
    /// compatibility; orders differently across unequal weights.
    Printed,
}

/// A superedge with its ranking key and true RE change.
#[derive(Clone, Debug)]
pub struct RankedEdge {
    pub endpoints: (SuperId, SuperId),
    pub weight: u64,
    pub key: f64,
    pub true_delta_re: f64,
}

/// The deletion schedule for one sparsification.
#[derive(Clone, Debug)]
pub struct SparsifyPlan {
    pub del_count: usize,
    /// All superedges, cheapest deletions first.
    pub ranked: Vec<RankedEdge>,
    /// Sum of true_delta_re over the first `del_count` edges.
    pub predicted_delta_re: f64,
    /// Storage cost after executing the plan.
    pub predicted_cost_bits: u64,
}

/// The printed ranking key 2 (e_ab / (n_a n_b) - 1) e_ab.
pub fn edge_drop_key(summary: &Summary, a: SuperId, b: SuperId) -> Option<f64> {
    let w = summary.superedge_weight(a, b)? as f64;
    let pairs = summary.node(a).size as f64 * summary.node(b).size as f64;
    Some(2.0 * (w / pairs - 1.0) * w)
}

/// Exact l1 RE change from dropping the superedge (a, b):
/// 4 e_ab^2 / (n_a n_b) - 2 e_ab.
pub fn true_delta_re(summary: &Summary, a: SuperId, b: SuperId) -> Option<f64> {
    let w = summary.superedge_weight(a, b)? as f64;
    let pairs = summary.node(a).size as f64 * summary.node(b).size as f64;
    Some(4.0 * w * w / pairs - 2.0 * w)
}

fn rank_edges(summary: &Summary, key: RankingKey) -> Vec<RankedEdge> {
    let mut edges = Vec::with_capacity(summary.superedge_count() as usize);
    for id in summary.live_ids() {
        for e in summary.superedges(id) {
            if id < e.to {
                let w = e.weight as f64;
                let pairs = summary.node(id).size as f64 * summary.node(e.to).size as f64;
                let delta = 4.0 * w * w / pairs - 2.0 * w;
                let k = match key {
                    RankingKey::TrueDelta => delta,
                    RankingKey::Printed => 2.0 * (w / pairs - 1.0) * w,
                };
                edges.push(RankedEdge {
                    endpoints: (id, e.to),
                    weight: e.weight,
                    key: k,
                    true_delta_re: delta,
                });
            }
        }
    }
    // Ties: cheaper information loss (smaller weight) first, then ids.
    edges.sort_by(|x, y| {
        x.key
            .total_cmp(&y.key)
            .then(x.weight.cmp(&y.weight))
            .then(x.endpoints.cmp(&y.endpoints))
    });
    edges
}

fn membership_cost_bits(summary: &Summary) -> u64 {
    let k = summary.supernode_count();
    let lg_k = if k <= 1 { 1.0 } else { (k as f64).log2() };
    (summary.vertex_count() as f64 * lg_k).ceil() as u64
}

/// Compute the deletion schedule that brings the storage cost down to
/// `target_bits`. delCount = ceil((cost - target) / per-edge bits), clamped
/// to the superedge count; errors when the target is below the irreducible
/// membership cost.
pub fn plan_sparsify(
    summary: &Summary,
    target_bits: u64,
    key: RankingKey,
) -> Result<SparsifyPlan> {
    let floor = membership_cost_bits(summary);
    if target_bits < floor {
        return Err(Error::invalid(format!(
            "target {target_bits} bits is below the membership floor of {floor} bits"
        )));
    }
    let ranked = rank_edges(summary, key);
    let cost = summary.storage_cost_bits();
    let del_count = if cost <= target_bits {
        0
    } else {
        let k = summary.supernode_count() as f64;
        let lg_k = if summary.supernode_count() <= 1 {
            1.0
        } else {
            k.log2()
        };
        let max_w = ranked.iter().map(|e| e.weight).max().unwrap_or(0).max(2);
        let per_edge = 2.0 * lg_k + (max_w as f64).log2();
        let need = (cost - target_bits) as f64;
        ((need / per_edge).ceil() as usize).min(ranked.len())
    };
    let predicted_delta_re: f64 = ranked[..del_count].iter().map(|e| e.true_delta_re).sum();
    let predicted_cost_bits = {
        let k = summary.supernode_count();
        let lg_k = if k <= 1 { 1.0 } else { (k as f64).log2() };
        let remaining = &ranked[del_count..];
        let max_w = remaining.iter().map(|e| e.weight).max().unwrap_or(0).max(2);
        let total = remaining.len() as f64 * (2.0 * lg_k + (max_w as f64).log2())
            + summary.vertex_count() as f64 * lg_k;
        total.ceil() as u64
    };
    Ok(SparsifyPlan {
        del_count,
        ranked,
        predicted_delta_re,
        predicted_cost_bits,
    })
}

/// Execute the plan against the summary: remove the scheduled superedges
/// (refreshing endpoint D values), leaving membership, sizes, internal
/// counts, and histograms untouched.
pub fn sparsify(summary: &mut Summary, target_bits: u64, key: RankingKey) -> Result<SparsifyPlan> {
    let plan = plan_sparsify(summary, target_bits, key)?;
    for edge in &plan.ranked[..plan.del_count] {
        summary.remove_superedge(edge.endpoints.0, edge.endpoints.1)?;
    }
    debug_assert_eq!(summary.storage_cost_bits(), plan.predicted_cost_bits);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::summary::{reconstruction_error_exact, NormOrder};
    use rand::prelude::*;

    fn random_instance(rng: &mut StdRng, n: u32, k: usize) -> (Graph, Summary) {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(0.2) {
                    edges.push((u, v));
                }
            }
        }
        if edges.is_empty() {
            edges.push((0, 1));
        }
        let g = Graph::from_edges_with_vertices(n, edges).unwrap();
        let mut assign: Vec<u32> = (0..n).map(|v| v % k as u32).collect();
        assign.shuffle(rng);
        let s = Summary::from_partition(&g, &assign).unwrap();
        (g, s)
    }

    #[test]
    fn printed_key_examples() {
        // Complete bipartite block: key 0.
        let mut edges = Vec::new();
        for u in 0..2u32 {
            for v in 2..4u32 {
                edges.push((u, v));
            }
        }
        let g = Graph::from_edges(edges).unwrap();
        let s = Summary::from_partition(&g, &[0, 0, 1, 1]).unwrap();
        assert_eq!(edge_drop_key(&s, 0, 1), Some(0.0));

        // e_ab = 1, n_a = n_b = 10 -> 2 (0.01 - 1) 1 = -1.98.
        let mut edges = vec![(0u32, 10u32)];
        // Make both blocks internally connected so sizes are 10 without
        // extra cross edges.
        for i in 0..9u32 {
            edges.push((i, i + 1));
            edges.push((10 + i, 11 + i));
        }
        let g = Graph::from_edges(edges).unwrap();
        let assign: Vec<u32> = (0..20).map(|v| if v < 10 { 0 } else { 1 }).collect();
        let s = Summary::from_partition(&g, &assign).unwrap();
        let key = edge_drop_key(&s, 0, 1).unwrap();
        assert!((key - (-1.98)).abs() < 1e-12);
    }

    #[test]
    fn true_delta_examples() {
        // pi = 1: delta = 2 e_ab.
        let mut edges = Vec::new();
        for u in 0..2u32 {
            for v in 2..4u32 {
                edges.push((u, v));
            }
        }
        let g = Graph::from_edges(edges).unwrap();
        let s = Summary::from_partition(&g, &[0, 0, 1, 1]).unwrap();
        assert_eq!(true_delta_re(&s, 0, 1), Some(8.0));

        // pi = 0.5: delta = 0.
        let g = Graph::from_edges([(0, 2), (1, 3)]).unwrap();
        let s = Summary::from_partition(&g, &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.superedge_weight(0, 1), Some(2));
        assert!(true_delta_re(&s, 0, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn true_delta_matches_exact_oracle() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..30 {
            let n = rng.gen_range(10..=50);
            let (g, s) = random_instance(&mut rng, n, 5);
            let Some(first) = s
                .live_ids()
                .flat_map(|i| s.superedges(i).iter().map(move |e| (i, e.to)))
                .find(|&(i, j)| i < j)
            else {
                continue;
            };
            let predicted = true_delta_re(&s, first.0, first.1).unwrap();
            let before = reconstruction_error_exact(&g, &s, NormOrder::One).unwrap();
            let mut after = s.clone();
            after.remove_superedge(first.0, first.1).unwrap();
            let after_re = reconstruction_error_exact(&g, &after, NormOrder::One).unwrap();
            assert!(
                ((after_re - before) - predicted).abs() < 1e-6,
                "predicted {predicted}, oracle {}",
                after_re - before
            );
        }
    }

    #[test]
    fn sparsify_noop_when_target_is_loose() {
        let g = Graph::from_edges([(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut s = Summary::from_partition(&g, &[0, 0, 1, 1]).unwrap();
        let before = s.clone();
        let cost = s.storage_cost_bits();
        let plan = sparsify(&mut s, cost + 100, RankingKey::TrueDelta).unwrap();
        assert_eq!(plan.del_count, 0);
        assert_eq!(s, before);
    }

    #[test]
    fn sparsify_to_membership_floor_drops_everything() {
        let mut rng = StdRng::seed_from_u64(43);
        let (_, mut s) = random_instance(&mut rng, 30, 4);
        let floor = membership_cost_bits(&s);
        let plan = sparsify(&mut s, floor, RankingKey::TrueDelta).unwrap();
        assert_eq!(plan.del_count, plan.ranked.len());
        assert_eq!(s.superedge_count(), 0);
        assert_eq!(s.storage_cost_bits(), floor);
    }

    #[test]
    fn sparsify_rejects_impossible_target() {
        let g = Graph::from_edges([(0, 1), (1, 2)]).unwrap();
        let mut s = Summary::from_partition(&g, &[0, 1, 2]).unwrap();
        assert!(sparsify(&mut s, 1, RankingKey::TrueDelta).is_err());
    }

    #[test]
    fn deletion_deltas_are_additive() {
        let mut rng = StdRng::seed_from_u64(47);
        for _ in 0..20 {
            let (_, s) = random_instance(&mut rng, 60, 6);
            if s.superedge_count() < 3 {
                continue;
            }
            let mut work = s.clone();
            let before = work.reconstruction_error_closed_form();
            let targets: Vec<_> = work
                .live_ids()
                .flat_map(|i| {
                    work.superedges(i)
                        .iter()
                        .filter(move |e| i < e.to)
                        .map(move |e| (i, e.to))
                        .collect::<Vec<_>>()
                })
                .take(3)
                .collect();
            let expected: f64 = targets
                .iter()
                .map(|&(a, b)| true_delta_re(&work, a, b).unwrap())
                .sum();
            for &(a, b) in &targets {
                work.remove_superedge(a, b).unwrap();
            }
            let after = work.reconstruction_error_closed_form();
            assert!(((after - before) - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn printed_key_orders_differently_but_still_meets_budget() {
        // Superedge A: weight 2 across 2x2 blocks (pi = 0.5, true delta 0,
        // printed key -2). Superedge B: weight 1 across 10x10 blocks
        // (true delta -1.96, printed key -1.98). The two keys disagree on
        // which goes first.
        let mut edges = vec![(0u32, 2u32), (1, 3), (0, 20)];
        for i in 0..9u32 {
            edges.push((4 + i, 5 + i));
            edges.push((14 + i, 15 + i));
        }
        // Blocks: {0,1}, {2,3}, {4..13}, {14..23}; tie blocks together.
        edges.push((0, 1));
        edges.push((2, 3));
        let g = Graph::from_edges(edges).unwrap();
        let mut assign = vec![0u32; 24];
        for v in 0..24u32 {
            assign[v as usize] = match v {
                0 | 1 => 0,
                2 | 3 => 1,
                4..=13 => 2,
                _ => 3,
            };
        }
        let s = Summary::from_partition(&g, &assign).unwrap();
        assert_eq!(s.superedge_weight(0, 1), Some(2));
        assert_eq!(s.superedge_weight(0, 3), Some(1));
        let plan_true = plan_sparsify(&s, membership_cost_bits(&s), RankingKey::TrueDelta).unwrap();
        let plan_printed = plan_sparsify(&s, membership_cost_bits(&s), RankingKey::Printed).unwrap();
        let order = |plan: &SparsifyPlan| -> Vec<(SuperId, SuperId)> {
            plan.ranked.iter().map(|e| e.endpoints).collect()
        };
        assert_ne!(order(&plan_true), order(&plan_printed));
        // Reported deltas always use the exact RE change, whatever the key.
        for e in &plan_printed.ranked {
            let expected = true_delta_re(&s, e.endpoints.0, e.endpoints.1).unwrap();
            assert_eq!(e.true_delta_re, expected);
        }
        // Both keys drive the cost to the requested budget.
        for key in [RankingKey::TrueDelta, RankingKey::Printed] {
            let mut work = s.clone();
            let target = s.storage_cost_bits() - 10;
            sparsify(&mut work, target, key).unwrap();
            assert!(work.storage_cost_bits() <= target);
        }
    }

    #[test]
    fn cost_strictly_decreases_per_deletion() {
        let mut rng = StdRng::seed_from_u64(53);
        let (_, mut s) = random_instance(&mut rng, 40, 5);
        let mut last = s.storage_cost_bits();
        let plan = plan_sparsify(&s, membership_cost_bits(&s), RankingKey::TrueDelta).unwrap();
        for e in &plan.ranked {
            s.remove_superedge(e.endpoints.0, e.endpoints.1).unwrap();
            let now = s.storage_cost_bits();
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn greedy_matches_exhaustive_minimum() {
        let mut rng = StdRng::seed_from_u64(59);
        let mut tried = 0;
        while tried < 25 {
            let n = rng.gen_range(8..=14);
            let (_, s) = random_instance(&mut rng, n, 5);
            let es = s.superedge_count() as usize;
            if es == 0 || es > 12 {
                continue;
            }
            tried += 1;
            let edges: Vec<(SuperId, SuperId, f64)> = s
                .live_ids()
                .flat_map(|i| {
                    s.superedges(i)
                        .iter()
                        .filter(move |e| i < e.to)
                        .map(move |e| (i, e.to))
                        .collect::<Vec<_>>()
                })
                .map(|(a, b)| (a, b, true_delta_re(&s, a, b).unwrap()))
                .collect();
            let del = (es / 2).max(1);
            // Greedy pick.
            let mut by_delta = edges.clone();
            by_delta.sort_by(|x, y| x.2.total_cmp(&y.2));
            let greedy: f64 = by_delta[..del].iter().map(|e| e.2).sum();
            // Exhaustive minimum over all size-del subsets.
            let mut best = f64::INFINITY;
            let idx: Vec<usize> = (0..es).collect();
            let mut chosen = vec![0usize; del];
            fn recurse(
                idx: &[usize],
                edges: &[(SuperId, SuperId, f64)],
                chosen: &mut [usize],
                at: usize,
                start: usize,
                best: &mut f64,
            ) {
                if at == chosen.len() {
                    let total: f64 = chosen.iter().map(|&i| edges[i].2).sum();
                    if total < *best {
                        *best = total;
                    }
                    return;
                }
                for i in start..idx.len() {
                    chosen[at] = idx[i];
                    recurse(idx, edges, chosen, at + 1, i + 1, best);
                }
            }
            recurse(&idx, &edges, &mut chosen, 0, 0, &mut best);
            assert!(
                (greedy - best).abs() < 1e-9,
                "greedy {greedy} vs exhaustive {best}"
            );
        }
    }
}
