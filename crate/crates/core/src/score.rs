//! Pair merge scores and node sampling weights.
//!
//! The structural score of a candidate pair (a, b) is the closed-form drop
//! in l1 reconstruction error caused by merging them,
//! RE(S_before) - RE(S_after); larger is better. Given the cached D values
//! it costs O(deg(a) + deg(b)) exactly, or O(w d) with sketches. The
//! attribute score is the majority count of the combined histograms. The
//! combined score mixes both on a [0, 1] scale with weight alpha.

use crate::sketch::{cross_term_estimate, SketchStore};
use crate::summary::{binom2, SuperId, Summary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreMode {
    Exact,
    Sketch,
}

/// Scoring knobs: alpha trades structure (1.0) against attributes (0.0).
#[derive(Clone, Copy, Debug)]
pub struct ScoreParams {
    pub alpha: f64,
    pub mode: ScoreMode,
}

/// A scored candidate pair. `combined` is
/// alpha * re_component / n^2 + (1 - alpha) * attr_component / (n_a + n_b),
/// with n fixed to the original vertex count for the whole run.
#[derive(Clone, Copy, Debug)]
pub struct PairScore {
    pub pair: (SuperId, SuperId),
    pub re_component: f64,
    pub attr_component: f64,
    pub combined: f64,
}

/// Reusable stamped probe index so the hot scoring path does not allocate.
#[derive(Clone, Debug, Default)]
pub struct PairScratch {
    stamp: Vec<u32>,
    weight: Vec<f64>,
    epoch: u32,
}

impl PairScratch {
    pub fn new() -> PairScratch {
        PairScratch::default()
    }

    fn begin(&mut self, capacity: usize) {
        if self.stamp.len() < capacity {
            self.stamp.resize(capacity, 0);
            self.weight.resize(capacity, 0.0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }
}

/// Exact structural score via the closed form. The cross-neighbor term
/// sum_i e_ai e_bi / n_i indexes the shorter superedge list and probes it
/// while walking the other, so no pass over all k supernodes is needed.
pub fn score_re_exact(summary: &Summary, a: SuperId, b: SuperId) -> f64 {
    let mut scratch = PairScratch::new();
    score_re_exact_with(summary, a, b, &mut scratch)
}

pub fn score_re_exact_with(
    summary: &Summary,
    a: SuperId,
    b: SuperId,
    scratch: &mut PairScratch,
) -> f64 {
    assert_ne!(a, b, "score needs two distinct supernodes");
    assert!(
        summary.node(a).live && summary.node(b).live,
        "score needs live supernodes"
    );
    scratch.begin(summary.id_capacity());
    let (shorter, longer) = if summary.superedges(a).len() <= summary.superedges(b).len() {
        (a, b)
    } else {
        (b, a)
    };
    for e in summary.superedges(shorter) {
        scratch.stamp[e.to as usize] = scratch.epoch;
        scratch.weight[e.to as usize] = e.weight as f64;
    }
    let mut cross = 0.0;
    let mut e_ab = 0u64;
    for e in summary.superedges(longer) {
        if e.to == shorter {
            e_ab = e.weight;
        } else if scratch.stamp[e.to as usize] == scratch.epoch {
            cross += e.weight as f64 * scratch.weight[e.to as usize]
                / summary.node(e.to).size as f64;
        }
    }
    score_re_from_parts(summary, a, b, e_ab, cross)
}

/// Structural score with the cross-neighbor term approximated by the
/// count-min inner product of the two supernode sketches (the mutual e_ab
/// entries are subtracted inside the estimator).
pub fn score_re_sketch(summary: &Summary, a: SuperId, b: SuperId, store: &SketchStore) -> f64 {
    assert_ne!(a, b, "score needs two distinct supernodes");
    let e_ab = summary.superedge_weight(a, b).unwrap_or(0);
    let cross = cross_term_estimate(
        &store.params,
        store.sketch(a),
        store.sketch(b),
        a,
        b,
        e_ab,
        summary.node(a).size,
        summary.node(b).size,
    );
    score_re_from_parts(summary, a, b, e_ab, cross)
}

fn score_re_from_parts(summary: &Summary, a: SuperId, b: SuperId, e_ab: u64, cross: f64) -> f64 {
    let na = summary.node(a);
    let nb = summary.node(b);
    let (n_a, n_b) = (na.size as f64, nb.size as f64);
    let (e_a, e_b) = (na.internal as f64, nb.internal as f64);
    let (d_a, d_b) = (na.d_value, nb.d_value);
    let w = e_ab as f64;
    let merged_size = n_a + n_b;

    let mut score = 0.0;
    if na.size >= 2 {
        score -= 4.0 * e_a * e_a / binom2(na.size as u64);
    }
    score -= 4.0 * d_a / n_a;
    if nb.size >= 2 {
        score -= 4.0 * e_b * e_b / binom2(nb.size as u64);
    }
    score -= 4.0 * d_b / n_b;
    score += 4.0 * w * w / (n_a * n_b);
    let e_z = e_a + e_b + w;
    score += 4.0 * e_z * e_z / binom2(na.size as u64 + nb.size as u64);
    // D' excludes the mutual terms: D_a counts e_ab^2/n_b, D_b counts
    // e_ab^2/n_a.
    let d_a_prime = d_a - w * w / n_b;
    let d_b_prime = d_b - w * w / n_a;
    score += 4.0 / merged_size * (d_a_prime + d_b_prime + 2.0 * cross);
    score
}

/// Attribute score: the majority count of the elementwise histogram sum.
pub fn score_attr(summary: &Summary, a: SuperId, b: SuperId) -> f64 {
    summary
        .class_hist(a)
        .iter()
        .zip(summary.class_hist(b))
        .map(|(x, y)| x + y)
        .max()
        .unwrap_or(0) as f64
}

/// Combined score per the run's alpha and mode.
pub fn score_combined(
    summary: &Summary,
    a: SuperId,
    b: SuperId,
    params: &ScoreParams,
    sketches: Option<&SketchStore>,
    scratch: &mut PairScratch,
) -> PairScore {
    let re = match params.mode {
        ScoreMode::Exact => score_re_exact_with(summary, a, b, scratch),
        ScoreMode::Sketch => {
            let store = sketches.expect("sketch mode requires a sketch store");
            score_re_sketch(summary, a, b, store)
        }
    };
    let attr = score_attr(summary, a, b);
    let n = summary.vertex_count() as f64;
    let pair_size = (summary.node(a).size + summary.node(b).size) as f64;
    let combined = params.alpha * re / (n * n) + (1.0 - params.alpha) * attr / pair_size;
    PairScore {
        pair: (a.min(b), a.max(b)),
        re_component: re,
        attr_component: attr,
        combined,
    }
}

/// Sampling weight of a supernode:
/// f(a) = -4 e_a^2 / C(n_a, 2) - 4 D_a / n_a, w(a) = -1/f(a), or 0 when
/// f(a) = 0 (isolated singleton). f is never positive, so weights are
/// non-negative, and nodes whose merges would be cheap get large weights.
pub fn node_weight(summary: &Summary, a: SuperId) -> f64 {
    let nd = summary.node(a);
    let mut f = -4.0 * nd.d_value / nd.size as f64;
    if nd.size >= 2 {
        let e = nd.internal as f64;
        f -= 4.0 * e * e / binom2(nd.size as u64);
    }
    if f == 0.0 {
        0.0
    } else {
        -1.0 / f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::summary::Summary;
    use rand::prelude::*;

    #[test]
    fn merging_a_lone_edge_scores_zero() {
        let g = Graph::from_edges([(0, 1)]).unwrap();
        let s = Summary::initial(&g);
        let score = score_re_exact(&s, 0, 1);
        assert!(score.abs() < 1e-12);
    }

    #[test]
    fn merging_isolated_singletons_scores_zero() {
        let g = Graph::load_edge_list("0 0\n1 1\n2 3".as_bytes()).unwrap();
        let s = Summary::initial(&g);
        assert_eq!(score_re_exact(&s, 0, 1), 0.0);
    }

    #[test]
    fn exact_score_matches_before_after_oracle() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.gen_range(8..=30u32);
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
            let k = rng.gen_range(2..=n.min(8)) as usize;
            let mut assign: Vec<u32> = (0..n).map(|v| v % k as u32).collect();
            assign.shuffle(&mut rng);
            let s = Summary::from_partition(&g, &assign).unwrap();
            let live: Vec<_> = s.live_ids().collect();
            let a = *live.choose(&mut rng).unwrap();
            let b = loop {
                let b = *live.choose(&mut rng).unwrap();
                if b != a {
                    break b;
                }
            };
            let predicted = score_re_exact(&s, a, b);
            let before = s.reconstruction_error_closed_form();
            let mut after = s.clone();
            after.merge_supernodes(a, b).unwrap();
            let actual = before - after.reconstruction_error_closed_form();
            assert!(
                (predicted - actual).abs() < 1e-6,
                "score {predicted} vs oracle {actual}"
            );
        }
    }

    #[test]
    fn sketch_score_equals_exact_when_collision_free() {
        use crate::sketch::{SketchParams, SketchPolicy, SketchStore};
        let mut rng = StdRng::seed_from_u64(23);
        let n = 24u32;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(0.3) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(edges).unwrap();
        let s = Summary::initial(&g);
        // Wide sketch and a seed with no column collisions over live ids.
        let params = 'seed: {
            for seed in 0.. {
                let p = SketchParams::new(512, 2, seed);
                let ok = (0..p.depth).all(|row| {
                    let cols: std::collections::HashSet<_> =
                        (0..n).map(|id| p.column(row, id)).collect();
                    cols.len() == n as usize
                });
                if ok {
                    break 'seed p;
                }
            }
            unreachable!()
        };
        let store = SketchStore::build(&s, params, SketchPolicy::SignedCorrection);
        for a in 0..6 {
            for b in (a + 1)..6 {
                let exact = score_re_exact(&s, a, b);
                let approx = score_re_sketch(&s, a, b, &store);
                assert!(
                    (exact - approx).abs() < 1e-6,
                    "pair ({a},{b}): exact {exact} vs sketch {approx}"
                );
            }
        }
    }

    #[test]
    fn sketch_cross_term_over_estimates_without_deletions() {
        use crate::sketch::{SketchParams, SketchPolicy, SketchStore};
        let mut rng = StdRng::seed_from_u64(31);
        let n = 40u32;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(0.25) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(edges).unwrap();
        let s = Summary::initial(&g);
        // Narrow sketch forces collisions; the estimate must sit above the
        // exact value, equivalently the sketch score above the exact score.
        let store = SketchStore::build(
            &s,
            SketchParams::new(8, 2, 7),
            SketchPolicy::SignedCorrection,
        );
        for _ in 0..50 {
            let a = rng.gen_range(0..n);
            let b = loop {
                let b = rng.gen_range(0..n);
                if b != a {
                    break b;
                }
            };
            let exact = score_re_exact(&s, a, b);
            let approx = score_re_sketch(&s, a, b, &store);
            assert!(approx >= exact - 1e-9);
        }
    }

    #[test]
    fn attr_score_examples() {
        let mut g = Graph::from_edges([(0, 1), (1, 2), (2, 3)]).unwrap();
        g.load_attributes("0\tM\n1\tF\n2\tM\n3\tM\n".as_bytes())
            .unwrap();
        // Partition {0,2} {1,3}: hists [2,0] and [1,1] -> max(3,1) = 3.
        let s = Summary::from_partition(&g, &[0, 1, 0, 1]).unwrap();
        assert_eq!(score_attr(&s, 0, 1), 3.0);

        // Both pure in the same class.
        let g2 = Graph::from_edges([(0, 1), (2, 3), (1, 2)]).unwrap();
        let s2 = Summary::from_partition(&g2, &[0, 0, 1, 1]).unwrap();
        assert_eq!(score_attr(&s2, 0, 1), 4.0);
        // l = 1: always n_a + n_b.
        assert_eq!(score_attr(&s2, 0, 1), (s2.node(0).size + s2.node(1).size) as f64);
    }

    #[test]
    fn combined_score_mixes_per_alpha() {
        let g = Graph::from_edges([(0, 1)]).unwrap();
        let s = Summary::initial(&g);
        let mut scratch = PairScratch::new();
        let alpha1 = score_combined(
            &s,
            0,
            1,
            &ScoreParams {
                alpha: 1.0,
                mode: ScoreMode::Exact,
            },
            None,
            &mut scratch,
        );
        assert_eq!(alpha1.combined, alpha1.re_component / 4.0);

        // alpha = 0, both pure in the same class: combined = 1.
        let alpha0 = score_combined(
            &s,
            0,
            1,
            &ScoreParams {
                alpha: 0.0,
                mode: ScoreMode::Exact,
            },
            None,
            &mut scratch,
        );
        assert_eq!(alpha0.combined, 1.0);

        // alpha = 0.5, score_re = 0, hists [1,0] + [0,1]: 0.5 * (1/2) = 0.25.
        let mut g2 = Graph::from_edges([(0, 1)]).unwrap();
        g2.load_attributes("0\tM\n1\tF\n".as_bytes()).unwrap();
        let s2 = Summary::initial(&g2);
        let half = score_combined(
            &s2,
            0,
            1,
            &ScoreParams {
                alpha: 0.5,
                mode: ScoreMode::Exact,
            },
            None,
            &mut scratch,
        );
        assert!((half.combined - 0.25).abs() < 1e-12);
    }

    #[test]
    fn node_weight_examples() {
        let g = Graph::load_edge_list("0 0\n1 2".as_bytes()).unwrap();
        let s = Summary::initial(&g);
        assert_eq!(node_weight(&s, 0), 0.0);
        assert_eq!(node_weight(&s, 1), 0.25);
    }

    #[test]
    fn node_weight_decreases_with_d() {
        // Same size, larger D -> strictly smaller weight.
        let path = Graph::from_edges([(0, 1), (1, 2)]).unwrap();
        let s = Summary::initial(&path);
        let w_leaf = node_weight(&s, 0);
        let w_mid = node_weight(&s, 1);
        assert!(s.node(1).d_value > s.node(0).d_value);
        assert!(w_mid < w_leaf);
    }

    #[test]
    fn node_weight_ignores_neighbor_labels() {
        // Middle of a path and hub of a 2-star have the same
        // {e_ai, n_i} multiset and identical (n_a, e_a).
        let path = Graph::from_edges([(0, 1), (1, 2)]).unwrap();
        let star = Graph::from_edges([(1, 0), (2, 0)]).unwrap();
        let sp = Summary::initial(&path);
        let ss = Summary::initial(&star);
        assert_eq!(node_weight(&sp, 1), node_weight(&ss, 0));
    }

    #[test]
    fn attr_argmax_invariant_under_histogram_scaling() {
        // Duplicate every vertex 3x with the same attributes and block
        // structure: every histogram scales by 3 and the best pair by
        // attribute score stays the same.
        let mut g = Graph::from_edges([(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        g.load_attributes("0\tM\n1\tF\n2\tM\n3\tF\n".as_bytes())
            .unwrap();
        let s = Summary::from_partition(&g, &[0, 1, 2, 3]).unwrap();

        let mut edges3 = Vec::new();
        for r in 0..3u32 {
            for &(u, v) in &[(0u32, 1u32), (1, 2), (2, 3), (3, 0)] {
                edges3.push((u * 3 + r, v * 3 + r));
            }
        }
        let mut g3 = Graph::from_edges(edges3).unwrap();
        let attr_rows: String = (0..12)
            .map(|v| {
                let class = if (v / 3) % 2 == 0 { "M" } else { "F" };
                format!("{v}\t{class}\n")
            })
            .collect();
        g3.load_attributes(attr_rows.as_bytes()).unwrap();
        let assign3: Vec<u32> = (0..12).map(|v| v / 3).collect();
        let s3 = Summary::from_partition(&g3, &assign3).unwrap();

        let argmax = |s: &Summary| {
            let live: Vec<_> = s.live_ids().collect();
            let mut best = ((0, 0), f64::NEG_INFINITY);
            for (i, &a) in live.iter().enumerate() {
                for &b in &live[i + 1..] {
                    let v = score_attr(s, a, b);
                    if v > best.1 {
                        best = ((a, b), v);
                    }
                }
            }
            best
        };
        let (pair, v) = argmax(&s);
        let (pair3, v3) = argmax(&s3);
        assert_eq!(pair, pair3);
        assert_eq!(v * 3.0, v3);
    }
}
