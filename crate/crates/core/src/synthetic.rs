//! Deterministic synthetic graph generators for tests, benchmarks, and
//! scalability sweeps.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::graph::Graph;

/// Erdos-Renyi G(n, p).
pub fn gnp(n: u32, p: f64, seed: u64) -> Graph {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges_with_vertices(n, edges).expect("generator produced a vertex")
}

/// Preferential-attachment graph: each new vertex attaches to
/// `edges_per_vertex` existing vertices chosen proportionally to degree,
/// yielding a power-law degree tail.
pub fn power_law(n: u32, edges_per_vertex: u32, seed: u64) -> Graph {
    assert!(n >= 2 && edges_per_vertex >= 1);
    let m = edges_per_vertex.min(n - 1) as usize;
    let mut rng = StdRng::seed_from_u64(seed);
    // endpoint pool: each edge contributes both endpoints, so sampling a
    // pool entry is degree-proportional sampling.
    let mut pool: Vec<u32> = Vec::with_capacity(2 * m * n as usize);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m * n as usize);
    let seedsize = (m as u32 + 1).min(n);
    for u in 0..seedsize {
        for v in (u + 1)..seedsize {
            edges.push((u, v));
            pool.push(u);
            pool.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for v in seedsize..n {
        targets.clear();
        let mut guard = 0;
        while targets.len() < m && guard < 64 * m {
            guard += 1;
            let t = pool[rng.gen_range(0..pool.len())];
            if t != v && !targets.contains(&t) {
                targets.push(t);
            }
        }
        while targets.len() < m {
            let t = rng.gen_range(0..v);
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((v.min(t), v.max(t)));
            pool.push(v);
            pool.push(t);
        }
    }
    Graph::from_edges(edges).expect("non-empty by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexId;

    #[test]
    fn gnp_is_deterministic() {
        let a = gnp(50, 0.1, 9);
        let b = gnp(50, 0.1, 9);
        assert_eq!(a, b);
        assert_eq!(a.vertex_count(), 50);
    }

    #[test]
    fn power_law_has_expected_shape() {
        let g = power_law(2000, 4, 1);
        assert_eq!(g.vertex_count(), 2000);
        // Roughly m edges per non-seed vertex.
        assert!(g.edge_count() >= 4 * 1900 && g.edge_count() <= 4 * 2000 + 10);
        // Heavy tail: the max degree far exceeds the mean.
        let mean = 2.0 * g.edge_count() as f64 / 2000.0;
        assert!(g.max_degree() as f64 > 4.0 * mean);
        // Everyone is connected to something.
        assert!((0..2000).all(|v| g.degree(VertexId(v)) > 0));
    }
}
