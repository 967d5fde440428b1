//! Answer graph queries from the summary alone: per-node degree,
//! eigenvector-centrality proxy, attribute, pairwise adjacency, and the
//! graph-level triangle estimate.

use rand::Rng;
use serde::Serialize;

use crate::graph::{Graph, VertexId};
use crate::summary::{binom2, SuperId, Summary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Degree,
    Centrality,
    Attribute,
    Adjacency,
    Triangles,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum QueryValue {
    Real(f64),
    Label(String),
}

/// One answered query, with the supernodes consulted to produce it.
#[derive(Clone, Debug, Serialize)]
pub struct QueryAnswer {
    pub kind: QueryKind,
    pub value: QueryValue,
    pub basis: Vec<SuperId>,
}

impl QueryAnswer {
    pub fn degree(summary: &Summary, v: VertexId) -> QueryAnswer {
        QueryAnswer {
            kind: QueryKind::Degree,
            value: QueryValue::Real(degree_query(summary, v)),
            basis: vec![summary.supernode_of(v)],
        }
    }

    pub fn centrality(summary: &Summary, v: VertexId, m: u64) -> crate::error::Result<QueryAnswer> {
        Ok(QueryAnswer {
            kind: QueryKind::Centrality,
            value: QueryValue::Real(centrality_query(summary, v, m)?),
            basis: vec![summary.supernode_of(v)],
        })
    }

    pub fn attribute(summary: &Summary, v: VertexId, rng: &mut impl Rng) -> QueryAnswer {
        let class = attribute_query(summary, v, rng);
        QueryAnswer {
            kind: QueryKind::Attribute,
            value: QueryValue::Label(summary.attr_labels()[class as usize].clone()),
            basis: vec![summary.supernode_of(v)],
        }
    }

    pub fn adjacency(summary: &Summary, u: VertexId, v: VertexId) -> QueryAnswer {
        QueryAnswer {
            kind: QueryKind::Adjacency,
            value: QueryValue::Real(adjacency_query(summary, u, v)),
            basis: vec![summary.supernode_of(u), summary.supernode_of(v)],
        }
    }

    pub fn triangles(summary: &Summary) -> QueryAnswer {
        QueryAnswer {
            kind: QueryKind::Triangles,
            value: QueryValue::Real(triangle_query(summary)),
            basis: summary.live_ids().collect(),
        }
    }
}

/// Estimated degree of `v`: (2 e_i + sum_j e_ij) / n_i over v's supernode.
/// Iterates the supernode's superedge list, the sparse equivalent of the
/// sum over all k supernodes.
pub fn degree_query(summary: &Summary, v: VertexId) -> f64 {
    let i = summary.supernode_of(v);
    let nd = summary.node(i);
    let cross: u64 = summary.superedges(i).iter().map(|e| e.weight).sum();
    (2 * nd.internal + cross) as f64 / nd.size as f64
}

/// Eigenvector-centrality estimate deg'(v) / (2 |E|).
pub fn centrality_query(summary: &Summary, v: VertexId, m: u64) -> crate::error::Result<f64> {
    if m == 0 {
        return Err(crate::error::Error::invalid(
            "centrality undefined on an edgeless graph",
        ));
    }
    Ok(degree_query(summary, v) / (2.0 * m as f64))
}

/// Attribute class sampled from the supernode histogram: class p with
/// probability hist[p] / n_i.
pub fn attribute_query(summary: &Summary, v: VertexId, rng: &mut impl Rng) -> u32 {
    let i = summary.supernode_of(v);
    let hist = summary.class_hist(i);
    let total: u64 = hist.iter().map(|&c| c as u64).sum();
    let mut draw = rng.gen_range(0..total);
    for (class, &count) in hist.iter().enumerate() {
        if (draw as u64) < count as u64 {
            return class as u32;
        }
        draw -= count as u64;
    }
    hist.len() as u32 - 1
}

/// Deterministic variant: the majority class, smaller index on ties.
pub fn attribute_query_deterministic(summary: &Summary, v: VertexId) -> u32 {
    let i = summary.supernode_of(v);
    let hist = summary.class_hist(i);
    let mut best = 0usize;
    for (class, &count) in hist.iter().enumerate() {
        if count > hist[best] {
            best = class;
        }
    }
    best as u32
}

/// Probability that the edge (u, v) exists, per the expected adjacency.
pub fn adjacency_query(summary: &Summary, u: VertexId, v: VertexId) -> f64 {
    summary.expected_adjacency(u, v)
}

/// Expected triangle count of the reconstructed graph under independent
/// edges. With pi_i = e_i / C(n_i,2) and pi_ij = e_ij / (n_i n_j):
/// C(n_i,3) pi_i^3 inside one supernode; per superedge, one-in-i/two-in-j
/// patterns n_i C(n_j,2) pi_ij^2 pi_j and C(n_i,2) n_j pi_i pi_ij^2; and
/// n_i n_j n_l pi_ij pi_jl pi_il per supernode triangle. Cost is bounded by
/// the sparse superedge structure rather than k^3.
pub fn triangle_query(summary: &Summary) -> f64 {
    let live: Vec<SuperId> = summary.live_ids().collect();
    let pi_internal = |i: SuperId| {
        let nd = summary.node(i);
        if nd.size < 2 {
            0.0
        } else {
            nd.internal as f64 / binom2(nd.size as u64)
        }
    };
    let mut total = 0.0;
    // Three vertices inside one supernode.
    for &i in &live {
        let n_i = summary.node(i).size as u64;
        if n_i >= 3 {
            let pi = pi_internal(i);
            total += binom3(n_i) * pi * pi * pi;
        }
    }
    // Two supernodes: iterate each unordered superedge once.
    for &i in &live {
        let n_i = summary.node(i).size;
        for e in summary.superedges(i) {
            if i >= e.to {
                continue;
            }
            let j = e.to;
            let n_j = summary.node(j).size;
            let pi_ij = e.weight as f64 / (n_i as f64 * n_j as f64);
            let one_in_i = n_i as f64 * binom2(n_j as u64) * pi_ij * pi_ij * pi_internal(j);
            let one_in_j = binom2(n_i as u64) * n_j as f64 * pi_internal(i) * pi_ij * pi_ij;
            total += one_in_i + one_in_j;
        }
    }
    // Three distinct supernodes: triangles of the summary graph, found by
    // intersecting sorted neighbor lists above the edge's larger endpoint.
    let mut sorted: Vec<Vec<(SuperId, u64)>> = vec![Vec::new(); summary.id_capacity()];
    for &i in &live {
        let mut row: Vec<(SuperId, u64)> = summary
            .superedges(i)
            .iter()
            .map(|e| (e.to, e.weight))
            .collect();
        row.sort_unstable();
        sorted[i as usize] = row;
    }
    for &i in &live {
        let n_i = summary.node(i).size as f64;
        for &(j, w_ij) in &sorted[i as usize] {
            if i >= j {
                continue;
            }
            let n_j = summary.node(j).size as f64;
            let pi_ij = w_ij as f64 / (n_i * n_j);
            let (a, b) = (&sorted[i as usize], &sorted[j as usize]);
            let (mut x, mut y) = (0, 0);
            while x < a.len() && y < b.len() {
                match a[x].0.cmp(&b[y].0) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        let l = a[x].0;
                        if l > j {
                            let n_l = summary.node(l).size as f64;
                            let pi_il = a[x].1 as f64 / (n_i * n_l);
                            let pi_jl = b[y].1 as f64 / (n_j * n_l);
                            total += n_i * n_j * n_l * pi_ij * pi_jl * pi_il;
                        }
                        x += 1;
                        y += 1;
                    }
                }
            }
        }
    }
    total
}

/// Relative triangle-density error (t' - t) / t; `None` when the graph has
/// no triangles.
pub fn triangle_density_error(summary: &Summary, graph: &Graph) -> Option<f64> {
    let truth = graph.count_triangles();
    if truth == 0 {
        return None;
    }
    Some((triangle_query(summary) - truth as f64) / truth as f64)
}

fn binom3(n: u64) -> f64 {
    if n < 3 {
        0.0
    } else {
        (n * (n - 1) * (n - 2)) as f64 / 6.0
    }
}

/// Brute-force independent-edge expectation of the triangle count:
/// sum over vertex triples of A'(u,v) A'(v,w) A'(u,w). Test oracle.
pub fn triangle_expectation_oracle(summary: &Summary) -> f64 {
    let n = summary.vertex_count() as usize;
    let mut total = 0.0;
    for u in 0..n {
        for v in (u + 1)..n {
            let puv = summary.expected_adjacency(VertexId(u as u32), VertexId(v as u32));
            if puv == 0.0 {
                continue;
            }
            for w in (v + 1)..n {
                let pvw = summary.expected_adjacency(VertexId(v as u32), VertexId(w as u32));
                if pvw == 0.0 {
                    continue;
                }
                let puw = summary.expected_adjacency(VertexId(u as u32), VertexId(w as u32));
                total += puv * pvw * puw;
            }
        }
    }
    total
}
