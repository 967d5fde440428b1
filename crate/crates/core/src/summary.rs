//! Summary model: a partition of the vertices into supernodes with
//! per-supernode counters and weighted superedges, plus the reconstruction
//! and storage metrics computed from it.
//!
//! Counters kept per supernode: member count `n_i`, internal edge count
//! `e_i`, an attribute histogram, and the cached quantity
//! `D_i = sum_{j != i} e_ij^2 / n_j` that makes pair scoring cheap.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::util::fnv1a64;

pub type SuperId = u32;

const NO_SLOT: u32 = u32::MAX;

/// Per-supernode record. Ids are never reused within a run; merged-away
/// supernodes stay in the table with `live = false` and a `merged_into`
/// pointer, so membership history is auditable.
#[derive(Clone, Debug)]
pub struct SuperNode {
    /// n_i: number of member vertices.
    pub size: u32,
    /// e_i: number of original edges with both endpoints inside.
    pub internal: u64,
    /// D_i = sum over superedge neighbors j of e_ij^2 / n_j.
    pub d_value: f64,
    pub live: bool,
    pub merged_into: Option<SuperId>,
}

/// One weighted superedge slot, mirrored in both endpoint lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuperEdgeEntry {
    pub to: SuperId,
    /// e_ij: count of original edges between the two supernodes.
    pub weight: u64,
    /// Position of the twin entry in `to`'s list.
    pub mirror: u32,
}

/// What a merge changed, for callers that maintain derived state
/// (sampling weights, sketches).
#[derive(Clone, Debug)]
pub struct MergeOutcome {
    pub new_id: SuperId,
    pub merged: (SuperId, SuperId),
    /// e_ab between the merged pair (0 if they were not adjacent).
    pub pair_weight: u64,
    /// (n_a, n_b) before the merge.
    pub sizes: (u32, u32),
    pub neighbors: Vec<NeighborDelta>,
}

/// Former cross-edge weights from one neighbor to each merged endpoint.
#[derive(Clone, Copy, Debug)]
pub struct NeighborDelta {
    pub id: SuperId,
    pub to_a: u64,
    pub to_b: u64,
}

#[derive(Clone, Debug, Default)]
struct MergeScratch {
    stamp: Vec<u32>,
    pos: Vec<u32>,
    epoch: u32,
}

impl MergeScratch {
    fn begin(&mut self, capacity: usize) {
        if self.stamp.len() < capacity {
            self.stamp.resize(capacity, 0);
            self.pos.resize(capacity, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }

    #[inline]
    fn set(&mut self, key: u32, value: u32) {
        self.stamp[key as usize] = self.epoch;
        self.pos[key as usize] = value;
    }

    #[inline]
    fn get(&self, key: u32) -> Option<u32> {
        (self.stamp[key as usize] == self.epoch).then(|| self.pos[key as usize])
    }
}

/// Summary S = (V_S, E_S, A_S) of an attributed graph.
#[derive(Clone, Debug)]
pub struct Summary {
    n: u32,
    m: u64,
    class_count: u32,
    attr_labels: Vec<String>,
    /// Vertex -> supernode, possibly stale; resolve through `merged_into`.
    vertex_node: Vec<SuperId>,
    nodes: Vec<SuperNode>,
    adj: Vec<Vec<SuperEdgeEntry>>,
    /// Flat attribute histograms, `class_count` counters per supernode id.
    hist: Vec<u32>,
    live_count: u32,
    superedge_count: u64,
    /// Total weight of superedges deleted by sparsification; their real
    /// edges are predicted absent and each costs 2 in l1 error.
    dropped_weight: u64,
    scratch: MergeScratch,
}

impl Summary {
    /// The identity summary: every vertex is its own supernode, superedges
    /// mirror the graph's edges with weight 1, D_i = deg(i).
    pub fn initial(graph: &Graph) -> Summary {
        let n = graph.vertex_count();
        let l = graph.attributes().class_count();
        let mut hist = vec![0u32; n * l];
        for v in 0..n {
            hist[v * l + graph.attributes().value(VertexId(v as u32)) as usize] = 1;
        }
        let nodes = (0..n)
            .map(|v| SuperNode {
                size: 1,
                internal: 0,
                d_value: graph.degree(VertexId(v as u32)) as f64,
                live: true,
                merged_into: None,
            })
            .collect();
        // Graph adjacency already carries valid cross-links; copy them.
        let adj = (0..n)
            .map(|v| {
                graph
                    .neighbors(VertexId(v as u32))
                    .iter()
                    .map(|e| SuperEdgeEntry {
                        to: e.to.0,
                        weight: 1,
                        mirror: e.mirror,
                    })
                    .collect()
            })
            .collect();
        Summary {
            n: n as u32,
            m: graph.edge_count() as u64,
            class_count: l as u32,
            attr_labels: graph.attributes().labels().to_vec(),
            vertex_node: (0..n as u32).collect(),
            nodes,
            adj,
            hist,
            live_count: n as u32,
            superedge_count: graph.edge_count() as u64,
            dropped_weight: 0,
            scratch: MergeScratch::default(),
        }
    }

    /// Build the summary for an explicit partition: `assignment[v]` is the
    /// supernode of vertex v, with classes 0..k all non-empty.
    pub fn from_partition(graph: &Graph, assignment: &[u32]) -> Result<Summary> {
        let n = graph.vertex_count();
        if assignment.len() != n {
            return Err(Error::invalid("assignment length does not match vertex count"));
        }
        let k = match assignment.iter().max() {
            Some(&mx) => mx as usize + 1,
            None => return Err(Error::invalid("empty assignment")),
        };
        let mut sizes = vec![0u32; k];
        for &c in assignment {
            sizes[c as usize] += 1;
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid("partition has an empty class"));
        }
        let l = graph.attributes().class_count();
        let mut hist = vec![0u32; k * l];
        for v in 0..n {
            let c = assignment[v] as usize;
            hist[c * l + graph.attributes().value(VertexId(v as u32)) as usize] += 1;
        }
        let mut internal = vec![0u64; k];
        let mut cross: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for u in 0..n {
            for e in graph.neighbors(VertexId(u as u32)) {
                let v = e.to.index();
                if u < v {
                    let (a, b) = (assignment[u], assignment[v]);
                    if a == b {
                        internal[a as usize] += 1;
                    } else {
                        *cross.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                    }
                }
            }
        }
        let mut adj: Vec<Vec<SuperEdgeEntry>> = vec![Vec::new(); k];
        for (&(a, b), &w) in &cross {
            let pa = adj[a as usize].len() as u32;
            let pb = adj[b as usize].len() as u32;
            adj[a as usize].push(SuperEdgeEntry {
                to: b,
                weight: w,
                mirror: pb,
            });
            adj[b as usize].push(SuperEdgeEntry {
                to: a,
                weight: w,
                mirror: pa,
            });
        }
        let nodes = (0..k)
            .map(|i| SuperNode {
                size: sizes[i],
                internal: internal[i],
                d_value: d_from_list(&adj[i], &sizes),
                live: true,
                merged_into: None,
            })
            .collect();
        Ok(Summary {
            n: n as u32,
            m: graph.edge_count() as u64,
            class_count: l as u32,
            attr_labels: graph.attributes().labels().to_vec(),
            vertex_node: assignment.to_vec(),
            nodes,
            adj,
            hist,
            live_count: k as u32,
            superedge_count: cross.len() as u64,
            dropped_weight: 0,
            scratch: MergeScratch::default(),
        })
    }

    pub fn vertex_count(&self) -> u32 {
        self.n
    }

    pub fn original_edge_count(&self) -> u64 {
        self.m
    }

    /// Number of live supernodes (k).
    pub fn supernode_count(&self) -> u32 {
        self.live_count
    }

    pub fn class_count(&self) -> u32 {
        self.class_count
    }

    pub fn attr_labels(&self) -> &[String] {
        &self.attr_labels
    }

    pub fn superedge_count(&self) -> u64 {
        self.superedge_count
    }

    /// Total ids ever created (live and dead).
    pub fn id_capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: SuperId) -> &SuperNode {
        &self.nodes[id as usize]
    }

    pub fn superedges(&self, id: SuperId) -> &[SuperEdgeEntry] {
        &self.adj[id as usize]
    }

    pub fn class_hist(&self, id: SuperId) -> &[u32] {
        let l = self.class_count as usize;
        &self.hist[id as usize * l..id as usize * l + l]
    }

    pub fn live_ids(&self) -> impl Iterator<Item = SuperId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, nd)| nd.live)
            .map(|(i, _)| i as SuperId)
    }

    /// Supernode currently containing `v`, resolving merge chains.
    pub fn supernode_of(&self, v: VertexId) -> SuperId {
        let mut id = self.vertex_node[v.index()];
        while let Some(next) = self.nodes[id as usize].merged_into {
            id = next;
        }
        id
    }

    /// Path-compress every vertex's stored supernode to its live root.
    pub fn compress_membership(&mut self) {
        let resolved = self.membership_vec();
        self.vertex_node = resolved;
    }

    /// Resolved vertex -> live supernode table.
    pub fn membership_vec(&self) -> Vec<SuperId> {
        let mut root: Vec<u32> = vec![NO_SLOT; self.nodes.len()];
        let mut chain: Vec<u32> = Vec::new();
        let mut out = Vec::with_capacity(self.n as usize);
        for v in 0..self.n as usize {
            let mut id = self.vertex_node[v];
            chain.clear();
            while root[id as usize] == NO_SLOT {
                match self.nodes[id as usize].merged_into {
                    Some(next) => {
                        chain.push(id);
                        id = next;
                    }
                    None => break,
                }
            }
            let r = if root[id as usize] != NO_SLOT {
                root[id as usize]
            } else {
                id
            };
            root[id as usize] = r;
            for &c in &chain {
                root[c as usize] = r;
            }
            out.push(r);
        }
        out
    }

    /// Weight of the superedge between two live supernodes, if present.
    pub fn superedge_weight(&self, a: SuperId, b: SuperId) -> Option<u64> {
        let (probe, target) = if self.adj[a as usize].len() <= self.adj[b as usize].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adj[probe as usize]
            .iter()
            .find(|e| e.to == target)
            .map(|e| e.weight)
    }

    /// Expected adjacency A'(u, v): 0 on the diagonal, internal density
    /// e_i / C(n_i, 2) inside a supernode, e_ij / (n_i n_j) across.
    pub fn expected_adjacency(&self, u: VertexId, v: VertexId) -> f64 {
        if u == v {
            return 0.0;
        }
        let (i, j) = (self.supernode_of(u), self.supernode_of(v));
        if i == j {
            let nd = &self.nodes[i as usize];
            if nd.size < 2 {
                return 0.0;
            }
            nd.internal as f64 / binom2(nd.size as u64)
        } else {
            match self.superedge_weight(i, j) {
                Some(w) => {
                    w as f64
                        / (self.nodes[i as usize].size as f64 * self.nodes[j as usize].size as f64)
                }
                None => 0.0,
            }
        }
    }

    /// Closed-form l1 reconstruction error:
    /// sum_i [4 e_i - 4 e_i^2 / C(n_i,2)] over supernodes plus
    /// 4 e_ij - 4 e_ij^2 / (n_i n_j) per unordered superedge.
    /// O(k + |E_S|) time.
    pub fn reconstruction_error_closed_form(&self) -> f64 {
        // Each real edge in a dropped block is predicted absent: 2 per
        // edge under l1 (both matrix cells err by 1). Terms are summed in
        // canonical (id-sorted) order so the value is bit-stable across
        // list reorderings, e.g. a serialization round trip.
        let mut total = 2.0 * self.dropped_weight as f64;
        let mut cross: Vec<(u32, u64)> = Vec::new();
        for (i, nd) in self.nodes.iter().enumerate() {
            if !nd.live {
                continue;
            }
            if nd.size > 1 {
                let e = nd.internal as f64;
                total += 4.0 * e - 4.0 * e * e / binom2(nd.size as u64);
            }
            let ni = nd.size as f64;
            cross.clear();
            cross.extend(
                self.adj[i]
                    .iter()
                    .filter(|e| e.to as usize > i)
                    .map(|e| (e.to, e.weight)),
            );
            cross.sort_unstable();
            for &(to, w) in &cross {
                let w = w as f64;
                let nj = self.nodes[to as usize].size as f64;
                total += 4.0 * w - 4.0 * w * w / (ni * nj);
            }
        }
        total
    }

    /// Closed-form RE scaled by n^2.
    pub fn normalized_re(&self) -> f64 {
        self.reconstruction_error_closed_form() / (self.n as f64 * self.n as f64)
    }

    /// Fraction of vertices matching their supernode's majority class.
    pub fn purity(&self) -> f64 {
        let l = self.class_count as usize;
        let mut total = 0u64;
        for (i, nd) in self.nodes.iter().enumerate() {
            if nd.live {
                total += self.hist[i * l..i * l + l].iter().copied().max().unwrap_or(0) as u64;
            }
        }
        total as f64 / self.n as f64
    }

    /// Storage cost in bits: |E_S| (2 log2 k + log2 max e_ab) + n log2 k,
    /// with real-valued logs and a final ceiling. The weight log is floored
    /// at 1 bit (max e_ab is taken as at least 2), and k = 1 charges one
    /// bit per vertex for the membership map.
    pub fn storage_cost_bits(&self) -> u64 {
        let k = self.live_count as f64;
        let lg_k = if self.live_count <= 1 { 1.0 } else { k.log2() };
        let mut max_w = 0u64;
        for (i, nd) in self.nodes.iter().enumerate() {
            if nd.live {
                for e in &self.adj[i] {
                    max_w = max_w.max(e.weight);
                }
            }
        }
        let w_bits = (max_w.max(2) as f64).log2();
        let total =
            self.superedge_count as f64 * (2.0 * lg_k + w_bits) + self.n as f64 * lg_k;
        total.ceil() as u64
    }

    /// Merge two live supernodes into a fresh id z, splicing superedge lists
    /// through their cross-links (no global scan), updating neighbor D
    /// values in place, and recomputing D_z from z's final list. Costs
    /// O(deg(a) + deg(b)) superedge-entry touches.
    pub fn merge_supernodes(&mut self, a: SuperId, b: SuperId) -> Result<MergeOutcome> {
        if a == b {
            return Err(Error::invalid("cannot merge a supernode with itself"));
        }
        if !self.nodes[a as usize].live || !self.nodes[b as usize].live {
            return Err(Error::invalid("cannot merge a dead supernode"));
        }
        let (n_a, e_a) = (self.nodes[a as usize].size, self.nodes[a as usize].internal);
        let (n_b, e_b) = (self.nodes[b as usize].size, self.nodes[b as usize].internal);
        let z = self.nodes.len() as SuperId;

        let adj_a = std::mem::take(&mut self.adj[a as usize]);
        let adj_b = std::mem::take(&mut self.adj[b as usize]);
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.begin(self.nodes.len() + 1);

        let mut new_list: Vec<SuperEdgeEntry> = Vec::with_capacity(adj_a.len() + adj_b.len());
        let mut deltas: Vec<NeighborDelta> = Vec::with_capacity(adj_a.len() + adj_b.len());
        let mut e_ab = 0u64;
        let mut common = 0u64;

        for entry in &adj_a {
            let c = entry.to;
            if c == b {
                e_ab = entry.weight;
                continue;
            }
            let idx = new_list.len() as u32;
            new_list.push(SuperEdgeEntry {
                to: c,
                weight: entry.weight,
                mirror: entry.mirror,
            });
            self.adj[c as usize][entry.mirror as usize] = SuperEdgeEntry {
                to: z,
                weight: entry.weight,
                mirror: idx,
            };
            scratch.set(c, idx);
            deltas.push(NeighborDelta {
                id: c,
                to_a: entry.weight,
                to_b: 0,
            });
        }
        for entry in &adj_b {
            let c = entry.to;
            if c == a {
                debug_assert_eq!(entry.weight, e_ab);
                continue;
            }
            if let Some(idx) = scratch.get(c) {
                // Neighbor of both: fold weights and drop c's entry for b.
                let idx = idx as usize;
                new_list[idx].weight += entry.weight;
                let twin = new_list[idx].mirror as usize;
                self.adj[c as usize][twin].weight += entry.weight;
                deltas[idx].to_b = entry.weight;
                common += 1;
                self.remove_entry_fixing_new_list(c, entry.mirror, z, &mut new_list);
            } else {
                let idx = new_list.len() as u32;
                new_list.push(SuperEdgeEntry {
                    to: c,
                    weight: entry.weight,
                    mirror: entry.mirror,
                });
                self.adj[c as usize][entry.mirror as usize] = SuperEdgeEntry {
                    to: z,
                    weight: entry.weight,
                    mirror: idx,
                };
                deltas.push(NeighborDelta {
                    id: c,
                    to_a: 0,
                    to_b: entry.weight,
                });
            }
        }

        // Neighbor D updates: replace the e_ac^2/n_a and e_bc^2/n_b terms by
        // (e_ac + e_bc)^2 / (n_a + n_b).
        let merged_size = (n_a + n_b) as f64;
        for d in &deltas {
            let nd = &mut self.nodes[d.id as usize];
            let (wa, wb) = (d.to_a as f64, d.to_b as f64);
            nd.d_value += -wa * wa / n_a as f64 - wb * wb / n_b as f64
                + (wa + wb) * (wa + wb) / merged_size;
        }

        let sizes_ref = &self.nodes;
        // + 0.0 normalizes the empty sum's negative zero.
        let d_z = new_list
            .iter()
            .map(|e| {
                let w = e.weight as f64;
                w * w / sizes_ref[e.to as usize].size as f64
            })
            .sum::<f64>()
            + 0.0;

        let l = self.class_count as usize;
        let mut hist_z = vec![0u32; l];
        for c in 0..l {
            hist_z[c] = self.hist[a as usize * l + c] + self.hist[b as usize * l + c];
        }
        self.hist.extend_from_slice(&hist_z);

        self.nodes.push(SuperNode {
            size: n_a + n_b,
            internal: e_a + e_b + e_ab,
            d_value: d_z,
            live: true,
            merged_into: None,
        });
        self.adj.push(new_list);
        self.nodes[a as usize].live = false;
        self.nodes[a as usize].merged_into = Some(z);
        self.nodes[b as usize].live = false;
        self.nodes[b as usize].merged_into = Some(z);
        self.live_count -= 1;
        self.superedge_count -= common + u64::from(e_ab > 0);
        self.scratch = scratch;

        Ok(MergeOutcome {
            new_id: z,
            merged: (a, b),
            pair_weight: e_ab,
            sizes: (n_a, n_b),
            neighbors: deltas,
        })
    }

    /// swap_remove an entry from `owner`'s list, repairing the moved
    /// entry's twin. The twin may live in the under-construction list of
    /// the merge target `z`, which is not installed yet.
    fn remove_entry_fixing_new_list(
        &mut self,
        owner: SuperId,
        pos: u32,
        z: SuperId,
        new_list: &mut [SuperEdgeEntry],
    ) {
        let list = &mut self.adj[owner as usize];
        list.swap_remove(pos as usize);
        if (pos as usize) < list.len() {
            let moved = list[pos as usize];
            if moved.to == z {
                new_list[moved.mirror as usize].mirror = pos;
            } else {
                self.adj[moved.to as usize][moved.mirror as usize].mirror = pos;
            }
        }
    }

    /// Delete the superedge (a, b), refreshing both endpoint D values.
    /// Returns the removed weight.
    pub fn remove_superedge(&mut self, a: SuperId, b: SuperId) -> Result<u64> {
        if !self.nodes[a as usize].live || !self.nodes[b as usize].live {
            return Err(Error::invalid("superedge endpoints must be live"));
        }
        let pos_a = self.adj[a as usize]
            .iter()
            .position(|e| e.to == b)
            .ok_or_else(|| Error::invalid(format!("no superedge ({a}, {b})")))?;
        let entry = self.adj[a as usize][pos_a];
        let pos_b = entry.mirror;
        let w = entry.weight as f64;
        self.remove_entry(a, pos_a as u32);
        self.remove_entry(b, pos_b);
        let (n_a, n_b) = (
            self.nodes[a as usize].size as f64,
            self.nodes[b as usize].size as f64,
        );
        self.nodes[a as usize].d_value -= w * w / n_b;
        self.nodes[b as usize].d_value -= w * w / n_a;
        self.superedge_count -= 1;
        self.dropped_weight += entry.weight;
        Ok(entry.weight)
    }

    fn remove_entry(&mut self, owner: SuperId, pos: u32) {
        let list = &mut self.adj[owner as usize];
        list.swap_remove(pos as usize);
        if (pos as usize) < list.len() {
            let moved = list[pos as usize];
            self.adj[moved.to as usize][moved.mirror as usize].mirror = pos;
        }
    }

    /// Full consistency audit: partition integrity, counter conservation,
    /// cross-link round-trips, and D values against recomputation
    /// (1e-9 relative).
    pub fn audit(&self) -> std::result::Result<(), String> {
        let membership = self.membership_vec();
        let l = self.class_count as usize;
        let mut size_check = vec![0u64; self.nodes.len()];
        for (v, &id) in membership.iter().enumerate() {
            if !self.nodes[id as usize].live {
                return Err(format!("vertex {v} resolves to dead supernode {id}"));
            }
            size_check[id as usize] += 1;
        }
        let mut live_seen = 0u32;
        let mut internal_sum = 0u64;
        let mut cross_sum = 0u64;
        let mut edge_slots = 0u64;
        for (i, nd) in self.nodes.iter().enumerate() {
            if !nd.live {
                if !self.adj[i].is_empty() {
                    return Err(format!("dead supernode {i} still has superedges"));
                }
                continue;
            }
            live_seen += 1;
            if nd.size == 0 {
                return Err(format!("live supernode {i} has size 0"));
            }
            if size_check[i] != nd.size as u64 {
                return Err(format!(
                    "supernode {i} size {} but {} members resolve to it",
                    nd.size, size_check[i]
                ));
            }
            let max_internal = nd.size as u64 * (nd.size as u64 - 1) / 2;
            if nd.internal > max_internal {
                return Err(format!(
                    "supernode {i} internal {} exceeds C(n,2) = {max_internal}",
                    nd.internal
                ));
            }
            let hist_total: u64 = self.hist[i * l..i * l + l].iter().map(|&c| c as u64).sum();
            if hist_total != nd.size as u64 {
                return Err(format!(
                    "supernode {i} histogram totals {hist_total}, size is {}",
                    nd.size
                ));
            }
            internal_sum += nd.internal;
            let mut d_recomputed = 0.0;
            for (p, e) in self.adj[i].iter().enumerate() {
                let other = &self.nodes[e.to as usize];
                if e.to as usize == i {
                    return Err(format!("self superedge at {i}"));
                }
                if !other.live {
                    return Err(format!("superedge from {i} to dead {j}", j = e.to));
                }
                if e.weight == 0 || e.weight > nd.size as u64 * other.size as u64 {
                    return Err(format!(
                        "superedge ({i}, {}) weight {} outside [1, n_i n_j]",
                        e.to, e.weight
                    ));
                }
                let twin = self
                    .adj[e.to as usize]
                    .get(e.mirror as usize)
                    .copied()
                    .ok_or_else(|| format!("dangling cross-link from ({i}, {p})"))?;
                if twin.to as usize != i || twin.mirror as usize != p || twin.weight != e.weight {
                    return Err(format!(
                        "cross-link mismatch at ({i}, {p}): twin ({}, {}, w={})",
                        twin.to, twin.mirror, twin.weight
                    ));
                }
                cross_sum += e.weight;
                edge_slots += 1;
                d_recomputed += (e.weight * e.weight) as f64 / other.size as f64;
            }
            let tol = 1e-9 * d_recomputed.abs().max(1.0);
            if (nd.d_value - d_recomputed).abs() > tol {
                return Err(format!(
                    "supernode {i} D drifted: stored {} vs recomputed {d_recomputed}",
                    nd.d_value
                ));
            }
        }
        if live_seen != self.live_count {
            return Err(format!(
                "live count {} but {live_seen} live supernodes found",
                self.live_count
            ));
        }
        if edge_slots % 2 != 0 || edge_slots / 2 != self.superedge_count {
            return Err(format!(
                "superedge count {} but {edge_slots} entry slots found",
                self.superedge_count
            ));
        }
        if internal_sum + cross_sum / 2 + self.dropped_weight != self.m {
            return Err(format!(
                "edge conservation violated: {internal_sum} internal + {} cross + {} dropped != m = {}",
                cross_sum / 2,
                self.dropped_weight,
                self.m
            ));
        }
        let total_size: u64 = self
            .nodes
            .iter()
            .filter(|nd| nd.live)
            .map(|nd| nd.size as u64)
            .sum();
        if total_size != self.n as u64 {
            return Err(format!("sizes sum to {total_size}, n = {}", self.n));
        }
        Ok(())
    }

    /// Serialize to the versioned text format. `manifest`, when given, is
    /// embedded verbatim as a single payload line (it must not contain
    /// newlines).
    pub fn serialize(&self, mut sink: impl Write, manifest: Option<&str>) -> Result<()> {
        let payload = self.payload_string(manifest)?;
        writeln!(sink, "gsum-summary 1")?;
        writeln!(sink, "checksum {:016x}", fnv1a64(payload.as_bytes()))?;
        sink.write_all(payload.as_bytes())?;
        Ok(())
    }

    fn payload_string(&self, manifest: Option<&str>) -> Result<String> {
        use std::fmt::Write as _;
        let mut s = String::new();
        if let Some(mf) = manifest {
            if mf.contains('\n') {
                return Err(Error::invalid("manifest must be a single line"));
            }
            writeln!(s, "manifest {mf}").unwrap();
        }
        writeln!(
            s,
            "graph n={} m={} l={} dropped={}",
            self.n, self.m, self.class_count, self.dropped_weight
        )
        .unwrap();
        for (i, label) in self.attr_labels.iter().enumerate() {
            writeln!(s, "label {i} {label}").unwrap();
        }
        writeln!(s, "nodes k={}", self.live_count).unwrap();
        let l = self.class_count as usize;
        for (i, nd) in self.nodes.iter().enumerate() {
            if !nd.live {
                continue;
            }
            let hist: Vec<String> = self.hist[i * l..i * l + l]
                .iter()
                .map(|c| c.to_string())
                .collect();
            writeln!(
                s,
                "node {i} n={} e={} d={} hist={}",
                nd.size,
                nd.internal,
                nd.d_value,
                hist.join(",")
            )
            .unwrap();
        }
        let mut edges: Vec<(u32, u32, u64)> = Vec::with_capacity(self.superedge_count as usize);
        for (i, nd) in self.nodes.iter().enumerate() {
            if nd.live {
                for e in &self.adj[i] {
                    if (i as u32) < e.to {
                        edges.push((i as u32, e.to, e.weight));
                    }
                }
            }
        }
        edges.sort_unstable();
        writeln!(s, "edges count={}", edges.len()).unwrap();
        for (a, b, w) in edges {
            writeln!(s, "edge {a} {b} {w}").unwrap();
        }
        writeln!(s, "membership").unwrap();
        let membership = self.membership_vec();
        for (v, id) in membership.iter().enumerate() {
            writeln!(s, "v {v} {id}").unwrap();
        }
        writeln!(s, "end").unwrap();
        Ok(s)
    }

    /// Parse a summary file, verifying version and checksum. Returns the
    /// summary and the embedded manifest line, if any.
    pub fn deserialize(mut source: impl Read) -> Result<(Summary, Option<String>)> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        let mut lines = text.splitn(3, '\n');
        let header = lines.next().unwrap_or("");
        if header.trim() != "gsum-summary 1" {
            return Err(Error::format(format!("unsupported header {header:?}")));
        }
        let checksum_line = lines
            .next()
            .ok_or_else(|| Error::format("missing checksum line"))?;
        let payload = lines.next().unwrap_or("");
        let expected = checksum_line
            .strip_prefix("checksum ")
            .and_then(|h| u64::from_str_radix(h.trim(), 16).ok())
            .ok_or_else(|| Error::format("malformed checksum line"))?;
        let actual = fnv1a64(payload.as_bytes());
        if actual != expected {
            return Err(Error::format(format!(
                "checksum mismatch: file says {expected:016x}, payload hashes to {actual:016x}"
            )));
        }
        Self::parse_payload(payload)
    }

    fn parse_payload(payload: &str) -> Result<(Summary, Option<String>)> {
        let mut lines = payload.lines().enumerate().peekable();
        let bad = |line: usize, msg: &str| Error::format(format!("line {}: {msg}", line + 3));

        let mut manifest = None;
        if let Some((_, l)) = lines.peek() {
            if let Some(rest) = l.strip_prefix("manifest ") {
                manifest = Some(rest.to_string());
                lines.next();
            }
        }
        let (ln, graph_line) = lines
            .next()
            .ok_or_else(|| Error::format("missing graph line"))?;
        let (n, m, l_classes, dropped) = (|| -> Option<(u32, u64, u32, u64)> {
            let rest = graph_line.strip_prefix("graph ")?;
            let mut n: Option<u32> = None;
            let mut m: Option<u64> = None;
            let mut l: Option<u32> = None;
            let mut dropped: u64 = 0;
            for part in rest.split_whitespace() {
                let (k, v) = part.split_once('=')?;
                match k {
                    "n" => n = v.parse().ok(),
                    "m" => m = v.parse().ok(),
                    "l" => l = v.parse().ok(),
                    "dropped" => dropped = v.parse().ok()?,
                    _ => return None,
                }
            }
            Some((n?, m?, l?, dropped))
        })()
        .ok_or_else(|| bad(ln, "malformed graph line"))?;

        let mut attr_labels = Vec::with_capacity(l_classes as usize);
        for i in 0..l_classes {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::format("truncated label section"))?;
            let rest = line
                .strip_prefix(&format!("label {i} "))
                .ok_or_else(|| bad(ln, "malformed label line"))?;
            attr_labels.push(rest.to_string());
        }

        let (ln, nodes_line) = lines
            .next()
            .ok_or_else(|| Error::format("missing nodes line"))?;
        let k: u32 = nodes_line
            .strip_prefix("nodes k=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(ln, "malformed nodes line"))?;

        let mut parsed_nodes: Vec<(u32, u32, u64, f64, Vec<u32>)> = Vec::with_capacity(k as usize);
        let mut max_id = 0u32;
        for _ in 0..k {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::format("truncated node section"))?;
            let fields = (|| -> Option<(u32, u32, u64, f64, Vec<u32>)> {
                let rest = line.strip_prefix("node ")?;
                let mut it = rest.split_whitespace();
                let id: u32 = it.next()?.parse().ok()?;
                let size: u32 = it.next()?.strip_prefix("n=")?.parse().ok()?;
                let internal: u64 = it.next()?.strip_prefix("e=")?.parse().ok()?;
                let d: f64 = it.next()?.strip_prefix("d=")?.parse().ok()?;
                let hist: Vec<u32> = it
                    .next()?
                    .strip_prefix("hist=")?
                    .split(',')
                    .map(|c| c.parse().ok())
                    .collect::<Option<_>>()?;
                (hist.len() == l_classes as usize).then_some((id, size, internal, d, hist))
            })()
            .ok_or_else(|| bad(ln, "malformed node line"))?;
            max_id = max_id.max(fields.0);
            parsed_nodes.push(fields);
        }

        let (ln, edges_line) = lines
            .next()
            .ok_or_else(|| Error::format("missing edges line"))?;
        let edge_count: u64 = edges_line
            .strip_prefix("edges count=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(ln, "malformed edges line"))?;
        let mut edges = Vec::with_capacity(edge_count as usize);
        for _ in 0..edge_count {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::format("truncated edge section"))?;
            let parsed = (|| -> Option<(u32, u32, u64)> {
                let mut it = line.strip_prefix("edge ")?.split_whitespace();
                let a: u32 = it.next()?.parse().ok()?;
                let b: u32 = it.next()?.parse().ok()?;
                let w: u64 = it.next()?.parse().ok()?;
                Some((a, b, w))
            })()
            .ok_or_else(|| bad(ln, "malformed edge line"))?;
            edges.push(parsed);
        }

        let (ln, memb_line) = lines
            .next()
            .ok_or_else(|| Error::format("missing membership line"))?;
        if memb_line != "membership" {
            return Err(bad(ln, "expected membership marker"));
        }
        let mut vertex_node = vec![0u32; n as usize];
        for v in 0..n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::format("truncated membership section"))?;
            let id = line
                .strip_prefix(&format!("v {v} "))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "malformed membership line"))?;
            vertex_node[v as usize] = id;
        }
        match lines.next() {
            Some((_, "end")) => {}
            _ => return Err(Error::format("missing end marker")),
        }

        let cap = max_id as usize + 1;
        let mut nodes = vec![
            SuperNode {
                size: 0,
                internal: 0,
                d_value: 0.0,
                live: false,
                merged_into: None,
            };
            cap
        ];
        let mut hist = vec![0u32; cap * l_classes as usize];
        for (id, size, internal, d, h) in parsed_nodes {
            let i = id as usize;
            nodes[i] = SuperNode {
                size,
                internal,
                d_value: d,
                live: true,
                merged_into: None,
            };
            hist[i * l_classes as usize..(i + 1) * l_classes as usize].copy_from_slice(&h);
        }
        let mut adj: Vec<Vec<SuperEdgeEntry>> = vec![Vec::new(); cap];
        for &(a, b, w) in &edges {
            if a as usize >= cap || b as usize >= cap || !nodes[a as usize].live
                || !nodes[b as usize].live
            {
                return Err(Error::format(format!("edge ({a}, {b}) references unknown node")));
            }
            let pa = adj[a as usize].len() as u32;
            let pb = adj[b as usize].len() as u32;
            adj[a as usize].push(SuperEdgeEntry {
                to: b,
                weight: w,
                mirror: pb,
            });
            adj[b as usize].push(SuperEdgeEntry {
                to: a,
                weight: w,
                mirror: pa,
            });
        }
        let summary = Summary {
            n,
            m,
            class_count: l_classes,
            attr_labels,
            vertex_node,
            nodes,
            adj,
            hist,
            live_count: k,
            superedge_count: edge_count,
            dropped_weight: dropped,
            scratch: MergeScratch::default(),
        };
        summary
            .audit()
            .map_err(|e| Error::format(format!("inconsistent summary file: {e}")))?;
        Ok((summary, manifest))
    }
}

impl PartialEq for Summary {
    /// Content equality: same graph dimensions, live supernodes (counters
    /// and histograms, D bit-exact), superedges, and resolved membership.
    /// Merge history is provenance, not content.
    fn eq(&self, other: &Self) -> bool {
        if self.n != other.n
            || self.m != other.m
            || self.class_count != other.class_count
            || self.attr_labels != other.attr_labels
            || self.live_count != other.live_count
            || self.superedge_count != other.superedge_count
            || self.dropped_weight != other.dropped_weight
        {
            return false;
        }
        let mine: Vec<_> = self.live_ids().collect();
        let theirs: Vec<_> = other.live_ids().collect();
        if mine != theirs {
            return false;
        }
        for &id in &mine {
            let (a, b) = (self.node(id), other.node(id));
            if a.size != b.size
                || a.internal != b.internal
                || a.d_value.to_bits() != b.d_value.to_bits()
                || self.class_hist(id) != other.class_hist(id)
            {
                return false;
            }
        }
        let edge_set = |s: &Summary| {
            let mut v: Vec<(u32, u32, u64)> = Vec::new();
            for id in s.live_ids() {
                for e in s.superedges(id) {
                    if id < e.to {
                        v.push((id, e.to, e.weight));
                    }
                }
            }
            v.sort_unstable();
            v
        };
        edge_set(self) == edge_set(other) && self.membership_vec() == other.membership_vec()
    }
}

#[inline]
pub(crate) fn binom2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

fn d_from_list(list: &[SuperEdgeEntry], sizes: &[u32]) -> f64 {
    list.iter()
        .map(|e| (e.weight * e.weight) as f64 / sizes[e.to as usize] as f64)
        .sum::<f64>()
        + 0.0
}

/// Norm order for the O(n^2) reconstruction-error oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormOrder {
    One,
    Two,
}

/// Default vertex-count cap for [`reconstruction_error_exact`].
pub const DEFAULT_EXACT_RE_CAP: usize = 20_000;

/// Reconstruction error by full O(n^2) enumeration of |A - A'|^p.
/// Test oracle; refuses graphs above `DEFAULT_EXACT_RE_CAP` vertices.
pub fn reconstruction_error_exact(
    graph: &Graph,
    summary: &Summary,
    p: NormOrder,
) -> Result<f64> {
    reconstruction_error_exact_capped(graph, summary, p, DEFAULT_EXACT_RE_CAP)
}

pub fn reconstruction_error_exact_capped(
    graph: &Graph,
    summary: &Summary,
    p: NormOrder,
    cap: usize,
) -> Result<f64> {
    let n = graph.vertex_count();
    if n > cap {
        return Err(Error::invalid(format!(
            "exact RE enumeration refused: n = {n} exceeds cap {cap}"
        )));
    }
    if n as u32 != summary.vertex_count() {
        return Err(Error::invalid("summary does not partition this graph"));
    }
    let membership = summary.membership_vec();
    let mut pair_weight: std::collections::HashMap<(u32, u32), u64> =
        std::collections::HashMap::new();
    for id in summary.live_ids() {
        for e in summary.superedges(id) {
            if id < e.to {
                pair_weight.insert((id, e.to), e.weight);
            }
        }
    }
    let mut is_neighbor = vec![false; n];
    let mut total = 0.0;
    for u in 0..n {
        for e in graph.neighbors(VertexId(u as u32)) {
            is_neighbor[e.to.index()] = true;
        }
        let su = membership[u];
        let nd_u = summary.node(su);
        for v in 0..n {
            if v == u {
                continue;
            }
            let sv = membership[v];
            let predicted = if su == sv {
                if nd_u.size < 2 {
                    0.0
                } else {
                    nd_u.internal as f64 / binom2(nd_u.size as u64)
                }
            } else {
                let key = (su.min(sv), su.max(sv));
                match pair_weight.get(&key) {
                    Some(&w) => w as f64 / (nd_u.size as f64 * summary.node(sv).size as f64),
                    None => 0.0,
                }
            };
            let actual = if is_neighbor[v] { 1.0 } else { 0.0 };
            let diff = (actual - predicted).abs();
            total += match p {
                NormOrder::One => diff,
                NormOrder::Two => diff * diff,
            };
        }
        for e in graph.neighbors(VertexId(u as u32)) {
            is_neighbor[e.to.index()] = false;
        }
    }
    Ok(match p {
        NormOrder::One => total,
        NormOrder::Two => total.sqrt(),
    })
}
