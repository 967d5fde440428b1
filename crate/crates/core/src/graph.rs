//! Input graph representation: an immutable, undirected, attributed graph
//! whose adjacency entries carry cross-links (the position of the mirror
//! entry in the neighbor's list) so that later contraction work can update
//! both sides of an edge in constant time.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Dense vertex index in `[0, n)`, assigned in first-appearance order during
/// ingestion. The original textual labels are retained in the [`Graph`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One adjacency slot: the neighbor plus the position of the mirror entry in
/// the neighbor's own list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdjEntry {
    pub to: VertexId,
    pub mirror: u32,
}

/// Per-vertex nominal attribute assignment over `l >= 1` distinct labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeTable {
    values: Vec<u32>,
    labels: Vec<String>,
}

impl AttributeTable {
    /// Single-class table mapping every vertex to "unknown". Used when no
    /// attribute file is supplied, so structure-only datasets run with l=1.
    pub fn uniform_unknown(n: usize) -> Self {
        AttributeTable {
            values: vec![0; n],
            labels: vec!["unknown".to_string()],
        }
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn value(&self, v: VertexId) -> u32 {
        self.values[v.index()]
    }

    pub fn label(&self, class: u32) -> &str {
        &self.labels[class as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Immutable undirected attributed graph. No self-loops, no parallel edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<AdjEntry>>,
    vertex_labels: Vec<String>,
    label_to_id: HashMap<String, u32>,
    m: usize,
    attributes: AttributeTable,
}

impl Graph {
    /// Build a graph from an edge iterator over dense `u32` endpoints.
    /// Self-loops are dropped (the endpoint still becomes a vertex) and
    /// duplicate edges are kept once. Vertex count is `max endpoint + 1`.
    pub fn from_edges(edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Graph> {
        Self::from_edges_with_vertices(0, edges)
    }

    /// Like [`from_edges`](Self::from_edges) but guarantees at least
    /// `vertices` vertices even when the trailing ones are isolated.
    pub fn from_edges_with_vertices(
        vertices: u32,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Graph> {
        let mut n = vertices as usize;
        let mut unique: Vec<(u32, u32)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (a, b) in edges {
            n = n.max(a as usize + 1).max(b as usize + 1);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                unique.push(key);
            }
        }
        if n == 0 {
            return Err(Error::invalid("empty graph"));
        }
        let vertex_labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        Ok(Self::assemble(vertex_labels, unique))
    }

    fn assemble(vertex_labels: Vec<String>, edges: Vec<(u32, u32)>) -> Graph {
        let n = vertex_labels.len();
        let mut adj: Vec<Vec<AdjEntry>> = vec![Vec::new(); n];
        for &(u, v) in &edges {
            let pu = adj[u as usize].len() as u32;
            let pv = adj[v as usize].len() as u32;
            adj[u as usize].push(AdjEntry {
                to: VertexId(v),
                mirror: pv,
            });
            adj[v as usize].push(AdjEntry {
                to: VertexId(u),
                mirror: pu,
            });
        }
        let label_to_id = vertex_labels
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Graph {
            adj,
            m: edges.len(),
            attributes: AttributeTable::uniform_unknown(n),
            vertex_labels,
            label_to_id,
        }
    }

    /// Parse a whitespace-separated edge list. Lines starting with `#` are
    /// comments. Directed input is symmetrized; self-loops and duplicate
    /// edges are dropped. Labels are arbitrary whitespace-free strings and
    /// are densely remapped in first-appearance order.
    pub fn load_edge_list(source: impl Read) -> Result<Graph> {
        let reader = BufReader::new(source);
        let mut label_to_id: HashMap<String, u32> = HashMap::new();
        let mut vertex_labels: Vec<String> = Vec::new();
        let intern = |tok: &str, labels: &mut Vec<String>, map: &mut HashMap<String, u32>| {
            if let Some(&id) = map.get(tok) {
                id
            } else {
                let id = labels.len() as u32;
                labels.push(tok.to_string());
                map.insert(tok.to_string(), id);
                id
            }
        };
        let mut seen = std::collections::HashSet::new();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let (a, b) = match (toks.next(), toks.next(), toks.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!("expected two whitespace-separated labels, got {line:?}"),
                    ))
                }
            };
            let ua = intern(a, &mut vertex_labels, &mut label_to_id);
            let ub = intern(b, &mut vertex_labels, &mut label_to_id);
            if ua == ub {
                continue;
            }
            let key = (ua.min(ub), ua.max(ub));
            if seen.insert(key) {
                edges.push(key);
            }
        }
        if vertex_labels.is_empty() {
            return Err(Error::invalid("empty graph: no vertices in edge list"));
        }
        Ok(Self::assemble(vertex_labels, edges))
    }

    /// Attach a nominal attribute from TSV lines of `vertex-label <TAB>
    /// attribute-string`. Unlisted vertices fall into a reserved "unknown"
    /// class; conflicting duplicate assignments are an error.
    pub fn load_attributes(&mut self, source: impl Read) -> Result<()> {
        let reader = BufReader::new(source);
        let mut labels: Vec<String> = Vec::new();
        let mut label_index: HashMap<String, u32> = HashMap::new();
        let mut values: Vec<Option<u32>> = vec![None; self.vertex_count()];
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (vtok, atok) = match trimmed.split_once('\t') {
                Some((v, a)) if !v.trim().is_empty() && !a.trim().is_empty() => {
                    (v.trim(), a.trim())
                }
                _ => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!("expected 'vertex<TAB>attribute', got {trimmed:?}"),
                    ))
                }
            };
            let vid = *self.label_to_id.get(vtok).ok_or_else(|| {
                Error::parse(lineno + 1, format!("unknown vertex label {vtok:?}"))
            })?;
            let class = if let Some(&c) = label_index.get(atok) {
                c
            } else {
                let c = labels.len() as u32;
                labels.push(atok.to_string());
                label_index.insert(atok.to_string(), c);
                c
            };
            match values[vid as usize] {
                None => values[vid as usize] = Some(class),
                Some(prev) if prev == class => {}
                Some(prev) => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!(
                            "conflicting attribute for vertex {vtok:?}: {:?} vs {:?}",
                            labels[prev as usize], atok
                        ),
                    ))
                }
            }
        }
        if values.iter().any(Option::is_none) {
            let unknown = if let Some(&c) = label_index.get("unknown") {
                c
            } else {
                let c = labels.len() as u32;
                labels.push("unknown".to_string());
                c
            };
            for v in values.iter_mut() {
                v.get_or_insert(unknown);
            }
        }
        if labels.is_empty() {
            return Err(Error::invalid("attribute file assigns no values"));
        }
        self.attributes = AttributeTable {
            values: values.into_iter().map(Option::unwrap).collect(),
            labels,
        };
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v.index()].len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[AdjEntry] {
        &self.adj[v.index()]
    }

    pub fn attributes(&self) -> &AttributeTable {
        &self.attributes
    }

    pub fn vertex_label(&self, v: VertexId) -> &str {
        &self.vertex_labels[v.index()]
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<VertexId> {
        self.label_to_id.get(label).map(|&id| VertexId(id))
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Exact triangle count. Each edge is oriented from the lower-rank
    /// endpoint (by degree, then id) and sorted forward lists are
    /// intersected, so the cost is O(m^1.5) rather than O(n^3).
    pub fn count_triangles(&self) -> u64 {
        let n = self.vertex_count();
        let rank = |v: usize| (self.adj[v].len(), v);
        let mut fwd: Vec<Vec<u32>> = vec![Vec::new(); n];
        for u in 0..n {
            for e in &self.adj[u] {
                let v = e.to.index();
                if rank(u) < rank(v) {
                    fwd[u].push(v as u32);
                }
            }
            fwd[u].sort_unstable();
        }
        let mut count = 0u64;
        for u in 0..n {
            for &v in &fwd[u] {
                let (mut i, mut j) = (0, 0);
                let (a, b) = (&fwd[u], &fwd[v as usize]);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            count += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
        }
        count
    }

    /// Canonical edge-list emission. Every vertex is written first as a
    /// self-loop line (which the loader drops while still interning the
    /// label), then edges sorted by dense ids. Reloading the output
    /// reproduces this graph exactly, including the label remap.
    pub fn write_edge_list(&self, mut sink: impl Write) -> Result<()> {
        writeln!(sink, "# canonical edge list: vertices, then edges")?;
        for label in &self.vertex_labels {
            writeln!(sink, "{label} {label}")?;
        }
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(self.m);
        for (u, list) in self.adj.iter().enumerate() {
            for e in list {
                if (u as u32) < e.to.0 {
                    edges.push((u as u32, e.to.0));
                }
            }
        }
        edges.sort_unstable();
        for (u, v) in edges {
            writeln!(
                sink,
                "{} {}",
                self.vertex_labels[u as usize], self.vertex_labels[v as usize]
            )?;
        }
        Ok(())
    }

    /// Canonical attribute emission: one TSV row per vertex in id order.
    pub fn write_attributes(&self, mut sink: impl Write) -> Result<()> {
        for (v, label) in self.vertex_labels.iter().enumerate() {
            let class = self.attributes.values[v];
            writeln!(sink, "{label}\t{}", self.attributes.labels[class as usize])?;
        }
        Ok(())
    }
}
