//! Weighted random sampling of supernodes: a complete binary tree over leaf
//! weights where each internal node stores its subtree sum, giving O(log n)
//! sample, update, insert, and delete.
//!
//! The tree is laid out as an implicit array in heap order; leaf slots are
//! fixed at construction and recycled through a free list (a merge frees two
//! slots and fills one).

use crate::error::{Error, Result};

const EMPTY: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct SamplingTree {
    /// First leaf index; power of two, so height = log2(leaf_base).
    leaf_base: usize,
    /// 1-indexed heap of weights; internal nodes hold child sums.
    tree: Vec<f64>,
    /// Leaf slot -> owning id, EMPTY when free.
    slot_id: Vec<u32>,
    /// Id -> leaf slot, EMPTY when absent; grows as ids grow.
    slot_of: Vec<u32>,
    /// Recycled slots, most recently freed first.
    free: Vec<u32>,
    /// Occupied ids, unordered, with per-id positions for O(1) removal.
    occupied: Vec<u32>,
    occupied_pos: Vec<u32>,
    positive: usize,
    updates_since_rebuild: usize,
    slot_count: usize,
}

impl SamplingTree {
    /// Populate a tree with `(id, weight)` leaves in O(n).
    pub fn build(items: &[(u32, f64)]) -> Result<SamplingTree> {
        if items.is_empty() {
            return Err(Error::invalid("sampling tree needs at least one leaf"));
        }
        let slot_count = items.len();
        let leaf_base = slot_count.next_power_of_two();
        let mut tree = vec![0.0; 2 * leaf_base];
        let mut slot_id = vec![EMPTY; leaf_base];
        let max_id = items.iter().map(|&(id, _)| id).max().unwrap() as usize;
        let mut slot_of = vec![EMPTY; max_id + 1];
        let mut occupied = Vec::with_capacity(slot_count);
        let mut occupied_pos = vec![EMPTY; max_id + 1];
        let mut positive = 0;
        for (slot, &(id, w)) in items.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::invalid(format!("weight of {id} must be finite and >= 0")));
            }
            if slot_of[id as usize] != EMPTY {
                return Err(Error::invalid(format!("duplicate id {id}")));
            }
            tree[leaf_base + slot] = w;
            slot_id[slot] = id;
            slot_of[id as usize] = slot as u32;
            occupied_pos[id as usize] = occupied.len() as u32;
            occupied.push(id);
            if w > 0.0 {
                positive += 1;
            }
        }
        for i in (1..leaf_base).rev() {
            tree[i] = tree[2 * i] + tree[2 * i + 1];
        }
        Ok(SamplingTree {
            leaf_base,
            tree,
            slot_id,
            slot_of,
            free: Vec::new(),
            occupied,
            occupied_pos,
            positive,
            updates_since_rebuild: 0,
            slot_count,
        })
    }

    /// Total weight at the root.
    pub fn total_weight(&self) -> f64 {
        self.tree[1]
    }

    /// Leaves with weight > 0.
    pub fn positive_count(&self) -> usize {
        self.positive
    }

    /// Ids currently holding a slot, in no particular order.
    pub fn occupied_ids(&self) -> &[u32] {
        &self.occupied
    }

    pub fn height(&self) -> u32 {
        self.leaf_base.trailing_zeros()
    }

    pub fn weight_of(&self, id: u32) -> Option<f64> {
        let slot = *self.slot_of.get(id as usize)?;
        (slot != EMPTY).then(|| self.tree[self.leaf_base + slot as usize])
    }

    /// Sample the leaf owning position `r` in the cumulative weight order:
    /// descend left when r < left-subtree weight, else go right carrying
    /// r - leftWeight. Returns the owning id; `None` when no positive
    /// weight exists. Zero-weight leaves are never returned.
    pub fn sample(&self, r: f64) -> Option<u32> {
        self.sample_traced(r).map(|(id, _)| id)
    }

    /// Like [`sample`](Self::sample) but also reports how many tree nodes
    /// were visited (root and leaf included).
    pub fn sample_traced(&self, r: f64) -> Option<(u32, u32)> {
        if !(self.tree[1] > 0.0) || !r.is_finite() || r < 0.0 {
            return None;
        }
        let mut idx = 1usize;
        let mut r = r;
        let mut visits = 1u32;
        while idx < self.leaf_base {
            let left = 2 * idx;
            let lw = self.tree[left];
            let rw = self.tree[left + 1];
            // r < lw implies lw > 0 since r >= 0. The guards only trigger
            // when float drift pushes r past an exhausted side.
            if r < lw {
                idx = left;
            } else if rw > 0.0 {
                r -= lw;
                if r >= rw {
                    r = rw * (1.0 - f64::EPSILON);
                }
                idx = left + 1;
            } else {
                // Right side empty: clamp into the left subtree.
                r = lw * (1.0 - f64::EPSILON);
                idx = left;
            }
            visits += 1;
        }
        let slot = idx - self.leaf_base;
        debug_assert!(self.tree[idx] > 0.0);
        debug_assert_ne!(self.slot_id[slot], EMPTY);
        Some((self.slot_id[slot], visits))
    }

    /// Replace the weight of `id`, adjusting ancestor sums along the root
    /// path only. Setting 0 removes the leaf from the sampleable set
    /// without freeing its slot.
    pub fn update_weight(&mut self, id: u32, w: f64) -> Result<()> {
        self.update_weight_traced(id, w).map(|_| ())
    }

    /// Weight update that reports the number of touched tree nodes.
    pub fn update_weight_traced(&mut self, id: u32, w: f64) -> Result<u32> {
        if w < 0.0 || !w.is_finite() {
            return Err(Error::invalid("weight must be finite and >= 0"));
        }
        let slot = self
            .slot_of
            .get(id as usize)
            .copied()
            .filter(|&s| s != EMPTY)
            .ok_or_else(|| Error::invalid(format!("id {id} has no leaf")))? as usize;
        let mut idx = self.leaf_base + slot;
        let old = self.tree[idx];
        if old > 0.0 && w == 0.0 {
            self.positive -= 1;
        } else if old == 0.0 && w > 0.0 {
            self.positive += 1;
        }
        self.tree[idx] = w;
        let mut visits = 1u32;
        while idx > 1 {
            idx /= 2;
            self.tree[idx] = self.tree[2 * idx] + self.tree[2 * idx + 1];
            visits += 1;
        }
        self.updates_since_rebuild += 1;
        if self.updates_since_rebuild >= self.slot_count {
            self.rebuild();
        }
        Ok(visits)
    }

    /// Occupy a free slot for a new id. A merge frees two slots before
    /// inserting one, so in the summarization loop a slot always exists.
    pub fn insert(&mut self, id: u32, w: f64) -> Result<u32> {
        if w < 0.0 || !w.is_finite() {
            return Err(Error::invalid("weight must be finite and >= 0"));
        }
        if id as usize >= self.slot_of.len() {
            self.slot_of.resize(id as usize + 1, EMPTY);
            self.occupied_pos.resize(id as usize + 1, EMPTY);
        }
        if self.slot_of[id as usize] != EMPTY {
            return Err(Error::invalid(format!("id {id} already present")));
        }
        let slot = self
            .free
            .pop()
            .ok_or_else(|| Error::invalid("no free slot"))?;
        self.slot_id[slot as usize] = id;
        self.slot_of[id as usize] = slot;
        self.occupied_pos[id as usize] = self.occupied.len() as u32;
        self.occupied.push(id);
        self.update_weight(id, w)?;
        Ok(slot)
    }

    /// Zero the leaf of `id` and recycle its slot.
    pub fn remove(&mut self, id: u32) -> Result<()> {
        self.update_weight(id, 0.0)?;
        let slot = self.slot_of[id as usize];
        self.slot_id[slot as usize] = EMPTY;
        self.slot_of[id as usize] = EMPTY;
        self.free.push(slot);
        let pos = self.occupied_pos[id as usize] as usize;
        self.occupied.swap_remove(pos);
        if pos < self.occupied.len() {
            self.occupied_pos[self.occupied[pos] as usize] = pos as u32;
        }
        self.occupied_pos[id as usize] = EMPTY;
        Ok(())
    }

    /// Recompute every internal sum from the leaves, bounding float drift.
    pub fn rebuild(&mut self) {
        for i in (1..self.leaf_base).rev() {
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1];
        }
        self.updates_since_rebuild = 0;
    }

    /// Verify internal sums (1e-9 relative) and bookkeeping consistency.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for i in 1..self.leaf_base {
            let sum = self.tree[2 * i] + self.tree[2 * i + 1];
            let tol = 1e-9 * sum.abs().max(1.0);
            if (self.tree[i] - sum).abs() > tol {
                return Err(format!(
                    "internal node {i} stores {} but children sum to {sum}",
                    self.tree[i]
                ));
            }
        }
        let positive = (0..self.slot_id.len())
            .filter(|&s| self.slot_id[s] != EMPTY && self.tree[self.leaf_base + s] > 0.0)
            .count();
        if positive != self.positive {
            return Err(format!(
                "positive count {} but {positive} positive leaves",
                self.positive
            ));
        }
        for (pos, &id) in self.occupied.iter().enumerate() {
            if self.occupied_pos[id as usize] as usize != pos {
                return Err(format!("occupied position map broken for id {id}"));
            }
            if self.slot_of[id as usize] == EMPTY {
                return Err(format!("occupied id {id} has no slot"));
            }
        }
        Ok(())
    }
}
