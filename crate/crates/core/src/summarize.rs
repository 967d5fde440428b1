//! The agglomerative summarization loop: sample candidate pairs by node
//! weight, score them, merge the best, and keep weights and sketches
//! current. Runs until k supernodes remain, then optionally sparsifies to a
//! byte budget.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampling::SamplingTree;
use crate::score::{
    node_weight, score_combined, PairScore, PairScratch, ScoreMode, ScoreParams,
};
use crate::sketch::{SketchParams, SketchPolicy, SketchStore};
use crate::sparsify::{sparsify, RankingKey};
use crate::summary::{SuperId, Summary};

/// Candidate sample-size policy, evaluated against the current supernode
/// count n(t). Logs are natural; counts are floored and never below 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplePolicy {
    /// log n(t)
    LogN,
    /// c log n(t); the conventional setting is c = 5.
    CLogN(f64),
    /// log^2 n(t)
    Log2N,
    /// sqrt(n(t))
    SqrtN,
}

impl SamplePolicy {
    pub fn sample_count(&self, live: u64) -> usize {
        let n = (live.max(2)) as f64;
        let raw = match self {
            SamplePolicy::LogN => n.ln(),
            SamplePolicy::CLogN(c) => c * n.ln(),
            SamplePolicy::Log2N => n.ln() * n.ln(),
            SamplePolicy::SqrtN => n.sqrt(),
        };
        (raw.floor() as usize).max(1)
    }

    pub fn parse(text: &str) -> Result<SamplePolicy> {
        match text {
            "logn" => Ok(SamplePolicy::LogN),
            "5logn" => Ok(SamplePolicy::CLogN(5.0)),
            "log2n" => Ok(SamplePolicy::Log2N),
            "sqrtn" => Ok(SamplePolicy::SqrtN),
            other => Err(Error::invalid(format!(
                "unknown sample policy {other:?} (expected logn|5logn|log2n|sqrtn)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SamplePolicy::LogN => "logn".into(),
            SamplePolicy::CLogN(c) if *c == 5.0 => "5logn".into(),
            SamplePolicy::CLogN(c) => format!("{c}logn"),
            SamplePolicy::Log2N => "log2n".into(),
            SamplePolicy::SqrtN => "sqrtn".into(),
        }
    }
}

/// Full configuration of one summarization run.
#[derive(Clone, Debug)]
pub struct SummarizerConfig {
    pub k_target: u32,
    pub sample_policy: SamplePolicy,
    pub alpha: f64,
    pub mode: ScoreMode,
    pub sketch_width: usize,
    pub sketch_depth: usize,
    pub sketch_policy: SketchPolicy,
    pub seed: u64,
    /// When set, drop superedges after the merge loop until the storage
    /// cost fits this many bits.
    pub target_size_bits: Option<u64>,
    pub sparsify_ranking: RankingKey,
}

impl SummarizerConfig {
    /// Defaults matching the usual experimental setting: s = 5 log n(t),
    /// alpha = 1, sketch scoring with w = 200, d = 2, signed corrections.
    pub fn new(k_target: u32) -> SummarizerConfig {
        SummarizerConfig {
            k_target,
            sample_policy: SamplePolicy::CLogN(5.0),
            alpha: 1.0,
            mode: ScoreMode::Sketch,
            sketch_width: 200,
            sketch_depth: 2,
            sketch_policy: SketchPolicy::SignedCorrection,
            seed: 0,
            target_size_bits: None,
            sparsify_ranking: RankingKey::TrueDelta,
        }
    }
}

/// One loop iteration's record.
#[derive(Clone, Debug)]
pub struct MergeRecord {
    pub step: u32,
    pub pair: (SuperId, SuperId),
    pub score: PairScore,
    pub candidates: u32,
    pub elapsed_nanos: u64,
}

/// Per-iteration records; length is exactly n - k_target.
#[derive(Clone, Debug, Default)]
pub struct MergeTrace {
    pub records: Vec<MergeRecord>,
}

/// Draw `s` candidate pairs: each pair is two weighted draws without
/// replacement within the pair (bounded re-draws on collision); pairs may
/// repeat nodes across the batch. Falls back to uniform draws over live
/// supernodes when fewer than two have positive weight.
pub fn draw_candidates(
    tree: &SamplingTree,
    s: usize,
    rng: &mut StdRng,
) -> Vec<(SuperId, SuperId)> {
    let mut out = Vec::with_capacity(s);
    let occupied = tree.occupied_ids();
    assert!(occupied.len() >= 2, "need at least two live supernodes");
    for _ in 0..s {
        let pair = if tree.positive_count() >= 2 {
            let first = weighted_draw(tree, rng);
            let mut second = first;
            for _ in 0..32 {
                second = weighted_draw(tree, rng);
                if second != first {
                    break;
                }
            }
            if second == first {
                second = uniform_other(occupied, first, rng);
            }
            (first, second)
        } else {
            let first = occupied[rng.gen_range(0..occupied.len())];
            (first, uniform_other(occupied, first, rng))
        };
        out.push((pair.0.min(pair.1), pair.0.max(pair.1)));
    }
    out
}

fn weighted_draw(tree: &SamplingTree, rng: &mut StdRng) -> SuperId {
    let r = rng.gen::<f64>() * tree.total_weight();
    tree.sample(r).expect("positive total weight")
}

fn uniform_other(occupied: &[u32], first: SuperId, rng: &mut StdRng) -> SuperId {
    loop {
        let cand = occupied[rng.gen_range(0..occupied.len())];
        if cand != first {
            return cand;
        }
    }
}

/// Merge one pair and refresh all derived state: sketches per their policy,
/// the merged endpoints' slots freed, the new node inserted, and the
/// sampling weights of the union of former neighbors recomputed.
pub fn merge_pair(
    summary: &mut Summary,
    a: SuperId,
    b: SuperId,
    sketches: &mut Option<SketchStore>,
    tree: &mut SamplingTree,
) -> Result<SuperId> {
    let outcome = summary.merge_supernodes(a, b)?;
    let z = outcome.new_id;
    if let Some(store) = sketches {
        store.apply_merge(summary, &outcome);
    }
    tree.remove(a)?;
    tree.remove(b)?;
    tree.insert(z, node_weight(summary, z))?;
    for d in &outcome.neighbors {
        tree.update_weight(d.id, node_weight(summary, d.id))?;
    }
    Ok(z)
}

/// Run the full agglomerative loop. Deterministic for a fixed
/// (graph, config, seed); returns the summary and the per-iteration trace.
pub fn summarize(graph: &Graph, config: &SummarizerConfig) -> Result<(Summary, MergeTrace)> {
    let n = graph.vertex_count() as u32;
    if config.k_target == 0 || config.k_target > n {
        return Err(Error::invalid(format!(
            "k_target must be in [1, n = {n}], got {}",
            config.k_target
        )));
    }
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(Error::invalid("alpha must be in [0, 1]"));
    }
    let mut summary = Summary::initial(graph);
    let mut trace = MergeTrace::default();
    let mut rng = StdRng::seed_from_u64(config.seed);

    if config.k_target < n {
        let weights: Vec<(u32, f64)> = summary
            .live_ids()
            .map(|id| (id, node_weight(&summary, id)))
            .collect();
        let mut tree = SamplingTree::build(&weights)?;
        let mut sketches = match config.mode {
            ScoreMode::Sketch => {
                let params =
                    SketchParams::new(config.sketch_width, config.sketch_depth, config.seed);
                Some(SketchStore::build(&summary, params, config.sketch_policy))
            }
            ScoreMode::Exact => None,
        };
        let score_params = ScoreParams {
            alpha: config.alpha,
            mode: config.mode,
        };
        let mut scratch = PairScratch::new();

        let merges = n - config.k_target;
        for step in 0..merges {
            let started = Instant::now();
            let live = n as u64 - step as u64;
            let s = config.sample_policy.sample_count(live);
            let candidates = draw_candidates(&tree, s, &mut rng);
            let mut best: Option<PairScore> = None;
            for &(a, b) in &candidates {
                let scored =
                    score_combined(&summary, a, b, &score_params, sketches.as_ref(), &mut scratch);
                let better = match &best {
                    None => true,
                    Some(cur) => {
                        scored.combined > cur.combined
                            || (scored.combined == cur.combined && scored.pair < cur.pair)
                    }
                };
                if better {
                    best = Some(scored);
                }
            }
            let best = best.expect("at least one candidate");
            let (a, b) = best.pair;
            merge_pair(&mut summary, a, b, &mut sketches, &mut tree)?;
            trace.records.push(MergeRecord {
                step,
                pair: (a, b),
                score: best,
                candidates: candidates.len() as u32,
                elapsed_nanos: started.elapsed().as_nanos() as u64,
            });
        }
    }

    if let Some(target) = config.target_size_bits {
        sparsify(&mut summary, target, config.sparsify_ranking)?;
    }
    summary.compress_membership();
    Ok((summary, trace))
}
