//! Inline grid syntax for eval sweeps: whitespace-separated `key=v1,v2,...`
//! dimensions expanded as a cartesian product. Keys: k, s, alpha, mode, w,
//! d, target-bytes.

use gsum_core::score::ScoreMode;
use gsum_core::summarize::{SamplePolicy, SummarizerConfig};
use gsum_core::{Error, Result};

pub fn parse_grid(spec: &str, base_seed: u64) -> Result<Vec<SummarizerConfig>> {
    let mut ks: Vec<u32> = vec![];
    let mut policies: Vec<SamplePolicy> = vec![];
    let mut alphas: Vec<f64> = vec![];
    let mut modes: Vec<ScoreMode> = vec![];
    let mut widths: Vec<usize> = vec![];
    let mut depths: Vec<usize> = vec![];
    let mut targets: Vec<Option<u64>> = vec![];

    for dim in spec.split_whitespace() {
        let (key, values) = dim
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("grid dimension {dim:?} is not key=values")))?;
        let values: Vec<&str> = values.split(',').collect();
        match key {
            "k" => ks = parse_all(key, &values)?,
            "s" => {
                policies = values
                    .iter()
                    .map(|v| SamplePolicy::parse(v))
                    .collect::<Result<_>>()?
            }
            "alpha" => alphas = parse_all(key, &values)?,
            "mode" => {
                modes = values
                    .iter()
                    .map(|v| match *v {
                        "exact" => Ok(ScoreMode::Exact),
                        "sketch" => Ok(ScoreMode::Sketch),
                        other => Err(Error::invalid(format!("unknown mode {other:?}"))),
                    })
                    .collect::<Result<_>>()?
            }
            "w" => widths = parse_all(key, &values)?,
            "d" => depths = parse_all(key, &values)?,
            "target-bytes" => {
                targets = parse_all::<u64>(key, &values)?
                    .into_iter()
                    .map(Some)
                    .collect()
            }
            other => return Err(Error::invalid(format!("unknown grid key {other:?}"))),
        }
    }
    if ks.is_empty() {
        return Err(Error::invalid("grid needs at least k=..."));
    }
    fn one<T>(def: T) -> Vec<T> {
        vec![def]
    }
    let policies = if policies.is_empty() {
        one(SamplePolicy::CLogN(5.0))
    } else {
        policies
    };
    let alphas = if alphas.is_empty() { one(1.0) } else { alphas };
    let modes = if modes.is_empty() {
        one(ScoreMode::Sketch)
    } else {
        modes
    };
    let widths = if widths.is_empty() { one(200) } else { widths };
    let depths = if depths.is_empty() { one(2) } else { depths };
    let targets = if targets.is_empty() { one(None) } else { targets };

    let mut out = Vec::new();
    for &k in &ks {
        for &policy in &policies {
            for &alpha in &alphas {
                for &mode in &modes {
                    for &w in &widths {
                        for &d in &depths {
                            for &target in &targets {
                                let mut c = SummarizerConfig::new(k);
                                c.sample_policy = policy;
                                c.alpha = alpha;
                                c.mode = mode;
                                c.sketch_width = w;
                                c.sketch_depth = d;
                                c.target_size_bits = target.map(|b| b * 8);
                                c.seed = base_seed;
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn parse_all<T: std::str::FromStr>(key: &str, values: &[&str]) -> Result<Vec<T>> {
    values
        .iter()
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::invalid(format!("bad value {v:?} for grid key {key}")))
        })
        .collect()
}
