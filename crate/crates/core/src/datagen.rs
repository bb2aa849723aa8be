//! Synthetic targeting instances.
//!
//! Customers live in the leaves of a geographic tree (state → zip3 → zip4 → zip5,
//! truncated to the requested zip depth). Profits follow a sparse-response mixture:
//! most customers cost a little to contact, a few respond with a large profit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ConstraintMenu, ExtReal, SimilarityOneRule, SimilarityPair, SimilarityTwo, TargetingInstance,
    VolumeOneBound, VolumeTwo,
};

const LEVEL_NAMES: [&str; 4] = ["state", "zip3", "zip4", "zip5"];
const MAX_ASSIGNMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_customers: usize,
    pub n_actions: usize,
    /// 3, 4 or 5 digits; the tree has `zip_depth − 1` levels below the root.
    pub zip_depth: u8,
    /// Children per node, deepest levels last. Shorter lists are padded with 1 at the top.
    pub branching: Vec<usize>,
    pub response_rate: f64,
    pub profit_mean_hit: f64,
    pub profit_mean_miss: f64,
    /// Added to every profit of action `j`; empty means no shift.
    pub action_shift: Vec<f64>,
    pub max_actions: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_customers: 1000,
            n_actions: 5,
            zip_depth: 3,
            branching: vec![2, 5],
            response_rate: 0.03,
            profit_mean_hit: 40.0,
            profit_mean_miss: -0.6,
            action_shift: Vec::new(),
            max_actions: 1.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_customers == 0 || self.n_actions == 0 {
            return bad("need at least one customer and one action".into());
        }
        if !(3..=5).contains(&self.zip_depth) {
            return bad(format!("zip depth must be 3, 4 or 5, got {}", self.zip_depth));
        }
        let levels = self.zip_depth as usize - 1;
        if self.branching.len() > levels {
            return bad(format!(
                "zip depth {} has {levels} levels but {} branching factors were given",
                self.zip_depth,
                self.branching.len()
            ));
        }
        if self.branching.contains(&0) {
            return bad("branching factors must be positive".into());
        }
        let leaves = self.n_segments();
        if leaves > self.n_customers {
            return bad(format!("{leaves} segments cannot all be filled by {} customers", self.n_customers));
        }
        if !(0.0..1.0).contains(&self.response_rate) {
            return bad(format!("response rate {} outside [0, 1)", self.response_rate));
        }
        if !(self.profit_mean_hit.is_finite() && self.profit_mean_miss.is_finite()) {
            return bad("profit means must be finite".into());
        }
        if !self.action_shift.is_empty() && self.action_shift.len() != self.n_actions {
            return bad(format!("action_shift needs {} entries", self.n_actions));
        }
        if self.action_shift.iter().any(|s| !s.is_finite()) {
            return bad("action_shift must be finite".into());
        }
        if !(self.max_actions > 0.0 && self.max_actions <= self.n_actions as f64) {
            return bad(format!("max_actions {} outside (0, {}]", self.max_actions, self.n_actions));
        }
        Ok(())
    }

    pub fn n_segments(&self) -> usize {
        self.branching.iter().product()
    }
}

/// A leaf of the segment tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentNode {
    pub segment: usize,
    /// Child index at each level, root first.
    pub path: Vec<usize>,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentHierarchy {
    pub levels: Vec<String>,
    pub branching: Vec<usize>,
    pub leaves: Vec<SegmentNode>,
}

impl SegmentHierarchy {
    pub fn new(zip_depth: u8, branching: &[usize]) -> Result<Self> {
        if !(3..=5).contains(&zip_depth) {
            return Err(Error::InvalidArgument(format!("zip depth must be 3, 4 or 5, got {zip_depth}")));
        }
        let n_levels = zip_depth as usize - 1;
        if branching.len() > n_levels || branching.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "branching {branching:?} does not fit {n_levels} levels"
            )));
        }
        let mut padded = vec![1; n_levels - branching.len()];
        padded.extend_from_slice(branching);

        let mut leaves = Vec::new();
        let mut path = vec![0; n_levels];
        loop {
            let code = path.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
            leaves.push(SegmentNode {
                segment: leaves.len(),
                path: path.clone(),
                code,
            });
            // Odometer increment, last level fastest.
            let mut level = n_levels;
            loop {
                if level == 0 {
                    return Ok(Self {
                        levels: LEVEL_NAMES[..n_levels].iter().map(|s| s.to_string()).collect(),
                        branching: padded,
                        leaves,
                    });
                }
                level -= 1;
                path[level] += 1;
                if path[level] < padded[level] {
                    break;
                }
                path[level] = 0;
            }
        }
    }

    pub fn from_config(config: &GenConfig) -> Result<Self> {
        Self::new(config.zip_depth, &config.branching)
    }

    pub fn n_segments(&self) -> usize {
        self.leaves.len()
    }

    /// Number of leading levels two leaves share.
    pub fn shared_levels(&self, a: usize, b: usize) -> usize {
        let (pa, pb) = (&self.leaves[a].path, &self.leaves[b].path);
        pa.iter().zip(pb).take_while(|(x, y)| x == y).count()
    }

    /// Deepest level two distinct leaves have in common, if any.
    pub fn shared_level(&self, a: usize, b: usize) -> Option<&str> {
        match self.shared_levels(a, b) {
            0 => None,
            n => Some(self.levels[n - 1].as_str()),
        }
    }

    /// Allowed ratio between per-capita rates of two segments: looser the farther apart.
    pub fn similarity_ratio(&self, a: usize, b: usize) -> f64 {
        match self.shared_level(a, b) {
            Some("zip5") | Some("zip4") => 1.1,
            Some("zip3") => 1.2,
            Some(_) => 1.3,
            None => 1.4,
        }
    }
}

/// Draws a seeded instance. Customers are spread uniformly over leaf segments, redrawing
/// until every segment is populated.
pub fn generate_instance(config: &GenConfig) -> Result<TargetingInstance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k_count = config.n_segments();
    let mut segments = Vec::new();
    for attempt in 0.. {
        if attempt == MAX_ASSIGNMENT_ATTEMPTS {
            return Err(Error::InvalidArgument(format!(
                "could not populate all {k_count} segments in {MAX_ASSIGNMENT_ATTEMPTS} draws"
            )));
        }
        segments = (0..config.n_customers).map(|_| rng.gen_range(0..k_count)).collect();
        let mut seen = vec![false; k_count];
        for &k in &segments {
            seen[k] = true;
        }
        if seen.iter().all(|s| *s) {
            break;
        }
    }
    let profits = (0..config.n_customers)
        .map(|_| {
            (0..config.n_actions)
                .map(|j| {
                    let scale: f64 = rng.sample(Exp1);
                    let base = if rng.gen::<f64>() < config.response_rate {
                        config.profit_mean_hit * scale
                    } else {
                        config.profit_mean_miss * scale
                    };
                    base + config.action_shift.get(j).copied().unwrap_or(0.0)
                })
                .collect()
        })
        .collect();
    let mut instance = TargetingInstance::new(profits, segments, vec![config.max_actions; config.n_customers])?;
    instance.n_constraint_segments = Some(k_count);
    instance.n_action_segments = Some(k_count);
    Ok(instance)
}

const VOLUME_LOWER: [f64; 5] = [0.3, 0.05, 0.05, 0.3, 0.05];
const VOLUME_UPPER: [f64; 5] = [0.35, 0.1, 0.1, 0.35, 0.1];
const OUTCOME_WEIGHTS: [f64; 5] = [0.3, 0.3, 0.2, 0.1, 0.1];

/// Cycles a five-action pattern over `j_count` actions and rescales it to keep the
/// five-action total. Five actions reproduce the pattern exactly.
fn cycled(pattern: &[f64; 5], j_count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..j_count).map(|j| pattern[j % 5]).collect();
    if j_count == 5 {
        return raw;
    }
    let target: f64 = pattern.iter().sum();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v * target / sum).collect()
}

/// Volume I rate bounds per action as fractions of segment size.
pub fn volume_fractions(j_count: usize) -> (Vec<f64>, Vec<f64>) {
    (cycled(&VOLUME_LOWER, j_count), cycled(&VOLUME_UPPER, j_count))
}

/// Default menu over a generated instance: Volume I bands per action, at least 70% of each
/// segment contacted, distance-graded similarity ratios over unordered pairs, one action per
/// customer.
pub fn default_constraint_menu(instance: &TargetingInstance, hierarchy: &SegmentHierarchy) -> Result<ConstraintMenu> {
    let k_count = instance.n_constraint_segments();
    if hierarchy.n_segments() != k_count {
        return Err(Error::InvalidMenu(format!(
            "hierarchy has {} leaves but the instance has {k_count} segments",
            hierarchy.n_segments()
        )));
    }
    let j_count = instance.n_actions;
    let sizes = instance.segment_sizes();
    let (lower, upper) = volume_fractions(j_count);
    let volume1 = (0..k_count)
        .flat_map(|k| {
            let n = sizes[k] as f64;
            let (lower, upper) = (&lower, &upper);
            (0..j_count).map(move |j| VolumeOneBound {
                segment: k,
                action: j,
                lower: lower[j] * n,
                upper: upper[j] * n,
            })
        })
        .collect();
    let volume2 = VolumeTwo {
        lower: sizes.iter().map(|&n| ExtReal(0.7 * n as f64)).collect(),
        upper: vec![ExtReal::INFINITY; k_count],
        weights: vec![vec![1.0; j_count]; instance.n_customers],
    };
    let pairs: Vec<(usize, usize, f64)> = (0..k_count)
        .flat_map(|a| (a + 1..k_count).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, hierarchy.similarity_ratio(a, b)))
        .collect();
    let similarity1 = pairs
        .iter()
        .flat_map(|&(a, b, ratio)| {
            (0..j_count).map(move |j| SimilarityOneRule {
                action: j,
                first: a,
                second: b,
                ratio,
                offset: 0.0,
            })
        })
        .collect();
    let outcome = cycled(&OUTCOME_WEIGHTS, j_count);
    let similarity2 = SimilarityTwo {
        pairs: pairs
            .iter()
            .map(|&(first, second, ratio)| SimilarityPair {
                first,
                second,
                ratio,
                offset: 0.0,
            })
            .collect(),
        weights: vec![outcome; instance.n_customers],
    };
    Ok(ConstraintMenu {
        volume1: Some(volume1),
        volume2: Some(volume2),
        similarity1: Some(similarity1),
        similarity2: Some(similarity2),
        targeting_enabled: true,
    })
}
