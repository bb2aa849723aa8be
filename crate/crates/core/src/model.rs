//! Targeting problems and their compilation to [`StandardLp`].
//!
//! Three formulations are supported:
//!
//! * individual personalization (`compile_ipwc`): one variable per customer and action;
//! * segment personalization (`compile_spwc`): customers of an action-segment share
//!   their variables;
//! * interdependent actions (`compile_interdependent`): single-action and pair-of-action
//!   variables tied to per-action auxiliaries.
//!
//! Rows are emitted in a fixed order: Volume I, Volume II, Similarity I, Similarity II,
//! Targeting, then (interdependent only) the auxiliary equalities. Every two-sided
//! constraint becomes two `≤` rows, upper side first; infinite sides emit nothing.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{ColumnLabel, RowFamily, StandardLp};
use crate::sparse::CsrBuilder;

/// A real number that may be ±∞. Infinite values travel through JSON as `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtReal(pub f64);

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const NEG_INFINITY: ExtReal = ExtReal(f64::NEG_INFINITY);

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal(v)
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" | "infinity" => Ok(ExtReal::INFINITY),
                "-inf" | "-infinity" => Ok(ExtReal::NEG_INFINITY),
                other => Err(de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
            },
        }
    }
}

/// Customers, actions, incremental profits and segment memberships.
///
/// Segment indices are zero-based. `constraint_segment` is the segmentation used by
/// volume and similarity constraints; `action_segment` groups customers that share
/// decisions under segment personalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetingInstance {
    pub n_customers: usize,
    pub n_actions: usize,
    /// `profits[i][j]`: incremental profit of action `j` on customer `i`.
    pub profits: Vec<Vec<f64>>,
    pub constraint_segment: Vec<usize>,
    pub action_segment: Vec<usize>,
    /// Per-customer cap on the number of actions, in `(0, n_actions]`.
    pub max_actions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_constraint_segments: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_action_segments: Option<usize>,
}

impl TargetingInstance {
    /// Instance where action segments coincide with constraint segments.
    pub fn new(profits: Vec<Vec<f64>>, constraint_segment: Vec<usize>, max_actions: Vec<f64>) -> Result<Self> {
        let n_customers = profits.len();
        let n_actions = profits.first().map_or(0, Vec::len);
        let instance = Self {
            n_customers,
            n_actions,
            profits,
            action_segment: constraint_segment.clone(),
            constraint_segment,
            max_actions,
            n_constraint_segments: None,
            n_action_segments: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if self.n_actions == 0 {
            return bad("at least one action is required".into());
        }
        if self.profits.len() != self.n_customers
            || self.constraint_segment.len() != self.n_customers
            || self.action_segment.len() != self.n_customers
            || self.max_actions.len() != self.n_customers
        {
            return bad(format!("per-customer arrays must all have length {}", self.n_customers));
        }
        for (i, row) in self.profits.iter().enumerate() {
            if row.len() != self.n_actions {
                return bad(format!("profits row {i} has {} entries, expected {}", row.len(), self.n_actions));
            }
            if row.iter().any(|p| !p.is_finite()) {
                return bad(format!("profits row {i} is not finite"));
            }
        }
        for (i, &m) in self.max_actions.iter().enumerate() {
            if !(m > 0.0 && m <= self.n_actions as f64) {
                return bad(format!("max_actions[{i}] = {m} outside (0, {}]", self.n_actions));
            }
        }
        if let Some(k) = self.n_constraint_segments {
            if let Some(&s) = self.constraint_segment.iter().find(|&&s| s >= k) {
                return bad(format!("constraint segment {s} >= n_constraint_segments {k}"));
            }
        }
        if let Some(k) = self.n_action_segments {
            if let Some(&s) = self.action_segment.iter().find(|&&s| s >= k) {
                return bad(format!("action segment {s} >= n_action_segments {k}"));
            }
        }
        Ok(())
    }

    pub fn n_constraint_segments(&self) -> usize {
        self.n_constraint_segments
            .unwrap_or_else(|| self.constraint_segment.iter().max().map_or(0, |m| m + 1))
    }

    pub fn n_action_segments(&self) -> usize {
        self.n_action_segments
            .unwrap_or_else(|| self.action_segment.iter().max().map_or(0, |m| m + 1))
    }

    /// `n_k` for every constraint segment.
    pub fn segment_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_constraint_segments()];
        for &k in &self.constraint_segment {
            sizes[k] += 1;
        }
        sizes
    }

    /// Customers of each constraint segment, in increasing order.
    pub fn segment_members(&self) -> Vec<Vec<usize>> {
        group(&self.constraint_segment, self.n_constraint_segments())
    }

    pub fn action_segment_members(&self) -> Vec<Vec<usize>> {
        group(&self.action_segment, self.n_action_segments())
    }
}

fn group(assignment: &[usize], n_groups: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); n_groups];
    for (i, &k) in assignment.iter().enumerate() {
        members[k].push(i);
    }
    members
}

/// `a ≤ Σ_{i∈S_k} x_i^j ≤ b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeOneBound {
    #[serde(rename = "k")]
    pub segment: usize,
    #[serde(rename = "j")]
    pub action: usize,
    pub lower: f64,
    pub upper: f64,
}

/// `L_k ≤ Σ_{i∈S_k} Σ_j c_i^j x_i^j ≤ U_k` for every segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeTwo {
    pub lower: Vec<ExtReal>,
    pub upper: Vec<ExtReal>,
    pub weights: Vec<Vec<f64>>,
}

/// `mean_{S_k1} x^j ≤ ratio · mean_{S_k2} x^j + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityOneRule {
    #[serde(rename = "j")]
    pub action: usize,
    #[serde(rename = "k1")]
    pub first: usize,
    #[serde(rename = "k2")]
    pub second: usize,
    pub ratio: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    #[serde(rename = "k1")]
    pub first: usize,
    #[serde(rename = "k2")]
    pub second: usize,
    pub ratio: f64,
    pub offset: f64,
}

/// `mean_{S_k1} Σ_j d_i^j x_i^j ≤ ratio · mean_{S_k2} Σ_j d_i^j x_i^j + offset` per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTwo {
    pub pairs: Vec<SimilarityPair>,
    pub weights: Vec<Vec<f64>>,
}

/// Which constraint families are active, with their parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintMenu {
    #[serde(default)]
    pub volume1: Option<Vec<VolumeOneBound>>,
    #[serde(default)]
    pub volume2: Option<VolumeTwo>,
    #[serde(default)]
    pub similarity1: Option<Vec<SimilarityOneRule>>,
    #[serde(default)]
    pub similarity2: Option<SimilarityTwo>,
    #[serde(default)]
    pub targeting_enabled: bool,
}

impl ConstraintMenu {
    pub fn targeting_only() -> Self {
        Self {
            targeting_enabled: true,
            ..Self::default()
        }
    }

    /// Checks the menu against an instance.
    pub fn validate(&self, instance: &TargetingInstance) -> Result<()> {
        let k_count = instance.n_constraint_segments();
        let j_count = instance.n_actions;
        let sizes = instance.segment_sizes();
        let bad = |m: String| Err(Error::InvalidMenu(m));
        let check_weights = |name: &str, w: &Vec<Vec<f64>>| -> Result<()> {
            if w.len() != instance.n_customers
                || w.iter().any(|r| r.len() != j_count || r.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::InvalidMenu(format!(
                    "{name} weights must be a finite {}x{} matrix",
                    instance.n_customers, j_count
                )));
            }
            Ok(())
        };
        for b in self.volume1.iter().flatten() {
            if b.segment >= k_count || b.action >= j_count {
                return bad(format!("volume1 entry ({}, {}) out of range", b.segment, b.action));
            }
            let n = sizes[b.segment] as f64;
            let slack = 1e-9 * (1.0 + n);
            if !(b.lower.is_finite() && b.upper.is_finite())
                || b.lower < -slack
                || b.lower > b.upper + slack
                || b.upper > n + slack
            {
                return bad(format!(
                    "volume1 entry ({}, {}) needs 0 <= {} <= {} <= n_k = {n}",
                    b.segment, b.action, b.lower, b.upper
                ));
            }
        }
        if let Some(v) = &self.volume2 {
            if v.lower.len() != k_count || v.upper.len() != k_count {
                return bad(format!("volume2 bounds must have length K = {k_count}"));
            }
            for k in 0..k_count {
                if v.lower[k].0.is_nan() || v.upper[k].0.is_nan() || v.lower[k] > v.upper[k] {
                    return bad(format!("volume2 segment {k} has lower > upper"));
                }
                if v.lower[k].0 == f64::INFINITY || v.upper[k].0 == f64::NEG_INFINITY {
                    return bad(format!("volume2 segment {k} has an unsatisfiable infinite bound"));
                }
            }
            check_weights("volume2", &v.weights)?;
        }
        let check_pair = |first: usize, second: usize, ratio: f64, offset: f64| -> Result<()> {
            if first >= k_count || second >= k_count {
                return Err(Error::InvalidMenu(format!("similarity pair ({first}, {second}) out of range")));
            }
            if first == second {
                return Err(Error::InvalidMenu(format!("similarity pair ({first}, {second}) repeats a segment")));
            }
            if !(ratio > 0.0 && ratio.is_finite() && offset.is_finite()) {
                return Err(Error::InvalidMenu(format!(
                    "similarity pair ({first}, {second}) needs a positive finite ratio and finite offset"
                )));
            }
            Ok(())
        };
        for r in self.similarity1.iter().flatten() {
            if r.action >= j_count {
                return bad(format!("similarity1 action {} out of range", r.action));
            }
            check_pair(r.first, r.second, r.ratio, r.offset)?;
        }
        if let Some(s) = &self.similarity2 {
            for p in &s.pairs {
                check_pair(p.first, p.second, p.ratio, p.offset)?;
            }
            check_weights("similarity2", &s.weights)?;
        }
        Ok(())
    }

    /// Builds a menu of the given shape with generic parameters: volume bounds at
    /// 10%–90% of `n_k`, a two-sided Volume II band on unit weights, and similarity ratio 1.5.
    pub fn with_shape(instance: &TargetingInstance, shape: &MenuShape) -> Self {
        let k_count = instance.n_constraint_segments();
        let j_count = instance.n_actions;
        let sizes = instance.segment_sizes();
        let unit = vec![vec![1.0; j_count]; instance.n_customers];
        let pairs = |pair_shape: PairShape| -> Vec<(usize, usize)> {
            let mut out = Vec::new();
            for a in 0..k_count {
                for b in 0..k_count {
                    let keep = match pair_shape {
                        PairShape::Off => false,
                        PairShape::Ordered => a != b,
                        PairShape::Unordered => a < b,
                    };
                    if keep {
                        out.push((a, b));
                    }
                }
            }
            out
        };
        let volume1 = shape.volume1.then(|| {
            (0..k_count)
                .flat_map(|k| {
                    let n = sizes[k] as f64;
                    (0..j_count).map(move |j| VolumeOneBound {
                        segment: k,
                        action: j,
                        lower: 0.1 * n,
                        upper: 0.9 * n,
                    })
                })
                .collect()
        });
        let volume2 = match shape.volume2 {
            VolumeTwoShape::Off => None,
            VolumeTwoShape::LowerOnly => Some(VolumeTwo {
                lower: sizes.iter().map(|&n| ExtReal(0.1 * n as f64)).collect(),
                upper: vec![ExtReal::INFINITY; k_count],
                weights: unit.clone(),
            }),
            VolumeTwoShape::TwoSided => Some(VolumeTwo {
                lower: sizes.iter().map(|&n| ExtReal(0.1 * n as f64)).collect(),
                upper: sizes.iter().map(|&n| ExtReal(0.9 * n as f64 * j_count as f64)).collect(),
                weights: unit.clone(),
            }),
        };
        let similarity1 = (shape.similarity1 != PairShape::Off).then(|| {
            pairs(shape.similarity1)
                .into_iter()
                .flat_map(|(a, b)| {
                    (0..j_count).map(move |j| SimilarityOneRule {
                        action: j,
                        first: a,
                        second: b,
                        ratio: 1.5,
                        offset: 0.0,
                    })
                })
                .collect()
        });
        let similarity2 = (shape.similarity2 != PairShape::Off).then(|| SimilarityTwo {
            pairs: pairs(shape.similarity2)
                .into_iter()
                .map(|(a, b)| SimilarityPair {
                    first: a,
                    second: b,
                    ratio: 1.5,
                    offset: 0.0,
                })
                .collect(),
            weights: unit,
        });
        Self {
            volume1,
            volume2,
            similarity1,
            similarity2,
            targeting_enabled: shape.targeting,
        }
    }
}

/// Pair enumeration for similarity families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairShape {
    Off,
    /// All `k1 ≠ k2`.
    Ordered,
    /// Only `k1 < k2`.
    Unordered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeTwoShape {
    Off,
    LowerOnly,
    TwoSided,
}

/// Which families a menu activates and how pairs are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MenuShape {
    pub volume1: bool,
    pub volume2: VolumeTwoShape,
    pub similarity1: PairShape,
    pub similarity2: PairShape,
    pub targeting: bool,
}

impl MenuShape {
    /// Every family, two-sided, over ordered pairs.
    pub const FULL_ORDERED: MenuShape = MenuShape {
        volume1: true,
        volume2: VolumeTwoShape::TwoSided,
        similarity1: PairShape::Ordered,
        similarity2: PairShape::Ordered,
        targeting: true,
    };

    /// Lower-only Volume II and unordered similarity pairs (the default generated menu).
    pub const DEFAULT_MENU: MenuShape = MenuShape {
        volume1: true,
        volume2: VolumeTwoShape::LowerOnly,
        similarity1: PairShape::Unordered,
        similarity2: PairShape::Unordered,
        targeting: true,
    };
}

/// Row counts per constraint family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintCounts {
    pub volume1: u64,
    pub volume2: u64,
    pub similarity1: u64,
    pub similarity2: u64,
    pub targeting: u64,
    pub total: u64,
}

impl fmt::Display for ConstraintCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16}{:>14}", "Type", "Constraints")?;
        for (name, n) in [
            ("Volume I", self.volume1),
            ("Volume II", self.volume2),
            ("Similarity I", self.similarity1),
            ("Similarity II", self.similarity2),
            ("Targeting", self.targeting),
        ] {
            writeln!(f, "{name:<16}{:>14}", group_thousands(n))?;
        }
        write!(f, "{:<16}{:>14}", "Total", group_thousands(self.total))
    }
}

fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Closed-form row counts: `2KJ`, `2K` (or `K` one-sided), `K(K−1)J` (or half for
/// unordered pairs), `K(K−1)` (or half), `I`.
pub fn constraint_count(k: u64, j: u64, i: u64, shape: &MenuShape) -> ConstraintCounts {
    let pair_count = |p: PairShape| match p {
        PairShape::Off => 0,
        PairShape::Ordered => k * k.saturating_sub(1),
        PairShape::Unordered => k * k.saturating_sub(1) / 2,
    };
    let volume1 = if shape.volume1 { 2 * k * j } else { 0 };
    let volume2 = match shape.volume2 {
        VolumeTwoShape::Off => 0,
        VolumeTwoShape::LowerOnly => k,
        VolumeTwoShape::TwoSided => 2 * k,
    };
    let similarity1 = pair_count(shape.similarity1) * j;
    let similarity2 = pair_count(shape.similarity2);
    let targeting = if shape.targeting { i } else { 0 };
    ConstraintCounts {
        volume1,
        volume2,
        similarity1,
        similarity2,
        targeting,
        total: volume1 + volume2 + similarity1 + similarity2 + targeting,
    }
}

/// Counts rows of a compiled LP by family.
pub fn counts_of(lp: &StandardLp) -> ConstraintCounts {
    let mut c = ConstraintCounts::default();
    for f in &lp.row_families {
        match f {
            RowFamily::VolumeOne => c.volume1 += 1,
            RowFamily::VolumeTwo => c.volume2 += 1,
            RowFamily::SimilarityOne => c.similarity1 += 1,
            RowFamily::SimilarityTwo => c.similarity2 += 1,
            RowFamily::Targeting => c.targeting += 1,
            RowFamily::Auxiliary | RowFamily::Generic => {}
        }
    }
    c.total = lp.n_rows() as u64;
    c
}

struct RowSink {
    builder: CsrBuilder,
    rhs: Vec<f64>,
    families: Vec<RowFamily>,
    row: Vec<(usize, f64)>,
}

impl RowSink {
    fn new(n_cols: usize) -> Self {
        Self {
            builder: CsrBuilder::new(n_cols),
            rhs: Vec::new(),
            families: Vec::new(),
            row: Vec::new(),
        }
    }

    /// Emits the buffered row as `row·x ≤ rhs`, or `−row·x ≤ −rhs` when `negate`.
    fn emit(&mut self, family: RowFamily, rhs: f64, negate: bool) -> Result<()> {
        let sign = if negate { -1.0 } else { 1.0 };
        self.builder.push_row(self.row.iter().map(|&(c, v)| (c, sign * v)))?;
        self.rhs.push(sign * rhs);
        self.families.push(family);
        Ok(())
    }

    /// Emits `lower ≤ row·x ≤ upper`, skipping infinite sides.
    fn emit_two_sided(&mut self, family: RowFamily, lower: f64, upper: f64) -> Result<()> {
        if upper.is_finite() {
            self.emit(family, upper, false)?;
        }
        if lower.is_finite() {
            self.emit(family, lower, true)?;
        }
        Ok(())
    }
}

/// Emits the Volume and Similarity families with customer variable `(i, j)` placed at
/// column `column(i, j)`; columns shared by several customers accumulate.
fn emit_menu_rows(
    instance: &TargetingInstance,
    menu: &ConstraintMenu,
    column: &dyn Fn(usize, usize) -> usize,
    sink: &mut RowSink,
) -> Result<()> {
    let members = instance.segment_members();
    let j_count = instance.n_actions;

    for b in menu.volume1.iter().flatten() {
        sink.row.clear();
        sink.row.extend(members[b.segment].iter().map(|&i| (column(i, b.action), 1.0)));
        sink.emit_two_sided(RowFamily::VolumeOne, b.lower, b.upper)?;
    }

    if let Some(v) = &menu.volume2 {
        for (k, segment) in members.iter().enumerate() {
            sink.row.clear();
            for &i in segment {
                sink.row.extend((0..j_count).map(|j| (column(i, j), v.weights[i][j])));
            }
            sink.emit_two_sided(RowFamily::VolumeTwo, v.lower[k].0, v.upper[k].0)?;
        }
    }

    let mean_weight = |k: usize| -> Result<f64> {
        let n = members[k].len();
        if n == 0 {
            return Err(Error::EmptySegment { segment: k });
        }
        Ok(1.0 / n as f64)
    };

    for r in menu.similarity1.iter().flatten() {
        let w1 = mean_weight(r.first)?;
        let w2 = mean_weight(r.second)?;
        sink.row.clear();
        sink.row.extend(members[r.first].iter().map(|&i| (column(i, r.action), w1)));
        sink.row.extend(members[r.second].iter().map(|&i| (column(i, r.action), -r.ratio * w2)));
        sink.emit(RowFamily::SimilarityOne, r.offset, false)?;
    }

    if let Some(s) = &menu.similarity2 {
        for p in &s.pairs {
            let w1 = mean_weight(p.first)?;
            let w2 = mean_weight(p.second)?;
            sink.row.clear();
            for &i in &members[p.first] {
                sink.row.extend((0..j_count).map(|j| (column(i, j), w1 * s.weights[i][j])));
            }
            for &i in &members[p.second] {
                sink.row.extend((0..j_count).map(|j| (column(i, j), -p.ratio * w2 * s.weights[i][j])));
            }
            sink.emit(RowFamily::SimilarityTwo, p.offset, false)?;
        }
    }
    Ok(())
}

fn prepare(instance: &TargetingInstance, menu: &ConstraintMenu) -> Result<()> {
    instance.validate()?;
    menu.validate(instance)
}

/// Individual personalization: column `i·J + j` is `x_i^j`, objective `−p_i^j`.
pub fn compile_ipwc(instance: &TargetingInstance, menu: &ConstraintMenu) -> Result<StandardLp> {
    prepare(instance, menu)?;
    let j_count = instance.n_actions;
    let n_cols = instance.n_customers * j_count;
    let column = move |i: usize, j: usize| i * j_count + j;
    let mut sink = RowSink::new(n_cols);
    emit_menu_rows(instance, menu, &column, &mut sink)?;
    if menu.targeting_enabled {
        for i in 0..instance.n_customers {
            sink.row.clear();
            sink.row.extend((0..j_count).map(|j| (column(i, j), 1.0)));
            sink.emit(RowFamily::Targeting, instance.max_actions[i], false)?;
        }
    }
    let objective = instance.profits.iter().flatten().map(|p| -p).collect();
    let labels = (0..instance.n_customers)
        .flat_map(|customer| (0..j_count).map(move |action| ColumnLabel::Customer { customer, action }))
        .collect();
    StandardLp::new(objective, sink.builder.finish(), sink.rhs, labels, sink.families)
}

/// Segment personalization: column `k*·J + j` is shared by every customer of action
/// segment `k*`. Its objective is `−Σ_{i∈k*} p_i^j` and a row over constraint segment
/// `k` picks up `|S_k ∩ S_k*|` times the per-customer coefficient. The targeting cap of
/// an action segment is the smallest `M_i` among its customers.
pub fn compile_spwc(instance: &TargetingInstance, menu: &ConstraintMenu) -> Result<StandardLp> {
    prepare(instance, menu)?;
    let j_count = instance.n_actions;
    let action_members = instance.action_segment_members();
    if let Some(k) = action_members.iter().position(Vec::is_empty) {
        return Err(Error::InvalidInstance(format!("action segment {k} has no customers")));
    }
    let n_cols = action_members.len() * j_count;
    let seg = &instance.action_segment;
    let column = move |i: usize, j: usize| seg[i] * j_count + j;
    let mut sink = RowSink::new(n_cols);
    emit_menu_rows(instance, menu, &column, &mut sink)?;
    if menu.targeting_enabled {
        for (k, members) in action_members.iter().enumerate() {
            let cap = members
                .iter()
                .map(|&i| instance.max_actions[i])
                .fold(f64::INFINITY, f64::min);
            sink.row.clear();
            sink.row.extend((0..j_count).map(|j| (k * j_count + j, 1.0)));
            sink.emit(RowFamily::Targeting, cap, false)?;
        }
    }
    let mut objective = vec![0.0; n_cols];
    for (i, row) in instance.profits.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            objective[column(i, j)] -= p;
        }
    }
    let labels = (0..action_members.len())
        .flat_map(|segment| (0..j_count).map(move |action| ColumnLabel::Segment { segment, action }))
        .collect();
    StandardLp::new(objective, sink.builder.finish(), sink.rhs, labels, sink.families)
}

/// Column layout of the interdependent-actions model for one customer:
/// `J` single-action columns, `J(J−1)/2` pair columns, `J` auxiliary columns.
#[derive(Debug, Clone, Copy)]
pub struct InterdependentLayout {
    pub n_actions: usize,
}

impl InterdependentLayout {
    pub fn n_pairs(&self) -> usize {
        self.n_actions * self.n_actions.saturating_sub(1) / 2
    }

    pub fn block(&self) -> usize {
        2 * self.n_actions + self.n_pairs()
    }

    pub fn single(&self, i: usize, j: usize) -> usize {
        i * self.block() + j
    }

    /// Column of `y_i^{j1,j2}` for `j1 < j2`.
    pub fn pair(&self, i: usize, j1: usize, j2: usize) -> usize {
        debug_assert!(j1 < j2 && j2 < self.n_actions);
        let j = self.n_actions;
        let before = j1 * (2 * j - j1 - 1) / 2;
        i * self.block() + j + before + (j2 - j1 - 1)
    }

    pub fn auxiliary(&self, i: usize, j: usize) -> usize {
        i * self.block() + self.n_actions + self.n_pairs() + j
    }
}

/// Interdependent actions: `pair_profits[i][j1][j2]` (read for `j1 < j2`) is the profit of
/// giving customer `i` both actions. Volume and Similarity rows act on the auxiliary
/// columns; each customer gets `Σ z + Σ y ≤ 1` and the two halves of
/// `x_i^j = z_i^j + Σ_{pairs containing j} y`.
pub fn compile_interdependent(
    instance: &TargetingInstance,
    menu: &ConstraintMenu,
    pair_profits: &[Vec<Vec<f64>>],
) -> Result<StandardLp> {
    prepare(instance, menu)?;
    let j_count = instance.n_actions;
    if pair_profits.len() != instance.n_customers
        || pair_profits
            .iter()
            .any(|m| m.len() != j_count || m.iter().any(|r| r.len() != j_count))
    {
        return Err(Error::InvalidInstance(format!(
            "pair profits must be {}x{j_count}x{j_count}",
            instance.n_customers
        )));
    }
    let layout = InterdependentLayout { n_actions: j_count };
    let n_cols = instance.n_customers * layout.block();
    let column = move |i: usize, j: usize| layout.auxiliary(i, j);
    let mut sink = RowSink::new(n_cols);
    emit_menu_rows(instance, menu, &column, &mut sink)?;

    for i in 0..instance.n_customers {
        sink.row.clear();
        sink.row.extend((0..j_count).map(|j| (layout.single(i, j), 1.0)));
        for j1 in 0..j_count {
            for j2 in (j1 + 1)..j_count {
                sink.row.push((layout.pair(i, j1, j2), 1.0));
            }
        }
        sink.emit(RowFamily::Targeting, 1.0, false)?;
    }
    for i in 0..instance.n_customers {
        for j in 0..j_count {
            sink.row.clear();
            sink.row.push((layout.auxiliary(i, j), 1.0));
            sink.row.push((layout.single(i, j), -1.0));
            for other in (0..j_count).filter(|&o| o != j) {
                sink.row.push((layout.pair(i, j.min(other), j.max(other)), -1.0));
            }
            sink.emit(RowFamily::Auxiliary, 0.0, false)?;
            sink.emit(RowFamily::Auxiliary, 0.0, true)?;
        }
    }

    let mut objective = vec![0.0; n_cols];
    let mut labels = vec![ColumnLabel::Generic { index: 0 }; n_cols];
    for i in 0..instance.n_customers {
        for j in 0..j_count {
            objective[layout.single(i, j)] = -instance.profits[i][j];
            labels[layout.single(i, j)] = ColumnLabel::Single { customer: i, action: j };
            labels[layout.auxiliary(i, j)] = ColumnLabel::Auxiliary { customer: i, action: j };
            for j2 in (j + 1)..j_count {
                let q = pair_profits[i][j][j2];
                if !q.is_finite() {
                    return Err(Error::InvalidInstance(format!("pair profit ({i}, {j}, {j2}) is not finite")));
                }
                objective[layout.pair(i, j, j2)] = -q;
                labels[layout.pair(i, j, j2)] = ColumnLabel::Pair {
                    customer: i,
                    first: j,
                    second: j2,
                };
            }
        }
    }
    StandardLp::new(objective, sink.builder.finish(), sink.rhs, labels, sink.families)
}

/// Whose decisions a policy's rows describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyLevel {
    Customer,
    ActionSegment,
}

/// Action probabilities per customer (or per action segment) and the profit they earn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub level: PolicyLevel,
    pub assignment: Vec<Vec<f64>>,
    pub objective_value: f64,
}

impl Policy {
    /// Probability that customer `i` receives action `j`.
    pub fn customer_rate(&self, instance: &TargetingInstance, i: usize, j: usize) -> f64 {
        match self.level {
            PolicyLevel::Customer => self.assignment[i][j],
            PolicyLevel::ActionSegment => self.assignment[instance.action_segment[i]][j],
        }
    }
}

/// Reshapes an LP solution into a policy. The profit is `−objective·primal`.
pub fn extract_policy(lp: &StandardLp, primal: &[f64], instance: &TargetingInstance) -> Result<Policy> {
    if primal.len() != lp.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "extract_policy primal",
            expected: lp.n_cols(),
            actual: primal.len(),
        });
    }
    if let Some(w) = primal.iter().position(|&v| !(-1e-6..=1.0 + 1e-6).contains(&v)) {
        return Err(Error::InvalidArgument(format!(
            "primal[{w}] = {} is outside [0, 1]",
            primal[w]
        )));
    }
    let segment_level = lp
        .column_labels
        .iter()
        .any(|l| matches!(l, ColumnLabel::Segment { .. }));
    let (level, rows) = if segment_level {
        (PolicyLevel::ActionSegment, instance.n_action_segments())
    } else {
        (PolicyLevel::Customer, instance.n_customers)
    };
    let mut assignment = vec![vec![0.0; instance.n_actions]; rows];
    for (label, &v) in lp.column_labels.iter().zip(primal) {
        let (r, j) = match *label {
            ColumnLabel::Customer { customer, action } | ColumnLabel::Auxiliary { customer, action } => {
                (customer, action)
            }
            ColumnLabel::Segment { segment, action } => (segment, action),
            ColumnLabel::Single { .. } | ColumnLabel::Pair { .. } => continue,
            ColumnLabel::Generic { .. } => {
                return Err(Error::InvalidArgument("LP has no targeting column labels".into()))
            }
        };
        if r >= rows || j >= instance.n_actions {
            return Err(Error::InvalidArgument(format!("column label ({r}, {j}) does not fit the instance")));
        }
        assignment[r][j] = v.clamp(0.0, 1.0);
    }
    Ok(Policy {
        level,
        assignment,
        objective_value: -lp.objective_value(primal),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Feasibility,
    VolumeOneLower,
    VolumeOneUpper,
    VolumeTwoLower,
    VolumeTwoUpper,
    SimilarityOne,
    SimilarityTwo,
    Targeting,
}

/// One violated constraint; `slack = rhs − lhs` is negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub indices: Vec<usize>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates every menu constraint directly on the policy, without the compiled matrix.
/// A constraint `lhs ≤ rhs` is violated when `lhs − rhs > tolerance·(1 + |rhs|)`.
pub fn validate_policy(
    policy: &Policy,
    instance: &TargetingInstance,
    menu: &ConstraintMenu,
    tolerance: f64,
) -> ValidationReport {
    let j_count = instance.n_actions;
    let k_count = instance.n_constraint_segments();
    let sizes = instance.segment_sizes();
    let rate = |i: usize, j: usize| policy.customer_rate(instance, i, j);
    let mut report = ValidationReport::default();
    let mut check = |kind: ViolationKind, indices: Vec<usize>, lhs: f64, rhs: f64| {
        if lhs - rhs > tolerance * (1.0 + rhs.abs()) {
            report.violations.push(Violation {
                kind,
                indices,
                slack: rhs - lhs,
            });
        }
    };

    for (r, row) in policy.assignment.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            check(ViolationKind::Feasibility, vec![r, j], v, 1.0);
            check(ViolationKind::Feasibility, vec![r, j], -v, 0.0);
        }
    }

    let mut counts = vec![vec![0.0; j_count]; k_count];
    for i in 0..instance.n_customers {
        for j in 0..j_count {
            counts[instance.constraint_segment[i]][j] += rate(i, j);
        }
    }
    let weighted = |w: &Vec<Vec<f64>>| {
        let mut sums = vec![0.0; k_count];
        for i in 0..instance.n_customers {
            sums[instance.constraint_segment[i]] += (0..j_count).map(|j| w[i][j] * rate(i, j)).sum::<f64>();
        }
        sums
    };

    for b in menu.volume1.iter().flatten() {
        let total = counts[b.segment][b.action];
        check(ViolationKind::VolumeOneUpper, vec![b.segment, b.action], total, b.upper);
        check(ViolationKind::VolumeOneLower, vec![b.segment, b.action], -total, -b.lower);
    }
    if let Some(v) = &menu.volume2 {
        let sums = weighted(&v.weights);
        for k in 0..k_count {
            if v.upper[k].is_finite() {
                check(ViolationKind::VolumeTwoUpper, vec![k], sums[k], v.upper[k].0);
            }
            if v.lower[k].is_finite() {
                check(ViolationKind::VolumeTwoLower, vec![k], -sums[k], -v.lower[k].0);
            }
        }
    }
    let mean = |total: f64, k: usize| if sizes[k] == 0 { 0.0 } else { total / sizes[k] as f64 };
    for r in menu.similarity1.iter().flatten() {
        let lhs = mean(counts[r.first][r.action], r.first) - r.ratio * mean(counts[r.second][r.action], r.second);
        check(ViolationKind::SimilarityOne, vec![r.action, r.first, r.second], lhs, r.offset);
    }
    if let Some(s) = &menu.similarity2 {
        let sums = weighted(&s.weights);
        for p in &s.pairs {
            let lhs = mean(sums[p.first], p.first) - p.ratio * mean(sums[p.second], p.second);
            check(ViolationKind::SimilarityTwo, vec![p.first, p.second], lhs, p.offset);
        }
    }
    if menu.targeting_enabled {
        for i in 0..instance.n_customers {
            let total: f64 = (0..j_count).map(|j| rate(i, j)).sum();
            check(ViolationKind::Targeting, vec![i], total, instance.max_actions[i]);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_customer() -> TargetingInstance {
        TargetingInstance::new(vec![vec![5.0]], vec![0], vec![1.0]).unwrap()
    }

    fn small_instance(k_count: usize, j_count: usize, per_segment: usize) -> TargetingInstance {
        let n = k_count * per_segment;
        let profits = (0..n)
            .map(|i| (0..j_count).map(|j| ((i * 7 + j * 3) % 11) as f64 - 4.0).collect())
            .collect();
        let segments = (0..n).map(|i| i % k_count).collect();
        TargetingInstance::new(profits, segments, vec![1.0; n]).unwrap()
    }

    #[test]
    fn ext_real_json() {
        let v: Vec<ExtReal> = serde_json::from_str(r#"[1.5, "inf", "-inf"]"#).unwrap();
        assert_eq!(v, vec![ExtReal(1.5), ExtReal::INFINITY, ExtReal::NEG_INFINITY]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[1.5,"inf","-inf"]"#);
        assert!(serde_json::from_str::<ExtReal>(r#""lots""#).is_err());
    }

    #[test]
    fn trivial_ipwc() {
        let lp = compile_ipwc(&single_customer(), &ConstraintMenu::targeting_only()).unwrap();
        assert_eq!(lp.objective, vec![-5.0]);
        assert_eq!(lp.n_rows(), 1);
        assert_eq!(lp.constraints.triplets().collect::<Vec<_>>(), vec![(0, 0, 1.0)]);
        assert_eq!(lp.rhs, vec![1.0]);
    }

    #[test]
    fn objective_is_negated_profit() {
        let inst = small_instance(3, 2, 4);
        let lp = compile_ipwc(&inst, &ConstraintMenu::with_shape(&inst, &MenuShape::FULL_ORDERED)).unwrap();
        let flat: Vec<f64> = inst.profits.iter().flatten().map(|p| -p).collect();
        assert_eq!(lp.objective, flat);
    }

    #[test]
    fn row_order_and_counts_follow_families() {
        let inst = small_instance(3, 2, 4);
        let lp = compile_ipwc(&inst, &ConstraintMenu::with_shape(&inst, &MenuShape::FULL_ORDERED)).unwrap();
        assert!(lp.row_families.windows(2).all(|w| w[0] <= w[1]));
        let want = constraint_count(3, 2, 12, &MenuShape::FULL_ORDERED);
        assert_eq!(counts_of(&lp), want);
    }

    #[test]
    fn row_count_matches_formula_sweep() {
        for k in 1..=6 {
            for j in 1..=3 {
                for shape in [MenuShape::FULL_ORDERED, MenuShape::DEFAULT_MENU] {
                    let inst = small_instance(k, j, 2);
                    let menu = ConstraintMenu::with_shape(&inst, &shape);
                    let lp = compile_ipwc(&inst, &menu).unwrap();
                    let want = constraint_count(k as u64, j as u64, inst.n_customers as u64, &shape);
                    assert_eq!(counts_of(&lp), want, "K={k} J={j} {shape:?}");
                }
            }
        }
    }

    #[test]
    fn nnz_matches_analytic_support() {
        let inst = small_instance(4, 3, 5);
        let menu = ConstraintMenu::with_shape(&inst, &MenuShape::FULL_ORDERED);
        let lp = compile_ipwc(&inst, &menu).unwrap();
        let sizes = inst.segment_sizes();
        let mut want = 0;
        for b in menu.volume1.as_ref().unwrap() {
            want += 2 * sizes[b.segment];
        }
        want += 2 * inst.n_customers * 3; // Volume II, two sides, unit weights
        for r in menu.similarity1.as_ref().unwrap() {
            want += sizes[r.first] + sizes[r.second];
        }
        for p in &menu.similarity2.as_ref().unwrap().pairs {
            want += 3 * (sizes[p.first] + sizes[p.second]);
        }
        want += inst.n_customers * 3;
        assert_eq!(lp.constraints.nnz(), want);
    }

    #[test]
    fn infinite_bounds_emit_no_rows() {
        let inst = small_instance(2, 1, 2);
        let menu = ConstraintMenu {
            volume2: Some(VolumeTwo {
                lower: vec![ExtReal::NEG_INFINITY, ExtReal(1.0)],
                upper: vec![ExtReal::INFINITY, ExtReal::INFINITY],
                weights: vec![vec![1.0]; 4],
            }),
            ..Default::default()
        };
        let lp = compile_ipwc(&inst, &menu).unwrap();
        assert_eq!(lp.n_rows(), 1);
        assert_eq!(lp.rhs, vec![-1.0]);
    }

    #[test]
    fn empty_segment_in_similarity_is_error() {
        let mut inst = small_instance(2, 1, 2);
        inst.n_constraint_segments = Some(3);
        let menu = ConstraintMenu {
            similarity1: Some(vec![SimilarityOneRule {
                action: 0,
                first: 0,
                second: 2,
                ratio: 1.0,
                offset: 0.0,
            }]),
            ..Default::default()
        };
        assert!(matches!(compile_ipwc(&inst, &menu), Err(Error::EmptySegment { segment: 2 })));
    }

    #[test]
    fn menu_validation_errors() {
        let inst = small_instance(2, 1, 2);
        let bad_ratio = ConstraintMenu {
            similarity1: Some(vec![SimilarityOneRule {
                action: 0,
                first: 0,
                second: 1,
                ratio: 0.0,
                offset: 0.0,
            }]),
            ..Default::default()
        };
        assert!(compile_ipwc(&inst, &bad_ratio).is_err());
        let same_pair = ConstraintMenu {
            similarity2: Some(SimilarityTwo {
                pairs: vec![SimilarityPair {
                    first: 1,
                    second: 1,
                    ratio: 1.0,
                    offset: 0.0,
                }],
                weights: vec![vec![1.0]; 4],
            }),
            ..Default::default()
        };
        assert!(compile_ipwc(&inst, &same_pair).is_err());
        let inverted = ConstraintMenu {
            volume1: Some(vec![VolumeOneBound {
                segment: 0,
                action: 0,
                lower: 2.0,
                upper: 1.0,
            }]),
            ..Default::default()
        };
        assert!(compile_ipwc(&inst, &inverted).is_err());
    }

    #[test]
    fn spwc_with_singleton_segments_equals_ipwc() {
        let mut inst = small_instance(3, 2, 3);
        inst.action_segment = (0..inst.n_customers).collect();
        let menu = ConstraintMenu::with_shape(&inst, &MenuShape::FULL_ORDERED);
        let a = compile_ipwc(&inst, &menu).unwrap();
        let b = compile_spwc(&inst, &menu).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.constraints, b.constraints);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn spwc_aggregates_shared_customers() {
        let inst = TargetingInstance::new(vec![vec![3.0], vec![-1.0]], vec![0, 0], vec![1.0, 1.0]).unwrap();
        let menu = ConstraintMenu {
            volume1: Some(vec![VolumeOneBound {
                segment: 0,
                action: 0,
                lower: 0.0,
                upper: 1.0,
            }]),
            ..Default::default()
        };
        let lp = compile_spwc(&inst, &menu).unwrap();
        assert_eq!(lp.objective, vec![-2.0]);
        assert_eq!(lp.constraints.triplets().next(), Some((0, 0, 2.0)));
        assert_eq!(lp.rhs[0], 1.0);
    }

    #[test]
    fn spwc_cap_is_segment_minimum() {
        let mut inst = TargetingInstance::new(vec![vec![1.0, 1.0]; 3], vec![0, 0, 0], vec![2.0, 1.0, 2.0]).unwrap();
        inst.action_segment = vec![0, 0, 1];
        let lp = compile_spwc(&inst, &ConstraintMenu::targeting_only()).unwrap();
        assert_eq!(lp.rhs, vec![1.0, 2.0]);
    }

    #[test]
    fn interdependent_layout_is_dense_and_disjoint() {
        let layout = InterdependentLayout { n_actions: 4 };
        let mut seen = Vec::new();
        for j in 0..4 {
            seen.push(layout.single(1, j));
            seen.push(layout.auxiliary(1, j));
            for j2 in (j + 1)..4 {
                seen.push(layout.pair(1, j, j2));
            }
        }
        seen.sort_unstable();
        assert_eq!(seen, (layout.block()..2 * layout.block()).collect::<Vec<_>>());
    }

    #[test]
    fn interdependent_rows() {
        let inst = TargetingInstance::new(vec![vec![1.0, 1.0]], vec![0], vec![2.0]).unwrap();
        let q = vec![vec![vec![0.0, 3.0], vec![0.0, 0.0]]];
        let lp = compile_interdependent(&inst, &ConstraintMenu::targeting_only(), &q).unwrap();
        // z1 z2 y12 x1 x2
        assert_eq!(lp.objective, vec![-1.0, -1.0, -3.0, 0.0, 0.0]);
        assert_eq!(lp.n_rows(), 1 + 2 * 2);
        assert_eq!(lp.rhs[0], 1.0);
        let aux: Vec<_> = lp.constraints.row(1).0.to_vec();
        assert_eq!(aux, vec![0, 2, 3]);
    }

    #[test]
    fn constraint_count_formulas() {
        let full = constraint_count(229, 5, 2_065_758, &MenuShape::FULL_ORDERED);
        assert_eq!(
            (full.volume1, full.volume2, full.similarity1, full.similarity2, full.targeting, full.total),
            (2_290, 458, 261_060, 52_212, 2_065_758, 2_381_778)
        );
        let default = constraint_count(229, 5, 2_065_758, &MenuShape::DEFAULT_MENU);
        assert_eq!(default.total, 2_224_913);
        assert_eq!(constraint_count(18, 5, 100, &MenuShape::FULL_ORDERED).similarity1, 1_530);
        let one = constraint_count(1, 5, 10, &MenuShape::FULL_ORDERED);
        assert_eq!((one.similarity1, one.similarity2), (0, 0));
    }

    #[test]
    fn table_layout() {
        let text = constraint_count(229, 5, 2_065_758, &MenuShape::FULL_ORDERED).to_string();
        assert!(text.contains("2,381,778"));
        assert!(text.contains("261,060"));
    }

    #[test]
    fn extract_zero_policy() {
        let inst = single_customer();
        let lp = compile_ipwc(&inst, &ConstraintMenu::targeting_only()).unwrap();
        let p = extract_policy(&lp, &[0.0], &inst).unwrap();
        assert_eq!(p.assignment, vec![vec![0.0]]);
        assert_eq!(p.objective_value, 0.0);
        let p = extract_policy(&lp, &[1.0], &inst).unwrap();
        assert_eq!((p.assignment[0][0], p.objective_value), (1.0, 5.0));
        assert!(extract_policy(&lp, &[1.0, 0.0], &inst).is_err());
        assert!(extract_policy(&lp, &[1.5], &inst).is_err());
    }

    #[test]
    fn extract_objective_matches_direct_sum() {
        let inst = small_instance(2, 3, 4);
        let lp = compile_ipwc(&inst, &ConstraintMenu::targeting_only()).unwrap();
        let x: Vec<f64> = (0..lp.n_cols()).map(|w| ((w * 37) % 10) as f64 / 10.0).collect();
        let p = extract_policy(&lp, &x, &inst).unwrap();
        let mut direct = 0.0;
        for i in 0..inst.n_customers {
            for j in 0..3 {
                direct += inst.profits[i][j] * x[i * 3 + j];
            }
        }
        assert!((p.objective_value - direct).abs() < 1e-9);
    }

    #[test]
    fn validate_reports_lower_volume_violations() {
        let inst = small_instance(2, 2, 2);
        let menu = ConstraintMenu {
            volume1: Some(vec![
                VolumeOneBound { segment: 0, action: 0, lower: 1.0, upper: 2.0 },
                VolumeOneBound { segment: 1, action: 1, lower: 0.0, upper: 2.0 },
            ]),
            ..Default::default()
        };
        let zero = Policy {
            level: PolicyLevel::Customer,
            assignment: vec![vec![0.0; 2]; 4],
            objective_value: 0.0,
        };
        let report = validate_policy(&zero, &inst, &menu, 1e-9);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::VolumeOneLower);
        assert_eq!(report.violations[0].indices, vec![0, 0]);
        assert!((report.violations[0].slack + 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_reports_targeting_violations() {
        let inst = small_instance(1, 2, 3);
        let ones = Policy {
            level: PolicyLevel::Customer,
            assignment: vec![vec![1.0; 2]; 3],
            objective_value: 0.0,
        };
        let report = validate_policy(&ones, &inst, &ConstraintMenu::targeting_only(), 1e-9);
        assert_eq!(report.violations.len(), 3);
        assert!(report.violations.iter().all(|v| v.kind == ViolationKind::Targeting));
    }

    #[test]
    fn menu_json_round_trip() {
        let inst = small_instance(3, 2, 2);
        let menu = ConstraintMenu::with_shape(&inst, &MenuShape::DEFAULT_MENU);
        let json = serde_json::to_string(&menu).unwrap();
        assert!(json.contains("\"inf\""));
        let back: ConstraintMenu = serde_json::from_str(&json).unwrap();
        assert_eq!(back, menu);
    }
}
