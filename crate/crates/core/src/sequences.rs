//! Adaptive adversary strategies and path simulation.
//!
//! A path is generated step by step: before step `j` the adversary looks at
//! the history (step index, last value, running sum) and picks one member of
//! the ambiguity set; the step is then drawn from that member. Any such
//! selection rule is admissible, which is exactly what makes the sequence
//! pseudo-independent rather than independent.

use crate::ambiguity::AmbiguitySet;
use crate::distributions::{Distribution, TestFunction};
use crate::numeric::KahanSum;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("strategy refers to member {index} but the set has {len} members")]
    BadIndex { index: usize, len: usize },
    #[error("randomized strategy needs a non-empty genome")]
    EmptyGenome,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("truncation order must lie in [1, 2), got {0}")]
    BadOrder(f64),
    #[error("audit depth {0} exceeds the supported maximum of {max}", max = MAX_AUDIT_DEPTH)]
    DepthTooLarge(usize),
    #[error("audit requires discrete conditional laws")]
    ContinuousAudit,
    #[error("audit tree exceeded {0} nodes")]
    AuditBudget(usize),
}

/// Deepest history the exhaustive audit will enumerate.
pub const MAX_AUDIT_DEPTH: usize = 12;

const AUDIT_NODE_BUDGET: usize = 4_000_000;

/// What the adversary sees before choosing the next member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryView {
    /// 1-based index of the step about to be generated.
    pub step: usize,
    /// Previous value, `None` before the first step.
    pub last_value: Option<f64>,
    /// Running sum of all previous values (plain left-to-right addition, so
    /// table strategies can key on its exact bits).
    pub running_sum: f64,
}

/// Member-selection rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Always the same member.
    Constant { index: usize },
    /// Member `(step - 1) mod K`.
    RoundRobin,
    /// `lo` while the running sum is below zero, `hi` otherwise.
    Threshold { lo: usize, hi: usize },
    /// `neg` after a negative value, `pos` otherwise (and on the first step).
    LastSign { neg: usize, pos: usize },
    /// Explicit map from `(step, running-sum bits)` to a member index.
    Table(TableStrategy),
    /// Fixed pattern indexed by step, wrapping around.
    Randomized { genome: Vec<usize> },
}

/// Lookup strategy produced by the exact dynamic program: states not in the
/// table fall back to `default`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TableStrategy {
    /// Keyed by `(step, running-sum bits)`; serialized as a sorted list of
    /// `[step, sum_bits, index]` rows so JSON output is deterministic.
    #[serde(with = "table_entries")]
    pub entries: HashMap<(u32, u64), usize>,
    pub default: usize,
}

impl TableStrategy {
    pub fn key(step: usize, running_sum: f64) -> (u32, u64) {
        (step as u32, running_sum.to_bits())
    }
}

mod table_entries {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::HashMap;

    pub fn serialize<S: Serializer>(
        map: &HashMap<(u32, u64), usize>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let mut rows: Vec<(u32, u64, usize)> =
            map.iter().map(|(&(step, bits), &idx)| (step, bits, idx)).collect();
        rows.sort_unstable();
        rows.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<HashMap<(u32, u64), usize>, D::Error> {
        let rows = Vec::<(u32, u64, usize)>::deserialize(de)?;
        Ok(rows.into_iter().map(|(step, bits, idx)| ((step, bits), idx)).collect())
    }
}

impl Strategy {
    /// Check that every index the strategy can produce is in range.
    pub fn validate(&self, len: usize) -> Result<(), SeqError> {
        let check = |index: usize| {
            if index >= len {
                Err(SeqError::BadIndex { index, len })
            } else {
                Ok(())
            }
        };
        match self {
            Strategy::Constant { index } => check(*index),
            Strategy::RoundRobin => Ok(()),
            Strategy::Threshold { lo, hi } => check(*lo).and(check(*hi)),
            Strategy::LastSign { neg, pos } => check(*neg).and(check(*pos)),
            Strategy::Table(t) => {
                check(t.default)?;
                for &v in t.entries.values() {
                    check(v)?;
                }
                Ok(())
            }
            Strategy::Randomized { genome } => {
                if genome.is_empty() {
                    return Err(SeqError::EmptyGenome);
                }
                genome.iter().try_for_each(|&g| check(g))
            }
        }
    }

    /// Member index for the next step.
    pub fn choose(&self, h: &HistoryView, len: usize) -> usize {
        match self {
            Strategy::Constant { index } => *index,
            Strategy::RoundRobin => (h.step - 1) % len,
            Strategy::Threshold { lo, hi } => {
                if h.running_sum < 0.0 {
                    *lo
                } else {
                    *hi
                }
            }
            Strategy::LastSign { neg, pos } => match h.last_value {
                Some(v) if v < 0.0 => *neg,
                _ => *pos,
            },
            Strategy::Table(t) => t
                .entries
                .get(&TableStrategy::key(h.step, h.running_sum))
                .copied()
                .unwrap_or(t.default),
            Strategy::Randomized { genome } => genome[(h.step - 1) % genome.len()],
        }
    }

    /// True when the choice never depends on observed values.
    pub fn is_history_free(&self) -> bool {
        matches!(
            self,
            Strategy::Constant { .. } | Strategy::RoundRobin | Strategy::Randomized { .. }
        )
    }

    /// Collapse strategies that cannot distinguish members. Used to dedup
    /// the default search family.
    pub fn canonical(self, len: usize) -> Strategy {
        if len == 1 {
            return Strategy::Constant { index: 0 };
        }
        match self {
            Strategy::Threshold { lo, hi } if lo == hi => Strategy::Constant { index: lo },
            Strategy::LastSign { neg, pos } if neg == pos => Strategy::Constant { index: neg },
            Strategy::Randomized { genome }
                if genome.windows(2).all(|w| w[0] == w[1]) =>
            {
                Strategy::Constant { index: genome[0] }
            }
            other => other,
        }
    }
}

/// A sequence model: ambiguity set, adversary, horizon, and the truncation
/// order used by downstream statistics.
#[derive(Debug, Clone)]
pub struct PathModel {
    pub theta: AmbiguitySet,
    pub strategy: Strategy,
    pub horizon: usize,
    pub truncation_r: f64,
}

impl PathModel {
    pub fn new(
        theta: AmbiguitySet,
        strategy: Strategy,
        horizon: usize,
        truncation_r: f64,
    ) -> Result<Self, SeqError> {
        if horizon == 0 {
            return Err(SeqError::ZeroHorizon);
        }
        if !(truncation_r.is_finite() && (1.0..2.0).contains(&truncation_r)) {
            return Err(SeqError::BadOrder(truncation_r));
        }
        strategy.validate(theta.len())?;
        Ok(PathModel { theta, strategy, horizon, truncation_r })
    }
}

/// One simulated path with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub chosen_indices: Vec<usize>,
    /// Compensated partial sums, `partial_sums[j-1] = x_1 + ... + x_j`.
    pub partial_sums: Vec<f64>,
}

/// Drive one path, calling `visit(step, chosen_index, value, partial_sum)`
/// after each step. The partial sum handed to the visitor is compensated;
/// the running sum shown to the strategy is plain sequential addition.
///
/// Replications are keyed by `(seed, replication)` and the draw at step `j`
/// uses counter `j`, so extending the horizon extends the same path.
pub fn run_path(
    theta: &AmbiguitySet,
    strategy: &Strategy,
    horizon: usize,
    seed: u64,
    replication: u64,
    mut visit: impl FnMut(usize, usize, f64, f64),
) {
    let len = theta.len();
    let mut last_value = None;
    let mut plain_sum = 0.0f64;
    let mut sum = KahanSum::new();
    for step in 1..=horizon {
        let view = HistoryView { step, last_value, running_sum: plain_sum };
        let idx = strategy.choose(&view, len);
        let x = theta.members()[idx].sample(seed, replication, step as u64);
        plain_sum += x;
        sum.add(x);
        last_value = Some(x);
        visit(step, idx, x, sum.value());
    }
}

/// Materialize a full path.
pub fn simulate(model: &PathModel, seed: u64, replication: u64) -> SamplePath {
    let n = model.horizon;
    let mut path = SamplePath {
        values: Vec::with_capacity(n),
        chosen_indices: Vec::with_capacity(n),
        partial_sums: Vec::with_capacity(n),
    };
    run_path(&model.theta, &model.strategy, n, seed, replication, |_, idx, x, s| {
        path.values.push(x);
        path.chosen_indices.push(idx);
        path.partial_sums.push(s);
    });
    path
}

/// The standard strategy family searched by the capacity estimator: all
/// constants, round robin, every threshold and last-sign pair, deduplicated
/// after canonicalization.
pub fn default_strategy_family(len: usize) -> Vec<Strategy> {
    let mut out: Vec<Strategy> = Vec::new();
    let mut push = |s: Strategy| {
        let c = s.canonical(len);
        if !out.contains(&c) {
            out.push(c);
        }
    };
    for index in 0..len {
        push(Strategy::Constant { index });
    }
    push(Strategy::RoundRobin);
    for lo in 0..len {
        for hi in 0..len {
            push(Strategy::Threshold { lo, hi });
        }
    }
    for neg in 0..len {
        for pos in 0..len {
            push(Strategy::LastSign { neg, pos });
        }
    }
    out
}

// ===== pseudo-independence audit =====

/// Conditional kernel: full history of values in, conditional law out.
pub trait ConditionalKernel {
    fn law(&self, history: &[f64]) -> Distribution;
}

/// The in-model kernel: apply a strategy to the history and hand back the
/// chosen member.
pub struct StrategyKernel<'a> {
    pub theta: &'a AmbiguitySet,
    pub strategy: &'a Strategy,
}

impl ConditionalKernel for StrategyKernel<'_> {
    fn law(&self, history: &[f64]) -> Distribution {
        let view = HistoryView {
            step: history.len() + 1,
            last_value: history.last().copied(),
            running_sum: history.iter().sum(),
        };
        let idx = self.strategy.choose(&view, self.theta.len());
        self.theta.members()[idx].clone()
    }
}

/// Worst conditional-expectation excursion found by an audit.
#[derive(Debug, Clone)]
pub struct AuditFinding {
    pub history: Vec<f64>,
    pub phi_index: usize,
    pub conditional: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of an exhaustive audit.
#[derive(Debug, Clone)]
pub struct AuditReport {
    /// Largest distance of any conditional expectation from the admissible
    /// interval (zero when pseudo-independence holds on every history).
    pub max_violation: f64,
    pub histories_checked: usize,
    pub worst: Option<AuditFinding>,
}

/// Enumerate every history up to `depth` steps and check that the
/// conditional expectation of each test function stays inside the interval
/// spanned by the ambiguity set. Kernels must return discrete laws so the
/// history tree is finite.
pub fn audit_kernel(
    theta: &AmbiguitySet,
    kernel: &dyn ConditionalKernel,
    phis: &[TestFunction],
    depth: usize,
) -> Result<AuditReport, SeqError> {
    if depth > MAX_AUDIT_DEPTH {
        return Err(SeqError::DepthTooLarge(depth));
    }
    let bounds: Vec<(f64, f64)> = phis.iter().map(|p| theta.expectation_interval(p)).collect();
    let mut report =
        AuditReport { max_violation: 0.0, histories_checked: 0, worst: None };
    let mut history: Vec<f64> = Vec::with_capacity(depth);
    let mut nodes = 0usize;
    fn descend(
        kernel: &dyn ConditionalKernel,
        phis: &[TestFunction],
        bounds: &[(f64, f64)],
        depth: usize,
        history: &mut Vec<f64>,
        nodes: &mut usize,
        report: &mut AuditReport,
    ) -> Result<(), SeqError> {
        *nodes += 1;
        if *nodes > AUDIT_NODE_BUDGET {
            return Err(SeqError::AuditBudget(AUDIT_NODE_BUDGET));
        }
        let law = kernel.law(history);
        report.histories_checked += 1;
        for (i, phi) in phis.iter().enumerate() {
            let cond = law.expect(phi);
            let (lo, hi) = bounds[i];
            let excess = (cond - hi).max(lo - cond).max(0.0);
            if excess > report.max_violation {
                report.max_violation = excess;
                report.worst = Some(AuditFinding {
                    history: history.clone(),
                    phi_index: i,
                    conditional: cond,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        if history.len() + 1 < depth {
            let support = law.support_points().ok_or(SeqError::ContinuousAudit)?;
            for (v, _) in support {
                history.push(v);
                descend(kernel, phis, bounds, depth, history, nodes, report)?;
                history.pop();
            }
        } else if history.len() + 1 == depth {
            // leaf conditional laws were already checked above; nothing to
            // branch into
        }
        Ok(())
    }
    if depth > 0 {
        descend(kernel, phis, &bounds, depth, &mut history, &mut nodes, &mut report)?;
    }
    Ok(report)
}

/// Audit the kernel induced by a strategy over the model's own ambiguity
/// set. This must report zero violation for every admissible strategy.
pub fn pseudo_independence_audit(
    theta: &AmbiguitySet,
    strategy: &Strategy,
    phis: &[TestFunction],
    depth: usize,
) -> Result<AuditReport, SeqError> {
    strategy.validate(theta.len())?;
    audit_kernel(theta, &StrategyKernel { theta, strategy }, phis, depth)
}
