//! Upper probabilities of path events.
//!
//! The upper probability of a path event is the supremum of its probability
//! over every adaptive member-selection rule. On small discrete trees that
//! supremum is computed exactly by backward induction (at each history the
//! best member is picked; a deterministic rule attains the sup because the
//! per-node objective is linear in the selection). At scale it is lower
//! bounded by Monte Carlo over a finite strategy family.

use crate::ambiguity::AmbiguitySet;
use crate::distributions::DistError;
use crate::rng;
use crate::sequences::{run_path, SeqError, Strategy, TableStrategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CapError {
    #[error("exact evaluation needs discrete members")]
    NotDiscrete,
    #[error("horizon {n} exceeds the exact-evaluation maximum of {max}")]
    HorizonTooLarge { n: usize, max: usize },
    #[error("state space exceeded {limit} nodes")]
    StateBudget { limit: usize },
    #[error("invalid event: {0}")]
    BadEvent(&'static str),
    #[error("needs at least {min} replications, got {got}")]
    TooFewReplications { got: u64, min: u64 },
    #[error("estimates are not comparable: {0}")]
    Mismatch(&'static str),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// Largest horizon the exact evaluator accepts.
pub const MAX_EXACT_HORIZON: usize = 12;

const STATE_BUDGET: usize = 2_000_000;

/// Minimum Monte Carlo replications for a search estimate.
pub const MIN_REPLICATIONS: u64 = 100;

/// Terminal event on a path, evaluated from the final sum and the scenario
/// constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathEvent {
    /// `(S_n - n * lower_center) / n^{1/r} <= -epsilon`
    LowerDev { epsilon: f64 },
    /// `(S_n - n * upper_center) / n^{1/r} >= epsilon`
    UpperDev { epsilon: f64 },
    /// Either deviation.
    UnionDev { epsilon: f64 },
    /// `mu_lo - epsilon < S_n / n < mu_hi + epsilon`
    Band { mu_lo: f64, mu_hi: f64, epsilon: f64 },
    /// `S_n >= threshold`
    CustomThreshold { threshold: f64 },
    /// Set complement of the inner event.
    Complement { inner: Box<PathEvent> },
}

/// Scenario constants a [`PathEvent`] is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventContext {
    pub n: usize,
    /// `n^{1/r}`
    pub norm: f64,
    /// Largest member mean.
    pub upper_center: f64,
    /// Smallest member mean.
    pub lower_center: f64,
}

impl EventContext {
    pub fn new(theta: &AmbiguitySet, n: usize, r: f64) -> Result<Self, CapError> {
        if n == 0 {
            return Err(CapError::ZeroHorizon);
        }
        Ok(EventContext {
            n,
            norm: (n as f64).powf(1.0 / r),
            upper_center: theta.upper_mean()?,
            lower_center: theta.lower_mean()?,
        })
    }
}

impl PathEvent {
    pub fn validate(&self) -> Result<(), CapError> {
        match self {
            PathEvent::LowerDev { epsilon }
            | PathEvent::UpperDev { epsilon }
            | PathEvent::UnionDev { epsilon } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return Err(CapError::BadEvent("epsilon must be positive"));
                }
            }
            PathEvent::Band { mu_lo, mu_hi, epsilon } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return Err(CapError::BadEvent("epsilon must be positive"));
                }
                if !(mu_lo.is_finite() && mu_hi.is_finite() && mu_lo <= mu_hi) {
                    return Err(CapError::BadEvent("band needs mu_lo <= mu_hi"));
                }
            }
            PathEvent::CustomThreshold { threshold } => {
                if !threshold.is_finite() {
                    return Err(CapError::BadEvent("threshold must be finite"));
                }
            }
            PathEvent::Complement { inner } => inner.validate()?,
        }
        Ok(())
    }

    /// Complement event, unwrapping double negation.
    pub fn complement(&self) -> PathEvent {
        match self {
            PathEvent::Complement { inner } => (**inner).clone(),
            other => PathEvent::Complement { inner: Box::new(other.clone()) },
        }
    }

    /// Does the event hold for a path with this final sum?
    pub fn holds(&self, final_sum: f64, ctx: &EventContext) -> bool {
        match self {
            PathEvent::LowerDev { epsilon } => {
                (final_sum - ctx.n as f64 * ctx.lower_center) / ctx.norm <= -epsilon
            }
            PathEvent::UpperDev { epsilon } => {
                (final_sum - ctx.n as f64 * ctx.upper_center) / ctx.norm >= *epsilon
            }
            PathEvent::UnionDev { epsilon } => {
                PathEvent::LowerDev { epsilon: *epsilon }.holds(final_sum, ctx)
                    || PathEvent::UpperDev { epsilon: *epsilon }.holds(final_sum, ctx)
            }
            PathEvent::Band { mu_lo, mu_hi, epsilon } => {
                let avg = final_sum / ctx.n as f64;
                *mu_lo - *epsilon < avg && avg < *mu_hi + *epsilon
            }
            PathEvent::CustomThreshold { threshold } => final_sum >= *threshold,
            PathEvent::Complement { inner } => !inner.holds(final_sum, ctx),
        }
    }

    /// Short comma-free label for report columns.
    pub fn describe(&self) -> String {
        match self {
            PathEvent::LowerDev { epsilon } => format!("lower_dev({epsilon})"),
            PathEvent::UpperDev { epsilon } => format!("upper_dev({epsilon})"),
            PathEvent::UnionDev { epsilon } => format!("union_dev({epsilon})"),
            PathEvent::Band { mu_lo, mu_hi, epsilon } => {
                format!("band({mu_lo}..{mu_hi}+-{epsilon})")
            }
            PathEvent::CustomThreshold { threshold } => format!("threshold({threshold})"),
            PathEvent::Complement { inner } => format!("not({})", inner.describe()),
        }
    }
}

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ExactDp,
    StrategySearch,
}

impl EstimateMethod {
    pub fn label(self) -> &'static str {
        match self {
            EstimateMethod::ExactDp => "exact_dp",
            EstimateMethod::StrategySearch => "strategy_search",
        }
    }
}

/// Upper-probability estimate with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    /// A strategy attaining (exact) or realizing (search) the value.
    pub best_strategy: Strategy,
    /// Binomial standard error; zero for exact evaluation.
    pub mc_stderr: f64,
    /// Strategies evaluated by search; zero for exact evaluation, which
    /// covers every adaptive strategy implicitly.
    pub strategies_searched: usize,
    pub horizon: usize,
}

/// Lower probability of the first event from the capacity of its
/// complement: `nu(A) = 1 - V(A^c)`. With exact inputs the conjugacy
/// identity `V(A) + nu(A^c) = 1` then holds without error.
pub fn conjugate_lower(
    est: &CapacityEstimate,
    est_complement: &CapacityEstimate,
) -> Result<f64, CapError> {
    if est.horizon != est_complement.horizon {
        return Err(CapError::Mismatch("estimates come from different horizons"));
    }
    if est.method != est_complement.method {
        return Err(CapError::Mismatch("estimates mix exact and search methods"));
    }
    Ok(1.0 - est_complement.value)
}

struct Dp<'a> {
    supports: Vec<Vec<(f64, f64)>>,
    n: usize,
    event: &'a PathEvent,
    ctx: &'a EventContext,
    maximize: bool,
    /// value and best member index per `(depth, sum-bits)` state
    memo: HashMap<(u32, u64), (f64, usize)>,
}

impl Dp<'_> {
    fn value(&mut self, depth: usize, sum: f64) -> Result<f64, CapError> {
        if depth == self.n {
            return Ok(if self.event.holds(sum, self.ctx) { 1.0 } else { 0.0 });
        }
        let key = (depth as u32, sum.to_bits());
        if let Some(&(v, _)) = self.memo.get(&key) {
            return Ok(v);
        }
        let mut best = if self.maximize { f64::NEG_INFINITY } else { f64::INFINITY };
        let mut best_idx = 0usize;
        for k in 0..self.supports.len() {
            // plain sequential accumulation in support order: the same
            // arithmetic the simulator's running sum performs, so table
            // lookups key on identical bits
            let mut acc = 0.0f64;
            for i in 0..self.supports[k].len() {
                let (v, p) = self.supports[k][i];
                let child = self.value(depth + 1, sum + v)?;
                acc += p * child;
            }
            let better = if self.maximize { acc > best } else { acc < best };
            if better {
                best = acc;
                best_idx = k;
            }
        }
        if self.memo.len() >= STATE_BUDGET {
            return Err(CapError::StateBudget { limit: STATE_BUDGET });
        }
        self.memo.insert(key, (best, best_idx));
        Ok(best)
    }
}

fn exact_extremal_prob(
    theta: &AmbiguitySet,
    event: &PathEvent,
    ctx: &EventContext,
    maximize: bool,
) -> Result<CapacityEstimate, CapError> {
    event.validate()?;
    if !theta.is_discrete() {
        return Err(CapError::NotDiscrete);
    }
    if ctx.n > MAX_EXACT_HORIZON {
        return Err(CapError::HorizonTooLarge { n: ctx.n, max: MAX_EXACT_HORIZON });
    }
    let supports: Vec<Vec<(f64, f64)>> = theta
        .members()
        .iter()
        .map(|d| d.support_points().expect("discrete member"))
        .collect();
    let mut dp = Dp { supports, n: ctx.n, event, ctx, maximize, memo: HashMap::new() };
    let value = dp.value(0, 0.0)?;
    debug_assert!((-1e-9..=1.0 + 1e-9).contains(&value));
    let mut entries = HashMap::with_capacity(dp.memo.len());
    for (&(depth, bits), &(_, idx)) in &dp.memo {
        entries.insert((depth + 1, bits), idx);
    }
    Ok(CapacityEstimate {
        value,
        method: EstimateMethod::ExactDp,
        best_strategy: Strategy::Table(TableStrategy { entries, default: 0 }),
        mc_stderr: 0.0,
        strategies_searched: 0,
        horizon: ctx.n,
    })
}

/// Exact upper probability by backward induction over every adaptive
/// strategy. Requires discrete members and `n <=` [`MAX_EXACT_HORIZON`];
/// errors out if the `(step, partial-sum)` state space exceeds the budget.
/// The returned strategy is the maximizing selection rule as a lookup table.
pub fn exact_upper_prob(
    theta: &AmbiguitySet,
    event: &PathEvent,
    ctx: &EventContext,
) -> Result<CapacityEstimate, CapError> {
    exact_extremal_prob(theta, event, ctx, true)
}

/// Exact lower probability (the infimum over adaptive strategies). Equals
/// `1 -` [`exact_upper_prob`] of the complement up to roundoff, which makes
/// it a useful independent route for conjugacy checks.
pub fn exact_lower_prob(
    theta: &AmbiguitySet,
    event: &PathEvent,
    ctx: &EventContext,
) -> Result<CapacityEstimate, CapError> {
    exact_extremal_prob(theta, event, ctx, false)
}

/// Search family shape: the deduplicated standard family plus some fixed
/// pseudorandom genomes.
#[derive(Debug, Clone, Copy)]
pub struct StrategySearchConfig {
    pub random_genomes: usize,
    pub genome_length: usize,
}

impl Default for StrategySearchConfig {
    fn default() -> Self {
        StrategySearchConfig { random_genomes: 8, genome_length: 16 }
    }
}

const GENOME_STREAM: u64 = 0x5ee1_ab1e_0060_0d1e;

/// Build the search family for a `len`-member set: constants, round robin,
/// threshold and last-sign pairs, and deterministic pseudorandom genomes.
pub fn search_family(len: usize, cfg: &StrategySearchConfig, seed: u64) -> Vec<Strategy> {
    let mut family = crate::sequences::default_strategy_family(len);
    for g in 0..cfg.random_genomes {
        let genome: Vec<usize> = (0..cfg.genome_length.max(1))
            .map(|i| (rng::draw_u64(seed ^ GENOME_STREAM, g as u64, i as u64) % len as u64) as usize)
            .collect();
        let s = Strategy::Randomized { genome }.canonical(len);
        if !family.contains(&s) {
            family.push(s);
        }
    }
    family
}

/// Monte Carlo lower bound on the upper probability: evaluate each strategy
/// in the family over common random numbers and keep the best. The true
/// supremum ranges over all adaptive strategies, so the result is a lower
/// bound up to Monte Carlo noise, never an exact capacity.
///
/// Replications are keyed by `(seed, replication)`; hit counts are integers
/// reduced associatively, so the result does not depend on thread count.
pub fn search_upper_prob(
    theta: &AmbiguitySet,
    event: &PathEvent,
    ctx: &EventContext,
    family: &[Strategy],
    replications: u64,
    seed: u64,
) -> Result<CapacityEstimate, CapError> {
    event.validate()?;
    if replications < MIN_REPLICATIONS {
        return Err(CapError::TooFewReplications { got: replications, min: MIN_REPLICATIONS });
    }
    if family.is_empty() {
        return Err(CapError::Mismatch("empty strategy family"));
    }
    let n = ctx.n;
    let mut best_hits = 0u64;
    let mut best: Option<&Strategy> = None;
    for strategy in family {
        strategy.validate(theta.len())?;
        let hits: u64 = (0..replications)
            .into_par_iter()
            .map(|rep| {
                let mut last = 0.0f64;
                run_path(theta, strategy, n, seed, rep, |_, _, _, s| last = s);
                u64::from(event.holds(last, ctx))
            })
            .sum();
        if best.is_none() || hits > best_hits {
            best_hits = hits;
            best = Some(strategy);
        }
    }
    let p = best_hits as f64 / replications as f64;
    let stderr = (p * (1.0 - p) / replications as f64).sqrt();
    Ok(CapacityEstimate {
        value: p,
        method: EstimateMethod::StrategySearch,
        best_strategy: best.expect("non-empty family").clone(),
        mc_stderr: stderr,
        strategies_searched: family.len(),
        horizon: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    // proptest's prelude also exports a `Strategy` trait
    use crate::sequences::Strategy;

    fn bern(p: f64) -> Distribution {
        Distribution::discrete(vec![(0.0, 1.0 - p), (1.0, p)]).unwrap()
    }

    fn bern_pair() -> AmbiguitySet {
        AmbiguitySet::new(vec![bern(0.3), bern(0.7)]).unwrap()
    }

    fn signs() -> AmbiguitySet {
        AmbiguitySet::new(vec![
            Distribution::point_mass(-1.0),
            Distribution::point_mass(1.0),
        ])
        .unwrap()
    }

    fn ctx(theta: &AmbiguitySet, n: usize) -> EventContext {
        EventContext::new(theta, n, 1.0).unwrap()
    }

    #[test]
    fn deterministic_members_reach_their_sum() {
        let theta = signs();
        let c = ctx(&theta, 2);
        let hit = PathEvent::CustomThreshold { threshold: 2.0 };
        let up = exact_upper_prob(&theta, &hit, &c).unwrap();
        assert_eq!(up.value, 1.0);
        assert_eq!(up.mc_stderr, 0.0);
        // lower probability of the same event via the complement capacity
        let comp = exact_upper_prob(&theta, &hit.complement(), &c).unwrap();
        assert_eq!(conjugate_lower(&up, &comp).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_pair_two_steps() {
        let theta = bern_pair();
        let c = ctx(&theta, 2);
        let event = PathEvent::CustomThreshold { threshold: 2.0 };
        let est = exact_upper_prob(&theta, &event, &c).unwrap();
        assert_eq!(est.value, 0.7 * 0.7);
        assert_eq!(est.method, EstimateMethod::ExactDp);
        // nu(A^c) = 1 - V(A) = 0.51
        let est_c = exact_upper_prob(&theta, &event.complement(), &c).unwrap();
        let nu = conjugate_lower(&est_c, &est).unwrap();
        assert_abs_diff_eq!(nu, 0.51, epsilon = 1e-15);
    }

    #[test]
    fn one_step_conjugacy_is_exact() {
        let theta = bern_pair();
        let c = ctx(&theta, 1);
        let event = PathEvent::CustomThreshold { threshold: 1.0 };
        let v = exact_upper_prob(&theta, &event, &c).unwrap();
        assert_eq!(v.value, 0.7);
        let v_comp = exact_upper_prob(&theta, &event.complement(), &c).unwrap();
        let nu_comp = conjugate_lower(&v_comp, &v).unwrap();
        assert_abs_diff_eq!(nu_comp, 0.3, epsilon = 1e-15);
        // V(A) + nu(A^c) = 1 with no roundoff at all
        assert_eq!(v.value + nu_comp, 1.0);
    }

    #[test]
    fn min_dp_agrees_with_complement_route() {
        // inf over strategies of P(A^c) must equal 1 - sup P(A)
        let theta = bern_pair();
        for n in 1..=6 {
            let c = ctx(&theta, n);
            for t in 0..=n {
                let event = PathEvent::CustomThreshold { threshold: t as f64 };
                let hi = exact_upper_prob(&theta, &event, &c).unwrap();
                let lo = exact_lower_prob(&theta, &event.complement(), &c).unwrap();
                assert_abs_diff_eq!(lo.value, 1.0 - hi.value, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn monotone_event_gets_a_constant_maximizer() {
        let theta = bern_pair();
        let c = ctx(&theta, 8);
        let event = PathEvent::CustomThreshold { threshold: 8.0 };
        let est = exact_upper_prob(&theta, &event, &c).unwrap();
        let expected = (0..8).fold(1.0f64, |acc, _| 0.7 * acc);
        assert_eq!(est.value, expected);
        // on every state that can still win (all ones so far) the table must
        // pick the higher-mean member; dead states tie at zero and break low
        match &est.best_strategy {
            Strategy::Table(t) => {
                assert!(!t.entries.is_empty());
                for depth in 0..8u32 {
                    let key = (depth + 1, (depth as f64).to_bits());
                    assert_eq!(t.entries.get(&key), Some(&1), "state {key:?}");
                }
            }
            other => panic!("expected a table strategy, got {other:?}"),
        }
    }

    #[test]
    fn dp_value_is_monotone_and_subadditive() {
        let theta = bern_pair();
        let c = ctx(&theta, 3);
        let tighter = PathEvent::CustomThreshold { threshold: 2.0 };
        let looser = PathEvent::CustomThreshold { threshold: 1.0 };
        let vt = exact_upper_prob(&theta, &tighter, &c).unwrap().value;
        let vl = exact_upper_prob(&theta, &looser, &c).unwrap().value;
        assert!(vt <= vl);
        // union of deviations against the sum of the sides
        let eps = 0.25;
        let union = PathEvent::UnionDev { epsilon: eps };
        let lower = PathEvent::LowerDev { epsilon: eps };
        let upper = PathEvent::UpperDev { epsilon: eps };
        let vu = exact_upper_prob(&theta, &union, &c).unwrap().value;
        let vlo = exact_upper_prob(&theta, &lower, &c).unwrap().value;
        let vhi = exact_upper_prob(&theta, &upper, &c).unwrap().value;
        assert!(vu <= vlo + vhi + 1e-15);
        assert!(vu >= vlo.max(vhi) - 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dp_monotone_in_threshold(
            p1 in 0.05f64..0.95,
            p2 in 0.05f64..0.95,
            n in 1usize..5,
        ) {
            let theta = AmbiguitySet::new(vec![bern(p1), bern(p2)]).unwrap();
            let c = ctx(&theta, n);
            let mut prev = 1.0f64;
            for t in 0..=n {
                let ev = PathEvent::CustomThreshold { threshold: t as f64 };
                let v = exact_upper_prob(&theta, &ev, &c).unwrap().value;
                prop_assert!(v <= prev + 1e-15);
                prop_assert!((-1e-15..=1.0 + 1e-15).contains(&v));
                prev = v;
            }
        }
    }

    #[test]
    fn state_budget_overflow_detected() {
        // 32 incommensurate atoms: the number of distinct partial sums grows
        // like the number of multisets, which passes two million within the
        // first few levels
        let atoms: Vec<(f64, f64)> = (0..32)
            .map(|j| (j as f64 + 1.0 / (j as f64 + 2.0), 1.0 / 32.0))
            .collect();
        let d = Distribution::discrete(atoms).unwrap();
        let theta = AmbiguitySet::singleton(d).unwrap();
        let c = ctx(&theta, 12);
        let event = PathEvent::CustomThreshold { threshold: 6.0 };
        assert!(matches!(
            exact_upper_prob(&theta, &event, &c),
            Err(CapError::StateBudget { .. })
        ));
    }

    #[test]
    fn exact_rejects_continuous_and_long_horizons() {
        let heavy = AmbiguitySet::singleton(
            Distribution::symmetric_pareto(1.9, 1.0).unwrap(),
        )
        .unwrap();
        let c = EventContext::new(&heavy, 2, 1.5).unwrap();
        let event = PathEvent::CustomThreshold { threshold: 0.0 };
        assert!(matches!(
            exact_upper_prob(&heavy, &event, &c),
            Err(CapError::NotDiscrete)
        ));
        let theta = bern_pair();
        let c13 = ctx(&theta, 13);
        assert!(matches!(
            exact_upper_prob(&theta, &event, &c13),
            Err(CapError::HorizonTooLarge { .. })
        ));
    }

    #[test]
    fn search_certain_event_is_one_everywhere() {
        let theta = bern_pair();
        let c = ctx(&theta, 5);
        let certain = PathEvent::CustomThreshold { threshold: -1.0 };
        let family = search_family(2, &StrategySearchConfig::default(), 7);
        let est = search_upper_prob(&theta, &certain, &c, &family, 500, 7).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.method, EstimateMethod::StrategySearch);
        assert_eq!(est.strategies_searched, family.len());
    }

    #[test]
    fn search_tracks_exact_value() {
        let theta = bern_pair();
        let c = ctx(&theta, 8);
        let event = PathEvent::CustomThreshold { threshold: 8.0 };
        let exact = exact_upper_prob(&theta, &event, &c).unwrap();
        let family = search_family(2, &StrategySearchConfig::default(), 11);
        let est = search_upper_prob(&theta, &event, &c, &family, 20_000, 11).unwrap();
        // search is a lower bound up to noise, and should land close here
        assert!(est.value <= exact.value + 4.0 * est.mc_stderr);
        assert!((est.value - exact.value).abs() <= 3.0 * est.mc_stderr.max(1e-4));
    }

    #[test]
    fn search_is_strategy_invariant_for_singletons() {
        let theta = AmbiguitySet::singleton(
            Distribution::discrete(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
        )
        .unwrap();
        let c = ctx(&theta, 50);
        let event = PathEvent::CustomThreshold { threshold: 4.0 };
        let a = search_upper_prob(
            &theta,
            &event,
            &c,
            &[Strategy::Constant { index: 0 }],
            2_000,
            3,
        )
        .unwrap();
        let b =
            search_upper_prob(&theta, &event, &c, &[Strategy::RoundRobin], 2_000, 3).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn search_respects_minimum_replications() {
        let theta = bern_pair();
        let c = ctx(&theta, 3);
        let event = PathEvent::CustomThreshold { threshold: 1.0 };
        let fam = [Strategy::RoundRobin];
        assert!(matches!(
            search_upper_prob(&theta, &event, &c, &fam, 99, 0),
            Err(CapError::TooFewReplications { .. })
        ));
    }

    #[test]
    fn event_validation_and_labels() {
        assert!(PathEvent::LowerDev { epsilon: 0.0 }.validate().is_err());
        assert!(PathEvent::Band { mu_lo: 1.0, mu_hi: 0.0, epsilon: 0.1 }.validate().is_err());
        assert!(PathEvent::CustomThreshold { threshold: f64::NAN }.validate().is_err());
        let e = PathEvent::UnionDev { epsilon: 0.25 };
        assert_eq!(e.describe(), "union_dev(0.25)");
        assert_eq!(e.complement().describe(), "not(union_dev(0.25))");
        assert_eq!(e.complement().complement(), e);
        assert!(!e.describe().contains(','));
        let b = PathEvent::Band { mu_lo: 0.3, mu_hi: 0.7, epsilon: 0.25 };
        assert!(!b.describe().contains(','));
    }

    #[test]
    fn band_event_evaluation() {
        let theta = bern_pair();
        let c = ctx(&theta, 4);
        let band = PathEvent::Band { mu_lo: 0.3, mu_hi: 0.7, epsilon: 0.3 };
        // average of 4 zeros = 0 is just inside (0.0, 1.0)
        assert!(band.holds(0.1, &c));
        assert!(!band.holds(0.0, &c)); // 0/4 = 0, boundary 0.3 - 0.3 is open
        assert!(band.holds(3.9, &c));
        assert!(!band.holds(4.0, &c));
    }

    #[test]
    fn deviation_events_use_their_centers() {
        let theta = bern_pair();
        let c = ctx(&theta, 4); // centers 0.7 and 0.3, norm 4
        let up = PathEvent::UpperDev { epsilon: 0.25 };
        // S = 4: (4 - 2.8)/4 = 0.3 >= 0.25
        assert!(up.holds(4.0, &c));
        assert!(!up.holds(3.0, &c));
        let lo = PathEvent::LowerDev { epsilon: 0.25 };
        // S = 0: (0 - 1.2)/4 = -0.3 <= -0.25
        assert!(lo.holds(0.0, &c));
        assert!(!lo.holds(1.0, &c));
        let both = PathEvent::UnionDev { epsilon: 0.25 };
        assert!(both.holds(0.0, &c) && both.holds(4.0, &c) && !both.holds(2.0, &c));
    }

    #[test]
    fn conjugate_lower_rejects_mismatches() {
        let theta = bern_pair();
        let event = PathEvent::CustomThreshold { threshold: 1.0 };
        let a = exact_upper_prob(&theta, &event, &ctx(&theta, 2)).unwrap();
        let b = exact_upper_prob(&theta, &event.complement(), &ctx(&theta, 3)).unwrap();
        assert!(conjugate_lower(&a, &b).is_err());
    }
}
