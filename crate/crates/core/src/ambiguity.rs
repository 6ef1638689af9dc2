//! Finitely generated ambiguity sets and their capacities.
//!
//! An [`AmbiguitySet`] is an ordered, non-empty list of marginal
//! distributions. Upper (lower) expectations and probabilities are maxima
//! (minima) over the members. The upper Choquet integral of `|X|^r` is the
//! moment functional that controls every truncation bound downstream.

use crate::distributions::{DistError, Distribution, TestFunction};
use crate::numeric::{integrate_piecewise, KahanSum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AmbiguityError {
    #[error("ambiguity set needs at least one member")]
    Empty,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("choquet integral diverges: tail index {tail_index} <= required exponent {required}")]
    NonIntegrableChoquet { tail_index: f64, required: f64 },
    #[error("invalid domination condition: {0}")]
    BadDomination(String),
    #[error("invalid transform: {0}")]
    BadTransform(String),
}

/// Ordered, non-empty family of marginal distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AmbiguitySet {
    members: Vec<Distribution>,
}

/// Half-line marginal events for capacity queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalEvent {
    /// `{X >= t}`
    ValueAtLeast(f64),
    /// `{X < t}`
    ValueBelow(f64),
    /// `{|X| >= t}`
    AbsAtLeast(f64),
    /// `{|X| < t}`
    AbsBelow(f64),
}

impl MarginalEvent {
    pub fn complement(self) -> Self {
        match self {
            MarginalEvent::ValueAtLeast(t) => MarginalEvent::ValueBelow(t),
            MarginalEvent::ValueBelow(t) => MarginalEvent::ValueAtLeast(t),
            MarginalEvent::AbsAtLeast(t) => MarginalEvent::AbsBelow(t),
            MarginalEvent::AbsBelow(t) => MarginalEvent::AbsAtLeast(t),
        }
    }

    fn prob(self, d: &Distribution) -> f64 {
        match self {
            MarginalEvent::ValueAtLeast(t) => d.tail_prob(t),
            MarginalEvent::ValueBelow(t) => 1.0 - d.tail_prob(t),
            MarginalEvent::AbsAtLeast(t) => d.abs_tail_prob(t),
            MarginalEvent::AbsBelow(t) => 1.0 - d.abs_tail_prob(t),
        }
    }
}

/// Upper and lower probability of one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityPair {
    pub upper: f64,
    pub lower: f64,
}

/// Transform applied to the marginal before Choquet integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChoquetTransform {
    /// Integrate `X` itself.
    Identity,
    /// Integrate `|X|^r` with `r` in `[1, 2)`.
    AbsPower { r: f64 },
}

impl ChoquetTransform {
    pub fn abs_power(r: f64) -> Result<Self, AmbiguityError> {
        if !(r.is_finite() && (1.0..2.0).contains(&r)) {
            return Err(AmbiguityError::BadTransform(format!(
                "abs_power exponent must lie in [1, 2), got {r}"
            )));
        }
        Ok(ChoquetTransform::AbsPower { r })
    }

    /// Tail index the members must exceed for the integral to converge.
    fn required_exponent(self) -> f64 {
        match self {
            ChoquetTransform::Identity => 1.0,
            ChoquetTransform::AbsPower { r } => r,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            ChoquetTransform::Identity => x,
            ChoquetTransform::AbsPower { r } => x.abs().powf(r),
        }
    }
}

impl AmbiguitySet {
    pub fn new(members: Vec<Distribution>) -> Result<Self, AmbiguityError> {
        if members.is_empty() {
            return Err(AmbiguityError::Empty);
        }
        for m in &members {
            m.validate()?;
        }
        Ok(AmbiguitySet { members })
    }

    pub fn singleton(d: Distribution) -> Result<Self, AmbiguityError> {
        AmbiguitySet::new(vec![d])
    }

    /// Re-run the constructor checks after deserialization.
    pub fn validate(&self) -> Result<(), AmbiguityError> {
        if self.members.is_empty() {
            return Err(AmbiguityError::Empty);
        }
        for m in &self.members {
            m.validate()?;
        }
        Ok(())
    }

    pub fn members(&self) -> &[Distribution] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor guarantees at least one member
    }

    /// All members have finite support.
    pub fn is_discrete(&self) -> bool {
        self.members.iter().all(Distribution::is_discrete)
    }

    /// Smallest Pareto tail index over members (infinite when all discrete).
    pub fn tail_index(&self) -> f64 {
        self.members.iter().map(Distribution::tail_index).fold(f64::INFINITY, f64::min)
    }

    // ----- expectations -----

    /// `sup` over members of `E[f(X)]`.
    pub fn upper_expectation(&self, f: &TestFunction) -> f64 {
        self.members.iter().map(|d| d.expect(f)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `inf` over members of `E[f(X)]`.
    pub fn lower_expectation(&self, f: &TestFunction) -> f64 {
        self.members.iter().map(|d| d.expect(f)).fold(f64::INFINITY, f64::min)
    }

    /// `[lower, upper]` expectation interval of a test function.
    pub fn expectation_interval(&self, f: &TestFunction) -> (f64, f64) {
        (self.lower_expectation(f), self.upper_expectation(f))
    }

    /// Largest member mean (the upper centering constant).
    pub fn upper_mean(&self) -> Result<f64, DistError> {
        let mut hi = f64::NEG_INFINITY;
        for d in &self.members {
            hi = hi.max(d.mean()?);
        }
        Ok(hi)
    }

    /// Smallest member mean (the lower centering constant).
    pub fn lower_mean(&self) -> Result<f64, DistError> {
        let mut lo = f64::INFINITY;
        for d in &self.members {
            lo = lo.min(d.mean()?);
        }
        Ok(lo)
    }

    // ----- capacities -----

    /// Upper and lower probability of a half-line event.
    pub fn marginal_capacity(&self, event: MarginalEvent) -> CapacityPair {
        let mut upper = f64::NEG_INFINITY;
        let mut lower = f64::INFINITY;
        for d in &self.members {
            let p = event.prob(d);
            upper = upper.max(p);
            lower = lower.min(p);
        }
        CapacityPair { upper, lower }
    }

    /// `max` over members of `P(X >= t)`.
    pub fn upper_tail(&self, t: f64) -> f64 {
        self.members.iter().map(|d| d.tail_prob(t)).fold(0.0, f64::max)
    }

    /// `max` over members of `P(|X| >= t)`.
    pub fn upper_abs_tail(&self, t: f64) -> f64 {
        self.members.iter().map(|d| d.abs_tail_prob(t)).fold(0.0, f64::max)
    }

    // ----- Choquet integral -----

    /// Upper Choquet integral of the transformed marginal:
    /// `int_0^inf V(g(X) >= t) dt + int_{-inf}^0 [V(g(X) >= t) - 1] dt`,
    /// where `V` is the upper probability over members.
    ///
    /// Exact piecewise-constant integration when all members are discrete;
    /// adaptive quadrature with closed-form tail error control otherwise
    /// (absolute error at most 1e-8). Errors when any member's tail index
    /// makes the integral diverge.
    pub fn choquet_upper(&self, transform: ChoquetTransform) -> Result<f64, AmbiguityError> {
        let required = transform.required_exponent();
        let idx = self.tail_index();
        if idx <= required {
            return Err(AmbiguityError::NonIntegrableChoquet { tail_index: idx, required });
        }
        if self.is_discrete() {
            Ok(self.choquet_discrete_exact(transform))
        } else {
            Ok(self.choquet_quadrature(transform))
        }
    }

    /// Transformed support of one discrete member, in the same arithmetic
    /// used everywhere else (so jump detection is bitwise consistent).
    fn transformed_support(d: &Distribution, transform: ChoquetTransform) -> Vec<(f64, f64)> {
        let pts = d.support_points().expect("discrete member");
        let mut out: Vec<(f64, f64)> =
            pts.into_iter().map(|(v, p)| (transform.apply(v), p)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
        for (v, p) in out {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        merged
    }

    fn choquet_discrete_exact(&self, transform: ChoquetTransform) -> f64 {
        let supports: Vec<Vec<(f64, f64)>> = self
            .members
            .iter()
            .map(|d| Self::transformed_support(d, transform))
            .collect();
        let upper_tail = |t: f64| -> f64 {
            supports
                .iter()
                .map(|s| {
                    let mut p = KahanSum::new();
                    for &(v, pv) in s {
                        if v >= t {
                            p.add(pv);
                        }
                    }
                    p.value().min(1.0)
                })
                .fold(0.0, f64::max)
        };
        let mut jumps: Vec<f64> = supports.iter().flatten().map(|&(v, _)| v).collect();
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        let mut total = KahanSum::new();
        // positive part: V is constant on (t_k, t_{k+1}] and zero past the
        // largest jump
        let mut prev = 0.0;
        for &t in jumps.iter().filter(|&&t| t > 0.0) {
            total.add((t - prev) * upper_tail(t));
            prev = t;
        }
        // negative part: V == 1 up to the largest member minimum
        let floor = supports
            .iter()
            .map(|s| s.first().expect("non-empty support").0)
            .fold(f64::NEG_INFINITY, f64::max)
            .min(0.0);
        let mut prev = floor;
        for &t in jumps.iter().filter(|&&t| t > floor && t <= 0.0) {
            total.add((t - prev) * (upper_tail(t) - 1.0));
            prev = t;
        }
        if prev < 0.0 {
            // no jump in (prev, 0]: the tail there equals the strict tail at prev
            let strict = self
                .members
                .iter()
                .zip(&supports)
                .map(|(_, s)| {
                    let mut p = KahanSum::new();
                    for &(v, pv) in s {
                        if v > prev {
                            p.add(pv);
                        }
                    }
                    p.value().min(1.0)
                })
                .fold(0.0, f64::max);
            total.add((0.0 - prev) * (strict - 1.0));
        }
        total.value()
    }

    fn choquet_quadrature(&self, transform: ChoquetTransform) -> f64 {
        const TOL: f64 = 1e-8;
        let tail_at = |t: f64| -> f64 {
            self.members
                .iter()
                .map(|d| match transform {
                    ChoquetTransform::Identity => d.tail_prob(t),
                    ChoquetTransform::AbsPower { r } => {
                        if t <= 0.0 {
                            1.0
                        } else {
                            d.abs_tail_prob(t.powf(1.0 / r))
                        }
                    }
                })
                .fold(0.0, f64::max)
        };
        // per-member cutoffs with closed-form remainder control
        let budget = 0.5 * TOL / self.members.len() as f64;
        let mut t_pos: f64 = 1.0;
        let mut features: Vec<f64> = vec![0.0];
        for d in &self.members {
            match d.support_points() {
                Some(pts) => {
                    for (v, _) in pts {
                        let g = transform.apply(v);
                        if g > 0.0 {
                            features.push(g);
                        }
                        t_pos = t_pos.max(g.abs() * 1.5 + 1.0);
                    }
                }
                None => {
                    let (alpha, seff, c) = pareto_shape(d);
                    match transform {
                        ChoquetTransform::Identity => {
                            // P(X >= t) <= 0.5 (seff/(t-c))^alpha beyond c+seff
                            let need = (0.5 * seff.powf(alpha) / ((alpha - 1.0) * budget))
                                .powf(1.0 / (alpha - 1.0))
                                + c;
                            t_pos = t_pos.max(need).max(2.0 * (c + seff));
                            features.push(c + seff);
                            features.push((seff - c).abs());
                        }
                        ChoquetTransform::AbsPower { r } => {
                            // P(|X|^r >= t) <= (2 seff / t^{1/r})^alpha once
                            // t^{1/r} >= 2c; integrate the power-law bound
                            let u = ((2.0 * seff).powf(alpha) * r / ((alpha - r) * budget))
                                .powf(1.0 / (alpha - r))
                                .max(2.0 * c + 2.0 * seff);
                            t_pos = t_pos.max(u.powf(r));
                            features.push((c + seff).powf(r));
                            features.push((seff - c).abs().max(f64::MIN_POSITIVE).powf(r));
                        }
                    }
                }
            }
        }
        let mut pts: Vec<f64> = features.iter().copied().filter(|&t| t < t_pos).collect();
        pts.push(t_pos);
        let mut g = 1.0_f64.min(t_pos);
        while g < t_pos {
            g *= 4.0;
            if g < t_pos {
                pts.push(g);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut total = KahanSum::new();
        total.add(integrate_piecewise(&tail_at, &pts, 0.5 * TOL));
        if matches!(transform, ChoquetTransform::Identity) {
            // negative part: (V - 1) vanishes below every member's essential
            // minimum; one well-behaved member is enough for the cutoff since
            // the integrand is a pointwise minimum over members
            let t_neg = self
                .members
                .iter()
                .map(|d| match d.support_points() {
                    Some(pts) => pts.first().expect("non-empty").0.abs() + 1.0,
                    None => {
                        let (alpha, seff, c) = pareto_shape(d);
                        (0.5 * seff.powf(alpha) / ((alpha - 1.0) * budget))
                            .powf(1.0 / (alpha - 1.0))
                            + c
                            + 2.0 * (c + seff)
                    }
                })
                .fold(f64::INFINITY, f64::min);
            let mut pts: Vec<f64> = features
                .iter()
                .map(|&t| -t)
                .chain(self.members.iter().filter_map(|d| {
                    d.support_points().map(|p| p.first().expect("non-empty").0)
                }))
                .filter(|&t| t > -t_neg && t < 0.0)
                .collect();
            pts.push(-t_neg);
            pts.push(0.0);
            let mut g = 1.0_f64.min(t_neg);
            while g < t_neg {
                g *= 4.0;
                if g < t_neg {
                    pts.push(-g);
                }
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            total.add(integrate_piecewise(&|t| tail_at(t) - 1.0, &pts, 0.5 * TOL));
        }
        total.value()
    }
}

/// `(alpha, |a| * scale, |shift|)` of a law whose base is Pareto, where the
/// law is `a * base + b` after collapsing the affine wrappers.
fn pareto_shape(d: &Distribution) -> (f64, f64, f64) {
    fn affine(d: &Distribution) -> (f64, f64) {
        match d {
            Distribution::Discrete { .. } | Distribution::SymmetricPareto { .. } => (1.0, 0.0),
            Distribution::Shifted { base, offset } => {
                let (a, b) = affine(base);
                (a, b + offset)
            }
            Distribution::Scaled { base, factor } => {
                let (a, b) = affine(base);
                (a * factor, b * factor)
            }
        }
    }
    fn base_params(d: &Distribution) -> (f64, f64) {
        match d {
            Distribution::SymmetricPareto { alpha, scale } => (*alpha, *scale),
            Distribution::Shifted { base, .. } | Distribution::Scaled { base, .. } => {
                base_params(base)
            }
            Distribution::Discrete { .. } => unreachable!("caller checked for a pareto base"),
        }
    }
    let (a, b) = affine(d);
    let (alpha, scale) = base_params(d);
    (alpha, a.abs() * scale, b.abs())
}

// ===== Domination =====

/// Uniform tail domination: `max_theta P(|X| >= t) <= C * P(|D| >= t)` for a
/// dominating law `D` with `E_choquet[|D|^r]` finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationCondition {
    #[serde(rename = "C")]
    pub constant: f64,
    pub dominating: Distribution,
    #[serde(rename = "r")]
    pub order: f64,
}

/// Result of checking a domination condition on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    /// Largest value of `max_theta P(|X| >= t) - C * P(|D| >= t)` on the grid.
    pub max_violation: f64,
    /// Grid point attaining it.
    pub worst_t: f64,
    /// True when some member's tail index is strictly below the dominating
    /// law's, in which case domination must fail far enough out regardless of
    /// what the grid shows.
    pub tail_index_violation: bool,
    pub grid_size: usize,
}

impl DominationReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_violation <= tol && !self.tail_index_violation
    }
}

impl DominationCondition {
    pub fn new(constant: f64, dominating: Distribution, order: f64) -> Result<Self, AmbiguityError> {
        if !(constant.is_finite() && constant >= 1.0) {
            return Err(AmbiguityError::BadDomination(format!(
                "constant must be >= 1, got {constant}"
            )));
        }
        if !(order.is_finite() && (1.0..2.0).contains(&order)) {
            return Err(AmbiguityError::BadDomination(format!(
                "order must lie in [1, 2), got {order}"
            )));
        }
        dominating.validate()?;
        if dominating.tail_index() <= order {
            return Err(AmbiguityError::BadDomination(format!(
                "dominating law has tail index {} <= order {}, so its r-th moment diverges",
                dominating.tail_index(),
                order
            )));
        }
        Ok(DominationCondition { constant, dominating, order })
    }

    /// Validate a deserialized condition.
    pub fn validate(&self) -> Result<(), AmbiguityError> {
        Self::new(self.constant, self.dominating.clone(), self.order).map(|_| ())
    }

    /// `E_choquet[|D|^r]` of the dominating law (a plain expectation, since
    /// the dominating law is a single distribution).
    pub fn dominating_moment(&self) -> Result<f64, AmbiguityError> {
        AmbiguitySet::singleton(self.dominating.clone())?
            .choquet_upper(ChoquetTransform::AbsPower { r: self.order })
    }

    /// Check `max_theta P(|X| >= t) <= C * P(|D| >= t)` on a log-spaced grid
    /// augmented with every discrete jump magnitude.
    pub fn verify(&self, theta: &AmbiguitySet, grid_points: usize) -> DominationReport {
        let mut grid: Vec<f64> = vec![0.0];
        let mut t_max: f64 = 100.0;
        for d in theta.members().iter().chain(std::iter::once(&self.dominating)) {
            if let Some(pts) = d.support_points() {
                for (v, _) in pts {
                    let m = v.abs();
                    grid.push(m);
                    // straddle the jump so both sides get checked
                    grid.push((m - 1e-9).max(0.0));
                    grid.push(m + 1e-9);
                    t_max = t_max.max(4.0 * m + 1.0);
                }
            } else {
                let (_, seff, c) = pareto_shape(d);
                grid.push((seff - c).abs());
                grid.push(seff + c);
                t_max = t_max.max(1e6 * (seff + c + 1.0));
            }
        }
        grid.extend(crate::numeric::log_spaced(1e-6, t_max, grid_points.max(2)));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut worst = f64::NEG_INFINITY;
        let mut worst_t = 0.0;
        for &t in &grid {
            let v = theta.upper_abs_tail(t) - self.constant * self.dominating.abs_tail_prob(t);
            if v > worst {
                worst = v;
                worst_t = t;
            }
        }
        DominationReport {
            max_violation: worst,
            worst_t,
            tail_index_violation: theta.tail_index() < self.dominating.tail_index(),
            grid_size: grid.len(),
        }
    }
}

// ===== capacity agreement =====

/// One grid point of a capacity comparison.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementPoint {
    pub t: f64,
    pub upper_x: f64,
    pub upper_y: f64,
    pub at_jump: bool,
}

/// Comparison of the upper capacities of two ambiguity sets on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub points: Vec<AgreementPoint>,
    /// Largest `|V_X - V_Y|` over grid points that are not jump points.
    pub max_mismatch_off_jump: f64,
    /// Identity Choquet integrals, when both converge.
    pub choquet_x: Option<f64>,
    pub choquet_y: Option<f64>,
}

impl AgreementReport {
    /// Capacities agree off jump points and Choquet integrals (when defined)
    /// agree within `tol`.
    pub fn agrees(&self, tol: f64) -> bool {
        if self.max_mismatch_off_jump > tol {
            return false;
        }
        match (self.choquet_x, self.choquet_y) {
            (Some(a), Some(b)) => (a - b).abs() <= tol.max(1e-7),
            _ => true,
        }
    }
}

/// Compare the upper capacities of `{X >= t}` for two ambiguity sets on the
/// given thresholds. Mismatches are tolerated only at shared jump points.
pub fn capacity_agreement(x: &AmbiguitySet, y: &AmbiguitySet, grid: &[f64]) -> AgreementReport {
    let jump_points: Vec<f64> = x
        .members()
        .iter()
        .chain(y.members().iter())
        .filter_map(Distribution::support_points)
        .flatten()
        .map(|(v, _)| v)
        .collect();
    let mut points = Vec::with_capacity(grid.len());
    let mut worst = 0.0f64;
    for &t in grid {
        let ux = x.upper_tail(t);
        let uy = y.upper_tail(t);
        let at_jump = jump_points.contains(&t);
        if !at_jump {
            worst = worst.max((ux - uy).abs());
        }
        points.push(AgreementPoint { t, upper_x: ux, upper_y: uy, at_jump });
    }
    let cx = x.choquet_upper(ChoquetTransform::Identity).ok();
    let cy = y.choquet_upper(ChoquetTransform::Identity).ok();
    AgreementReport { points, max_mismatch_off_jump: worst, choquet_x: cx, choquet_y: cy }
}
