//! Clamp-and-decompose machinery behind the worst-case laws of large
//! numbers.
//!
//! Step `j` of a path is clamped to `[-j^{1/r}, j^{1/r}]`. Three series
//! control the normalized partial sums: the excess-mass series (how much the
//! clamp removes), the clamped-variance series (how big the clamp still is),
//! and the tail-probability budget (how often the clamp activates at all).
//! Each comes with a closed-form bound in terms of the dominating law's
//! Choquet moment; the evaluators here compute exact partial sums and report
//! honest remainders for what lies beyond the truncation point.

use crate::ambiguity::{AmbiguityError, AmbiguitySet, DominationCondition};
use crate::distributions::{DistError, Distribution};
use crate::numeric::{zeta, zeta_tail, KahanSum};
use crate::sequences::{run_path, PathModel, SamplePath};
use crate::distributions::TestFunction;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TruncError {
    #[error("truncation order must lie in [1, 2), got {0}")]
    BadOrder(f64),
    #[error("scheme order {scheme} does not match the domination order {condition}")]
    OrderMismatch { scheme: f64, condition: f64 },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Ambiguity(#[from] AmbiguityError),
    #[error("empty path")]
    EmptyPath,
    #[error("series needs at least one term")]
    EmptySeries,
    #[error("invalid scaling sequence: {0}")]
    BadScaling(&'static str),
}

/// The clamp family `Y_j = clamp(X_j, +-j^{1/r})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationScheme {
    r: f64,
}

impl TruncationScheme {
    pub fn new(r: f64) -> Result<Self, TruncError> {
        if !(r.is_finite() && (1.0..2.0).contains(&r)) {
            return Err(TruncError::BadOrder(r));
        }
        Ok(TruncationScheme { r })
    }

    pub fn order(&self) -> f64 {
        self.r
    }

    /// Clamp level at step `j`, `j^{1/r}`.
    pub fn level(&self, j: usize) -> f64 {
        (j as f64).powf(1.0 / self.r)
    }

    /// Normalizer `n^{1/r}` for partial sums at horizon `n`.
    pub fn norm(&self, n: usize) -> f64 {
        (n as f64).powf(1.0 / self.r)
    }

    pub fn truncate(&self, x: f64, j: usize) -> f64 {
        let l = self.level(j);
        x.clamp(-l, l)
    }
}

/// Which centering constant a decomposition subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// Largest member expectation.
    Upper,
    /// Smallest member expectation.
    Lower,
}

/// Evaluated series with its closed-form bound.
#[derive(Debug, Clone)]
pub struct SeriesReport {
    /// Truncation order the series was built with.
    pub order: f64,
    /// Per-index summands (all nonnegative).
    pub terms: Vec<f64>,
    /// Running sums of `terms` (compensated, non-decreasing).
    pub partial_sums: Vec<f64>,
    /// Closed-form bound on the full infinite series; infinite when no
    /// finite bound is claimed.
    pub closed_form_bound: f64,
    /// Upper bound on the mass beyond the last computed index.
    pub remainder: f64,
    /// Bound is finite and the remainder is a small fraction of it.
    pub converged: bool,
    /// Cesaro averages `partial_sums[j]/j`, reported for order-1 excess
    /// series where the raw sum may diverge but the average must vanish.
    pub cesaro: Option<Vec<f64>>,
}

impl SeriesReport {
    fn assemble(
        order: f64,
        terms: Vec<f64>,
        closed_form_bound: f64,
        remainder: f64,
        cesaro: bool,
    ) -> Self {
        let mut sums = Vec::with_capacity(terms.len());
        let mut acc = KahanSum::new();
        for &t in &terms {
            acc.add(t);
            sums.push(acc.value());
        }
        // certified convergence: everything the series could still add keeps
        // it under its finite bound
        let last = sums.last().copied().unwrap_or(0.0);
        let converged = closed_form_bound.is_finite()
            && remainder.is_finite()
            && last + remainder <= closed_form_bound;
        let cesaro = cesaro.then(|| {
            sums.iter().enumerate().map(|(i, s)| s / (i + 1) as f64).collect()
        });
        SeriesReport {
            order,
            terms,
            partial_sums: sums,
            closed_form_bound,
            remainder,
            converged,
            cesaro,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn final_partial_sum(&self) -> f64 {
        *self.partial_sums.last().expect("non-empty series")
    }

    /// CSV rows `(N, partial_sum, bound, remainder)`. The remainder column
    /// at row `j` covers everything past `j`: the still-computed terms plus
    /// the closed-form tail beyond the final index. Long series are thinned
    /// to roughly logarithmic checkpoints.
    pub fn to_csv(&self) -> String {
        let n = self.terms.len();
        let mut out = String::from("N,partial_sum,bound,remainder\n");
        let mut emit: Vec<usize> = if n <= 200 {
            (1..=n).collect()
        } else {
            let mut idx: Vec<usize> = (1..=100).collect();
            idx.extend(crate::numeric::log_spaced(100.0, n as f64, 120).iter().map(|&x| {
                (x.round() as usize).clamp(1, n)
            }));
            idx.push(n);
            idx.sort_unstable();
            idx.dedup();
            idx
        };
        emit.retain(|&j| j >= 1 && j <= n);
        let last = self.final_partial_sum();
        for j in emit {
            let s = self.partial_sums[j - 1];
            let rem = (last - s) + self.remainder;
            out.push_str(&format!("{},{},{},{}\n", j, s, self.closed_form_bound, rem));
        }
        out
    }
}

fn check_orders(scheme: &TruncationScheme, cond: &DominationCondition) -> Result<(), TruncError> {
    if scheme.order() != cond.order {
        return Err(TruncError::OrderMismatch { scheme: scheme.order(), condition: cond.order });
    }
    Ok(())
}

/// `(alpha, effective scale, |shift|)` when the law has a Pareto base.
fn heavy_shape(d: &Distribution) -> Option<(f64, f64, f64)> {
    if d.is_discrete() {
        return None;
    }
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
    fn scale_of(d: &Distribution) -> f64 {
        match d {
            Distribution::SymmetricPareto { scale, .. } => *scale,
            Distribution::Shifted { base, .. } | Distribution::Scaled { base, .. } => {
                scale_of(base)
            }
            Distribution::Discrete { .. } => unreachable!(),
        }
    }
    let (a, b) = affine(d);
    Some((d.tail_index(), a.abs() * scale_of(d), b.abs()))
}

/// Largest support magnitude of a discrete law.
fn discrete_radius(d: &Distribution) -> f64 {
    d.support_points()
        .expect("discrete law")
        .iter()
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max)
}

/// Tail bound on `sum_{j > n} max_theta E[(|X| - j^{1/r})^+] / j^{1/r}`.
fn excess_series_remainder(theta: &AmbiguitySet, scheme: &TruncationScheme, n: usize) -> f64 {
    let r = scheme.order();
    let mut total = 0.0;
    for d in theta.members() {
        match heavy_shape(d) {
            None => {
                // clamp levels eventually exceed the support radius
                let radius = discrete_radius(d);
                let j_stop = radius.powf(r).ceil() as usize + 1;
                let mut acc = KahanSum::new();
                for j in (n + 1)..=j_stop.max(n) {
                    let l = scheme.level(j);
                    acc.add(d.expected_excess(l).unwrap_or(0.0) / l);
                }
                total += acc.value();
            }
            Some((alpha, seff, c)) => {
                if alpha <= 1.0 {
                    return f64::INFINITY;
                }
                let l_min = scheme.level(n + 1);
                if l_min <= c + seff {
                    return f64::INFINITY; // clamp levels still inside the core
                }
                // E[(|X|-L)^+] <= seff^alpha (L-c)^{1-alpha} / (alpha-1),
                // so each term is at most K j^{-alpha/r}
                let k = seff.powf(alpha) / (alpha - 1.0) * (1.0 - c / l_min).powf(1.0 - alpha);
                total += k * zeta_tail(alpha / r, n as u64 + 1);
            }
        }
    }
    total
}

/// Tail bound on `sum_{j > n} max_theta E[min(X^2, j^{2/r})] / j^{2/r}`.
fn variance_series_remainder(theta: &AmbiguitySet, scheme: &TruncationScheme, n: usize) -> f64 {
    let r = scheme.order();
    let from = n as u64 + 1;
    let mut total = 0.0;
    for d in theta.members() {
        match heavy_shape(d) {
            None => {
                let m = discrete_radius(d);
                total += m * m * zeta_tail(2.0 / r, from);
            }
            Some((alpha, seff, c)) => {
                // E[min(X^2, L^2)] <= 2c^2 + 2 seff^2 + 4 seff^a/(2-a) L^{2-a}
                // for any tail exponent a <= alpha with a < 2
                let a = if alpha < 2.0 { alpha } else { 0.5 * (2.0 + r) };
                let flat = 2.0 * c * c + 2.0 * seff * seff;
                let grow = 4.0 * seff.powf(a) / (2.0 - a);
                total += flat * zeta_tail(2.0 / r, from) + grow * zeta_tail(a / r, from);
            }
        }
    }
    total
}

/// Tail bound on `sum_{j > n} max_theta P(|X| >= j^{1/r})`.
fn tail_series_remainder(theta: &AmbiguitySet, scheme: &TruncationScheme, n: usize) -> f64 {
    let r = scheme.order();
    let mut total = 0.0;
    for d in theta.members() {
        match heavy_shape(d) {
            None => {
                let radius = discrete_radius(d);
                let j_stop = radius.powf(r).ceil() as usize + 1;
                let mut acc = KahanSum::new();
                for j in (n + 1)..=j_stop.max(n) {
                    acc.add(d.abs_tail_prob(scheme.level(j)));
                }
                total += acc.value();
            }
            Some((alpha, seff, c)) => {
                let l_min = scheme.level(n + 1);
                if l_min <= 2.0 * (c + seff) {
                    return f64::INFINITY;
                }
                // P(|X| >= L) <= seff^alpha (L - c)^{-alpha}
                let k = seff.powf(alpha) * (1.0 - c / l_min).powf(-alpha);
                total += k * zeta_tail(alpha / r, n as u64 + 1);
            }
        }
    }
    total
}

/// Excess-mass series. For order `r > 1` this is
/// `sum_j max_theta E[(|X| - j^{1/r})^+] / j^{1/r}`, bounded in closed form
/// by `2C/(r-1)` times the dominating law's Choquet moment of `|X|^r`.
/// For `r = 1` the raw sum may diverge; the report then carries the per-step
/// values `max_theta E[(|X| - j)^+]` (which must vanish) together with their
/// Cesaro averages, and claims no finite bound on the sum itself.
pub fn step1_series(
    theta: &AmbiguitySet,
    cond: &DominationCondition,
    scheme: &TruncationScheme,
    n: usize,
) -> Result<SeriesReport, TruncError> {
    check_orders(scheme, cond)?;
    if n == 0 {
        return Err(TruncError::EmptySeries);
    }
    let r = scheme.order();
    let r1 = r == 1.0;
    let mut terms = Vec::with_capacity(n);
    for j in 1..=n {
        let l = scheme.level(j);
        let mut worst = 0.0f64;
        for d in theta.members() {
            worst = worst.max(d.expected_excess(l)?);
        }
        terms.push(if r1 { worst } else { worst / l });
    }
    let (bound, remainder) = if r1 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let cv = cond.dominating_moment()?;
        (2.0 * cond.constant / (r - 1.0) * cv, excess_series_remainder(theta, scheme, n))
    };
    Ok(SeriesReport::assemble(r, terms, bound, remainder, r1))
}

/// Per-step closed-form bound for the order-1 excess values:
/// `C * (P(|D| >= j) + E[(|D| - j)^+])` for the dominating law `D`.
pub fn step1_perj_bound_r1(cond: &DominationCondition, j: usize) -> Result<f64, TruncError> {
    let t = j as f64;
    let tail = cond.dominating.abs_tail_prob(t);
    let integral = cond.dominating.expected_excess(t)?;
    Ok(cond.constant * (tail + integral))
}

/// Clamped-variance series `sum_j max_theta E[min(X^2, j^{2/r})] / j^{2/r}`,
/// bounded by `(1 + 4C) zeta(2/r) + (8rC/(2-r))` times the dominating
/// Choquet moment. Second moments of the clamp are exact per member, not
/// the coarser indicator-sum majorant; that majorant is checked separately
/// by [`step2_perj_indicator_bound`].
pub fn step2_series(
    theta: &AmbiguitySet,
    cond: &DominationCondition,
    scheme: &TruncationScheme,
    n: usize,
) -> Result<SeriesReport, TruncError> {
    check_orders(scheme, cond)?;
    if n == 0 {
        return Err(TruncError::EmptySeries);
    }
    let r = scheme.order();
    let mut terms = Vec::with_capacity(n);
    for j in 1..=n {
        let l = scheme.level(j);
        let mut worst = 0.0f64;
        for d in theta.members() {
            worst = worst.max(d.clamped_second_moment(l));
        }
        terms.push(worst / (l * l));
    }
    let cv = cond.dominating_moment()?;
    let c = cond.constant;
    let bound = (1.0 + 4.0 * c) * zeta(2.0 / r) + 8.0 * r * c / (2.0 - r) * cv;
    let remainder = variance_series_remainder(theta, scheme, n);
    Ok(SeriesReport::assemble(r, terms, bound, remainder, false))
}

/// The indicator-sum majorant of the clamped second moment at step `j`,
/// divided by `j^{2/r}`:
/// `(1 + 4C sum_{i<=j} i^{2/r-1} P(|D| >= i^{1/r})) / j^{2/r}`.
pub fn step2_perj_indicator_bound(
    cond: &DominationCondition,
    scheme: &TruncationScheme,
    j: usize,
) -> f64 {
    let r = scheme.order();
    let mut acc = KahanSum::new();
    acc.add(1.0);
    for i in 1..=j {
        let w = (i as f64).powf(2.0 / r - 1.0);
        acc.add(4.0 * cond.constant * w * cond.dominating.abs_tail_prob(scheme.level(i)));
    }
    acc.value() / (j as f64).powf(2.0 / r)
}

/// Tail-probability budget `sum_j max_theta P(|X_j| >= j^{1/r})`, bounded by
/// `C` times the dominating Choquet moment. A finite budget is what makes
/// the clamp activate only finitely often on almost every path.
pub fn borel_cantelli_series(
    theta: &AmbiguitySet,
    cond: &DominationCondition,
    scheme: &TruncationScheme,
    n: usize,
) -> Result<SeriesReport, TruncError> {
    check_orders(scheme, cond)?;
    if n == 0 {
        return Err(TruncError::EmptySeries);
    }
    let terms: Vec<f64> = (1..=n).map(|j| theta.upper_abs_tail(scheme.level(j))).collect();
    let cv = cond.dominating_moment()?;
    let bound = cond.constant * cv;
    let remainder = tail_series_remainder(theta, scheme, n);
    Ok(SeriesReport::assemble(scheme.order(), terms, bound, remainder, false))
}

/// How often the clamp actually fires along simulated paths.
#[derive(Debug, Clone)]
pub struct ClampActivity {
    /// Number of clamp-active steps per replication.
    pub counts: Vec<usize>,
    /// Exact expected count when the strategy is history-free (the member
    /// sequence is then deterministic and the count is a sum of independent
    /// indicators).
    pub expected: Option<f64>,
    /// Standard deviation of the count under the same condition.
    pub std_dev: Option<f64>,
}

/// Count clamp-active steps (`|x_j| >= j^{1/r}`) over replications.
pub fn clamp_activity(
    model: &PathModel,
    scheme: &TruncationScheme,
    seed: u64,
    replications: u64,
) -> ClampActivity {
    let n = model.horizon;
    let mut counts = Vec::with_capacity(replications as usize);
    for rep in 0..replications {
        let mut hits = 0usize;
        run_path(&model.theta, &model.strategy, n, seed, rep, |j, _, x, _| {
            if x.abs() >= scheme.level(j) {
                hits += 1;
            }
        });
        counts.push(hits);
    }
    let (expected, std_dev) = if model.strategy.is_history_free() {
        let mut mean = KahanSum::new();
        let mut var = KahanSum::new();
        let view_free = |step: usize| crate::sequences::HistoryView {
            step,
            last_value: None,
            running_sum: 0.0,
        };
        for j in 1..=n {
            let idx = model.strategy.choose(&view_free(j), model.theta.len());
            let p = model.theta.members()[idx].abs_tail_prob(scheme.level(j));
            mean.add(p);
            var.add(p * (1.0 - p));
        }
        (Some(mean.value()), Some(var.value().max(0.0).sqrt()))
    } else {
        (None, None)
    };
    ClampActivity { counts, expected, std_dev }
}

/// Normalized three-term decomposition of one path.
#[derive(Debug, Clone)]
pub struct DecompositionTerms {
    /// `n^{-1/r} sum_j |x_j - y_j|`: total clamp correction.
    pub t1: f64,
    /// `n^{-1/r} sum_j (y_j - c_j)` with `c_j` the chosen centering of the
    /// clamped step.
    pub t2: f64,
    /// Interval swept by `t2` as the per-step centering ranges over the
    /// member expectations of the clamp (smallest value first).
    pub t2_conditional_interval: (f64, f64),
    /// `n^{-1/r} sum_j |c_j - c|`: centering drift between the clamped and
    /// raw steps, with both constants on the same side (upper or lower).
    pub t3: f64,
    /// `n^{-1/r} sum_j max_theta E[(|X| - j^{1/r})^+]`: the closed-form
    /// majorant of `t3` (and of `E[t1]`).
    pub t3_excess_bound: f64,
}

/// Decompose a simulated path into clamp correction, centered clamped sum,
/// and centering drift, all normalized by `n^{1/r}`.
pub fn decomposition_terms(
    path: &SamplePath,
    theta: &AmbiguitySet,
    scheme: &TruncationScheme,
    center: Centering,
) -> Result<DecompositionTerms, TruncError> {
    let n = path.values.len();
    if n == 0 {
        return Err(TruncError::EmptyPath);
    }
    // raw centering constant (requires finite member means)
    let raw_center = match center {
        Centering::Upper => theta.upper_mean()?,
        Centering::Lower => theta.lower_mean()?,
    };
    let norm = scheme.norm(n);
    let mut t1 = KahanSum::new();
    let mut t2 = KahanSum::new();
    let mut t2_lo = KahanSum::new();
    let mut t2_hi = KahanSum::new();
    let mut t3 = KahanSum::new();
    let mut excess = KahanSum::new();
    for (i, &x) in path.values.iter().enumerate() {
        let j = i + 1;
        let l = scheme.level(j);
        let y = scheme.truncate(x, j);
        t1.add((x - y).abs());
        let clamp = TestFunction::clamp(-l, l).expect("level is positive");
        let (lo, hi) = theta.expectation_interval(&clamp);
        let c_j = match center {
            Centering::Upper => hi,
            Centering::Lower => lo,
        };
        t2.add(y - c_j);
        t2_lo.add(y - hi);
        t2_hi.add(y - lo);
        t3.add((c_j - raw_center).abs());
        let mut worst = 0.0f64;
        for d in theta.members() {
            worst = worst.max(d.expected_excess(l)?);
        }
        excess.add(worst);
    }
    Ok(DecompositionTerms {
        t1: t1.value() / norm,
        t2: t2.value() / norm,
        t2_conditional_interval: (t2_lo.value() / norm, t2_hi.value() / norm),
        t3: t3.value() / norm,
        t3_excess_bound: excess.value() / norm,
    })
}

/// Numerical check of the summation-to-average lemma: if the partial sums of
/// `x_k / b_k` settle down, the scaled averages `b_N^{-1} sum_{k<=N} x_k`
/// must head to zero.
#[derive(Debug, Clone)]
pub struct KroneckerReport {
    /// Partial sums of `x_k / b_k`.
    pub ratio_partial_sums: Vec<f64>,
    /// `b_N^{-1} sum_{k<=N} x_k` for each `N`.
    pub scaled_averages: Vec<f64>,
    /// Largest wobble of the ratio partial sums over their last half.
    pub ratio_tail_oscillation: f64,
    /// Ratio sums settled numerically.
    pub ratio_converged: bool,
    /// Either the ratio sums did not settle, or the scaled averages shrank
    /// as the lemma requires.
    pub consistent: bool,
}

pub fn kronecker_check(x_seq: &[f64], b_seq: &[f64]) -> Result<KroneckerReport, TruncError> {
    if x_seq.is_empty() || x_seq.len() != b_seq.len() {
        return Err(TruncError::BadScaling("need equal non-zero lengths"));
    }
    let mut prev = 0.0;
    for &b in b_seq {
        if !(b.is_finite() && b > 0.0 && b > prev) {
            return Err(TruncError::BadScaling("must be positive and strictly increasing"));
        }
        prev = b;
    }
    let n = x_seq.len();
    let mut ratio = Vec::with_capacity(n);
    let mut avg = Vec::with_capacity(n);
    let mut racc = KahanSum::new();
    let mut xacc = KahanSum::new();
    for k in 0..n {
        racc.add(x_seq[k] / b_seq[k]);
        xacc.add(x_seq[k]);
        ratio.push(racc.value());
        avg.push(xacc.value() / b_seq[k]);
    }
    let last = ratio[n - 1];
    let half = n / 2;
    let oscillation =
        ratio[half..].iter().map(|&v| (v - last).abs()).fold(0.0, f64::max);
    let ratio_converged = oscillation <= 1e-3 * (1.0 + last.abs());
    // "heads to zero" at finite N: the late averages are well below the
    // early ones, or everything is negligible outright
    let early = avg[..(n / 10).max(1)].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let late = avg[n - (n / 10).max(1)..].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let consistent = !ratio_converged || late <= 0.5 * early + 1e-9;
    Ok(KroneckerReport {
        ratio_partial_sums: ratio,
        scaled_averages: avg,
        ratio_tail_oscillation: oscillation,
        ratio_converged,
        consistent,
    })
}
