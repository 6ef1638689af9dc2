// Helpers shared by the integration suites. Each test binary pulls in only
// what it needs.
#![allow(dead_code)]

use sublln::capacity::{EventContext, PathEvent};
use sublln::distributions::Distribution;
use sublln::rng;
use sublln::AmbiguitySet;

/// Deterministic stream of instance-generation draws, decoupled from the
/// streams the library itself consumes.
pub struct Gen {
    seed: u64,
    case: u64,
    counter: u64,
}

impl Gen {
    pub fn new(seed: u64, case: u64) -> Self {
        Gen { seed, case, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        rng::draw_u64(self.seed, self.case, self.counter)
    }

    /// Uniform draw in `0..m`.
    pub fn below(&mut self, m: u64) -> u64 {
        self.next_u64() % m
    }

    pub fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        items[self.below(items.len() as u64) as usize]
    }
}

/// Atom values the generators draw from; mixed signs and spacings so partial
/// sums collide sometimes and miss narrowly other times.
pub const ATOM_PALETTE: [f64; 10] =
    [-2.0, -1.25, -1.0, -0.5, 0.0, 0.3, 0.5, 0.75, 1.0, 2.0];

/// A discrete law with `atoms` distinct support points and dyadic
/// probabilities, so the masses sum to 1 exactly in binary arithmetic.
pub fn random_member(g: &mut Gen, atoms: usize) -> Distribution {
    assert!((2..=3).contains(&atoms));
    let mut chosen: Vec<f64> = Vec::with_capacity(atoms);
    while chosen.len() < atoms {
        let v = g.pick(&ATOM_PALETTE);
        if !chosen.contains(&v) {
            chosen.push(v);
        }
    }
    let probs: Vec<f64> = if atoms == 2 {
        let k = 1 + g.below(15);
        vec![k as f64 / 16.0, (16 - k) as f64 / 16.0]
    } else {
        let a = 1 + g.below(13);
        let b = 1 + g.below(14 - a);
        vec![a as f64 / 16.0, b as f64 / 16.0, (16 - a - b) as f64 / 16.0]
    };
    chosen.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let support: Vec<(f64, f64)> = chosen.into_iter().zip(probs).collect();
    Distribution::discrete(support).expect("generated support is valid")
}

/// An event drawn from the full grammar, sometimes wrapped in a complement.
pub fn random_event(g: &mut Gen) -> PathEvent {
    let eps = g.pick(&[0.1, 0.2, 0.25, 0.5]);
    let base = match g.below(5) {
        0 => PathEvent::LowerDev { epsilon: eps },
        1 => PathEvent::UpperDev { epsilon: eps },
        2 => PathEvent::UnionDev { epsilon: eps },
        3 => {
            let a: f64 = g.pick(&[-1.0, -0.5, 0.0, 0.25, 0.5]);
            let b: f64 = g.pick(&[-0.25, 0.0, 0.5, 0.75, 1.0]);
            PathEvent::Band { mu_lo: a.min(b), mu_hi: a.max(b), epsilon: eps }
        }
        _ => PathEvent::CustomThreshold {
            threshold: g.pick(&[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]),
        },
    };
    if g.below(4) == 0 {
        base.complement()
    } else {
        base
    }
}

/// Instance for the exhaustive-enumeration comparison: two members, both
/// with two-point supports, and a short horizon.
pub fn random_binary_instance(case: u64) -> (AmbiguitySet, PathEvent, usize) {
    let mut g = Gen::new(0xbead_cafe, case);
    let theta = AmbiguitySet::new(vec![random_member(&mut g, 2), random_member(&mut g, 2)])
        .expect("valid pair");
    let event = random_event(&mut g);
    let n = 1 + g.below(3) as usize;
    (theta, event, n)
}

/// Wider instance family for the conjugacy sweep: one to three members,
/// two or three atoms each, horizons up to six.
pub fn random_general_instance(case: u64) -> (AmbiguitySet, PathEvent, usize) {
    let mut g = Gen::new(0x0b5e_55ed, case);
    let k = 1 + g.below(3) as usize;
    let members: Vec<Distribution> = (0..k)
        .map(|_| {
            let atoms = 2 + g.below(2) as usize;
            random_member(&mut g, atoms)
        })
        .collect();
    let theta = AmbiguitySet::new(members).expect("valid set");
    let event = random_event(&mut g);
    let n = 1 + g.below(6) as usize;
    (theta, event, n)
}

/// One fixed deterministic adaptive strategy together with the tree it
/// acts on. `value` evaluates the expected indicator of `event` with the
/// same per-node arithmetic the backward-induction solver uses: children
/// visited in support order, plain `acc += p * child` accumulation.
struct FixedStrategy<'a> {
    supports: &'a [Vec<(f64, f64)>],
    sigma: &'a [usize],
    branch: usize,
    n: usize,
    event: &'a PathEvent,
    ctx: &'a EventContext,
}

impl FixedStrategy<'_> {
    fn value(&self, depth: usize, sum: f64, node: usize) -> f64 {
        if depth == self.n {
            return if self.event.holds(sum, self.ctx) { 1.0 } else { 0.0 };
        }
        let k = self.sigma[node];
        let mut acc = 0.0f64;
        for (i, &(v, p)) in self.supports[k].iter().enumerate() {
            let child = self.value(depth + 1, sum + v, node * self.branch + i + 1);
            acc += p * child;
        }
        acc
    }
}

/// Extremal event probability by brute force: enumerate every deterministic
/// history-dependent strategy on the full decision tree and take the best
/// value. Only usable when all members share one support size, so the tree
/// shape does not depend on the strategy.
pub fn oracle_extremal_prob(
    theta: &AmbiguitySet,
    event: &PathEvent,
    ctx: &EventContext,
    maximize: bool,
) -> f64 {
    let supports: Vec<Vec<(f64, f64)>> = theta
        .members()
        .iter()
        .map(|d| d.support_points().expect("discrete member"))
        .collect();
    let branch = supports[0].len();
    assert!(supports.iter().all(|s| s.len() == branch), "uniform branching required");
    let n = ctx.n;
    // decision nodes: histories of length < n, level order
    let mut nodes = 0usize;
    let mut level = 1usize;
    for _ in 0..n {
        nodes += level;
        level *= branch;
    }
    let k = theta.len();
    let count = (k as u128).pow(nodes as u32);
    assert!(count <= 1u128 << 20, "strategy space too large to enumerate");
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut sigma = vec![0usize; nodes];
    for mut code in 0..count {
        for slot in sigma.iter_mut() {
            *slot = (code % k as u128) as usize;
            code /= k as u128;
        }
        let eval = FixedStrategy { supports: &supports, sigma: &sigma, branch, n, event, ctx };
        let value = eval.value(0, 0.0, 0);
        let better = if maximize { value > best } else { value < best };
        if better {
            best = value;
        }
    }
    best
}
