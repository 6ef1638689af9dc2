// Second opinions on every integral the library computes analytically or by
// adaptive quadrature. The oracles here use nothing but the Pareto tail
// formula, plain midpoint sums, and closed forms worked out by hand, so the
// two sides share no integration code.

use sublln::ambiguity::ChoquetTransform;
use sublln::distributions::Distribution;
use sublln::numeric::{zeta, zeta_tail};
use sublln::AmbiguitySet;
use sublln::TestFunction;

const ALPHA: f64 = 1.9;

/// P(B >= z) for the symmetric Pareto with tail index `alpha`, scale `s`.
fn tail_ge(alpha: f64, s: f64, z: f64) -> f64 {
    if z <= -s {
        1.0 - 0.5 * (-z / s).powf(-alpha)
    } else if z <= s {
        0.5
    } else {
        0.5 * (z / s).powf(-alpha)
    }
}

/// P(|B + c| >= u) for the same law, `u > 0`.
fn abs_tail_shifted(alpha: f64, s: f64, c: f64, u: f64) -> f64 {
    tail_ge(alpha, s, u - c) + (1.0 - tail_ge(alpha, s, -u - c))
}

/// Composite midpoint rule, deliberately naive.
fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0f64;
    for i in 0..panels {
        acc += f(a + (i as f64 + 0.5) * h);
    }
    acc * h
}

#[test]
fn choquet_power_moment_matches_tail_integral() {
    // E[|X|^r] as a tail integral: 1 + int_1^inf t^(-alpha/r) dt, done by
    // midpoint in log coordinates where the integrand decays exponentially
    let r = 1.5;
    let s = ALPHA / r;
    let y_top = 70.0;
    let oracle = 1.0 + midpoint(|y| ((1.0 - s) * y).exp(), 0.0, y_top, 1_000_000);
    let closed = ALPHA / (ALPHA - r);
    assert!((oracle - closed).abs() < 1e-6, "oracle={oracle} closed={closed}");

    let theta =
        AmbiguitySet::singleton(Distribution::symmetric_pareto(ALPHA, 1.0).unwrap()).unwrap();
    let lib = theta.choquet_upper(ChoquetTransform::abs_power(r).unwrap()).unwrap();
    assert!((lib - oracle).abs() < 1e-6, "lib={lib} oracle={oracle}");
    assert!((lib - 4.75).abs() < 1e-6, "lib={lib}");
}

#[test]
fn clamped_second_moment_matches_density_integral() {
    let d = Distribution::symmetric_pareto(ALPHA, 1.0).unwrap();
    for cap in [1.5, 10.0, 464.158883361278] {
        // E[min(X^2, cap^2)] = int_1^cap u^2 alpha u^(-alpha-1) du
        //                      + cap^2 P(|X| >= cap)
        let body = midpoint(|u| ALPHA * u.powf(1.0 - ALPHA), 1.0, cap, 2_000_000);
        let oracle = body + cap * cap * cap.powf(-ALPHA);
        let lib = d.clamped_second_moment(cap);
        let rel = (lib - oracle).abs() / oracle;
        assert!(rel < 1e-6, "cap={cap} lib={lib} oracle={oracle}");
    }
    // below the scale the clamp saturates everywhere
    assert_eq!(d.clamped_second_moment(0.5), 0.25);
}

#[test]
fn clamped_second_moment_of_shifted_law_matches_layer_cake() {
    // shifted laws leave the closed-form path; check the quadrature route
    // against int_0^cap 2u P(|X + c| >= u) du with hand-written tails
    let c = 0.5;
    let d = Distribution::symmetric_pareto(ALPHA, 1.0).unwrap().shifted(c).unwrap();
    for cap in [2.0, 25.0] {
        let oracle =
            midpoint(|u| 2.0 * u * abs_tail_shifted(ALPHA, 1.0, c, u), 0.0, cap, 2_000_000);
        let lib = d.clamped_second_moment(cap);
        let rel = (lib - oracle).abs() / oracle;
        assert!(rel < 1e-5, "cap={cap} lib={lib} oracle={oracle}");
    }
}

#[test]
fn test_function_expectations_match_density_integrals() {
    let d = Distribution::symmetric_pareto(ALPHA, 1.0).unwrap();

    // clamp to [0, 1]: no mass inside (-1, 1), so the value is exactly the
    // positive arm's probability
    let clamp = TestFunction::clamp(0.0, 1.0).unwrap();
    assert!((d.expect(&clamp) - 0.5).abs() < 1e-9);

    // smoothed indicator ramping from 0 at 2 to 1 at 2.5: ramp integral on
    // the positive arm plus the exact mass above the ramp
    let phi = TestFunction::indicator_smoothed(2.0, 0.5).unwrap();
    let ramp = midpoint(
        |t| ((t - 2.0) / 0.5) * ALPHA * t.powf(-ALPHA - 1.0),
        2.0,
        2.5,
        1_000_000,
    );
    let oracle = 0.5 * (ramp + 2.5f64.powf(-ALPHA));
    let lib = d.expect(&phi);
    assert!((lib - oracle).abs() < 1e-8, "lib={lib} oracle={oracle}");

    // affine with clamping: the odd part cancels where neither side is
    // clamped, leaving a constant strip plus a short transition
    let aff = TestFunction::affine_clamped(0.5, 0.1, 3.0).unwrap();
    let pair = |t: f64| {
        let up = (0.5 * t + 0.1).clamp(-3.0, 3.0);
        let dn = (-0.5 * t + 0.1).clamp(-3.0, 3.0);
        (up + dn) * 0.5 * ALPHA * t.powf(-ALPHA - 1.0)
    };
    let oracle = midpoint(pair, 1.0, 6.2, 1_000_000);
    let lib = d.expect(&aff);
    assert!((lib - oracle).abs() < 1e-8, "lib={lib} oracle={oracle}");
}

#[test]
fn sampler_agrees_with_cdf() {
    let n = 100_000usize;
    for (name, d) in [
        ("centered", Distribution::symmetric_pareto(ALPHA, 1.0).unwrap()),
        (
            "scaled+shifted",
            Distribution::symmetric_pareto(ALPHA, 1.0)
                .unwrap()
                .scaled(0.5)
                .unwrap()
                .shifted(0.25)
                .unwrap(),
        ),
    ] {
        let mut xs: Vec<f64> = (0..n as u64).map(|i| d.sample(0x5eed, i, 1)).collect();
        xs.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = d.cdf(x);
            ks = ks.max(f - i as f64 / n as f64);
            ks = ks.max((i + 1) as f64 / n as f64 - f);
        }
        // 1.36 / sqrt(n) is the 5% Kolmogorov-Smirnov line at 0.0043
        assert!(ks < 0.01, "{name}: ks={ks}");
    }
}

#[test]
fn sign_sampler_is_balanced() {
    let d = Distribution::discrete(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
    let n = 100_000u64;
    let pos = (0..n).filter(|&i| d.sample(0xcafe, i, 1) > 0.0).count();
    let freq = pos as f64 / n as f64;
    assert!((freq - 0.5).abs() < 0.01, "freq={freq}");
}

#[test]
fn zeta_values_sit_inside_their_integral_sandwich() {
    // direct partial sum plus integral bounds on the remainder brackets the
    // true value tightly; the Euler-Maclaurin evaluation must land inside
    for s in [4.0 / 3.0, 1.2666666666666666] {
        let m = 1_000_000u64;
        let mut partial = 0.0f64;
        for j in 1..=m {
            partial += (j as f64).powf(-s);
        }
        let lo = partial + ((m + 1) as f64).powf(1.0 - s) / (s - 1.0);
        let hi = partial + (m as f64).powf(1.0 - s) / (s - 1.0);
        let z = zeta(s);
        assert!(lo <= z && z <= hi, "s={s} z={z} bracket=[{lo}, {hi}]");
    }
    // tail evaluations must be consistent with head subtraction
    let s = 4.0 / 3.0;
    let head: f64 = (1..50u64).map(|j| (j as f64).powf(-s)).sum();
    let diff = (zeta(s) - head - zeta_tail(s, 50)).abs();
    assert!(diff < 1e-10, "diff={diff}");
}
