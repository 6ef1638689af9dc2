//! Small numeric utilities shared across modules: compensated summation,
//! adaptive quadrature, Riemann zeta tails and a least-squares line fit.

/// Neumaier-compensated running sum.
///
/// Keeps the error term of every addition, so partial sums of long sequences
/// stay accurate to a few ulps even when terms cancel.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute error
/// target `tol`.
///
/// The integrand is assumed bounded on the interval. Kinks are fine (the
/// recursion subdivides around them); callers who know kink locations should
/// split the interval there first via [`integrate_piecewise`].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 52)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // 15 = Richardson constant for Simpson's rule error estimation
    if depth == 0 || delta.abs() <= 15.0 * tol || m == a || m == b {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrate `f` over the segments delimited by the sorted `points`,
/// distributing the absolute error budget `tol` over the segments.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let seg_tol = tol / (points.len() - 1) as f64;
    let mut total = KahanSum::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            total.add(adaptive_simpson(f, w[0], w[1], seg_tol));
        }
    }
    total.value()
}

/// Riemann zeta `zeta(s)` for `s > 1` via Euler-Maclaurin, accurate to about
/// 1e-14 relative.
pub fn zeta(s: f64) -> f64 {
    zeta_tail(s, 1)
}

/// Tail sum `sum_{j >= from} j^(-s)` for `s > 1`, `from >= 1`.
pub fn zeta_tail(s: f64, from: u64) -> f64 {
    assert!(s > 1.0, "zeta tail requires s > 1, got {s}");
    assert!(from >= 1);
    let cutoff = from.max(64);
    let mut head = KahanSum::new();
    for j in from..cutoff {
        head.add((j as f64).powf(-s));
    }
    let m = cutoff as f64;
    // Euler-Maclaurin remainder at m with Bernoulli terms B2, B4, B6.
    let mut tail = m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    tail += s * m.powf(-s - 1.0) / 12.0;
    tail -= s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
    tail += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * m.powf(-s - 5.0) / 30240.0;
    head.value() + tail
}

/// Ordinary least squares fit `y = slope * x + intercept`.
///
/// Returns `(slope, intercept, r_squared)`. Needs at least two distinct xs.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    assert!(sxx > 0.0, "x values are all identical");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// `n` log-spaced points between `lo` and `hi` inclusive (both positive).
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kahan_handles_cancellation() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(0.1);
        }
        s.add(-1e16);
        assert_abs_diff_eq!(s.value(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn simpson_polynomial_and_kink() {
        let cubic = |x: f64| x * x * x - 2.0 * x + 1.0;
        // exact: 1/4 - 1 + 1 = 0.25 over [0,1]
        assert_abs_diff_eq!(adaptive_simpson(&cubic, 0.0, 1.0, 1e-12), 0.25, epsilon = 1e-12);

        let kinked = |x: f64| (x - 0.3).abs();
        // exact: 0.09/2 + 0.49/2 = 0.29
        assert_abs_diff_eq!(adaptive_simpson(&kinked, 0.0, 1.0, 1e-10), 0.29, epsilon = 1e-9);
    }

    #[test]
    fn piecewise_splits_at_given_points() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { x.powf(-1.9 / 1.5) };
        // integral over [0, 1] + [1, 1e6] of t^(-19/15): 1 + (1 - 1e6^(-4/15)) * 15/4
        let mut pts = vec![0.0, 1.0];
        let mut t = 1.0f64;
        while t < 1e6 {
            t *= 10.0;
            pts.push(t.min(1e6));
        }
        let got = integrate_piecewise(&f, &pts, 1e-10);
        let exact = 1.0 + (1.0 - 1e6f64.powf(-4.0 / 15.0)) * 15.0 / 4.0;
        assert_abs_diff_eq!(got, exact, epsilon = 1e-8);
    }

    #[test]
    fn zeta_known_values() {
        assert_abs_diff_eq!(zeta(2.0), std::f64::consts::PI.powi(2) / 6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            zeta(4.0),
            std::f64::consts::PI.powi(4) / 90.0,
            epsilon = 1e-13
        );
        // tail + head must agree with the full sum
        let full = zeta(1.5);
        let split = (1..10).map(|j| (j as f64).powf(-1.5)).sum::<f64>() + zeta_tail(1.5, 10);
        assert_abs_diff_eq!(full, split, epsilon = 1e-13);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -0.5 * x + 2.0).collect();
        let (slope, intercept, r2) = least_squares_line(&xs, &ys);
        assert_abs_diff_eq!(slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(intercept, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r2, 1.0, epsilon = 1e-12);
    }
}
