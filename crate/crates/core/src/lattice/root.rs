use crate::error::{Error, Result};

/// Residual below which bisection stops.
pub const ROOT_TOLERANCE: f64 = 1e-12;

const DERIVATIVE_GRID: usize = 257;

/// Finds a zero of `f` within `|f(x₁)|/d` of `x₁`.
///
/// `f` returns `(value, derivative)`. The derivative bound `|f'| ≥ d` is
/// checked on a grid over `interval`, and the ball `B(x₁, |f(x₁)|/d)` must lie
/// inside it. Bisection runs until `|f| ≤ 1e-12` or the bracket cannot shrink.
pub fn root_localize<F>(f: F, x1: f64, interval: (f64, f64), d: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (lo, hi) = interval;
    if !(lo <= x1 && x1 <= hi) {
        return Err(Error::Localization(format!("x₁ = {x1} lies outside [{lo}, {hi}]")));
    }
    if !(d > 0.0) {
        return Err(Error::Localization(format!(
            "derivative bound must be positive, got {d}"
        )));
    }
    for i in 0..DERIVATIVE_GRID {
        let t = lo + (hi - lo) * i as f64 / (DERIVATIVE_GRID - 1) as f64;
        let slope = f(t).1.abs();
        if !(slope >= d) {
            return Err(Error::Localization(format!("|f'({t})| = {slope} < d = {d}")));
        }
    }
    let f1 = f(x1).0;
    if f1 == 0.0 {
        return Ok(x1);
    }
    let r = f1.abs() / d;
    if x1 - r < lo || x1 + r > hi {
        return Err(Error::Localization(format!(
            "ball of radius {r} around {x1} leaves [{lo}, {hi}]"
        )));
    }
    let (mut a, mut b) = (x1 - r, x1 + r);
    let (fa, fb) = (f(a).0, f(b).0);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Localization(format!("no sign change on [{a}, {b}]")));
    }
    let rising = fb > 0.0;
    loop {
        let mid = 0.5 * (a + b);
        let fm = f(mid).0;
        if fm.abs() <= ROOT_TOLERANCE || mid <= a || mid >= b {
            return Ok(mid);
        }
        if (fm > 0.0) == rising {
            b = mid;
        } else {
            a = mid;
        }
    }
}

/// Bisects a sign change of `f` on `[a, b]` down to `|f| ≤ 1e-12` or machine resolution.
pub fn bisect_bracket(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    let fa = f(a);
    if fa == 0.0 {
        return a;
    }
    loop {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm.abs() <= ROOT_TOLERANCE || mid <= a || mid >= b {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Zeros of `f` on `[lo, hi]` found on a grid of `cells` equal cells: exact
/// zeros at grid nodes plus one bisected root per sign change.
pub fn bracketed_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let cells = cells.max(1);
    let node = |i: usize| {
        if i == cells {
            hi
        } else {
            lo + (hi - lo) * i as f64 / cells as f64
        }
    };
    let mut roots = Vec::new();
    let mut prev = f(lo);
    if prev == 0.0 {
        roots.push(lo);
    }
    for i in 1..=cells {
        let x = node(i);
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if prev != 0.0 && prev.signum() != fx.signum() {
            roots.push(bisect_bracket(&f, node(i - 1), x));
        }
        prev = fx;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        let x0 = root_localize(|x| (2.0 * x - 1.0, 2.0), 0.4, (0.0, 1.0), 2.0).unwrap();
        assert!((x0 - 0.5).abs() < 1e-12);
        assert!((x0 - 0.4).abs() <= 0.2 / 2.0 + 1e-15);
    }

    #[test]
    fn quadratic() {
        let x0 = root_localize(|x| (x * x - 2.0, 2.0 * x), 1.5, (1.0, 2.0), 2.0).unwrap();
        assert!((x0 - 2f64.sqrt()).abs() < 1e-12);
        assert!((x0 * x0 - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn exact_zero_and_failures() {
        assert_eq!(root_localize(|x| (x - 0.25, 1.0), 0.25, (0.0, 1.0), 1.0).unwrap(), 0.25);
        // Flat derivative somewhere on the interval.
        assert!(root_localize(|x| (x * x - 0.01, 2.0 * x), 0.2, (-1.0, 1.0), 0.1).is_err());
        // Ball leaves the interval.
        assert!(root_localize(|x| (x - 0.9, 1.0), 0.1, (0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn scanning() {
        let roots = bracketed_roots(|x| x * x - 0.25, -1.0, 1.0, 64);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 0.5).abs() < 1e-12 && (roots[1] - 0.5).abs() < 1e-12);
        // A touching zero is only seen at a grid node.
        assert_eq!(bracketed_roots(|x| -x * x, -1.0, 1.0, 64), vec![0.0]);
        assert!(bracketed_roots(|x| -x * x - 1.0, -1.0, 1.0, 64).is_empty());
        let r = bisect_bracket(|x| x.powi(3) - 2.0, 1.0, 2.0);
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }
}
