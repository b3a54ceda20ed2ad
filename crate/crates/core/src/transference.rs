//! Membership tests for the inhomogeneous transference sets `I_t(α, ε)` and
//! `H_t(α, ε)`, and a constructive check of their intersection property.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::bracketed_roots;
use crate::measure::chunked_samples;
use crate::model::{MongeManifold, ResonantFunction, Shift};

/// `(a, a₀)` with `a ≠ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alpha {
    pub a: Vec<i64>,
    pub a0: i64,
}

/// A multi-index `t ∈ (ℤ≥0)ⁿ`; `|t|` is the supremum norm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferenceIndex {
    pub t: Vec<u32>,
}

impl TransferenceIndex {
    pub fn new(t: Vec<u32>) -> Self {
        Self { t }
    }

    /// The index whose dyadic bracket contains `a`.
    pub fn of(a: &[i64]) -> Self {
        Self {
            t: a.iter().map(|&c| c.unsigned_abs().max(1).ilog2()).collect(),
        }
    }

    pub fn abs(&self) -> u32 {
        self.t.iter().copied().max().unwrap_or(0)
    }

    pub fn sum(&self) -> u32 {
        self.t.iter().sum()
    }

    /// `2^{t_i} ≤ max{1, |a_i|} < 2^{t_i+1}` for all `i`.
    pub fn brackets(&self, a: &[i64]) -> bool {
        a.len() == self.t.len()
            && a.iter().zip(&self.t).all(|(&c, &t)| {
                let m = c.unsigned_abs().max(1);
                (1u64 << t) <= m && m < (1u64 << (t + 1))
            })
    }
}

/// The scale functions `Ψ₀(2^t)`, `r(t)` and `φ_δ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferenceScales {
    pub n: usize,
    pub m: usize,
    pub c0: f64,
}

impl TransferenceScales {
    pub fn new(manifold: &MongeManifold, theta: &Shift) -> Self {
        Self {
            n: manifold.n(),
            m: manifold.m(),
            c0: crate::model::combined_c0(manifold, theta),
        }
    }

    /// `Ψ₀(2^t) = 2^{−Σt_i}`.
    pub fn psi0(&self, t: &TransferenceIndex) -> f64 {
        (-(t.sum() as f64)).exp2()
    }

    /// `r(t) = √(2(n+1)mC₀)·2^{|t|/2}`.
    pub fn r(&self, t: &TransferenceIndex) -> f64 {
        (2.0 * (self.n as f64 + 1.0) * self.m as f64 * self.c0).sqrt() * (t.abs() as f64 / 2.0).exp2()
    }

    /// `φ_δ(t) = 2^{δ|t|}`.
    pub fn phi(&self, delta: f64, t: &TransferenceIndex) -> f64 {
        (delta * t.abs() as f64).exp2()
    }
}

/// `φ_δ(t)·Ψ₀(2^t) < 2^{−(3/4)|t|}` for `δ = num/den`, decided on the exponents
/// `δ|t| − Σt < −(3/4)|t|` in integer arithmetic.
pub fn phi_psi0_below_three_quarters(t: &TransferenceIndex, num: i64, den: i64) -> bool {
    let (abs, sum) = (t.abs() as i64, t.sum() as i64);
    4 * (sum * den - num * abs) > 3 * abs * den
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn form_gradient(manifold: &MongeManifold, theta: &Shift, a: &[i64], x: &[f64]) -> Vec<f64> {
    ResonantFunction { a: a.to_vec(), a0: 0 }.gradient(manifold, theta, x)
}

fn form_value(manifold: &MongeManifold, theta: &Shift, alpha: &Alpha, x: &[f64]) -> f64 {
    ResonantFunction {
        a: alpha.a.clone(),
        a0: alpha.a0,
    }
    .value(manifold, theta, x)
}

/// `x ∈ I_t(α, ε)`.
pub fn in_i(
    x: &[f64],
    t: &TransferenceIndex,
    alpha: &Alpha,
    eps: f64,
    manifold: &MongeManifold,
    theta: &Shift,
    scales: &TransferenceScales,
) -> Result<bool> {
    manifold.check_point(x)?;
    if !t.brackets(&alpha.a) {
        return Ok(false);
    }
    let value = form_value(manifold, theta, alpha, x).abs();
    if !(value < eps * scales.psi0(t)) {
        return Ok(false);
    }
    let grad = sup_norm(&form_gradient(manifold, theta, &alpha.a, x));
    Ok(grad < eps * scales.r(t))
}

/// `x ∈ H_t(α, ε)` (homogeneous forms, no shift).
pub fn in_h(
    x: &[f64],
    t: &TransferenceIndex,
    alpha: &Alpha,
    eps: f64,
    manifold: &MongeManifold,
    scales: &TransferenceScales,
) -> Result<bool> {
    manifold.check_point(x)?;
    if alpha.a.len() != t.t.len()
        || alpha
            .a
            .iter()
            .zip(&t.t)
            .any(|(&c, &ti)| c.unsigned_abs() >= 1u64 << (ti + 2))
    {
        return Ok(false);
    }
    let zero = Shift::zero();
    let value = form_value(manifold, &zero, alpha, x).abs();
    if !(value < 2.0 * eps * scales.psi0(t)) {
        return Ok(false);
    }
    let grad = sup_norm(&form_gradient(manifold, &zero, &alpha.a, x));
    Ok(grad < 2.0 * eps * scales.r(t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub t: Vec<u32>,
    pub alpha: Alpha,
    pub alpha_prime: Alpha,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub trials: usize,
    /// Trials that produced a point `x ∈ I_t(α, φ_δ(t))` with `2 ≤ |t| ≤ t_max`.
    pub constructed: usize,
    /// Pairs `α ≠ α′` with `x` in both `I_t` sets.
    pub doubly_member: usize,
    pub passes: usize,
    /// Doubly-member pairs with `a′ = a` (only `a₀` differs).
    pub zero_difference: usize,
    pub counterexamples: Vec<Counterexample>,
    pub notice: Option<String>,
}

impl IntersectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Default)]
struct TrialOutcome {
    constructed: bool,
    doubly: usize,
    passes: usize,
    zero_difference: usize,
    counterexamples: Vec<Counterexample>,
}

/// Constructs triples `(x, α, α′)` with `x ∈ I_t(α, φ) ∩ I_t(α′, φ)` and checks
/// `x ∈ H_t(α′ − α, φ)` with `φ = φ_δ(t)`.
///
/// Each trial picks a rational base point, coefficients `a₂, …, aₙ` in random
/// dyadic brackets and `a₁` cancelling the derivative there, then localizes a
/// zero of `a₀ + a·f + θ` nearby. Every `a′` in the bracket of `t` (with its
/// nearest completion) and the neighbours `a₀ ± 1` are tried as partners.
/// Only curves (`m = 1`) are supported.
pub fn verify_intersection_property(
    manifold: &MongeManifold,
    theta: &Shift,
    delta: f64,
    t_range: (u32, u32),
    trials: usize,
    seed: u64,
) -> Result<IntersectionReport> {
    if manifold.m() != 1 {
        return Err(Error::input("the intersection sampler supports curves only"));
    }
    if !(0.0..0.25).contains(&delta) {
        return Err(Error::input(format!("delta must lie in [0, 1/4), got {delta}")));
    }
    let (t_lo, t_hi) = t_range;
    if t_lo < 2 || t_hi < t_lo || t_hi > 20 {
        return Err(Error::input("need 2 ≤ |t| range ≤ 20"));
    }
    let scales = TransferenceScales::new(manifold, theta);
    let outcomes = chunked_samples(seed, trials, |rng| {
        run_trial(rng, manifold, theta, delta, (t_lo, t_hi), &scales)
    });
    let mut report = IntersectionReport {
        trials,
        constructed: 0,
        doubly_member: 0,
        passes: 0,
        zero_difference: 0,
        counterexamples: Vec::new(),
        notice: None,
    };
    for o in outcomes {
        report.constructed += o.constructed as usize;
        report.doubly_member += o.doubly;
        report.passes += o.passes;
        report.zero_difference += o.zero_difference;
        report.counterexamples.extend(o.counterexamples);
    }
    if report.doubly_member == 0 {
        report.notice = Some("no doubly-member sample constructed; the check is vacuous".into());
    }
    Ok(report)
}

fn run_trial<R: Rng>(
    rng: &mut R,
    manifold: &MongeManifold,
    theta: &Shift,
    delta: f64,
    (t_lo, t_hi): (u32, u32),
    scales: &TransferenceScales,
) -> TrialOutcome {
    let mut out = TrialOutcome::default();
    let n = manifold.n();
    let dom = manifold.domain();
    let (lo, hi) = (dom.lo[0], dom.hi[0]);

    let den = rng.random_range(1..=8i64);
    let num_lo = (lo * den as f64).ceil() as i64;
    let num_hi = (hi * den as f64).floor() as i64;
    if num_lo > num_hi {
        return out;
    }
    let x0 = rng.random_range(num_lo..=num_hi) as f64 / den as f64;

    let mut a = vec![0i64; n];
    for c in a.iter_mut().skip(1) {
        let t = rng.random_range(0..=t_hi);
        let mag = if t == 0 {
            rng.random_range(0..=1)
        } else {
            rng.random_range(1i64 << t..1i64 << (t + 1))
        };
        *c = if rng.random::<bool>() { mag } else { -mag };
    }
    let tail_slope: f64 = (1..n).map(|i| a[i] as f64 * manifold.gradient_row(i, &[x0])[0]).sum();
    a[0] = (-(tail_slope + theta.d1(&[x0]))).round() as i64;
    if a.iter().all(|&c| c == 0) {
        return out;
    }
    let t = TransferenceIndex::of(&a);
    if t.abs() < t_lo || t.abs() > t_hi {
        return out;
    }

    let g = |x: f64| -> (f64, f64) {
        let f = ResonantFunction { a: a.clone(), a0: 0 };
        (f.value(manifold, theta, &[x]), f.d1(manifold, theta, &[x]))
    };
    let a0 = -(g(x0).0.round() as i64);
    let shifted = |x: f64| {
        let (v, d) = g(x);
        (v + a0 as f64, d)
    };
    let Some(x_star) = nearby_root(&shifted, x0, lo, hi) else {
        return out;
    };
    let phi = scales.phi(delta, &t);
    let alpha = Alpha { a: a.clone(), a0 };
    if !in_i(&[x_star], &t, &alpha, phi, manifold, theta, scales).unwrap_or(false) {
        return out;
    }
    out.constructed = true;

    let x = [x_star];
    let mut partners: Vec<Alpha> = vec![
        Alpha {
            a: a.clone(),
            a0: a0 - 1,
        },
        Alpha {
            a: a.clone(),
            a0: a0 + 1,
        },
    ];
    let mut y = vec![0.0; n];
    manifold.value_into(&x, &mut y);
    let th = theta.eval(&x);
    for_each_in_bracket(&t, |ap| {
        if ap == a.as_slice() || ap.iter().all(|&c| c == 0) {
            return;
        }
        let s: f64 = ap.iter().zip(&y).map(|(&c, v)| c as f64 * v).sum::<f64>() + th;
        if (s - s.round()).abs() < phi * scales.psi0(&t) {
            partners.push(Alpha {
                a: ap.to_vec(),
                a0: -(s.round() as i64),
            });
        }
    });
    for ap in partners {
        if !in_i(&x, &t, &ap, phi, manifold, theta, scales).unwrap_or(false) {
            continue;
        }
        out.doubly += 1;
        let diff = Alpha {
            a: ap.a.iter().zip(&a).map(|(p, q)| p - q).collect(),
            a0: ap.a0 - a0,
        };
        let reason = if diff.a.iter().all(|&c| c == 0) {
            out.zero_difference += 1;
            Some("a″ = 0 with both forms in I_t".to_string())
        } else if !in_h(&x, &t, &diff, phi, manifold, scales).unwrap_or(false) {
            Some("x ∉ H_t(α′ − α, φ)".to_string())
        } else {
            None
        };
        match reason {
            None => out.passes += 1,
            Some(reason) => out.counterexamples.push(Counterexample {
                x: x.to_vec(),
                t: t.t.clone(),
                alpha: alpha.clone(),
                alpha_prime: ap,
                reason,
            }),
        }
    }
    out
}

/// Zero of `f` closest to `x0` on `[lo, hi]`.
fn nearby_root(f: &impl Fn(f64) -> (f64, f64), x0: f64, lo: f64, hi: f64) -> Option<f64> {
    if f(x0).0 == 0.0 {
        return Some(x0);
    }
    bracketed_roots(|x| f(x).0, lo, hi, 4096)
        .into_iter()
        .min_by(|a, b| (a - x0).abs().total_cmp(&(b - x0).abs()))
}

fn for_each_in_bracket(t: &TransferenceIndex, mut f: impl FnMut(&[i64])) {
    let ranges: Vec<Vec<i64>> =
        t.t.iter()
            .map(|&ti| {
                if ti == 0 {
                    vec![-1, 0, 1]
                } else {
                    let (l, h) = (1i64 << ti, 1i64 << (ti + 1));
                    (-h + 1..=-l).chain(l..h).collect()
                }
            })
            .collect();
    let mut idx = vec![0usize; ranges.len()];
    let mut a: Vec<i64> = ranges.iter().map(|r| r[0]).collect();
    loop {
        f(&a);
        let mut i = ranges.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < ranges[i].len() {
                a[i] = ranges[i][idx[i]];
                break;
            }
            idx[i] = 0;
            a[i] = ranges[i][0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DomainBox;

    fn curve() -> MongeManifold {
        MongeManifold::veronese(2, DomainBox::new(vec![-1.0], vec![1.0]).unwrap()).unwrap()
    }

    #[test]
    fn brackets_and_norms() {
        let t = TransferenceIndex::of(&[5, -1]);
        assert_eq!(t.t, vec![2, 0]);
        assert_eq!(t.abs(), 2);
        assert!(t.brackets(&[7, 0]));
        assert!(!t.brackets(&[8, 0]));
        let mut count = 0;
        for_each_in_bracket(&t, |a| {
            assert!(t.brackets(a));
            count += 1;
        });
        assert_eq!(count, 8 * 3);
    }

    #[test]
    fn i_membership_examples() {
        let c = curve();
        let theta = Shift::zero();
        let s = TransferenceScales::new(&c, &theta);
        let t = TransferenceIndex::new(vec![1, 1]);
        // 2x² + 2x − 1 vanishes at x = (√3 − 1)/2 with derivative 2√3.
        let x = [(3f64.sqrt() - 1.0) / 2.0];
        let alpha = Alpha { a: vec![2, 2], a0: -1 };
        assert!(in_i(&x, &t, &alpha, 4.0, &c, &theta, &s).unwrap());
        assert!(!in_i(&x, &t, &alpha, 0.0, &c, &theta, &s).unwrap());
        let wrong = Alpha { a: vec![4, 2], a0: -1 };
        assert!(!in_i(&x, &t, &wrong, 1e9, &c, &theta, &s).unwrap());
    }

    #[test]
    fn h_membership_examples() {
        let c = curve();
        let s = TransferenceScales::new(&c, &Shift::zero());
        let t = TransferenceIndex::new(vec![2, 0]);
        let pure = Alpha { a: vec![0, 0], a0: 1 };
        assert!(!in_h(&[0.3], &t, &pure, 1.0, &c, &s).unwrap());
        let big = Alpha { a: vec![16, 0], a0: 0 };
        assert!(!in_h(&[0.0], &t, &big, 1e9, &c, &s).unwrap());
    }

    #[test]
    fn exponent_bound() {
        for abs in 1..=20u32 {
            for (num, den) in [(0, 1), (1, 10), (24, 100)] {
                assert!(phi_psi0_below_three_quarters(
                    &TransferenceIndex::new(vec![abs, 0]),
                    num,
                    den
                ));
                assert!(phi_psi0_below_three_quarters(
                    &TransferenceIndex::new(vec![abs, abs]),
                    num,
                    den
                ));
            }
        }
        assert!(!phi_psi0_below_three_quarters(
            &TransferenceIndex::new(vec![0, 0]),
            0,
            1
        ));
    }

    #[test]
    fn zero_trials_is_vacuous() {
        let r = verify_intersection_property(&curve(), &Shift::zero(), 0.24, (2, 6), 0, 1).unwrap();
        assert_eq!(r.constructed, 0);
        assert!(r.notice.is_some());
        assert!(r.counterexamples.is_empty());
    }

    #[test]
    fn small_run_has_no_counterexamples() {
        let r = verify_intersection_property(&curve(), &Shift::next_power(2), 0.24, (2, 6), 500, 3).unwrap();
        assert!(r.constructed > 0);
        assert!(r.counterexamples.is_empty(), "{:?}", r.counterexamples.first());
        assert_eq!(r.zero_difference, 0);
    }
}
