//! Integer vectors under quasinorm heights: enumeration, approximation
//! witnesses, Dirichlet-set membership and the successive-minima construction.

mod minima;
mod root;

pub use minima::{integer_rank, successive_minima_construct, Bound, Construction, Postconditions};
pub use root::{bisect_bracket, bracketed_roots, root_localize, ROOT_TOLERANCE};

use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MongeManifold, MultivariableApproxFunction, QuasinormWeights, Shift};
use crate::report::{fmt_real, join_ints, join_reals, Csv};

/// Errors closer than this are treated as equal when minimizing.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// The integer box `{a : |a_i| ≤ ⌊Q^{v_i}⌋}`, which is exactly `{|a|_v ≤ Q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightBox {
    q: f64,
    limits: Vec<i64>,
}

impl HeightBox {
    pub fn new(q: f64, v: &QuasinormWeights) -> Result<Self> {
        let limits = v.limits(q)?;
        let hb = Self { q, limits };
        hb.count()?;
        Ok(hb)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn limits(&self) -> &[i64] {
        &self.limits
    }

    /// `∏(2L_i + 1) − 1`.
    pub fn count(&self) -> Result<u128> {
        self.limits
            .iter()
            .try_fold(1u128, |acc, &l| acc.checked_mul(2 * l as u128 + 1))
            .map(|c| c - 1)
            .ok_or_else(|| Error::capacity("height box has more than 2^128 points"))
    }

    /// Visits every non-zero vector in lexicographic order until `f` breaks.
    pub fn try_visit<B>(&self, mut f: impl FnMut(&[i64]) -> ControlFlow<B>) -> Option<B> {
        let n = self.limits.len();
        let mut a: Vec<i64> = self.limits.iter().map(|l| -l).collect();
        loop {
            if a.iter().any(|&c| c != 0) {
                if let ControlFlow::Break(b) = f(&a) {
                    return Some(b);
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return None;
                }
                i -= 1;
                if a[i] < self.limits[i] {
                    a[i] += 1;
                    break;
                }
                a[i] = -self.limits[i];
            }
        }
    }

    pub fn visit(&self, mut f: impl FnMut(&[i64])) {
        self.try_visit::<()>(|a| {
            f(a);
            ControlFlow::Continue(())
        });
    }

    pub fn iter(&self) -> HeightBoxIter {
        HeightBoxIter {
            limits: self.limits.clone(),
            next: Some(self.limits.iter().map(|l| -l).collect()),
        }
    }
}

/// Lexicographic iterator over a [`HeightBox`], skipping the origin.
#[derive(Debug, Clone)]
pub struct HeightBoxIter {
    limits: Vec<i64>,
    next: Option<Vec<i64>>,
}

impl Iterator for HeightBoxIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        loop {
            let current = self.next.take()?;
            let mut succ = current.clone();
            let mut i = succ.len();
            let mut done = true;
            while i > 0 {
                i -= 1;
                if succ[i] < self.limits[i] {
                    succ[i] += 1;
                    done = false;
                    break;
                }
                succ[i] = -self.limits[i];
            }
            if !done {
                self.next = Some(succ);
            }
            if current.iter().any(|&c| c != 0) {
                return Some(current);
            }
        }
    }
}

/// Every `a ∈ ℤⁿ∖{0}` with `|a|_v ≤ Q`, lexicographically.
pub fn enumerate_heights(q: f64, v: &QuasinormWeights) -> Result<HeightBoxIter> {
    if !(q >= 1.0) {
        return Err(Error::input(format!("Q must be at least 1, got {q}")));
    }
    Ok(HeightBox::new(q, v)?.iter())
}

/// `f(x)` and `θ(x)` frozen at one point, for fast evaluation of many forms.
#[derive(Debug, Clone, PartialEq)]
pub struct PointForm {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: f64,
}

impl PointForm {
    pub fn new(manifold: &MongeManifold, theta: &Shift, x: &[f64]) -> Result<Self> {
        manifold.check_point(x)?;
        let mut y = vec![0.0; manifold.n()];
        manifold.value_into(x, &mut y);
        Ok(Self {
            x: x.to_vec(),
            y,
            theta: theta.eval(x),
        })
    }

    /// `a·f(x) + θ(x)`.
    pub fn residual(&self, a: &[i64]) -> f64 {
        a.iter().zip(&self.y).map(|(&c, y)| c as f64 * y).sum::<f64>() + self.theta
    }

    /// Nearest-integer completion `a₀ = −round(a·f(x)+θ(x))` and its error.
    pub fn complete(&self, a: &[i64]) -> (i64, f64) {
        let s = self.residual(a);
        let r = s.round_ties_even();
        (-(r as i64), (s - r).abs())
    }

    pub fn witness(&self, a: &[i64], height: f64) -> Witness {
        let (a0, err) = self.complete(a);
        Witness {
            a: a.to_vec(),
            a0,
            x: self.x.clone(),
            err,
            height,
        }
    }
}

/// `Ψ ≥ 1/2` is always met since `‖·‖ ≤ 1/2`.
pub fn beats(err: f64, psi: f64) -> bool {
    psi >= 0.5 || err < psi
}

/// An integer form `(a, a₀)` together with its error at `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub a: Vec<i64>,
    pub a0: i64,
    pub x: Vec<f64>,
    pub err: f64,
    pub height: f64,
}

fn check_dims(manifold: &MongeManifold, v: &QuasinormWeights) -> Result<()> {
    if manifold.n() != v.n() {
        return Err(Error::input(format!(
            "weights have length {}, manifold has n = {}",
            v.n(),
            manifold.n()
        )));
    }
    Ok(())
}

/// Minimizer of `‖a·f(x) + θ(x)‖` over `0 < |a|_v ≤ Q`; near-ties go to the
/// lexicographically smallest `a`.
pub fn best_dual_approx(
    x: &[f64],
    manifold: &MongeManifold,
    theta: &Shift,
    q: f64,
    v: &QuasinormWeights,
) -> Result<Witness> {
    check_dims(manifold, v)?;
    if !(q >= 1.0) {
        return Err(Error::input(format!("Q must be at least 1, got {q}")));
    }
    let form = PointForm::new(manifold, theta, x)?;
    let hb = HeightBox::new(q, v)?;
    let mut best: Option<(Vec<i64>, f64)> = None;
    hb.visit(|a| {
        let (_, err) = form.complete(a);
        match &best {
            Some((_, e)) if err >= e - TIE_TOLERANCE => {}
            _ => best = Some((a.to_vec(), err)),
        }
    });
    let (a, _) = best.expect("box with Q ≥ 1 is non-empty");
    let height = v.height(&a);
    Ok(form.witness(&a, height))
}

/// Membership of `x` in `Φ_v(Q, δ)`: some `0 < |a|_v ≤ Q` with
/// `‖a·f(x)‖ < δQ^{−n}`. Returns the first witness in lexicographic order.
pub fn dirichlet_member(
    x: &[f64],
    manifold: &MongeManifold,
    q: f64,
    delta: f64,
    v: &QuasinormWeights,
) -> Result<Option<Witness>> {
    check_dims(manifold, v)?;
    if !(q > 1.0) || !(delta > 0.0) {
        return Err(Error::input(format!(
            "need Q > 1 and delta > 0, got Q = {q}, delta = {delta}"
        )));
    }
    let form = PointForm::new(manifold, &Shift::zero(), x)?;
    let bound = delta * q.powi(-(manifold.n() as i32));
    let hb = HeightBox::new(q, v)?;
    Ok(hb.try_visit(|a| {
        let (_, err) = form.complete(a);
        if err < bound {
            ControlFlow::Break(form.witness(a, v.height(a)))
        } else {
            ControlFlow::Continue(())
        }
    }))
}

/// All `a` with `H_lo < |a|_v ≤ H_hi` and `‖a·f(x)+θ(x)‖ < Ψ(a)`.
pub fn witnesses_in_block(
    x: &[f64],
    manifold: &MongeManifold,
    theta: &Shift,
    psi: &MultivariableApproxFunction,
    h_lo: f64,
    h_hi: f64,
) -> Result<Vec<Witness>> {
    check_dims(manifold, &psi.weights)?;
    if !(h_lo >= 0.0 && h_hi > h_lo) {
        return Err(Error::input(format!("need 0 ≤ H_lo < H_hi, got ({h_lo}, {h_hi}]")));
    }
    let form = PointForm::new(manifold, theta, x)?;
    let hb = HeightBox::new(h_hi, &psi.weights)?;
    let mut out = Vec::new();
    hb.visit(|a| {
        let h = psi.weights.height(a);
        if h <= h_lo {
            return;
        }
        let (_, err) = form.complete(a);
        if beats(err, psi.at_height(h)) {
            out.push(form.witness(a, h));
        }
    });
    Ok(out)
}

/// CSV with columns `x, a, a0, err, height`.
pub fn witnesses_csv(comment: &str, witnesses: &[Witness]) -> String {
    let mut csv = Csv::with_comment(comment, &["x", "a", "a0", "err", "height"]);
    for w in witnesses {
        csv.row([
            join_reals(&w.x),
            join_ints(&w.a),
            w.a0.to_string(),
            fmt_real(w.err),
            fmt_real(w.height),
        ]);
    }
    csv.finish()
}
