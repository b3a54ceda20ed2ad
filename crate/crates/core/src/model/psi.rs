use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::weights::QuasinormWeights;

/// Right-continuous step function through monotone samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTable {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl StepTable {
    /// `knots` strictly increasing and positive, `values` positive and non-increasing.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::input("table needs equally many knots and values"));
        }
        if knots.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::input("table knots must be positive"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("table knots must be strictly increasing"));
        }
        if values.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::input("table values must be positive"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::input("table values must be non-increasing"));
        }
        Ok(Self { knots, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        // Index of the last knot ≤ t; before the first knot the first value holds.
        let idx = self.knots.partition_point(|&k| k <= t);
        self.values[idx.saturating_sub(1)]
    }

    pub fn last_knot(&self) -> f64 {
        *self.knots.last().expect("non-empty")
    }
}

/// A monotone approximating function `ψ : ℝ⁺ → ℝ⁺`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ApproxFunction {
    /// `ψ(t) = c·t^{−τ}`.
    PowerLaw {
        tau: f64,
        scale: f64,
    },
    /// `ψ(t) = t^{−τ}·ln(e + t)^β`; the `e` shift keeps ψ positive and
    /// non-increasing on all of ℝ⁺ without changing its tail.
    PowerLog {
        tau: f64,
        beta: f64,
    },
    Table(StepTable),
}

impl ApproxFunction {
    pub fn power_law(tau: f64) -> Result<Self> {
        Self::scaled_power_law(tau, 1.0)
    }

    pub fn scaled_power_law(tau: f64, scale: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::input(format!("tau must be ≥ 0, got {tau}")));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::input(format!("scale must be positive, got {scale}")));
        }
        Ok(Self::PowerLaw { tau, scale })
    }

    pub fn power_log(tau: f64, beta: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 || !beta.is_finite() {
            return Err(Error::input("power-log needs finite tau ≥ 0 and finite beta"));
        }
        if beta > tau {
            return Err(Error::input(format!(
                "power-log with beta = {beta} > tau = {tau} is not monotone"
            )));
        }
        Ok(Self::PowerLog { tau, beta })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::scaled_power_law(0.0, c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::PowerLaw { tau, scale } => {
                if *tau == 0.0 {
                    *scale
                } else {
                    scale * t.powf(-tau)
                }
            }
            Self::PowerLog { tau, beta } => t.powf(-tau) * (std::f64::consts::E + t).ln().powf(*beta),
            Self::Table(table) => table.eval(t),
        }
    }

    /// Checks positivity and monotonicity on a geometric grid over `[lo, hi]`.
    pub fn check_monotone(&self, lo: f64, hi: f64, points: usize) -> Result<()> {
        let grid = geometric_grid(lo, hi, points.max(2));
        let mut prev = f64::INFINITY;
        for t in grid {
            let p = self.eval(t);
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::Evaluation(format!("ψ({t}) = {p} is not positive")));
            }
            if p > prev * (1.0 + 1e-12) {
                return Err(Error::Evaluation(format!("ψ increases near t = {t}")));
            }
            prev = p;
        }
        Ok(())
    }

    /// Lower order `τ_ψ = liminf −ln ψ(t) / ln t`.
    ///
    /// Closed-form families return the exact exponent; tables fall back to
    /// [`lower_order_on_grid`](Self::lower_order_on_grid).
    pub fn lower_order(&self, t_max: f64) -> Result<f64> {
        if !(t_max >= 1e3) {
            return Err(Error::input(format!("t_max must be at least 1e3, got {t_max}")));
        }
        match self {
            Self::PowerLaw { tau, .. } | Self::PowerLog { tau, .. } => Ok(*tau),
            Self::Table(_) => self.lower_order_on_grid(t_max),
        }
    }

    /// Minimum of `−ln ψ(t)/ln t` over a geometric grid on `[t_max/100, t_max]`.
    pub fn lower_order_on_grid(&self, t_max: f64) -> Result<f64> {
        if !(t_max >= 1e3) {
            return Err(Error::input(format!("t_max must be at least 1e3, got {t_max}")));
        }
        let mut best = f64::INFINITY;
        for t in geometric_grid(t_max / 100.0, t_max, 257) {
            let p = self.eval(t);
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::Evaluation(format!("ψ({t}) = {p} on the grid")));
            }
            best = best.min(-p.ln() / t.ln());
        }
        Ok(best)
    }
}

pub(crate) fn geometric_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(move |i| {
        if i == points - 1 {
            hi
        } else {
            lo * (ratio * i as f64).exp()
        }
    })
}

/// `Ψ(a) = ψ(|a|_v)`: a multivariable approximating function with property P.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariableApproxFunction {
    pub psi: ApproxFunction,
    pub weights: QuasinormWeights,
}

impl MultivariableApproxFunction {
    pub fn new(psi: ApproxFunction, weights: QuasinormWeights) -> Self {
        Self { psi, weights }
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn eval(&self, a: &[i64]) -> Result<f64> {
        if a.len() != self.n() {
            return Err(Error::input(format!(
                "tuple has length {}, expected {}",
                a.len(),
                self.n()
            )));
        }
        if a.iter().all(|&x| x == 0) {
            return Err(Error::input("Ψ is not evaluated at the zero vector"));
        }
        Ok(self.psi.eval(self.weights.height(a)))
    }

    /// `Ψ` at a vector whose height is already known.
    pub fn at_height(&self, height: f64) -> f64 {
        self.psi.eval(height)
    }
}
