use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::manifold::MongeManifold;
use crate::model::shift::Shift;
use crate::model::weights::QuasinormWeights;

/// An integer form `F(x) = a₀ + a·f(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResonantFunction {
    pub a: Vec<i64>,
    pub a0: i64,
}

impl ResonantFunction {
    pub fn new(a: Vec<i64>, a0: i64) -> Result<Self> {
        if a0 == 0 && a.iter().all(|&c| c == 0) {
            return Err(Error::input("resonant function needs a non-zero coefficient"));
        }
        Ok(Self { a, a0 })
    }

    /// `H_v(F) = max |a_i|^{1/v_i}`.
    pub fn height(&self, v: &QuasinormWeights) -> f64 {
        v.height(&self.a)
    }

    /// `β_F = κ₀·H_v(F)`.
    pub fn beta(&self, kappa0: f64, v: &QuasinormWeights) -> f64 {
        kappa0 * self.height(v)
    }

    /// `(F + θ)(x)`; the point is not validated.
    pub fn value(&self, manifold: &MongeManifold, theta: &Shift, x: &[f64]) -> f64 {
        let mut y = vec![0.0; manifold.n()];
        manifold.value_into(x, &mut y);
        self.a0 as f64 + self.a.iter().zip(&y).map(|(&c, v)| c as f64 * v).sum::<f64>() + theta.eval(x)
    }

    /// `∇(F + θ)(x)`.
    pub fn gradient(&self, manifold: &MongeManifold, theta: &Shift, x: &[f64]) -> Vec<f64> {
        let mut g = theta.gradient(x);
        for (i, &c) in self.a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (gj, dj) in g.iter_mut().zip(manifold.gradient_row(i, x)) {
                *gj += c as f64 * dj;
            }
        }
        g
    }

    /// `∂(F + θ)/∂x₁` at `x`.
    pub fn d1(&self, manifold: &MongeManifold, theta: &Shift, x: &[f64]) -> f64 {
        self.gradient(manifold, theta, x)[0]
    }
}
