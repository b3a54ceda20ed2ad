//! Domain types: quasinorm weights, approximating functions, Monge charts,
//! shifts, and the constants of the divergence-side construction.

mod constants;
mod manifold;
mod poly;
mod psi;
mod resonant;
mod shift;
mod weights;

pub use constants::{unit_ball_volume, ConstructionConstants, DEFAULT_DELTA};
pub use manifold::{DomainBox, ManifoldKind, ManifoldPoint, MongeManifold};
pub use poly::Poly;
pub use psi::{ApproxFunction, MultivariableApproxFunction, StepTable};
pub use resonant::ResonantFunction;
pub use shift::Shift;
pub use weights::{QuasinormWeights, MAX_COORDINATE_LIMIT, WEIGHT_SUM_TOLERANCE};

use crate::error::Result;

/// `max_i |a_i|^{1/v_i}`.
pub fn eval_quasinorm(a: &[f64], v: &QuasinormWeights) -> Result<f64> {
    v.quasinorm(a)
}

/// `Ψ(a) = ψ(|a|_v)`; the zero vector is rejected.
#[allow(non_snake_case)]
pub fn eval_Psi(psi: &MultivariableApproxFunction, a: &[i64]) -> Result<f64> {
    psi.eval(a)
}

/// Lower order `τ_ψ` of `ψ`.
pub fn lower_order(psi: &ApproxFunction, t_max: f64) -> Result<f64> {
    psi.lower_order(t_max)
}

/// Value and Jacobian of the chart at `x`.
pub fn eval_manifold(manifold: &MongeManifold, x: &[f64]) -> Result<ManifoldPoint> {
    manifold.eval(x)
}

/// `C0` covering both the chart and the shift over `U`.
pub fn combined_c0(manifold: &MongeManifold, theta: &Shift) -> f64 {
    manifold.c0().max(theta.c0(manifold.domain()))
}

/// Constants for a chart/shift pair at the given `δ`, with `v₁ = max v_i`.
pub fn constants_for(
    manifold: &MongeManifold,
    theta: &Shift,
    delta: f64,
    weights: &QuasinormWeights,
) -> Result<ConstructionConstants> {
    ConstructionConstants::new(
        manifold.m(),
        manifold.n(),
        combined_c0(manifold, theta),
        delta,
        weights.max(),
    )
}
