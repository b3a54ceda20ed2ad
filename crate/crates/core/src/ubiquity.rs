//! Trimmed resonant sets, their `Δ`-neighbourhoods, and empirical checks of
//! the ubiquity intersection and covering conditions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{bracketed_roots, dirichlet_member, successive_minima_construct, Construction};
use crate::measure::chunked_samples;
use crate::model::{
    unit_ball_volume, ConstructionConstants, DomainBox, ManifoldKind, MongeManifold, QuasinormWeights,
    ResonantFunction, Shift,
};

/// Points per axis of the grid on which the gradient-dominance condition is checked.
const EXTRA_GRID: [usize; 2] = [1025, 129];
/// Cells per fiber when scanning for zeros along `x₁`.
const FIBER_CELLS: usize = 256;
const MAX_FIBERS: usize = 2_000_000;
/// Measurement cells per `ρ(2^t)`.
const CELLS_PER_RHO: usize = 64;
/// Radii of the upper-bound test balls, in units of `ρ(2^t)`.
const UPPER_RADII: [f64; 3] = [3.0, 1.0, 0.25];
const RATIO_SLACK: f64 = 1e-9;

/// The zero set of `F + θ` on `U₀` and its trimmed part, both stored as
/// discretized fibers (at most a few roots along `x₁` per grid value of `x₂`).
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantSurface {
    pub resonant: ResonantFunction,
    pub theta: Shift,
    pub manifold: MongeManifold,
    pub u0: DomainBox,
    pub p: f64,
    pub rho_at_beta: f64,
    pub pitch: f64,
    pub extra_holds: bool,
    pub zero_set: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

impl ResonantSurface {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The same surface with the trimming undone: `R_F` replaced by `R̃_F ∩ U₀`.
    pub fn untrimmed(&self) -> Self {
        Self {
            points: self.zero_set.clone(),
            ..self.clone()
        }
    }

    fn fiber(&self, x1: f64, rest: &[f64]) -> f64 {
        let mut x = Vec::with_capacity(rest.len() + 1);
        x.push(x1);
        x.extend_from_slice(rest);
        self.resonant.value(&self.manifold, &self.theta, &x)
    }

    /// Zeros of `F + θ` on the `x₁`-fiber of `U₀` through `(x₂, …, x_m)`.
    pub fn fiber_roots(&self, rest: &[f64]) -> Vec<f64> {
        bracketed_roots(|s| self.fiber(s, rest), self.u0.lo[0], self.u0.hi[0], FIBER_CELLS)
    }

    /// Largest `|Δx₁/Δx₂|` between roots on adjacent single-root fibers of
    /// `R_F`, a finite-difference proxy for `|∇g|`.
    pub fn implicit_slope(&self) -> Option<f64> {
        if self.manifold.m() != 2 {
            return None;
        }
        self.points
            .windows(2)
            .filter(|w| {
                let dy = w[1][1] - w[0][1];
                dy > 0.5 * self.pitch && dy < 1.5 * self.pitch
            })
            .map(|w| ((w[1][0] - w[0][0]) / (w[1][1] - w[0][1])).abs())
            .reduce(f64::max)
    }

    pub fn summary(&self) -> SurfaceSummary {
        SurfaceSummary {
            a: self.resonant.a.clone(),
            a0: self.resonant.a0,
            u0: self.u0.clone(),
            p: self.p,
            rho_at_beta: self.rho_at_beta,
            pitch: self.pitch,
            extra_holds: self.extra_holds,
            zero_set_points: self.zero_set.len(),
            trimmed_points: self.points.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceSummary {
    pub a: Vec<i64>,
    pub a0: i64,
    pub u0: DomainBox,
    pub p: f64,
    pub rho_at_beta: f64,
    pub pitch: f64,
    pub extra_holds: bool,
    pub zero_set_points: usize,
    pub trimmed_points: usize,
}

/// `|∂₁(F+θ)| > p·|∇(F+θ)|` on a grid over `u0`.
pub fn gradient_dominance_holds(
    resonant: &ResonantFunction,
    theta: &Shift,
    manifold: &MongeManifold,
    u0: &DomainBox,
    p: f64,
) -> bool {
    u0.grid(EXTRA_GRID[u0.dim() - 1]).iter().all(|x| {
        let g = resonant.gradient(manifold, theta, x);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        g[0].abs() > p * norm
    })
}

/// Builds `R̃_F ∩ U₀` by per-fiber root localization and trims it to
/// `R_F = π^{−1}(V) ∩ R̃_F`, where `V` is the union of the half-balls of all
/// `3ρ(β_F)`-balls inside `π(R̃_F ∩ U₀)`. `R_F` is empty unless
/// gradient dominance holds on `U₀`.
pub fn trim_resonant(
    resonant: &ResonantFunction,
    theta: &Shift,
    manifold: &MongeManifold,
    u0: &DomainBox,
    p: f64,
    rho_at_beta: f64,
    pitch: f64,
) -> Result<ResonantSurface> {
    let m = manifold.m();
    if m > 2 {
        return Err(Error::input(format!(
            "resonant surfaces are supported for m ≤ 2, got m = {m}"
        )));
    }
    if resonant.a.len() != manifold.n() {
        return Err(Error::input("coefficient vector length differs from n"));
    }
    let dom = manifold.domain();
    if u0.dim() != m || (0..m).any(|i| u0.lo[i] < dom.lo[i] || u0.hi[i] > dom.hi[i]) {
        return Err(Error::input("U₀ must be a box inside U"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::input(format!("p must lie in (0,1), got {p}")));
    }
    if !(rho_at_beta > 0.0 && pitch > 0.0) {
        return Err(Error::input("ρ(β_F) and the fiber pitch must be positive"));
    }
    let extra_holds = gradient_dominance_holds(resonant, theta, manifold, u0, p);
    let mut surface = ResonantSurface {
        resonant: resonant.clone(),
        theta: theta.clone(),
        manifold: manifold.clone(),
        u0: u0.clone(),
        p,
        rho_at_beta,
        pitch,
        extra_holds,
        zero_set: Vec::new(),
        points: Vec::new(),
    };

    if m == 1 {
        surface.zero_set = surface.fiber_roots(&[]).into_iter().map(|r| vec![r]).collect();
        if extra_holds {
            surface.points = surface.zero_set.clone();
        }
        return Ok(surface);
    }

    if pitch > rho_at_beta / 4.0 {
        return Err(Error::Resolution(format!(
            "fiber pitch {pitch:e} cannot resolve 3ρ(β_F)-balls with ρ(β_F) = {rho_at_beta:e}"
        )));
    }
    let (lo, hi) = (u0.lo[1], u0.hi[1]);
    let fibers = ((hi - lo) / pitch).floor() as usize + 1;
    if fibers > MAX_FIBERS {
        return Err(Error::capacity(format!(
            "{fibers} fibers exceed the limit of {MAX_FIBERS}"
        )));
    }
    let per_fiber: Vec<(f64, Vec<f64>)> = (0..fibers)
        .into_par_iter()
        .map(|k| {
            let y = lo + pitch * k as f64;
            (y, surface.fiber_roots(&[y]))
        })
        .collect();
    surface.zero_set = per_fiber
        .iter()
        .flat_map(|(y, roots)| roots.iter().map(move |&r| vec![r, *y]))
        .collect();
    if !extra_holds {
        return Ok(surface);
    }

    let reach = 3.0 * rho_at_beta;
    let mut run_start: Option<usize> = None;
    for k in 0..=fibers {
        let occupied = k < fibers && !per_fiber[k].1.is_empty();
        match (occupied, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(s)) => {
                let (ys, ye) = (per_fiber[s].0, per_fiber[k - 1].0);
                if ye - ys >= 2.0 * reach {
                    let (vlo, vhi) = (ys + 0.5 * reach, ye - 0.5 * reach);
                    for (y, roots) in &per_fiber[s..k] {
                        if *y > vlo && *y < vhi {
                            surface.points.extend(roots.iter().map(|&r| vec![r, *y]));
                        }
                    }
                }
                run_start = None;
            }
            _ => {}
        }
    }
    Ok(surface)
}

/// Points sorted by their last coordinate for supremum-norm proximity queries.
struct PointIndex<'a> {
    points: Vec<&'a [f64]>,
}

impl<'a> PointIndex<'a> {
    fn new(points: &'a [Vec<f64>]) -> Self {
        let mut points: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        points.sort_by(|a, b| a.last().unwrap().total_cmp(b.last().unwrap()));
        Self { points }
    }

    /// `min(cap, min_p |x − p|_∞)`.
    fn distance(&self, x: &[f64], cap: f64) -> f64 {
        let key = *x.last().unwrap();
        let start = self.points.partition_point(|p| *p.last().unwrap() <= key - cap);
        let mut best = cap;
        for p in &self.points[start..] {
            if *p.last().unwrap() >= key + best {
                break;
            }
            let d = p.iter().zip(x).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            best = best.min(d);
        }
        best
    }
}

/// `x ∈ Δ(R_F, r)`: `x ∈ U` and some point of the discretized `R_F` lies
/// within supremum distance `< r`.
pub fn delta_neighborhood_member(x: &[f64], surface: &ResonantSurface, r: f64) -> bool {
    if !(r > 0.0) || surface.is_empty() || !surface.manifold.domain().contains(x) {
        return false;
    }
    PointIndex::new(&surface.points).distance(x, r) < r
}

/// Supremum distance from `x` to the discretized `R_F`, or `∞` when empty.
pub fn distance_to_surface(x: &[f64], surface: &ResonantSurface) -> f64 {
    if surface.is_empty() {
        return f64::INFINITY;
    }
    PointIndex::new(&surface.points).distance(x, f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionRow {
    pub center: Vec<f64>,
    pub lambda: f64,
    /// Radius of the test ball, `½ρ(2^t)` for the lower bound.
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionConditionsReport {
    pub surface: SurfaceSummary,
    pub t: i32,
    pub beta: f64,
    pub gamma: usize,
    pub rho: f64,
    pub pitch: f64,
    pub c1: f64,
    pub c2: f64,
    pub lambdas: Vec<f64>,
    pub vacuous: bool,
    /// `min lhs/rhs` over the lower-bound rows (must be ≥ 1).
    pub lower_worst: f64,
    /// `max lhs/rhs` over the upper-bound rows (must be ≤ 1).
    pub upper_worst: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub lower: Vec<IntersectionRow>,
    pub upper: Vec<IntersectionRow>,
}

impl IntersectionConditionsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `c₁ = 2^{−2m+3}/v_m` and `c₂ = 3m2^m/(p·v_m)`.
pub fn intersection_constants(m: usize, p: f64) -> (f64, f64) {
    let vm = unit_ball_volume(m);
    let c1 = 2f64.powi(3 - 2 * m as i32) / vm;
    let c2 = 3.0 * m as f64 * 2f64.powi(m as i32) / (p * vm);
    (c1, c2)
}

/// Measures both sides of the lower and upper intersection conditions on a
/// grid of pitch `ρ(2^t)/64` around `centers` points of `R_F`, for every `λ`
/// in `lambdas` and test balls of radius `3ρ`, `ρ`, `ρ/4` centred on `R_F`.
pub fn check_intersection_conditions(
    surface: &ResonantSurface,
    consts: &ConstructionConstants,
    weights: &QuasinormWeights,
    t: i32,
    lambdas: &[f64],
    centers: usize,
) -> Result<IntersectionConditionsReport> {
    let m = surface.manifold.m();
    let rho = consts.rho_dyadic(t);
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l <= rho)) {
        return Err(Error::input(format!("every λ must lie in (0, ρ(2^t)] = (0, {rho:e}]")));
    }
    let beta = surface.resonant.beta(consts.kappa0(weights), weights);
    if beta > (t as f64).exp2() {
        return Err(Error::input(format!(
            "β_F = {beta} exceeds 2^t = {}",
            (t as f64).exp2()
        )));
    }
    let (c1, c2) = intersection_constants(m, surface.p);
    let pitch = rho / CELLS_PER_RHO as f64;
    let mut report = IntersectionConditionsReport {
        surface: surface.summary(),
        t,
        beta,
        gamma: m - 1,
        rho,
        pitch,
        c1,
        c2,
        lambdas: lambdas.to_vec(),
        vacuous: surface.is_empty(),
        lower_worst: f64::INFINITY,
        upper_worst: 0.0,
        lower_holds: true,
        upper_holds: true,
        lower: Vec::new(),
        upper: Vec::new(),
    };
    if surface.is_empty() || centers == 0 {
        report.vacuous = true;
        return Ok(report);
    }

    let len = surface.points.len();
    let picks: Vec<&[f64]> = (0..centers.min(len))
        .map(|k| surface.points[(2 * k + 1) * len / (2 * centers.min(len))].as_slice())
        .collect();
    let index = PointIndex::new(&surface.points);
    let lam_max = lambdas.iter().copied().fold(0.0, f64::max);
    let cap = 3.0 * lam_max;
    let half = (UPPER_RADII[0] * CELLS_PER_RHO as f64) as i64;
    let gamma = (m - 1) as i32;
    let vm = unit_ball_volume(m);
    let domain = surface.manifold.domain();

    let per_center: Vec<(Vec<IntersectionRow>, Vec<IntersectionRow>)> = picks
        .par_iter()
        .map(|c| {
            let mut lower_counts = vec![0usize; lambdas.len()];
            let mut upper_counts = vec![vec![0usize; lambdas.len()]; UPPER_RADII.len()];
            let mut cell = vec![0.0; m];
            let axis_cells = (2 * half) as usize;
            let total = axis_cells.pow(m as u32);
            for flat in 0..total {
                let mut rem = flat;
                let mut r2 = 0.0;
                for (i, x) in cell.iter_mut().enumerate() {
                    let k = (rem % axis_cells) as i64 - half;
                    rem /= axis_cells;
                    let off = (k as f64 + 0.5) * pitch;
                    *x = c[i] + off;
                    r2 += off * off;
                }
                let r = r2.sqrt();
                if r >= UPPER_RADII[0] * rho || !domain.contains(&cell) {
                    continue;
                }
                let d = index.distance(&cell, cap);
                for (j, &lam) in lambdas.iter().enumerate() {
                    if r < 0.5 * rho && d < lam {
                        lower_counts[j] += 1;
                    }
                    for (b, &rb) in UPPER_RADII.iter().enumerate() {
                        if r < rb * rho && d < 3.0 * lam {
                            upper_counts[b][j] += 1;
                        }
                    }
                }
            }
            let area = pitch.powi(m as i32);
            let lower = lambdas
                .iter()
                .zip(&lower_counts)
                .map(|(&lam, &count)| IntersectionRow {
                    center: c.to_vec(),
                    lambda: lam,
                    radius: 0.5 * rho,
                    lhs: count as f64 * area,
                    rhs: c1 * vm * lam.powi(m as i32) * (rho / lam).powi(gamma),
                })
                .collect();
            let upper = UPPER_RADII
                .iter()
                .zip(&upper_counts)
                .flat_map(|(&rb, counts)| {
                    lambdas.iter().zip(counts).map(move |(&lam, &count)| IntersectionRow {
                        center: c.to_vec(),
                        lambda: lam,
                        radius: rb * rho,
                        lhs: count as f64 * area,
                        rhs: c2 * vm * lam.powi(m as i32) * (rb * rho / lam).powi(gamma),
                    })
                })
                .collect();
            (lower, upper)
        })
        .collect();

    for (lower, upper) in per_center {
        report.lower.extend(lower);
        report.upper.extend(upper);
    }
    report.lower_worst = report.lower.iter().map(|r| r.lhs / r.rhs).fold(f64::INFINITY, f64::min);
    report.upper_worst = report.upper.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    report.lower_holds = report.lower_worst >= 1.0 - RATIO_SLACK;
    report.upper_holds = report.upper_worst <= 1.0 + RATIO_SLACK;
    Ok(report)
}

/// Distance check of a successive-minima construction against its trimmed
/// resonant set on `U₀ = B(x, ½·diam U₀) ∩ U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaCheck {
    pub rho: f64,
    pub distance: f64,
    pub member: bool,
    pub beta_within_q: bool,
    pub extra_holds: bool,
}

impl DeltaCheck {
    pub fn holds(&self) -> bool {
        self.member && self.beta_within_q
    }
}

/// `x ∈ Δ(R_F, ρ(Q))` and `β_F ≤ Q` for a construction at `x`.
pub fn construction_delta_check(
    construction: &Construction,
    manifold: &MongeManifold,
    theta: &Shift,
    consts: &ConstructionConstants,
) -> Result<DeltaCheck> {
    let x = &construction.x;
    let rho = consts.rho(construction.q);
    let u0 = DomainBox::centered(x, 0.5 * consts.u0_diameter())?
        .intersect(manifold.domain())
        .ok_or_else(|| Error::domain("U₀ misses U"))?;
    let surface = trim_resonant(
        &construction.resonant,
        theta,
        manifold,
        &u0,
        consts.p,
        consts.rho(construction.beta),
        rho / CELLS_PER_RHO as f64,
    )?;
    Ok(DeltaCheck {
        rho,
        distance: distance_to_surface(x, &surface),
        member: delta_neighborhood_member(x, &surface, rho),
        beta_within_q: construction.beta <= construction.q,
        extra_holds: surface.extra_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport {
    pub q: f64,
    pub delta: f64,
    pub rho: f64,
    pub samples: usize,
    pub in_dirichlet: usize,
    pub complement: usize,
    pub covered: usize,
    pub not_covered: usize,
    pub construction_failures: usize,
    /// `covered / samples`.
    pub fraction: f64,
    /// `covered / complement`, `None` when the complement is empty.
    pub covered_of_complement: Option<f64>,
    /// `2^{−m−1}(1 − ω)`.
    pub floor: f64,
    pub seed: u64,
}

impl CoveringReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

enum CoverOutcome {
    Dirichlet,
    Covered,
    Missed,
    Failed,
}

/// Samples `x ∈ ½B` and, for each `x ∉ Φ_v(Q, δ)`, runs the successive-minima
/// construction and checks `β_F ≤ Q` and `x ∈ Δ(R_F, ρ(Q))`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_covering_property(
    manifold: &MongeManifold,
    theta: &Shift,
    ball: &DomainBox,
    q: f64,
    weights: &QuasinormWeights,
    consts: &ConstructionConstants,
    omega: f64,
    samples: usize,
    seed: u64,
) -> Result<CoveringReport> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::input(format!("ω must lie in [0,1], got {omega}")));
    }
    let half = ball
        .scaled(0.5)
        .intersect(manifold.domain())
        .ok_or_else(|| Error::domain("½B misses U"))?;
    let outcomes = chunked_samples(seed, samples, |rng| {
        let x = half.sample(rng);
        match dirichlet_member(&x, manifold, q, consts.delta, weights) {
            Ok(Some(_)) => return CoverOutcome::Dirichlet,
            Ok(None) => {}
            Err(_) => return CoverOutcome::Failed,
        }
        let checked = successive_minima_construct(&x, manifold, theta, q, consts, weights)
            .and_then(|c| construction_delta_check(&c, manifold, theta, consts));
        match checked {
            Ok(check) if check.holds() => CoverOutcome::Covered,
            Ok(_) => CoverOutcome::Missed,
            Err(_) => CoverOutcome::Failed,
        }
    });
    let count = |pred: fn(&CoverOutcome) -> bool| outcomes.iter().filter(|o| pred(o)).count();
    let in_dirichlet = count(|o| matches!(o, CoverOutcome::Dirichlet));
    let covered = count(|o| matches!(o, CoverOutcome::Covered));
    let not_covered = count(|o| matches!(o, CoverOutcome::Missed));
    let construction_failures = count(|o| matches!(o, CoverOutcome::Failed));
    let complement = samples - in_dirichlet;
    Ok(CoveringReport {
        q,
        delta: consts.delta,
        rho: consts.rho(q),
        samples,
        in_dirichlet,
        complement,
        covered,
        not_covered,
        construction_failures,
        fraction: if samples == 0 {
            0.0
        } else {
            covered as f64 / samples as f64
        },
        covered_of_complement: (complement > 0).then(|| covered as f64 / complement as f64),
        floor: (-(manifold.m() as f64) - 1.0).exp2() * (1.0 - omega),
        seed,
    })
}

/// A built-in counterexample: chart, resonant function and neighbourhood `U₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSurface {
    pub manifold: MongeManifold,
    pub resonant: ResonantFunction,
    pub u0: DomainBox,
}

/// Sphere patch `f = √(1 − x₁² − x₂²)` on `(−½, ½)²` with `F = f − 1`, whose
/// zero set is the single point `(0, 0)`.
pub fn sphere_example() -> Result<ExampleSurface> {
    let domain = DomainBox::new(vec![-0.5, -0.5], vec![0.5, 0.5])?;
    Ok(ExampleSurface {
        manifold: MongeManifold::new(ManifoldKind::SpherePatch, domain.clone())?,
        resonant: ResonantFunction::new(vec![0, 0, 1], -1)?,
        u0: domain,
    })
}

/// Truncated Liouville-type constant `10^{−1} + 10^{−2} + 10^{−6}`.
pub const LIOUVILLE_ALPHA: f64 = 0.110001;

/// Paraboloid `f = x₁² + x₂²` on `(α, α+1)²` with `F = q x₁ + q x₂ − 2(p+q)`
/// for `p/q = 11/100 < α`: the zero set is a segment of length `≈ 2√2·10^{−6}`
/// cutting the corner `(α+1, α+1)`. `U₀` is the corner square of side `0.002`.
pub fn liouville_example() -> Result<ExampleSurface> {
    let (p, q) = (11i64, 100i64);
    let a = LIOUVILLE_ALPHA;
    let domain = DomainBox::new(vec![a, a], vec![a + 1.0, a + 1.0])?;
    let u0 = DomainBox::new(vec![a + 0.998, a + 0.998], vec![a + 1.0, a + 1.0])?;
    Ok(ExampleSurface {
        manifold: MongeManifold::new(ManifoldKind::Paraboloid, domain)?,
        resonant: ResonantFunction::new(vec![q, q, 0], -2 * (p + q))?,
        u0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn veronese(lo: f64, hi: f64) -> MongeManifold {
        MongeManifold::veronese(2, DomainBox::new(vec![lo], vec![hi]).unwrap()).unwrap()
    }

    fn consts_for(manifold: &MongeManifold) -> ConstructionConstants {
        crate::model::constants_for(manifold, &Shift::zero(), 0.5, &QuasinormWeights::uniform(manifold.n())).unwrap()
    }

    #[test]
    fn line_through_origin() {
        let c = veronese(-1.0, 1.0);
        let f = ResonantFunction::new(vec![1, 0], 0).unwrap();
        let s = trim_resonant(&f, &Shift::zero(), &c, c.domain(), 0.5, 1.0, 1e-3).unwrap();
        assert!(s.extra_holds);
        assert_eq!(s.points, vec![vec![0.0]]);
        assert!(delta_neighborhood_member(&[0.0], &s, 1e-9));
        assert!(!delta_neighborhood_member(&[0.0], &s, 0.0));
        assert!(delta_neighborhood_member(&[0.05], &s, 0.06));
        assert!(!delta_neighborhood_member(&[0.05], &s, 0.05));
    }

    #[test]
    fn critical_point_empties_the_trimmed_set() {
        let c = veronese(-1.0, 1.0);
        // x² − 1/4 has ∂₁ = 2x vanishing at 0.
        let f = ResonantFunction::new(vec![0, 4], -1).unwrap();
        let s = trim_resonant(&f, &Shift::zero(), &c, c.domain(), 0.5, 1.0, 1e-3).unwrap();
        assert!(!s.extra_holds);
        assert_eq!(s.zero_set.len(), 2);
        assert!(s.is_empty());
        assert!(!delta_neighborhood_member(&[0.5], &s, 1.0));
    }

    #[test]
    fn sphere_zero_set_is_a_point() {
        let ex = sphere_example().unwrap();
        let k = consts_for(&ex.manifold);
        let rho = k.rho_dyadic(3);
        let s = trim_resonant(&ex.resonant, &Shift::zero(), &ex.manifold, &ex.u0, k.p, 1.0, rho / 64.0).unwrap();
        assert_eq!(s.zero_set, vec![vec![0.0, 0.0]]);
        assert!(!s.extra_holds);
        assert!(s.is_empty());
    }

    #[test]
    fn resolution_error() {
        let ex = sphere_example().unwrap();
        let r = trim_resonant(&ex.resonant, &Shift::zero(), &ex.manifold, &ex.u0, 0.1, 1e-3, 1e-3);
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn sphere_violates_lower_bound_untrimmed() {
        let ex = sphere_example().unwrap();
        let k = consts_for(&ex.manifold);
        let w = QuasinormWeights::uniform(3);
        let t = 3;
        let rho = k.rho_dyadic(t);
        let s = trim_resonant(&ex.resonant, &Shift::zero(), &ex.manifold, &ex.u0, k.p, 1.0, rho / 64.0).unwrap();
        let lambdas: Vec<f64> = (1..=5).map(|j| rho / f64::from(1 << j)).collect();
        let raw = check_intersection_conditions(&s.untrimmed(), &k, &w, t, &lambdas, 1).unwrap();
        // Once the λ-square fits in the ball its area 4λ² faces λρ/2 on the right.
        for row in raw.lower.iter().filter(|r| r.lambda <= rho / 4.0) {
            let expected = 8.0 * row.lambda / rho;
            assert!((row.lhs / row.rhs - expected).abs() < 1e-9, "{row:?}");
        }
        assert!(!raw.lower_holds);
        let trimmed = check_intersection_conditions(&s, &k, &w, t, &lambdas, 1).unwrap();
        assert!(trimmed.vacuous && trimmed.lower_holds && trimmed.upper_holds);
    }

    #[test]
    fn liouville_segment_is_trimmed_away() {
        let ex = liouville_example().unwrap();
        let k = consts_for(&ex.manifold);
        let w = QuasinormWeights::uniform(3);
        let t = 4;
        let rho = k.rho_dyadic(t);
        let beta = ex.resonant.beta(k.kappa0(&w), &w);
        let s = trim_resonant(
            &ex.resonant,
            &Shift::zero(),
            &ex.manifold,
            &ex.u0,
            k.p,
            k.rho(beta),
            5e-8,
        )
        .unwrap();
        assert!(s.extra_holds);
        assert!(!s.zero_set.is_empty());
        let span = s.zero_set.last().unwrap()[1] - s.zero_set[0][1];
        assert!(span < 3e-6, "{span}");
        assert!(s.is_empty());
        let lambdas: Vec<f64> = (1..=5).map(|j| rho / f64::from(1 << j)).collect();
        let raw = check_intersection_conditions(&s.untrimmed(), &k, &w, t, &lambdas, 3).unwrap();
        assert!(!raw.lower_holds, "{}", raw.lower_worst);
        assert!(raw.lower_worst < 0.2);
    }

    #[test]
    fn veronese_generic_surface_passes() {
        let c = veronese(-1.0, 1.0);
        let k = consts_for(&c);
        let w = QuasinormWeights::uniform(2);
        // x² + 10x − 3 vanishes at √28 − 5 ≈ 0.2915.
        let f = ResonantFunction::new(vec![10, 1], -3).unwrap();
        let u0 = DomainBox::centered(&[0.29], 0.5 * k.u0_diameter()).unwrap();
        let t = 5;
        let rho = k.rho_dyadic(t);
        let beta = f.beta(k.kappa0(&w), &w);
        let s = trim_resonant(&f, &Shift::zero(), &c, &u0, k.p, k.rho(beta), rho / 64.0).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!((s.points[0][0] - (28f64.sqrt() - 5.0)).abs() < 1e-12);
        let lambdas: Vec<f64> = (1..=5).map(|j| rho / f64::from(1 << j)).collect();
        let r = check_intersection_conditions(&s, &k, &w, t, &lambdas, 1).unwrap();
        let (c1, c2) = intersection_constants(1, k.p);
        assert_eq!(c1, 1.0);
        assert_eq!(c2, 3.0 / k.p);
        assert!(r.lower_holds && r.upper_holds, "{} {}", r.lower_worst, r.upper_worst);
        assert!((r.lower_worst - 1.0).abs() < 1e-9);
        assert!(check_intersection_conditions(&s, &k, &w, t, &[2.0 * rho], 1).is_err());
    }

    fn paraboloid_surface() -> (ResonantSurface, ConstructionConstants, i32) {
        let domain = DomainBox::new(vec![0.1, 0.1], vec![0.6, 0.6]).unwrap();
        let c = MongeManifold::new(ManifoldKind::Paraboloid, domain.clone()).unwrap();
        let k = consts_for(&c);
        let w = QuasinormWeights::uniform(3);
        // 2000·(3x₁ + x₂ + 2(x₁² + x₂²) − 2).
        let f = ResonantFunction::new(vec![6000, 2000, 4000], -4000).unwrap();
        let beta = f.beta(k.kappa0(&w), &w);
        let t = (beta.log2().ceil() as i32).max(1);
        let pitch = k.rho_dyadic(t) / 64.0;
        let s = trim_resonant(&f, &Shift::zero(), &c, &domain, k.p, k.rho(beta), pitch).unwrap();
        (s, k, t)
    }

    #[test]
    fn paraboloid_surface_geometry() {
        let (s, k, t) = paraboloid_surface();
        assert!(s.extra_holds);
        assert!(!s.is_empty() && s.points.len() < s.zero_set.len());
        for p in s.points.iter().step_by(97) {
            assert!(s.resonant.value(&s.manifold, &s.theta, p).abs() < 1e-8);
        }
        assert!(s.implicit_slope().unwrap() <= 1.0 / s.p);

        // Δ₁(R_F, η) ⊂ Δ(R_F, η) ⊂ Δ₁(R̃_F ∩ U₀, 2η/p) on sampled points.
        let eta = k.rho_dyadic(t);
        for (i, p) in s.points.iter().enumerate().step_by(211) {
            let shift = eta * ((i % 7) as f64 / 7.0 - 0.5);
            let z = vec![p[0] + shift, p[1] + 0.3 * eta];
            assert!(delta_neighborhood_member(&[p[0] + shift, p[1]], &s, eta));
            if delta_neighborhood_member(&z, &s, eta) {
                let g = s.fiber_roots(&[z[1]]);
                assert!(g.iter().any(|r| (z[0] - r).abs() <= 2.0 * eta / s.p));
            }
        }
    }

    #[test]
    fn paraboloid_surface_intersection_conditions() {
        let (s, k, t) = paraboloid_surface();
        let rho = k.rho_dyadic(t);
        let lambdas: Vec<f64> = (1..=4).map(|j| rho / f64::from(1 << j)).collect();
        let r = check_intersection_conditions(&s, &k, &QuasinormWeights::uniform(3), t, &lambdas, 2).unwrap();
        assert!(!r.vacuous);
        assert!(r.lower_holds && r.upper_holds, "{} {}", r.lower_worst, r.upper_worst);
    }

    #[test]
    fn covering_on_veronese() {
        let c = veronese(0.0, 1.0);
        let k = consts_for(&c);
        let w = QuasinormWeights::uniform(2);
        let report = estimate_covering_property(&c, &Shift::zero(), c.domain(), 16.0, &w, &k, 0.0, 200, 5).unwrap();
        assert_eq!(report.construction_failures, 0);
        assert_eq!(report.not_covered, 0);
        assert!(report.complement > 0);
        assert_eq!(report.covered, report.complement);
        assert_eq!(report.floor, 0.25);
    }
}
