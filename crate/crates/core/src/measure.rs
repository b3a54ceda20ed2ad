//! Monte Carlo and grid measurements of approximable sets, the Groshev
//! dichotomy, (C, α)-good functions, v-niceness and the BKM measure bound.

use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{beats, HeightBox, PointForm};
use crate::model::{ApproxFunction, DomainBox, MongeManifold, MultivariableApproxFunction, QuasinormWeights, Shift};
use crate::report::{fmt_real, Csv};

/// Samples per deterministic chunk; chunk `c` draws from stream `c` of the seed.
pub const CHUNK: usize = 256;
pub const MIN_SAMPLES: usize = 1000;
const WILSON_Z: f64 = 1.959963984540054;

/// Draws `count` values with `f`, chunk by chunk, independent of the number
/// of rayon workers.
pub fn chunked_samples<T, F>(seed: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<T>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub fraction: f64,
    pub hits: usize,
    pub samples: usize,
    pub ci95: (f64, f64),
    pub seed: u64,
}

impl MeasureEstimate {
    pub fn from_hits(hits: usize, samples: usize, seed: u64) -> Self {
        let fraction = if samples == 0 {
            0.0
        } else {
            hits as f64 / samples as f64
        };
        Self {
            fraction,
            hits,
            samples,
            ci95: wilson_interval(hits, samples),
            seed,
        }
    }
}

/// 95% Wilson score interval for `hits` successes out of `samples`.
pub fn wilson_interval(hits: usize, samples: usize) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

fn check_region(manifold: &MongeManifold, region: &DomainBox) -> Result<()> {
    if region.dim() != manifold.m() {
        return Err(Error::input("region dimension differs from the chart"));
    }
    let dom = manifold.domain();
    if region.lo.iter().zip(&dom.lo).any(|(r, d)| r < d) || region.hi.iter().zip(&dom.hi).any(|(r, d)| r > d) {
        return Err(Error::domain("region must lie inside U"));
    }
    Ok(())
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::input(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    Ok(())
}

fn has_witness(form: &PointForm, psi: &MultivariableApproxFunction, hb: &HeightBox, above: f64) -> bool {
    hb.try_visit(|a| {
        let h = psi.weights.height(a);
        if h > above && beats(form.complete(a).1, psi.at_height(h)) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .is_some()
}

/// Fraction of uniform samples in `region` admitting a witness with `|a|_v ≤ H`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_approximable_fraction(
    manifold: &MongeManifold,
    theta: &Shift,
    psi: &MultivariableApproxFunction,
    region: &DomainBox,
    h: f64,
    samples: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    Ok(approximable_profile(manifold, theta, psi, region, &[h], samples, seed)?.remove(0))
}

/// Cumulative fractions `|{x : witness with |a|_v ≤ H}|` over an increasing
/// schedule, on one shared sample.
pub fn approximable_profile(
    manifold: &MongeManifold,
    theta: &Shift,
    psi: &MultivariableApproxFunction,
    region: &DomainBox,
    hs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<MeasureEstimate>> {
    check_samples(samples)?;
    check_region(manifold, region)?;
    check_schedule(hs)?;
    let boxes: Vec<HeightBox> = hs
        .iter()
        .map(|&h| HeightBox::new(h, &psi.weights))
        .collect::<Result<_>>()?;
    let rows = chunked_samples(seed, samples, |rng| {
        let x = region.sample(rng);
        let form = PointForm::new(manifold, theta, &x).expect("sample lies in U");
        let mut found = vec![false; boxes.len()];
        if let Some(first) = boxes.iter().position(|hb| has_witness(&form, psi, hb, 0.0)) {
            found[first..].iter_mut().for_each(|f| *f = true);
        }
        found
    });
    Ok(tally(&rows, hs.len(), seed))
}

/// Fractions of samples with a witness in the block `(H, 2H]`, per `H`.
pub fn tail_profile(
    manifold: &MongeManifold,
    theta: &Shift,
    psi: &MultivariableApproxFunction,
    region: &DomainBox,
    hs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<MeasureEstimate>> {
    check_samples(samples)?;
    check_region(manifold, region)?;
    check_schedule(hs)?;
    let boxes: Vec<HeightBox> = hs
        .iter()
        .map(|&h| HeightBox::new(2.0 * h, &psi.weights))
        .collect::<Result<_>>()?;
    let rows = chunked_samples(seed, samples, |rng| {
        let x = region.sample(rng);
        let form = PointForm::new(manifold, theta, &x).expect("sample lies in U");
        boxes
            .iter()
            .zip(hs)
            .map(|(hb, &h)| has_witness(&form, psi, hb, h))
            .collect::<Vec<bool>>()
    });
    Ok(tally(&rows, hs.len(), seed))
}

fn check_schedule(hs: &[f64]) -> Result<()> {
    if hs.is_empty() || hs.iter().any(|h| !(*h >= 1.0)) || hs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("height schedule must be increasing and at least 1"));
    }
    Ok(())
}

fn tally(rows: &[Vec<bool>], width: usize, seed: u64) -> Vec<MeasureEstimate> {
    (0..width)
        .map(|j| MeasureEstimate::from_hits(rows.iter().filter(|r| r[j]).count(), rows.len(), seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomySeries {
    pub tau: f64,
    pub cumulative: Vec<MeasureEstimate>,
    pub tail: Vec<MeasureEstimate>,
    /// Last minus first cumulative fraction.
    pub cumulative_trend: f64,
    /// Last minus first tail fraction.
    pub tail_trend: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyTable {
    pub hs: Vec<f64>,
    pub scale: f64,
    pub rows: Vec<DichotomySeries>,
}

impl DichotomyTable {
    pub fn to_csv(&self, comment: &str) -> String {
        let mut csv = Csv::with_comment(
            comment,
            &[
                "parameter",
                "series",
                "H",
                "fraction",
                "ci_lo",
                "ci_hi",
                "samples",
                "seed",
            ],
        );
        for row in &self.rows {
            for (label, series) in [("cumulative", &row.cumulative), ("tail", &row.tail)] {
                for (h, est) in self.hs.iter().zip(series) {
                    csv.row([
                        format!("tau={}", fmt_real(row.tau)),
                        label.to_string(),
                        fmt_real(*h),
                        fmt_real(est.fraction),
                        fmt_real(est.ci95.0),
                        fmt_real(est.ci95.1),
                        est.samples.to_string(),
                        est.seed.to_string(),
                    ]);
                }
            }
        }
        csv.finish()
    }
}

/// For each `τ`, cumulative and block-tail fractions for `ψ(t) = c·t^{−τ}`
/// over the height schedule, all on the same sample points.
#[allow(clippy::too_many_arguments)]
pub fn dichotomy_experiment(
    manifold: &MongeManifold,
    theta: &Shift,
    weights: &QuasinormWeights,
    scale: f64,
    taus: &[f64],
    hs: &[f64],
    region: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<DichotomyTable> {
    let rows = taus
        .iter()
        .map(|&tau| {
            let psi = MultivariableApproxFunction::new(ApproxFunction::scaled_power_law(tau, scale)?, weights.clone());
            let cumulative = approximable_profile(manifold, theta, &psi, region, hs, samples, seed)?;
            let tail = tail_profile(manifold, theta, &psi, region, hs, samples, seed)?;
            let trend = |s: &[MeasureEstimate]| s.last().unwrap().fraction - s[0].fraction;
            Ok(DichotomySeries {
                tau,
                cumulative_trend: trend(&cumulative),
                tail_trend: trend(&tail),
                cumulative,
                tail,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DichotomyTable {
        hs: hs.to_vec(),
        scale,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodRow {
    pub eps: f64,
    pub fraction: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodReport {
    pub pass: bool,
    pub worst_ratio: f64,
    pub sup: f64,
    pub rows: Vec<GoodRow>,
}

/// Grid test of `|{x ∈ B : |g(x)| < ε·sup_B|g|}| ≤ C·ε^α·|B|` with slack 1.05.
///
/// `B` is an axis-aligned box in dimension 1 or 2, sampled at cell midpoints.
pub fn good_function_test<G>(
    g: G,
    ball: &DomainBox,
    c: f64,
    alpha: f64,
    eps: &[f64],
    resolution: usize,
) -> Result<GoodReport>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let m = ball.dim();
    if !(1..=2).contains(&m) {
        return Err(Error::input("good-function test supports m ≤ 2"));
    }
    if resolution < 1024 {
        return Err(Error::input(format!(
            "resolution must be at least 1024, got {resolution}"
        )));
    }
    let values = midpoint_values(&g, ball, resolution);
    let sup = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let total = values.len() as f64;
    let rows: Vec<GoodRow> = eps
        .iter()
        .map(|&e| {
            let fraction = values.iter().filter(|v| v.abs() < e * sup).count() as f64 / total;
            let bound = c * e.powf(alpha);
            GoodRow {
                eps: e,
                fraction,
                bound,
                ratio: fraction / bound,
            }
        })
        .collect();
    let worst_ratio = rows.iter().fold(0.0f64, |acc, r| acc.max(r.ratio));
    Ok(GoodReport {
        pass: rows.iter().all(|r| r.fraction <= 1.05 * r.bound),
        worst_ratio,
        sup,
        rows,
    })
}

fn midpoint_values<G: Fn(&[f64]) -> f64 + Sync>(g: &G, ball: &DomainBox, resolution: usize) -> Vec<f64> {
    let coord =
        |axis: usize, i: usize| ball.lo[axis] + (ball.hi[axis] - ball.lo[axis]) * (i as f64 + 0.5) / resolution as f64;
    match ball.dim() {
        1 => (0..resolution).into_par_iter().map(|i| g(&[coord(0, i)])).collect(),
        _ => (0..resolution)
            .into_par_iter()
            .flat_map_iter(|i| (0..resolution).map(move |j| g(&[coord(0, i), coord(1, j)])))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiceReport {
    pub delta: f64,
    pub qs: Vec<f64>,
    pub fractions: Vec<MeasureEstimate>,
    /// Max fraction over the second half of the schedule.
    pub tail_max: f64,
    pub c: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Monte Carlo fractions of `Φ_v(Q, δ) ∩ B` over an increasing `Q` schedule.
#[allow(clippy::too_many_arguments)]
pub fn nice_test(
    manifold: &MongeManifold,
    region: &DomainBox,
    delta: f64,
    v: &QuasinormWeights,
    qs: &[f64],
    samples: usize,
    seed: u64,
    c: f64,
) -> Result<NiceReport> {
    check_samples(samples)?;
    check_region(manifold, region)?;
    if qs.is_empty() || qs.iter().any(|q| !(*q > 1.0)) || qs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("Q schedule must be increasing and above 1"));
    }
    if !(delta > 0.0) {
        return Err(Error::input("delta must be positive"));
    }
    if v.n() != manifold.n() {
        return Err(Error::input("weights and manifold disagree on n"));
    }
    let n = manifold.n() as i32;
    let boxes: Vec<HeightBox> = qs.iter().map(|&q| HeightBox::new(q, v)).collect::<Result<_>>()?;
    let rows = chunked_samples(seed, samples, |rng| {
        let x = region.sample(rng);
        let form = PointForm::new(manifold, &Shift::zero(), &x).expect("sample lies in U");
        boxes
            .iter()
            .zip(qs)
            .map(|(hb, &q)| {
                let bound = delta * q.powi(-n);
                hb.try_visit(|a| {
                    if form.complete(a).1 < bound {
                        ControlFlow::Break(())
                    } else {
                        ControlFlow::Continue(())
                    }
                })
                .is_some()
            })
            .collect::<Vec<bool>>()
    });
    let fractions = tally(&rows, qs.len(), seed);
    let tail_start = qs.len() / 2;
    let tail_max = fractions[tail_start..]
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.fraction));
    Ok(NiceReport {
        delta,
        qs: qs.to_vec(),
        fractions,
        tail_max,
        c,
        bound: c * delta,
        pass: tail_max <= c * delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiceSweep {
    pub deltas: Vec<f64>,
    pub tail_max: Vec<f64>,
    /// Least-squares slope of `tail_max` against `δ` through the origin.
    pub c_fit: f64,
    /// `tail_max / (c_fit·δ)` per `δ`.
    pub ratios: Vec<f64>,
}

/// Runs [`nice_test`] across `δ` values and fits `tail ≈ C·δ`.
pub fn nice_delta_sweep(
    manifold: &MongeManifold,
    region: &DomainBox,
    deltas: &[f64],
    v: &QuasinormWeights,
    qs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<NiceSweep> {
    let tail_max: Vec<f64> = deltas
        .iter()
        .map(|&d| Ok(nice_test(manifold, region, d, v, qs, samples, seed, 1.0)?.tail_max))
        .collect::<Result<_>>()?;
    let sxy: f64 = deltas.iter().zip(&tail_max).map(|(d, f)| d * f).sum();
    let sxx: f64 = deltas.iter().map(|d| d * d).sum();
    let c_fit = sxy / sxx;
    let ratios = deltas.iter().zip(&tail_max).map(|(d, f)| f / (c_fit * d)).collect();
    Ok(NiceSweep {
        deltas: deltas.to_vec(),
        tail_max,
        c_fit,
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BkmReport {
    pub a: Vec<i64>,
    pub delta: f64,
    /// Notice when the size condition on `q` fails and the check is skipped.
    pub skipped: Option<String>,
    pub l: f64,
    pub q_norm: f64,
    pub gradient_threshold: Option<f64>,
    pub fraction: f64,
    pub ratio: f64,
}

/// Grid measure of `{x ∈ B : ‖g(x)·q‖ < δ, |∇g(x)·q| ≥ ((n+1)mL|q|)^{1/2}}`
/// for `g = (f, θ)` and `q = (a, 1)`, reported relative to `δ|B|`.
///
/// With `use_threshold = false` the gradient condition is dropped.
#[allow(clippy::too_many_arguments)]
pub fn bkm_bound_check(
    manifold: &MongeManifold,
    theta: &Shift,
    ball: &DomainBox,
    a: &[i64],
    delta: f64,
    resolution: usize,
    use_threshold: bool,
) -> Result<BkmReport> {
    let (m, n) = (manifold.m(), manifold.n());
    if a.len() != n || ball.dim() != m || m > 2 {
        return Err(Error::input("bkm check needs a of length n and a ball in ℝ^m, m ≤ 2"));
    }
    if !(delta > 0.0) {
        return Err(Error::input("delta must be positive"));
    }
    let double = ball.scaled(2.0);
    if !manifold.domain().intersect(&double).is_some_and(|d| d == double) {
        return Err(Error::domain("2B must lie inside U"));
    }
    let r = 0.5 * ball.diam();
    let per_axis = if m == 1 { 1025 } else { 129 };
    let l = double
        .grid(per_axis)
        .iter()
        .map(|x| manifold.max_second_derivative(x).max(theta.d11(x).abs()))
        .fold(0.0f64, f64::max);
    let q_norm = a.iter().fold(1i64, |acc, c| acc.max(c.abs())) as f64;
    let (nf, mf) = (n as f64, m as f64);
    let needed = 1.0 / (4.0 * (nf + 1.0) * l * r * r);
    let threshold = ((nf + 1.0) * mf * l * q_norm).sqrt();
    let mut report = BkmReport {
        a: a.to_vec(),
        delta,
        skipped: None,
        l,
        q_norm,
        gradient_threshold: use_threshold.then_some(threshold),
        fraction: 0.0,
        ratio: 0.0,
    };
    if l > 0.0 && q_norm < needed {
        report.skipped = Some(format!("|q| = {q_norm} is below 1/(4(n+1)Lr²) = {needed}"));
        return Ok(report);
    }
    let form = crate::model::ResonantFunction { a: a.to_vec(), a0: 0 };
    let values = midpoint_values(
        &|x: &[f64]| {
            let v = form.value(manifold, theta, x);
            let dist = (v - v.round()).abs();
            if dist >= delta {
                return 0.0;
            }
            if use_threshold {
                let g = form.gradient(manifold, theta, x);
                if g.iter().map(|c| c * c).sum::<f64>().sqrt() < threshold {
                    return 0.0;
                }
            }
            1.0
        },
        ball,
        resolution,
    );
    report.fraction = values.iter().sum::<f64>() / values.len() as f64;
    report.ratio = report.fraction / delta;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_behaves_at_edges() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(1000, 1000);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.99);
        let (lo, hi) = wilson_interval(500, 1000);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert!((hi - lo - 2.0 * 0.030_9).abs() < 1e-3);
    }

    #[test]
    fn chunking_is_worker_independent() {
        let draw = |rng: &mut ChaCha8Rng| rand::Rng::random::<u64>(rng);
        let a = chunked_samples(9, 1000, draw);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| chunked_samples(9, 1000, draw));
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        assert_ne!(chunked_samples(10, 1000, draw), a);
    }

    fn curve() -> MongeManifold {
        MongeManifold::veronese(2, DomainBox::unit(1)).unwrap()
    }

    #[test]
    fn flat_psi_covers_everything() {
        let psi =
            MultivariableApproxFunction::new(ApproxFunction::constant(0.6).unwrap(), QuasinormWeights::uniform(2));
        let est =
            estimate_approximable_fraction(&curve(), &Shift::zero(), &psi, &DomainBox::unit(1), 4.0, 1000, 1).unwrap();
        assert_eq!(est.fraction, 1.0);

        let tiny =
            MultivariableApproxFunction::new(ApproxFunction::constant(1e-300).unwrap(), QuasinormWeights::uniform(2));
        let est =
            estimate_approximable_fraction(&curve(), &Shift::zero(), &tiny, &DomainBox::unit(1), 4.0, 1000, 1).unwrap();
        assert_eq!(est.fraction, 0.0);
    }

    #[test]
    fn profile_is_monotone() {
        let psi =
            MultivariableApproxFunction::new(ApproxFunction::power_law(2.5).unwrap(), QuasinormWeights::uniform(2));
        let p = approximable_profile(
            &curve(),
            &Shift::constant(0.1),
            &psi,
            &DomainBox::unit(1),
            &[2.0, 4.0, 8.0, 16.0],
            2000,
            5,
        )
        .unwrap();
        assert!(p.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        assert!(p.iter().all(|e| e.ci95.0 <= e.fraction && e.fraction <= e.ci95.1));
    }

    #[test]
    fn good_function_examples() {
        let b = DomainBox::new(vec![-1.0], vec![1.0]).unwrap();
        let eps: Vec<f64> = (1..=10).map(|k| 2f64.powi(-k)).collect();
        let lin = good_function_test(|x| x[0], &b, 1.0, 1.0, &eps, 1 << 14).unwrap();
        assert!(lin.pass);
        let sq = good_function_test(|x| x[0] * x[0], &b, 1.0, 0.5, &eps, 1 << 14).unwrap();
        assert!(sq.pass);
        let sq_fail = good_function_test(|x| x[0] * x[0], &b, 1.0, 1.0, &eps, 1 << 14).unwrap();
        assert!(!sq_fail.pass);
        assert!(good_function_test(|x| x[0], &b, 1.0, 1.0, &eps, 100).is_err());
    }

    #[test]
    fn nice_large_delta_is_total() {
        let r = nice_test(
            &curve(),
            &DomainBox::unit(1),
            1.0,
            &QuasinormWeights::uniform(2),
            &[4.0, 8.0],
            1000,
            3,
            1.0,
        )
        .unwrap();
        assert!(r.fractions.iter().all(|e| e.fraction == 1.0));
    }

    #[test]
    fn bkm_trivial_for_large_delta() {
        let c = MongeManifold::veronese(2, DomainBox::new(vec![-1.0], vec![1.0]).unwrap()).unwrap();
        let b = DomainBox::new(vec![-0.25], vec![0.25]).unwrap();
        let r = bkm_bound_check(&c, &Shift::zero(), &b, &[3, 5], 1.0, 4096, true).unwrap();
        assert!(r.skipped.is_none());
        assert!(r.fraction <= 1.0);
    }
}
