//! Box-counting dimension of truncated approximable sets.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groshev::critical_exponent;
use crate::lattice::{bisect_bracket, bracketed_roots, HeightBox, PointForm};
use crate::model::{ApproxFunction, MongeManifold, MultivariableApproxFunction, ResonantFunction, Shift};
use crate::report::{fmt_real, Csv};

pub const MIN_R2: f64 = 0.98;
const MIN_SCALES: usize = 5;
const MIN_OCTAVES: f64 = 3.0;
const CRITICAL_CELLS: usize = 512;
const MAX_BOX_TESTS: u128 = 2_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    /// Truncation heights paired with the scales, when a schedule was used.
    pub heights: Option<Vec<f64>>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub bound: Option<f64>,
    /// `false` when the fit is too poor (or degenerate) to support a verdict.
    pub reliable: bool,
    pub flag: Option<String>,
}

impl DimensionEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }

    pub fn to_csv(&self, comment: &str) -> String {
        let mut header = vec!["scale", "count"];
        if self.heights.is_some() {
            header.push("height");
        }
        let mut csv = Csv::with_comment(comment, &header);
        for (i, (e, c)) in self.scales.iter().zip(&self.counts).enumerate() {
            let mut row = vec![fmt_real(*e), c.to_string()];
            if let Some(h) = &self.heights {
                row.push(fmt_real(h[i]));
            }
            csv.row(row);
        }
        csv.finish()
    }
}

/// Least-squares slope of `log N(e)` against `−log e`.
pub fn estimate_box_dimension(scales: &[f64], counts: &[u64], bound: Option<f64>) -> Result<DimensionEstimate> {
    if scales.len() != counts.len() || scales.len() < MIN_SCALES {
        return Err(Error::input(format!("need at least {MIN_SCALES} (scale, count) pairs")));
    }
    if scales.iter().any(|&e| !(e > 0.0)) || counts.contains(&0) {
        return Err(Error::input("scales and counts must be positive"));
    }
    let (emin, emax) = scales
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if (emax / emin).log2() < MIN_OCTAVES - 1e-9 {
        return Err(Error::input(format!("scales must span at least {MIN_OCTAVES} octaves")));
    }
    let xs: Vec<f64> = scales.iter().map(|e| -e.log2()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).log2()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let mut est = DimensionEstimate {
        scales: scales.to_vec(),
        counts: counts.to_vec(),
        heights: None,
        slope: 0.0,
        intercept: my,
        r2: 0.0,
        bound,
        reliable: false,
        flag: None,
    };
    if syy == 0.0 {
        est.flag = Some("all counts equal; slope set to 0".into());
        return Ok(est);
    }
    est.slope = sxy / sxx;
    est.intercept = my - est.slope * mx;
    est.r2 = sxy * sxy / (sxx * syy);
    est.reliable = est.r2 >= MIN_R2;
    if !est.reliable {
        est.flag = Some(format!("r² = {:.4} below {MIN_R2}; no verdict", est.r2));
    }
    Ok(est)
}

/// Intervals of `{x ∈ U : ‖a·f(x) + θ(x)‖ < Ψ(a)}` over all `a` with
/// `H_lo < |a|_v ≤ H`, for curves. Each monotone piece of `a·f + θ` is
/// inverted exactly by bisection, one interval per nearby integer.
pub fn approximable_intervals(
    manifold: &MongeManifold,
    theta: &Shift,
    psi: &MultivariableApproxFunction,
    h_lo: f64,
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    if manifold.m() != 1 {
        return Err(Error::input("interval covers need a curve (m = 1)"));
    }
    if psi.n() != manifold.n() {
        return Err(Error::input("weights and manifold disagree on n"));
    }
    if !(h_lo >= 0.0 && h > h_lo) {
        return Err(Error::input(format!("need 0 ≤ H_lo < H, got ({h_lo}, {h}]")));
    }
    let (lo, hi) = (manifold.domain().lo[0], manifold.domain().hi[0]);
    let vectors: Vec<Vec<i64>> = HeightBox::new(h, &psi.weights)?
        .iter()
        .filter(|a| psi.weights.height(a) > h_lo)
        .collect();
    let per_vector: Vec<Vec<(f64, f64)>> = vectors
        .par_iter()
        .map(|a| {
            let width = psi.at_height(psi.weights.height(a));
            if width >= 0.5 {
                return vec![(lo, hi)];
            }
            let form = ResonantFunction { a: a.clone(), a0: 0 };
            let g = |x: f64| form.value(manifold, theta, &[x]);
            let mut cuts = vec![lo];
            cuts.extend(bracketed_roots(
                |x| form.d1(manifold, theta, &[x]),
                lo,
                hi,
                CRITICAL_CELLS,
            ));
            cuts.push(hi);
            let mut out = Vec::new();
            for w in cuts.windows(2) {
                let (u, v) = (w[0], w[1]);
                if v <= u {
                    continue;
                }
                let (gu, gv) = (g(u), g(v));
                let (gmin, gmax) = (gu.min(gv), gu.max(gv));
                let inverse = |b: f64| -> f64 {
                    if b <= gmin {
                        if gu <= gv {
                            u
                        } else {
                            v
                        }
                    } else if b >= gmax {
                        if gu <= gv {
                            v
                        } else {
                            u
                        }
                    } else {
                        bisect_bracket(|x| g(x) - b, u, v)
                    }
                };
                let k_lo = (gmin - width).floor() as i64;
                let k_hi = (gmax + width).ceil() as i64;
                for k in k_lo..=k_hi {
                    let (b1, b2) = ((k as f64 - width).max(gmin), (k as f64 + width).min(gmax));
                    if b1 > b2 || (b1 == b2 && (b1 - k as f64).abs() >= width) {
                        continue;
                    }
                    let (x1, x2) = (inverse(b1), inverse(b2));
                    out.push((x1.min(x2), x1.max(x2)));
                }
            }
            out
        })
        .collect();
    Ok(per_vector.into_iter().flatten().collect())
}

/// Number of boxes `[lo + ke, lo + (k+1)e)` meeting the union of `intervals`.
pub fn count_interval_boxes(intervals: &[(f64, f64)], lo: f64, hi: f64, e: f64) -> u64 {
    let last = (((hi - lo) / e).ceil() as u64).max(1) - 1;
    let index = |x: f64| (((x - lo) / e).floor().max(0.0) as u64).min(last);
    let mut ranges: Vec<(u64, u64)> = intervals
        .iter()
        .filter(|(a, b)| *b >= lo && *a <= hi)
        .map(|&(a, b)| (index(a), index(b)))
        .collect();
    ranges.par_sort_unstable();
    let mut total = 0u64;
    let mut current: Option<(u64, u64)> = None;
    for (s, t) in ranges {
        current = match current {
            Some((cs, ct)) if s <= ct + 1 => Some((cs, ct.max(t))),
            Some((cs, ct)) => {
                total += ct - cs + 1;
                Some((s, t))
            }
            None => Some((s, t)),
        };
    }
    if let Some((cs, ct)) = current {
        total += ct - cs + 1;
    }
    total
}

/// Occupied boxes of side `e` for the set of `x ∈ U` with a witness
/// `H_lo < |a|_v ≤ H`. Curves use the exact interval cover; surfaces test the
/// box centre with slack `m·C₀(Σ|a_i| + 1)·e/2`.
pub fn cover_truncated_set(
    manifold: &MongeManifold,
    theta: &Shift,
    psi: &MultivariableApproxFunction,
    h_lo: f64,
    h: f64,
    e: f64,
) -> Result<u64> {
    if !(e > 0.0) {
        return Err(Error::input(format!("box size must be positive, got {e}")));
    }
    let dom = manifold.domain();
    if manifold.m() == 1 {
        let intervals = approximable_intervals(manifold, theta, psi, h_lo, h)?;
        return Ok(count_interval_boxes(&intervals, dom.lo[0], dom.hi[0], e));
    }
    if manifold.m() > 2 {
        return Err(Error::input("box covers are supported for m ≤ 2"));
    }
    if !(h_lo >= 0.0 && h > h_lo) {
        return Err(Error::input(format!("need 0 ≤ H_lo < H, got ({h_lo}, {h}]")));
    }
    let per_axis: Vec<u64> = (0..2).map(|i| ((dom.hi[i] - dom.lo[i]) / e).ceil() as u64).collect();
    let hb = HeightBox::new(h, &psi.weights)?;
    let boxes = per_axis[0] as u128 * per_axis[1] as u128;
    if boxes * hb.count()? > MAX_BOX_TESTS {
        return Err(Error::capacity(format!(
            "{boxes} boxes × {} vectors is too large",
            hb.count()?
        )));
    }
    let vectors: Vec<(Vec<i64>, f64, f64)> = hb
        .iter()
        .filter_map(|a| {
            let height = psi.weights.height(&a);
            (height > h_lo).then(|| {
                let slack = 2.0
                    * manifold.c0().max(theta.c0(dom))
                    * (a.iter().map(|c| c.unsigned_abs() as f64).sum::<f64>() + 1.0)
                    * e
                    / 2.0;
                let width = psi.at_height(height);
                (a, width, slack)
            })
        })
        .collect();
    let occupied: u64 = (0..boxes as u64)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % per_axis[0], k / per_axis[0]);
            let x = [
                (dom.lo[0] + (i as f64 + 0.5) * e).min(dom.hi[0]),
                (dom.lo[1] + (j as f64 + 0.5) * e).min(dom.hi[1]),
            ];
            let Ok(form) = PointForm::new(manifold, theta, &x) else {
                return 0;
            };
            vectors
                .iter()
                .any(|(a, width, slack)| *width >= 0.5 || form.complete(a).1 < width + slack) as u64
        })
        .sum();
    Ok(occupied)
}

/// Truncation heights `H_k` with dyadic scales `e_k ≈ ψ(H_k)/H_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSchedule {
    pub heights: Vec<f64>,
    pub scales: Vec<f64>,
}

impl TruncationSchedule {
    /// `H_k = 2^k` for the given exponents, each paired with the dyadic scale
    /// nearest to `ψ(H_k)/H_k`.
    pub fn adapted(psi: &ApproxFunction, exponents: &[i32]) -> Self {
        let heights: Vec<f64> = exponents.iter().map(|&k| f64::from(k).exp2()).collect();
        let scales = heights
            .iter()
            .map(|&h| (psi.eval(h) / h).log2().round().exp2())
            .collect();
        Self { heights, scales }
    }
}

/// Box dimension of the truncated sets along a schedule, each count taken on
/// the top dyadic block `H_k/2 < |a|_v ≤ H_k`.
pub fn dimension_experiment(
    manifold: &MongeManifold,
    theta: &Shift,
    psi: &MultivariableApproxFunction,
    schedule: &TruncationSchedule,
) -> Result<DimensionEstimate> {
    let counts = schedule
        .heights
        .iter()
        .zip(&schedule.scales)
        .map(|(&h, &e)| cover_truncated_set(manifold, theta, psi, 0.5 * h, h, e))
        .collect::<Result<Vec<u64>>>()?;
    let bound = match psi.psi {
        ApproxFunction::PowerLaw { tau, .. } => Some(critical_exponent(manifold.m(), manifold.n(), tau).value),
        _ => None,
    };
    let mut est = estimate_box_dimension(&schedule.scales, &counts, bound)?;
    est.heights = Some(schedule.heights.clone());
    Ok(est)
}

/// Control: with `Ψ ≡ 0.6` every box is occupied.
pub fn full_domain_control(manifold: &MongeManifold, scales: &[f64]) -> Result<DimensionEstimate> {
    let psi = MultivariableApproxFunction::new(
        ApproxFunction::constant(0.6)?,
        crate::model::QuasinormWeights::uniform(manifold.n()),
    );
    let counts = scales
        .iter()
        .map(|&e| cover_truncated_set(manifold, &Shift::zero(), &psi, 0.0, 1.0, e))
        .collect::<Result<Vec<u64>>>()?;
    estimate_box_dimension(scales, &counts, Some(manifold.m() as f64))
}
