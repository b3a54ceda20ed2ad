use std::sync::OnceLock;

use dualapprox::dimension::cover_truncated_set;
use dualapprox::groshev::{block_counts, classify_convergence_sum, classify_divergence_sum, Verdict};
use dualapprox::lattice::{
    best_dual_approx, dirichlet_member, enumerate_heights, integer_rank, successive_minima_construct, PointForm,
};
use dualapprox::measure::{approximable_profile, good_function_test, nice_delta_sweep, nice_test};
use dualapprox::model::*;
use dualapprox::transference::{in_h, in_i, Alpha, TransferenceIndex, TransferenceScales};
use dualapprox::ubiquity::{delta_neighborhood_member, trim_resonant};
use dualapprox::Error;
use proptest::prelude::*;

fn weights(n: usize) -> impl Strategy<Value = QuasinormWeights> {
    prop::collection::vec(0.5f64..1.5, n).prop_map(move |raw| {
        let s: f64 = raw.iter().sum();
        QuasinormWeights::new(raw.iter().map(|r| r * n as f64 / s).collect()).unwrap()
    })
}

fn veronese(n: usize) -> MongeManifold {
    MongeManifold::veronese(n, DomainBox::unit(1)).unwrap()
}

fn surfaces() -> &'static [MongeManifold] {
    static CHARTS: OnceLock<Vec<MongeManifold>> = OnceLock::new();
    CHARTS.get_or_init(|| {
        let sq = DomainBox::new(vec![-0.7, -0.7], vec![0.7, 0.7]).unwrap();
        [
            ManifoldKind::SpherePatch,
            ManifoldKind::Paraboloid,
            ManifoldKind::Identity { m: 2 },
        ]
        .into_iter()
        .map(|kind| MongeManifold::new(kind, sq.clone()).unwrap())
        .collect()
    })
}

fn power(n: usize, tau: f64) -> MultivariableApproxFunction {
    MultivariableApproxFunction::new(ApproxFunction::power_law(tau).unwrap(), QuasinormWeights::uniform(n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn uniform_quasinorm_is_sup_norm(a in prop::collection::vec(-1000i64..1000, 1..5)) {
        let v = QuasinormWeights::uniform(a.len());
        let af: Vec<f64> = a.iter().map(|&x| x as f64).collect();
        let sup = af.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert_eq!(eval_quasinorm(&af, &v).unwrap(), sup);
    }

    #[test]
    fn psi_is_monotone(
        v in weights(3),
        pairs in prop::collection::vec((-50i64..50, 0i64..20), 3),
        tau in 0.5f64..6.0,
    ) {
        let a: Vec<i64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<i64> = pairs.iter().map(|p| p.0.signum().max(1) * (p.0.abs() + p.1)).collect();
        prop_assume!(a.iter().any(|&x| x != 0));
        let psi = MultivariableApproxFunction::new(ApproxFunction::power_law(tau).unwrap(), v);
        prop_assert!(eval_Psi(&psi, &a).unwrap() >= eval_Psi(&psi, &b).unwrap());
    }

    #[test]
    fn monge_charts_fix_leading_coordinates(x1 in -0.6f64..0.6, x2 in -0.6f64..0.6) {
        for c in surfaces() {
            let p = eval_manifold(c, &[x1, x2]).unwrap();
            prop_assert_eq!(p.value[0], x1);
            prop_assert_eq!(p.value[1], x2);
        }
        let c = MongeManifold::veronese(3, DomainBox::new(vec![-1.0], vec![1.0]).unwrap()).unwrap();
        prop_assert_eq!(eval_manifold(&c, &[x1]).unwrap().value[0], x1);
    }

    #[test]
    fn negation_keeps_the_error(x in 0.0f64..1.0, a in prop::collection::vec(-30i64..30, 2)) {
        prop_assume!(a.iter().any(|&c| c != 0));
        let c = veronese(2);
        let form = PointForm::new(&c, &Shift::zero(), &[x]).unwrap();
        let neg: Vec<i64> = a.iter().map(|c| -c).collect();
        let (a0, e) = form.complete(&a);
        let (b0, f) = form.complete(&neg);
        prop_assert!((e - f).abs() < 1e-12);
        prop_assert!(a0 == -b0 || (e - 0.5).abs() < 1e-9);
        let v = QuasinormWeights::uniform(2);
        let w1 = best_dual_approx(&[x], &c, &Shift::zero(), 6.0, &v).unwrap();
        let w2 = best_dual_approx(&[x], &c, &Shift::zero(), 6.0, &v).unwrap();
        prop_assert_eq!(w1, w2);
    }

    #[test]
    fn dirichlet_is_monotone(x in 0.0f64..1.0, q in 4.0f64..20.0, grow in 1.0f64..3.0, delta in 0.05f64..0.9) {
        let c = veronese(2);
        let v = QuasinormWeights::uniform(2);
        if let Some(w) = dirichlet_member(&[x], &c, q, delta, &v).unwrap() {
            let q2 = q * grow;
            let delta2 = delta * grow.powi(2);
            prop_assert!(w.height <= q2 && w.err < delta2 * q2.powi(-2));
            prop_assert!(dirichlet_member(&[x], &c, q2, delta2, &v).unwrap().is_some());
            prop_assert!(dirichlet_member(&[x], &c, q, (2.0 * delta).min(10.0), &v).unwrap().is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn enumeration_matches_naive_loop(n in 1usize..=3, seed in any::<u64>(), q in 1.0f64..20.0) {
        let mut raw: Vec<f64> = (0..n).map(|i| 0.5 + ((seed >> (8 * i)) & 0xff) as f64 / 255.0).collect();
        let s: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|r| *r *= n as f64 / s);
        let v = QuasinormWeights::new(raw).unwrap();
        let bound: Vec<i64> = (0..n).map(|i| q.powf(v.get(i)).ceil() as i64 + 1).collect();
        let mut naive = 0u64;
        let mut a = bound.iter().map(|b| -b).collect::<Vec<i64>>();
        loop {
            if a.iter().any(|&c| c != 0) && v.height(&a) <= q * (1.0 + 1e-12) {
                naive += 1;
            }
            let mut i = 0;
            while i < n {
                a[i] += 1;
                if a[i] <= bound[i] { break; }
                a[i] = -bound[i];
                i += 1;
            }
            if i == n { break; }
        }
        prop_assert_eq!(enumerate_heights(q, &v).unwrap().count() as u64, naive);
    }

    #[test]
    fn constructions_use_independent_vectors(x in 0.0f64..1.0, q in prop::sample::select(vec![8.0, 16.0])) {
        let c = veronese(2);
        let theta = Shift::constant(0.3);
        let v = QuasinormWeights::uniform(2);
        let k = constants_for(&c, &theta, 0.5, &v).unwrap();
        match successive_minima_construct(&[x], &c, &theta, q, &k, &v) {
            Ok(con) => {
                prop_assert_eq!(integer_rank(&con.basis), 3);
                if con.postconditions.derivative_lower.holds {
                    prop_assert!(con.postconditions.gradient_dominance.holds);
                }
            }
            Err(Error::Precondition(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn transference_sets_grow_with_eps(
        x in -1.0f64..1.0,
        a in prop::collection::vec(-20i64..20, 2),
        a0 in -20i64..20,
        eps in 0.01f64..50.0,
    ) {
        prop_assume!(a.iter().any(|&c| c != 0));
        let c = MongeManifold::veronese(2, DomainBox::new(vec![-1.0], vec![1.0]).unwrap()).unwrap();
        let theta = Shift::next_power(2);
        let s = TransferenceScales::new(&c, &theta);
        let t = TransferenceIndex::of(&a);
        let alpha = Alpha { a, a0 };
        if in_i(&[x], &t, &alpha, eps, &c, &theta, &s).unwrap() {
            prop_assert!(in_i(&[x], &t, &alpha, 2.0 * eps, &c, &theta, &s).unwrap());
        }
        if in_h(&[x], &t, &alpha, eps, &c, &s).unwrap() {
            prop_assert!(in_h(&[x], &t, &alpha, 2.0 * eps, &c, &s).unwrap());
        }
    }

    #[test]
    fn delta_neighbourhoods_grow_with_r(x in -1.0f64..1.0, r in 0.0f64..1.0) {
        let c = MongeManifold::veronese(2, DomainBox::new(vec![-1.0], vec![1.0]).unwrap()).unwrap();
        let f = ResonantFunction::new(vec![3, 1], -1).unwrap();
        let s = trim_resonant(&f, &Shift::zero(), &c, c.domain(), 0.5, 1.0, 1e-3).unwrap();
        if delta_neighborhood_member(&[x], &s, r) {
            prop_assert!(delta_neighborhood_member(&[x], &s, r * 1.5));
        }
    }

    #[test]
    fn good_functions_are_scale_invariant(k in 1i32..=3, scale in prop::sample::select(vec![-3.0, 0.5, 7.0])) {
        let ball = DomainBox::new(vec![-1.0], vec![1.0]).unwrap();
        let eps = [0.5, 0.1, 0.01, 0.001];
        let r = good_function_test(|x: &[f64]| scale * x[0].powi(k), &ball, 1.0, 1.0 / k as f64, &eps, 4096).unwrap();
        prop_assert!(r.pass, "worst ratio {}", r.worst_ratio);
    }
}

#[test]
fn rho_contracts_exactly_along_dyadic_radii() {
    for n in 1..=4 {
        let k = ConstructionConstants::new(1, n, 2.0, 0.5, 1.0).unwrap();
        for t in 1..=40 {
            assert_eq!(k.rho_dyadic(t + 1) / k.rho_dyadic(t), k.lambda());
        }
        assert_eq!(k.lambda(), (-(n as f64) - 1.0).exp2());
    }
}

#[test]
fn classifiers_agree_in_the_lebesgue_case() {
    for n in 1..=3usize {
        for m in 1..=n {
            for tau in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0] {
                let psi = power(n, tau);
                let conv = classify_convergence_sum(&psi).unwrap().verdict;
                let div = classify_divergence_sum(&psi, m, m as f64).unwrap().verdict;
                assert_eq!(
                    conv == Verdict::Diverges,
                    div == Verdict::Diverges,
                    "n={n} m={m} tau={tau}"
                );
            }
        }
    }
}

#[test]
fn divergence_is_monotone_in_s() {
    for (n, m, tau) in [(2, 1, 3.0), (3, 2, 4.0), (3, 1, 5.0), (2, 2, 2.5)] {
        let psi = power(n, tau);
        let ss: Vec<f64> = (1..=40).map(|i| m as f64 - 1.0 + i as f64 * 0.05).collect();
        let verdicts: Vec<Verdict> = ss
            .iter()
            .map(|&s| classify_divergence_sum(&psi, m, s).unwrap().verdict)
            .collect();
        for (i, v) in verdicts.iter().enumerate() {
            if *v == Verdict::Diverges {
                assert!(verdicts[..i].iter().all(|w| *w == Verdict::Diverges));
            }
        }
    }
}

#[test]
fn block_sums_follow_the_envelope() {
    for (n, tau) in [(1usize, 2.0), (2, 3.0), (2, 1.5), (3, 4.0)] {
        let psi = power(n, tau);
        let report = classify_convergence_sum(&psi).unwrap();
        let nf = n as f64;
        for &(k, sum) in report.blocks.iter().filter(|(k, _)| (5..=40).contains(k)) {
            let kf = k as f64;
            let envelope = 2f64.powf(nf) * (2f64.powf(nf) - 1.0) * 2f64.powf(kf * nf) * 2f64.powf(-(kf + 0.5) * tau);
            let ratio = sum / envelope;
            assert!((0.25..=4.0).contains(&ratio), "n={n} tau={tau} k={k} ratio={ratio}");
        }
    }
    assert!(block_counts(&QuasinormWeights::uniform(2))
        .unwrap()
        .iter()
        .all(|(_, c)| *c > 0.0));
}

#[test]
fn measure_estimates_are_reproducible_and_monotone() {
    let c = veronese(2);
    let region = DomainBox::unit(1);
    let hs = [2.0, 4.0, 8.0];
    let small = MultivariableApproxFunction::new(
        ApproxFunction::scaled_power_law(3.0, 0.05).unwrap(),
        QuasinormWeights::uniform(2),
    );
    let large = MultivariableApproxFunction::new(
        ApproxFunction::scaled_power_law(3.0, 0.2).unwrap(),
        QuasinormWeights::uniform(2),
    );
    let a = approximable_profile(&c, &Shift::zero(), &small, &region, &hs, 2000, 9).unwrap();
    let b = approximable_profile(&c, &Shift::zero(), &small, &region, &hs, 2000, 9).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[1].hits >= w[0].hits));
    let big = approximable_profile(&c, &Shift::zero(), &large, &region, &hs, 2000, 9).unwrap();
    assert!(a.iter().zip(&big).all(|(s, l)| l.hits >= s.hits));
}

#[test]
fn nice_fraction_grows_with_q_at_fixed_threshold() {
    let c = veronese(2);
    let v = QuasinormWeights::uniform(2);
    let region = DomainBox::new(vec![0.2], vec![0.4]).unwrap();
    let threshold = 0.2 * 8f64.powi(-2);
    let fractions: Vec<usize> = [8.0, 12.0, 16.0, 24.0]
        .iter()
        .map(|&q: &f64| {
            let delta = threshold * q.powi(2);
            nice_test(&c, &region, delta, &v, &[q], 1000, 4, 1.0).unwrap().fractions[0].hits
        })
        .collect();
    assert!(fractions.windows(2).all(|w| w[1] >= w[0]), "{fractions:?}");
}

#[test]
fn nice_tails_scale_linearly_in_delta() {
    let c = veronese(2);
    let sweep = nice_delta_sweep(
        &c,
        c.domain(),
        &[0.025, 0.05, 0.1, 0.2],
        &QuasinormWeights::uniform(2),
        &[8.0, 16.0, 32.0, 64.0],
        4000,
        7,
    )
    .unwrap();
    assert!(sweep.tail_max.windows(2).all(|w| w[1] > w[0]), "{:?}", sweep.tail_max);
    assert!(
        sweep.ratios.iter().all(|r| (0.5..=2.0).contains(r)),
        "{:?}",
        sweep.ratios
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn truncated_counts_are_monotone(tau in 3.0f64..6.0, k in 2i32..5, j in 4i32..14) {
        let c = veronese(2);
        let psi = power(2, tau);
        let h = f64::from(k).exp2();
        let e = f64::from(-j).exp2();
        let count = |h_hi: f64, e: f64| cover_truncated_set(&c, &Shift::zero(), &psi, 2.0, h_hi, e).unwrap();
        let base = count(h, e);
        prop_assert!(count(h, 0.5 * e) >= base);
        prop_assert!(count(2.0 * h, e) >= base);
    }
}
