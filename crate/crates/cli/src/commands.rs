//! One function per subcommand, each turning resolved parameters into
//! CSV/JSON bodies.

use std::collections::BTreeMap;

use dualapprox::dimension::{dimension_experiment, full_domain_control, TruncationSchedule};
use dualapprox::groshev::{classify_convergence_sum, classify_divergence_sum, critical_exponent};
use dualapprox::lattice::{best_dual_approx, dirichlet_member, witnesses_csv, witnesses_in_block, HeightBox};
use dualapprox::measure::{
    bkm_bound_check, chunked_samples, dichotomy_experiment, good_function_test, nice_delta_sweep, nice_test,
};
use dualapprox::model::{
    constants_for, ApproxFunction, DomainBox, ManifoldKind, MongeManifold, MultivariableApproxFunction,
    QuasinormWeights, ResonantFunction, Shift,
};
use dualapprox::report::{fmt_real, join_ints, join_reals, Csv};
use dualapprox::transference::verify_intersection_property;
use dualapprox::ubiquity::{
    check_intersection_conditions, liouville_example, sphere_example, trim_resonant, ExampleSurface,
    IntersectionConditionsReport,
};
use dualapprox::{Error, Result};
use serde_json::{json, Value};

use crate::Output;

/// Vectors listed by `enumerate` before it reports a capacity error.
pub const MAX_LISTED: u128 = 1_000_000;

/// Typed access to resolved parameters.
pub struct Params<'a>(pub &'a BTreeMap<String, String>);

impl Params<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(|s| s.trim()).unwrap_or("")
    }

    fn bad(&self, key: &str, what: &str) -> Error {
        Error::Input(format!("--{key}: expected {what}, got `{}`", self.raw(key)))
    }

    fn real(&self, key: &str) -> Result<f64> {
        self.raw(key)
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.bad(key, "a finite decimal number"))
    }

    fn opt_real(&self, key: &str) -> Result<Option<f64>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.real(key).map(Some)
        }
    }

    fn int<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.raw(key).parse().map_err(|_| self.bad(key, "an integer"))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" => Ok(true),
            "false" | "" => Ok(false),
            _ => Err(self.bad(key, "true or false")),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, sep: char, what: &str) -> Result<Vec<T>> {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(sep)
            .map(|s| s.trim().parse::<T>().map_err(|_| self.bad(key, what)))
            .collect()
    }

    fn reals(&self, key: &str) -> Result<Vec<f64>> {
        let xs: Vec<f64> = self.list(key, ',', "comma-separated decimal numbers")?;
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(self.bad(key, "finite numbers"));
        }
        Ok(xs)
    }

    fn weights(&self, n: usize) -> Result<QuasinormWeights> {
        let v = self.reals("v")?;
        if v.is_empty() {
            return Ok(QuasinormWeights::uniform(n));
        }
        if v.len() != n {
            return Err(Error::Input(format!("--v has {} weights but n = {n}", v.len())));
        }
        QuasinormWeights::new(v)
    }

    fn manifold(&self) -> Result<MongeManifold> {
        let n: usize = self.int("n")?;
        let kind = match self.raw("manifold") {
            "veronese" => ManifoldKind::Veronese { n },
            "identity" => ManifoldKind::Identity { m: n },
            "sphere" => ManifoldKind::SpherePatch,
            "paraboloid" => ManifoldKind::Paraboloid,
            _ => return Err(self.bad("manifold", "veronese, identity, sphere or paraboloid")),
        };
        let (m, kn) = kind.dims();
        if kn != n {
            return Err(Error::Input(format!(
                "the {} chart has n = {kn}, got --n {n}",
                self.raw("manifold")
            )));
        }
        let bounds = self.reals("domain")?;
        let domain = if bounds.is_empty() {
            match kind {
                ManifoldKind::SpherePatch => DomainBox::new(vec![-0.5; 2], vec![0.5; 2])?,
                _ => DomainBox::unit(m),
            }
        } else {
            if bounds.len() != 2 * m {
                return Err(Error::Input(format!("--domain needs {} numbers for m = {m}", 2 * m)));
            }
            DomainBox::new(
                bounds.iter().step_by(2).copied().collect(),
                bounds.iter().skip(1).step_by(2).copied().collect(),
            )?
        };
        MongeManifold::new(kind, domain)
    }

    fn theta(&self, n: usize) -> Result<Shift> {
        let raw = self.raw("theta");
        let what = "zero, const:<c>, poly:<c0;c1;...> or next-power";
        let parse = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
        match raw.split_once(':') {
            None if raw == "zero" => Ok(Shift::zero()),
            None if raw == "next-power" => Ok(Shift::next_power(n)),
            Some(("const", c)) => parse(c).map(Shift::constant).ok_or_else(|| self.bad("theta", what)),
            Some(("poly", cs)) => cs
                .split(';')
                .map(parse)
                .collect::<Option<Vec<f64>>>()
                .map(Shift::poly)
                .ok_or_else(|| self.bad("theta", what)),
            _ => Err(self.bad("theta", what)),
        }
    }

    fn samples(&self) -> Result<usize> {
        self.int("samples")
    }

    fn seed(&self) -> Result<u64> {
        self.int("seed")
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report serializes")
}

/// Dispatches `command`; `comment` goes on the first CSV line.
pub fn run(command: &str, params: &BTreeMap<String, String>, comment: &str) -> Result<Output> {
    let p = Params(params);
    match command {
        "enumerate" => enumerate(&p, comment),
        "witness" => witness(&p, comment),
        "dirichlet" => dirichlet(&p, comment),
        "groshev" => groshev(&p, comment),
        "dichotomy" => dichotomy(&p, comment),
        "good" => good(&p, comment),
        "nice" => nice(&p, comment),
        "bkm" => bkm(&p, comment),
        "transfer" => transfer(&p, comment),
        "ubiquity" => ubiquity(&p, comment),
        "dimension" => dimension(&p, comment),
        other => Err(Error::Input(format!("unknown command `{other}`"))),
    }
}

fn enumerate(p: &Params, comment: &str) -> Result<Output> {
    let n: usize = p.int("n")?;
    let v = p.weights(n)?;
    let q = p.real("Q")?;
    let hb = HeightBox::new(q, &v)?;
    let count = hb.count()?;
    let count_only = p.flag("count-only")?;
    let mut csv = Csv::with_comment(comment, &["a", "height"]);
    if !count_only {
        if count > MAX_LISTED {
            return Err(Error::Capacity(format!(
                "{count} vectors exceed the listing limit {MAX_LISTED}; use --count-only"
            )));
        }
        hb.visit(|a| csv.row([join_ints(a), fmt_real(v.height(a))]));
    }
    Ok(Output {
        csv: csv.finish(),
        json: json!({ "Q": q, "v": v.as_slice(), "limits": hb.limits(), "count": count.to_string() }),
        summary: vec![count.to_string()],
    })
}

fn witness(p: &Params, comment: &str) -> Result<Output> {
    let manifold = p.manifold()?;
    let theta = p.theta(manifold.n())?;
    let v = p.weights(manifold.n())?;
    let x = p.reals("x")?;
    let q = p.real("Q")?;
    let psi = MultivariableApproxFunction::new(
        ApproxFunction::scaled_power_law(p.real("tau")?, p.real("scale")?)?,
        v.clone(),
    );
    let best = best_dual_approx(&x, &manifold, &theta, q, &v)?;
    let block = witnesses_in_block(&x, &manifold, &theta, &psi, 0.5 * q, q)?;
    Ok(Output {
        csv: witnesses_csv(comment, &block),
        json: json!({ "best": to_json(&best), "block": [0.5 * q, q], "block_witnesses": block.len() }),
        summary: vec![
            format!(
                "best a = {} a0 = {} err = {}",
                join_ints(&best.a),
                best.a0,
                fmt_real(best.err)
            ),
            format!("{} witnesses in ({}, {}]", block.len(), 0.5 * q, q),
        ],
    })
}

fn dirichlet(p: &Params, comment: &str) -> Result<Output> {
    let manifold = p.manifold()?;
    let v = p.weights(manifold.n())?;
    let q = p.real("Q")?;
    let delta = p.real("delta")?;
    let samples = p.samples()?;
    let seed = p.seed()?;
    // Validate once so per-sample failures can only be point errors.
    dirichlet_member(&manifold.domain().center(), &manifold, q, delta, &v)?;
    let rows = chunked_samples(seed, samples, |rng| {
        let x = manifold.domain().sample(rng);
        let w = dirichlet_member(&x, &manifold, q, delta, &v);
        (x, w)
    });
    let mut csv = Csv::with_comment(comment, &["x", "member", "a", "a0", "err"]);
    let mut members = 0usize;
    for (x, w) in rows {
        match w? {
            Some(w) => {
                members += 1;
                csv.row([
                    join_reals(&x),
                    "true".into(),
                    join_ints(&w.a),
                    w.a0.to_string(),
                    fmt_real(w.err),
                ]);
            }
            None => csv.row([
                join_reals(&x),
                "false".into(),
                String::new(),
                String::new(),
                String::new(),
            ]),
        }
    }
    let fraction = if samples == 0 {
        0.0
    } else {
        members as f64 / samples as f64
    };
    Ok(Output {
        csv: csv.finish(),
        json: json!({ "Q": q, "delta": delta, "samples": samples, "seed": seed, "members": members, "fraction": fraction }),
        summary: vec![format!("{members}/{samples} members")],
    })
}

fn groshev(p: &Params, comment: &str) -> Result<Output> {
    let m: usize = p.int("m")?;
    let n: usize = p.int("n")?;
    let tau = p.real("tau")?;
    if p.flag("critical")? {
        let c = critical_exponent(m, n, tau);
        let mut csv = Csv::with_comment(comment, &["m", "n", "tau", "critical_exponent"]);
        csv.row([m.to_string(), n.to_string(), fmt_real(tau), fmt_real(c.value)]);
        let mut summary = vec![c.value.to_string()];
        summary.extend(c.warning.iter().map(|w| format!("warning: {w}")));
        return Ok(Output {
            csv: csv.finish(),
            json: to_json(&c),
            summary,
        });
    }
    let v = p.weights(n)?;
    let psi = match p.opt_real("beta")? {
        Some(beta) => ApproxFunction::power_log(tau, beta)?,
        None => ApproxFunction::power_law(tau)?,
    };
    let psi = MultivariableApproxFunction::new(psi, v);
    let report = match p.opt_real("s")? {
        Some(s) => classify_divergence_sum(&psi, m, s)?,
        None => classify_convergence_sum(&psi)?,
    };
    let mut csv = Csv::with_comment(comment, &["k", "block_sum"]);
    for (k, sum) in &report.blocks {
        csv.row([k.to_string(), fmt_real(*sum)]);
    }
    Ok(Output {
        csv: csv.finish(),
        json: to_json(&report),
        summary: vec![format!("{:?}", report.verdict), report.rationale.clone()],
    })
}

fn dichotomy(p: &Params, comment: &str) -> Result<Output> {
    let manifold = p.manifold()?;
    let theta = p.theta(manifold.n())?;
    let v = p.weights(manifold.n())?;
    let table = dichotomy_experiment(
        &manifold,
        &theta,
        &v,
        p.real("scale")?,
        &p.reals("taus")?,
        &p.reals("H")?,
        manifold.domain(),
        p.samples()?,
        p.seed()?,
    )?;
    let summary = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "tau = {}: cumulative trend {:+.4}, tail trend {:+.4}",
                r.tau, r.cumulative_trend, r.tail_trend
            )
        })
        .collect();
    Ok(Output {
        csv: table.to_csv(comment),
        json: to_json(&table),
        summary,
    })
}

fn good(p: &Params, comment: &str) -> Result<Output> {
    let k: i32 = p.int("k")?;
    if k < 1 {
        return Err(Error::Input(format!("--k must be at least 1, got {k}")));
    }
    let alpha = p.opt_real("alpha")?.unwrap_or(1.0 / f64::from(k));
    let ball = DomainBox::new(vec![p.real("lo")?], vec![p.real("hi")?])?;
    let report = good_function_test(
        |x: &[f64]| x[0].powi(k),
        &ball,
        p.real("c")?,
        alpha,
        &p.reals("eps")?,
        p.int("resolution")?,
    )?;
    let mut csv = Csv::with_comment(comment, &["eps", "fraction", "bound", "ratio"]);
    for r in &report.rows {
        csv.row([
            fmt_real(r.eps),
            fmt_real(r.fraction),
            fmt_real(r.bound),
            fmt_real(r.ratio),
        ]);
    }
    Ok(Output {
        csv: csv.finish(),
        json: json!({ "k": k, "alpha": alpha, "report": to_json(&report) }),
        summary: vec![format!(
            "{} (worst ratio {})",
            if report.pass { "good" } else { "not good" },
            fmt_real(report.worst_ratio)
        )],
    })
}

fn nice(p: &Params, comment: &str) -> Result<Output> {
    let manifold = p.manifold()?;
    let v = p.weights(manifold.n())?;
    let deltas = p.reals("deltas")?;
    let qs = p.reals("Q")?;
    let (samples, seed, c) = (p.samples()?, p.seed()?, p.real("c")?);
    if deltas.is_empty() {
        return Err(Error::Input("--deltas needs at least one value".into()));
    }
    let region = manifold.domain().clone();
    let reports = deltas
        .iter()
        .map(|&d| nice_test(&manifold, &region, d, &v, &qs, samples, seed, c))
        .collect::<Result<Vec<_>>>()?;
    let sweep = if deltas.len() > 1 {
        Some(nice_delta_sweep(&manifold, &region, &deltas, &v, &qs, samples, seed)?)
    } else {
        None
    };
    let mut csv = Csv::with_comment(
        comment,
        &["parameter", "Q", "fraction", "ci_lo", "ci_hi", "samples", "seed"],
    );
    for r in &reports {
        for (q, est) in r.qs.iter().zip(&r.fractions) {
            csv.row([
                format!("delta={}", fmt_real(r.delta)),
                fmt_real(*q),
                fmt_real(est.fraction),
                fmt_real(est.ci95.0),
                fmt_real(est.ci95.1),
                est.samples.to_string(),
                est.seed.to_string(),
            ]);
        }
    }
    let mut summary: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "delta = {}: tail max {} vs bound {} ({})",
                r.delta,
                fmt_real(r.tail_max),
                fmt_real(r.bound),
                if r.pass { "pass" } else { "fail" }
            )
        })
        .collect();
    if let Some(s) = &sweep {
        summary.push(format!("fitted C = {}", fmt_real(s.c_fit)));
    }
    Ok(Output {
        csv: csv.finish(),
        json: json!({ "reports": to_json(&reports), "sweep": to_json(&sweep) }),
        summary,
    })
}

fn bkm(p: &Params, comment: &str) -> Result<Output> {
    let manifold = p.manifold()?;
    let theta = p.theta(manifold.n())?;
    let ball = DomainBox::centered(&p.reals("center")?, p.real("radius")?)?;
    let a: Vec<i64> = p.list("a", ',', "comma-separated integers")?;
    let report = bkm_bound_check(
        &manifold,
        &theta,
        &ball,
        &a,
        p.real("delta")?,
        p.int("resolution")?,
        !p.flag("no-threshold")?,
    )?;
    let mut csv = Csv::with_comment(comment, &["a", "delta", "L", "q_norm", "fraction", "ratio", "skipped"]);
    csv.row([
        join_ints(&report.a),
        fmt_real(report.delta),
        fmt_real(report.l),
        fmt_real(report.q_norm),
        fmt_real(report.fraction),
        fmt_real(report.ratio),
        report.skipped.clone().unwrap_or_default(),
    ]);
    let summary = match &report.skipped {
        Some(why) => vec![format!("skipped: {why}")],
        None => vec![format!("measure / (delta |B|) = {}", fmt_real(report.ratio))],
    };
    Ok(Output {
        csv: csv.finish(),
        json: to_json(&report),
        summary,
    })
}

fn transfer(p: &Params, comment: &str) -> Result<Output> {
    let manifold = p.manifold()?;
    let theta = p.theta(manifold.n())?;
    let report = verify_intersection_property(
        &manifold,
        &theta,
        p.real("delta")?,
        (p.int("t-min")?, p.int("t-max")?),
        p.int("trials")?,
        p.seed()?,
    )?;
    let mut csv = Csv::with_comment(comment, &["quantity", "value"]);
    for (k, v) in [
        ("trials", report.trials),
        ("constructed", report.constructed),
        ("doubly_member", report.doubly_member),
        ("passes", report.passes),
        ("zero_difference", report.zero_difference),
        ("counterexamples", report.counterexamples.len()),
    ] {
        csv.row([k.to_string(), v.to_string()]);
    }
    let mut summary = vec![format!(
        "{} constructed, {} doubly-member pairs, {} pass, {} counterexamples",
        report.constructed,
        report.doubly_member,
        report.passes,
        report.counterexamples.len()
    )];
    summary.extend(report.notice.iter().cloned());
    Ok(Output {
        csv: csv.finish(),
        json: to_json(&report),
        summary,
    })
}

/// The trimmed resonant set of a built-in example and its reports at level `t`.
pub struct UbiquityRun {
    pub t: i32,
    pub trimmed: IntersectionConditionsReport,
    pub untrimmed: IntersectionConditionsReport,
}

/// Runs the intersection-condition check on a built-in example with
/// `λ = ρ/2, …, ρ/32` and `δ = 1/2`.
pub fn ubiquity_example(name: &str, t: Option<i32>, centers: usize) -> Result<UbiquityRun> {
    let veronese = || -> Result<ExampleSurface> {
        let manifold = MongeManifold::veronese(2, DomainBox::new(vec![-1.0], vec![1.0])?)?;
        let k = constants_for(&manifold, &Shift::zero(), 0.5, &QuasinormWeights::uniform(2))?;
        Ok(ExampleSurface {
            u0: DomainBox::centered(&[0.29], 0.5 * k.u0_diameter())?,
            resonant: ResonantFunction::new(vec![10, 1], -3)?,
            manifold,
        })
    };
    let (ex, default_t) = match name {
        "veronese" => (veronese()?, 5),
        "sphere" => (sphere_example()?, 3),
        "liouville" => (liouville_example()?, 4),
        _ => {
            return Err(Error::Input(format!(
                "--example: expected veronese, sphere or liouville, got `{name}`"
            )))
        }
    };
    let t = t.unwrap_or(default_t);
    let w = QuasinormWeights::uniform(ex.manifold.n());
    let k = constants_for(&ex.manifold, &Shift::zero(), 0.5, &w)?;
    let rho = k.rho_dyadic(t);
    let beta = ex.resonant.beta(k.kappa0(&w), &w);
    let (rho_beta, pitch) = match name {
        "sphere" => (1.0, rho / 64.0),
        "liouville" => (k.rho(beta), 5e-8),
        _ => (k.rho(beta), rho / 64.0),
    };
    let s = trim_resonant(&ex.resonant, &Shift::zero(), &ex.manifold, &ex.u0, k.p, rho_beta, pitch)?;
    let lambdas: Vec<f64> = (1..=5).map(|j| rho / f64::from(1 << j)).collect();
    Ok(UbiquityRun {
        t,
        trimmed: check_intersection_conditions(&s, &k, &w, t, &lambdas, centers)?,
        untrimmed: check_intersection_conditions(&s.untrimmed(), &k, &w, t, &lambdas, centers)?,
    })
}

fn ubiquity(p: &Params, comment: &str) -> Result<Output> {
    let name = p.raw("example").to_string();
    let t = if p.raw("t").is_empty() { None } else { Some(p.int("t")?) };
    let run = ubiquity_example(&name, t, p.int("centers")?)?;
    let mut csv = Csv::with_comment(
        comment,
        &["set", "condition", "center", "lambda", "radius", "lhs", "rhs"],
    );
    for (set, r) in [("trimmed", &run.trimmed), ("untrimmed", &run.untrimmed)] {
        for (cond, rows) in [("lower", &r.lower), ("upper", &r.upper)] {
            for row in rows {
                csv.row([
                    set.to_string(),
                    cond.to_string(),
                    join_reals(&row.center),
                    fmt_real(row.lambda),
                    fmt_real(row.radius),
                    fmt_real(row.lhs),
                    fmt_real(row.rhs),
                ]);
            }
        }
    }
    let line = |set: &str, r: &IntersectionConditionsReport| {
        if r.vacuous {
            format!("{set}: empty")
        } else {
            format!(
                "{set}: lower worst {} ({}), upper worst {} ({})",
                fmt_real(r.lower_worst),
                if r.lower_holds { "holds" } else { "fails" },
                fmt_real(r.upper_worst),
                if r.upper_holds { "holds" } else { "fails" }
            )
        }
    };
    Ok(Output {
        csv: csv.finish(),
        json: json!({ "example": name, "t": run.t, "trimmed": to_json(&run.trimmed), "untrimmed": to_json(&run.untrimmed) }),
        summary: vec![line("trimmed", &run.trimmed), line("untrimmed", &run.untrimmed)],
    })
}

fn dimension(p: &Params, comment: &str) -> Result<Output> {
    let manifold = p.manifold()?;
    let tau = p.real("tau")?;
    let psi =
        MultivariableApproxFunction::new(ApproxFunction::power_law(tau)?, QuasinormWeights::uniform(manifold.n()));
    let exponents: Vec<i32> = p.list("exponents", ',', "comma-separated integers")?;
    let control: Vec<i32> = p.list("control", ',', "comma-separated integers")?;
    let schedule = TruncationSchedule::adapted(&psi.psi, &exponents);
    let est = dimension_experiment(&manifold, &Shift::zero(), &psi, &schedule)?;
    let control_scales: Vec<f64> = control.iter().map(|&k| f64::from(-k).exp2()).collect();
    let ctl = full_domain_control(&manifold, &control_scales)?;
    let mut summary = vec![
        format!(
            "slope {} (r2 {}) vs bound {}",
            fmt_real(est.slope),
            fmt_real(est.r2),
            est.bound.map(fmt_real).unwrap_or_default()
        ),
        format!("full-domain control slope {}", fmt_real(ctl.slope)),
    ];
    summary.extend(est.flag.iter().cloned());
    Ok(Output {
        csv: est.to_csv(comment),
        json: json!({ "estimate": to_json(&est), "control": to_json(&ctl) }),
        summary,
    })
}
