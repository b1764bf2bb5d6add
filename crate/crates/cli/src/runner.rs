//! Runs a resolved configuration and gathers reports and tables.

use serde_json::{json, Value};
use setsum::diagnostics::{
    counterexample_experiment, covariance_check, fidi_gaussian_test, lemma1_sweep, lemma2_check,
    median, orlicz_norm, raikov_check, replicate, run_replications, Criterion, ExperimentPlan,
    TestReport, Young,
};
use setsum::entropy::{
    counterexample_entropy_bound, counterexample_series, cover_profile, entropy_integral,
    quadrant_bracketing_profile,
};
use setsum::field::{sample_field, sample_iid_field};
use setsum::process::{evaluate, gamma_set, t_statistics_with};
use setsum::regions::{class_enumerate, DEFAULT_CLASS_CAP};
use setsum::rng::mix64;
use setsum::{ClassSpec, Law, Normalization, Region64};

use crate::config::{
    ConfigDocument, EntropyConfig, FcltConfig, Lemma1Config, Lemma2Config, OrliczConfig,
    SelfnormConfig, VarianceSource,
};
use crate::error::CliError;

/// A CSV table; cells are already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub config: ConfigDocument,
    pub reports: Vec<TestReport>,
    pub tables: Vec<Table>,
    /// experiment-specific values for the summary
    pub extras: Value,
    pub runtime_secs: f64,
}

/// Shortest text that parses back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Child seed for a named stage of an experiment.
fn child_seed(seed: u64, tag: &str) -> u64 {
    tag.bytes()
        .fold(mix64(seed ^ 0x5EED), |h, b| mix64(h ^ u64::from(b)))
}

/// Resolves, validates and runs `doc`.
pub fn execute(doc: &ConfigDocument) -> Result<Outcome, CliError> {
    let mut config = doc.clone();
    config.resolve()?;
    let start = std::time::Instant::now();
    let (reports, tables, extras) = match &config {
        ConfigDocument::Fclt(c) => fclt(c)?,
        ConfigDocument::Selfnorm(c) => selfnorm(c)?,
        ConfigDocument::Counterexample(c) => {
            let out = counterexample_experiment(c)?;
            let mut main = Table::new(
                "counterexample",
                &[
                    "r", "n_r", "beta_r", "k_r", "eps_r", "f_r", "oracle", "se", "verdict",
                ],
            );
            let mut measure = Table::new("measure", &["r", "n_r", "k_r", "measure"]);
            for row in &out.rows {
                let p = &row.params;
                main.push(vec![
                    p.r.to_string(),
                    p.n.to_string(),
                    p.beta.to_string(),
                    p.k.to_string(),
                    num(p.eps),
                    num(row.frequency),
                    num(row.oracle),
                    num(row.se),
                    row.report.verdict.to_string(),
                ]);
                measure.push(vec![
                    p.r.to_string(),
                    p.n.to_string(),
                    p.k.to_string(),
                    num(row.measure),
                ]);
            }
            (out.reports, vec![main, measure], json!({}))
        }
        ConfigDocument::Entropy(c) => entropy(c)?,
        ConfigDocument::Orlicz(c) => orlicz(c)?,
        ConfigDocument::Lemma2(c) => lemma2(c)?,
        ConfigDocument::Lemma1(c) => lemma1(c)?,
    };
    let runtime_secs = start.elapsed().as_secs_f64();
    let reports = reports
        .into_iter()
        .map(|r| r.with_runtime(runtime_secs))
        .collect();
    Ok(Outcome {
        config,
        reports,
        tables,
        extras,
        runtime_secs,
    })
}

type Parts = (Vec<TestReport>, Vec<Table>, Value);

fn fclt(c: &FcltConfig) -> Result<Parts, CliError> {
    for r in &c.regions {
        if r.lebesgue() <= 0.0 {
            return Err(CliError::Config(format!(
                "region {r} has measure 0; its limit is degenerate"
            )));
        }
    }
    let plan = ExperimentPlan {
        law: c.law.clone(),
        d: c.d,
        n: c.n,
        regions: c.regions.clone(),
        normalization: Normalization::Standard,
        replications: c.reps,
        seed: c.seed,
        tolerance: c.ks_tolerance.expect("resolved"),
        work_cap: c.work_cap,
    };
    let evals = run_replications(&plan)?;
    let sites = (c.n as f64).powi(c.d as i32);
    let variance = match c.variance.expect("resolved") {
        VarianceSource::Law => c.law.variance().expect("checked in resolve"),
        VarianceSource::Empirical => {
            setsum::scalar::compensated_sum(evals.iter().map(|e| e.sum_of_squares / sites))
                / c.reps as f64
        }
    };
    let columns: Vec<Vec<f64>> = (0..c.regions.len())
        .map(|k| {
            evals
                .iter()
                .map(|e| e.normalized[k].expect("n^(d/2) > 0"))
                .collect()
        })
        .collect();
    let mut reports = Vec::new();
    let mut ks = Table::new(
        "ks",
        &["region", "lambda", "variance", "ks", "tolerance", "verdict"],
    );
    for (region, xs) in c.regions.iter().zip(&columns) {
        let lambda = region.lebesgue();
        let rep = fidi_gaussian_test(xs, variance * lambda, c.ks_tolerance, c.seed)?
            .named(format!("ks[{region}]"));
        ks.push(vec![
            region.to_string(),
            num(lambda),
            num(variance * lambda),
            num(rep.observed),
            num(rep.tolerance),
            rep.verdict.to_string(),
        ]);
        reports.push(rep);
    }
    let mut cov = Table::new(
        "covariance",
        &[
            "region_a",
            "region_b",
            "target",
            "covariance",
            "se",
            "tolerance",
            "verdict",
        ],
    );
    for i in 0..c.regions.len() {
        for j in i + 1..c.regions.len() {
            let (a, b) = (&c.regions[i], &c.regions[j]);
            let target = variance * a.intersection_measure(b)?;
            let rep = covariance_check(
                &columns[i],
                &columns[j],
                target,
                c.covariance_tolerance,
                c.seed,
            )?
            .named(format!("covariance[{a}|{b}]"));
            cov.push(vec![
                a.to_string(),
                b.to_string(),
                num(target),
                num(rep.observed),
                opt(rep.se),
                num(rep.tolerance),
                rep.verdict.to_string(),
            ]);
            reports.push(rep);
        }
    }
    let mut header = vec!["replication".to_string()];
    header.extend(c.regions.iter().map(|r| r.to_string()));
    let mut evals_table = Table {
        name: "evaluations".into(),
        header,
        rows: Vec::new(),
    };
    for (j, e) in evals.iter().enumerate() {
        let mut row = vec![j.to_string()];
        row.extend(e.normalized.iter().map(|v| opt(*v)));
        evals_table.push(row);
    }
    let tables = if cov.rows.is_empty() {
        vec![ks, evals_table]
    } else {
        vec![ks, cov, evals_table]
    };
    Ok((reports, tables, json!({ "variance": variance })))
}

/// (U^-1 S(A), T_1, T_2^2)
type SelfStats = (f64, Option<f64>, Option<f64>);

struct SelfnormRep {
    /// one entry per region
    stats: Vec<SelfStats>,
    scale_gap: f64,
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

fn opt_gap(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => rel_gap(x, y),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

fn selfnorm(c: &SelfnormConfig) -> Result<Parts, CliError> {
    let sites = setsum::diagnostics::site_count(c.d, c.n)?;
    setsum::diagnostics::check_work(sites, c.reps, c.work_cap)?;
    let gammas = c
        .regions
        .iter()
        .map(|r| gamma_set(r, c.d, c.n))
        .collect::<Result<Vec<_>, _>>()?;
    let reps = replicate(c.seed, c.reps, |_, s| {
        let field = sample_field::<f64>(&c.law, c.d, c.n, s)?;
        let scaled = field.scaled(c.scale);
        let stats_of = |f: &setsum::Field64| -> setsum::Result<Vec<SelfStats>> {
            let e = evaluate(f, &c.regions, Normalization::SelfNormalized)?;
            let u = e.normalized_values()?;
            Ok(u.into_iter()
                .zip(&gammas)
                .map(|(u, g)| {
                    let t = t_statistics_with(f, g);
                    (u, t.t1, t.t2_squared)
                })
                .collect())
        };
        let (base, big) = (stats_of(&field)?, stats_of(&scaled)?);
        let scale_gap = base
            .iter()
            .zip(&big)
            .map(|(a, b)| {
                rel_gap(a.0, b.0)
                    .max(opt_gap(a.1, b.1))
                    .max(opt_gap(a.2, b.2))
            })
            .fold(0.0f64, f64::max);
        Ok(SelfnormRep {
            stats: base,
            scale_gap,
        })
    })?;
    let mut reports = Vec::new();
    let mut table = Table::new(
        "selfnorm",
        &[
            "region",
            "lambda",
            "ks_self",
            "ks_t1",
            "t2_median",
            "t1_undefined",
        ],
    );
    for (k, region) in c.regions.iter().enumerate() {
        let lambda = region.lebesgue();
        let u: Vec<f64> = reps.iter().map(|r| r.stats[k].0).collect();
        let t1: Vec<f64> = reps.iter().filter_map(|r| r.stats[k].1).collect();
        let t2: Vec<f64> = reps.iter().filter_map(|r| r.stats[k].2).collect();
        let ks_u = fidi_gaussian_test(&u, lambda, c.ks_tolerance, c.seed)?
            .named(format!("ks_self[{region}]"));
        let ks_t1 =
            fidi_gaussian_test(&t1, 1.0, c.ks_tolerance, c.seed)?.named(format!("ks_t1[{region}]"));
        let t2_med = median(&t2);
        let t2_rep = TestReport::new(
            format!("t2_median[{region}]"),
            t2_med,
            lambda,
            Criterion::Within,
            c.t2_tolerance,
            None,
            c.seed,
        );
        table.push(vec![
            region.to_string(),
            num(lambda),
            num(ks_u.observed),
            num(ks_t1.observed),
            num(t2_med),
            (reps.len() - t1.len()).to_string(),
        ]);
        reports.extend([ks_u, ks_t1, t2_rep]);
    }
    let gap = reps.iter().map(|r| r.scale_gap).fold(0.0f64, f64::max);
    reports.push(TestReport::new(
        "scale_invariance",
        gap,
        0.0,
        Criterion::AtMost,
        c.scale_tolerance,
        None,
        c.seed,
    ));

    let mut header = vec!["replication".to_string()];
    for r in &c.regions {
        header.extend([
            format!("self[{r}]"),
            format!("t1[{r}]"),
            format!("t2_squared[{r}]"),
        ]);
    }
    let mut evals = Table {
        name: "evaluations".into(),
        header,
        rows: Vec::new(),
    };
    for (j, r) in reps.iter().enumerate() {
        let mut row = vec![j.to_string()];
        for s in &r.stats {
            row.extend([num(s.0), opt(s.1), opt(s.2)]);
        }
        evals.push(row);
    }
    let mut tables = vec![table, evals];
    let mut extras = json!({ "scale": c.scale, "scale_gap": gap });
    if c.raikov_n > 0 && c.raikov_reps > 0 {
        let band = (c.raikov_band[0], c.raikov_band[1]);
        let seed = child_seed(c.seed, "raikov");
        let out = raikov_check(
            &c.law,
            c.d,
            c.raikov_n,
            c.raikov_reps,
            seed,
            band,
            c.work_cap,
        )?;
        let mut ratios = Table::new("raikov", &["replication", "ratio"]);
        for (j, r) in out.ratios.iter().enumerate() {
            ratios.push(vec![j.to_string(), num(*r)]);
        }
        tables.push(ratios);
        extras["raikov"] = json!({
            "n": c.raikov_n,
            "b": out.norming.b,
            "b_squared": out.norming.b_squared,
            "residual": out.norming.residual,
            "median": out.median,
            "exceed_frequency": out.exceed_frequency,
        });
        reports.extend(out.reports);
        if c.raikov_control_reps > 0 {
            let seed = child_seed(c.seed, "raikov_control");
            let ctl = raikov_check(
                &c.raikov_control,
                c.d,
                c.raikov_n,
                c.raikov_control_reps,
                seed,
                band,
                c.work_cap,
            )?;
            let worst = ctl
                .ratios
                .iter()
                .map(|r| (r - 1.0).abs())
                .fold(0.0f64, f64::max);
            reports.push(TestReport::new(
                format!("raikov_control_exact[{}]", c.raikov_control),
                worst,
                0.0,
                Criterion::AtMost,
                0.0,
                None,
                seed,
            ));
        }
    }
    Ok((reports, tables, extras))
}

fn entropy(c: &EntropyConfig) -> Result<Parts, CliError> {
    let class: Vec<Region64> = class_enumerate(c.class, DEFAULT_CLASS_CAP)?;
    let greedy = cover_profile(&class, &c.eps)?;
    let mut raw: Vec<(f64, usize)> = Vec::new();
    {
        let rho = setsum::regions::rho_matrix(&class)?;
        for &e in &c.eps {
            raw.push((
                e,
                setsum::entropy::greedy_cover_from_matrix(&rho, class.len(), e),
            ));
        }
    }
    let mut profile = Table::new("profile", &["eps", "logN", "source"]);
    let mut covers = Table::new("covers", &["eps", "centers"]);
    for (e, k) in &raw {
        covers.push(vec![num(*e), k.to_string()]);
    }
    for (e, h) in greedy.eps.iter().zip(&greedy.log_n) {
        profile.push(vec![num(*e), num(*h), greedy.source.label().into()]);
    }
    let mut extras =
        json!({ "class_size": class.len(), "greedy_integral": entropy_integral(&greedy) });
    if let ClassSpec::QuadrantGrid { d, .. } = c.class {
        let analytic = quadrant_bracketing_profile(d, &c.eps)?;
        for (e, h) in analytic.eps.iter().zip(&analytic.log_n) {
            profile.push(vec![num(*e), num(*h), analytic.source.label().into()]);
        }
        extras["bracketing_integral"] = json!(entropy_integral(&analytic));
    }
    let mut sorted = raw.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let violations = sorted.windows(2).filter(|w| w[1].1 < w[0].1).count();

    let series = counterexample_series(c.p, c.d, c.r_max)?;
    let mut series_table = Table::new("series", &["r", "term", "partial_sum"]);
    for t in &series.terms {
        series_table.push(vec![t.r.to_string(), num(t.term), num(t.partial_sum)]);
    }
    let mut bounds = Table::new("bounds", &["r", "eps_r", "k_r", "log_count", "simplified"]);
    let mut dominance = f64::NEG_INFINITY;
    for r in 1..=c.r_max {
        let b = counterexample_entropy_bound(c.p, c.d, r)?;
        dominance = dominance.max(b.log_count - b.simplified);
        bounds.push(vec![
            r.to_string(),
            num(b.eps),
            num(b.k),
            num(b.log_count),
            num(b.simplified),
        ]);
    }
    let late = series
        .terms
        .iter()
        .filter(|t| t.r >= c.increment_from)
        .map(|t| t.term)
        .fold(0.0f64, f64::max);
    extras["series"] = json!({
        "total": series.total(),
        "majorant_constant": series.majorant_constant,
        "tail_bound": series.tail_bound,
    });
    let reports = vec![
        TestReport::new(
            "cover_monotone_violations",
            violations as f64,
            0.0,
            Criterion::AtMost,
            0.0,
            None,
            0,
        ),
        TestReport::new(
            format!("series_increment_max[r>={}]", c.increment_from),
            late,
            0.0,
            Criterion::AtMost,
            c.increment_tolerance,
            None,
            0,
        ),
        TestReport::new(
            "bound_dominance",
            dominance,
            0.0,
            Criterion::AtMost,
            0.0,
            None,
            0,
        ),
    ];
    Ok((reports, vec![profile, covers, series_table, bounds], extras))
}

fn orlicz(c: &OrliczConfig) -> Result<Parts, CliError> {
    let mut table = Table::new("orlicz", &["source", "psi", "norm", "closed_form", "ratio"]);
    let mut reports = Vec::new();
    for &a in &c.constants {
        let z = vec![a; 16];
        for (psi, exact) in [
            (Young::Psi1, a / 2f64.ln()),
            (Young::Psi2, a / 2f64.ln().sqrt()),
        ] {
            let v = orlicz_norm(&z, psi);
            let source = format!("constant:{}", num(a));
            reports.push(TestReport::new(
                format!("orlicz_{}[{source}]", psi.label()),
                v / exact,
                1.0,
                Criterion::Within,
                c.relative_tolerance,
                None,
                c.seed,
            ));
            table.push(vec![
                source,
                psi.label().into(),
                num(v),
                num(exact),
                num(v / exact),
            ]);
        }
    }
    if c.gaussian_reps > 0 {
        let z =
            sample_iid_field::<f64>(&Law::Gaussian { variance: 1.0 }, 1, c.gaussian_reps, c.seed)?
                .values;
        let v = orlicz_norm(&z, Young::Psi2);
        let exact = (8.0f64 / 3.0).sqrt();
        reports.push(TestReport::new(
            "orlicz_psi2[gaussian]",
            v,
            exact,
            Criterion::Within,
            c.gaussian_tolerance,
            None,
            c.seed,
        ));
        table.push(vec![
            "gaussian:1".into(),
            "psi2".into(),
            num(v),
            num(exact),
            num(v / exact),
        ]);
    }
    Ok((reports, vec![table], json!({})))
}

fn lemma2(c: &Lemma2Config) -> Result<Parts, CliError> {
    let out = lemma2_check(
        &c.law,
        &c.region,
        c.d,
        &c.ladder,
        c.reps,
        c.seed,
        c.final_tolerance,
        c.work_cap,
    )?;
    let mut table = Table::new("lemma2", &["n", "estimate", "se", "oracle", "verdict"]);
    for (row, rep) in out.rows.iter().zip(&out.reports) {
        table.push(vec![
            row.n.to_string(),
            num(row.estimate),
            num(row.se),
            num(row.oracle),
            rep.verdict.to_string(),
        ]);
    }
    Ok((
        out.reports,
        vec![table],
        json!({ "nonincreasing": out.nonincreasing }),
    ))
}

fn lemma1(c: &Lemma1Config) -> Result<Parts, CliError> {
    let out = lemma1_sweep(
        &c.groups,
        &c.ns,
        c.tau,
        c.reps,
        c.seed,
        c.k_bound,
        c.stability_bound,
        c.work_cap,
    )?;
    let mut table = Table::new(
        "lemma1",
        &[
            "group", "law", "n", "pairs", "max_rho", "norm", "bracket", "k_hat",
        ],
    );
    for row in &out.rows {
        let r = &row.result;
        table.push(vec![
            row.group.clone(),
            row.law.to_string(),
            r.n.to_string(),
            r.pairs.to_string(),
            num(r.max_rho),
            num(r.norm),
            num(r.bracket),
            num(r.k_hat),
        ]);
    }
    Ok((
        out.reports,
        vec![table],
        json!({ "k_hat_max": out.k_hat_max, "stability": out.stability }),
    ))
}
