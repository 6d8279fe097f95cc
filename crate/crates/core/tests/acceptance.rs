//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! required criterion fails. Criterion 9 needs the full-size Cleveland CSV
//! and is skipped unless `DRGLM_CLEVELAND_CSV` points at it.

#![allow(clippy::excessive_precision)]

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use drglm::data::{scan_schema, ColumnType, Encoder, ModelSpec};
use drglm::glm::{
    accumulate_gram, fit_irls, fit_ols, log_likelihood, observed_information, score, DesignBlock,
    Family, FamilyKind, ResponseBlock,
};
use drglm::harness::{cleveland_config, compare_fits, fit_full, Tolerances};
use drglm::partition::{
    balanced_sizes, replicate_plan, sequential_plan, stratified_plan, PartitionPlan,
};
use drglm::pipeline::{run_csv, Division, RunOptions};
use drglm::recombine::{
    normal_quantile, t_quantile, wald_inference, CombineMethod, CombinedFit, Estimate,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use common::{config_for, materialize, FAMILIES};

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        status: if pass { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-12))
        .fold(0.0, f64::max)
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn divisions() -> [Division; 2] {
    [
        Division::Sequential,
        Division::Replicate { seed: 20_240_917 },
    ]
}

fn dr(path: &Path, spec: &ModelSpec, subsets: usize, division: &Division) -> CombinedFit {
    run_csv(path, spec, subsets, division, &RunOptions::default())
        .unwrap_or_else(|e| panic!("D&R fit with S={subsets}: {e}"))
        .fit
}

fn full(path: &Path, spec: &ModelSpec) -> CombinedFit {
    fit_full(path, spec, &RunOptions::default())
        .expect("full-data fit")
        .fit
}

/// Gaussian identity and aggregated SE fidelity share fixtures.
fn gaussian_criteria(dir: &Path) -> (Outcome, Outcome) {
    let start = Instant::now();
    let fx = materialize(common::gaussian_config(10_000, 101), dir, "gaussian.csv");
    let reference = full(&fx.data, &fx.spec);
    let mut coef_rel: f64 = 0.0;
    let mut se_rel: f64 = 0.0;
    for division in divisions() {
        for s in [2, 7, 10] {
            let fit = dr(&fx.data, &fx.spec, s, &division);
            assert_eq!(fit.labels, reference.labels);
            coef_rel = coef_rel.max(max_rel(fit.beta.as_slice(), reference.beta.as_slice()));
            se_rel = se_rel.max(max_rel(fit.se.as_slice(), reference.se.as_slice()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let width = reference.len();
    (
        outcome(
            coef_rel < 1e-10 && secs < 10.0 && width == 8,
            format!(
                "p={width}, max coefficient rel diff {coef_rel:.2e} (< 1e-10), {secs:.2}s (< 10s)"
            ),
        ),
        outcome(
            se_rel < 0.02,
            format!("max SE rel diff {se_rel:.4} (< 0.02)"),
        ),
    )
}

fn logistic_criterion(dir: &Path) -> Outcome {
    let start = Instant::now();
    let fx = materialize(common::binomial_config(20_000, 202), dir, "binomial.csv");
    let reference = full(&fx.data, &fx.spec);
    let (mut coef_abs, mut se_rel, mut z_rel): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut signs = true;
    for division in divisions() {
        let fit = dr(&fx.data, &fx.spec, 10, &division);
        assert_eq!(fit.method, CombineMethod::HessianWeighted);
        coef_abs = coef_abs.max(max_abs(fit.beta.as_slice(), reference.beta.as_slice()));
        se_rel = se_rel.max(max_rel(fit.se.as_slice(), reference.se.as_slice()));
        z_rel = z_rel.max(max_rel(fit.stat.as_slice(), reference.stat.as_slice()));
        signs &= fit
            .stat
            .iter()
            .zip(&reference.stat)
            .all(|(a, b)| a.signum() == b.signum());
    }
    let secs = start.elapsed().as_secs_f64();
    let p = reference.len();
    outcome(
        p == 6 && coef_abs < 0.01 && se_rel < 0.05 && z_rel < 0.05 && signs && secs < 30.0,
        format!(
            "p={p}, S=10: max |Δβ| {coef_abs:.4} (< 0.01), SE rel {se_rel:.4} (< 0.05), \
             z rel {z_rel:.4} (< 0.05), signs {}, {secs:.2}s (< 30s)",
            if signs { "agree" } else { "DIFFER" }
        ),
    )
}

fn mean_criterion(dir: &Path) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();

    let fx = materialize(common::poisson_config(20_000, 303), dir, "poisson.csv");
    let reference = full(&fx.data, &fx.spec);
    let mut worst: f64 = 0.0;
    for division in divisions() {
        let fit = dr(&fx.data, &fx.spec, 10, &division);
        worst = worst.max(max_abs(fit.beta.as_slice(), reference.beta.as_slice()));
    }
    pass &= worst < 0.01;
    parts.push(format!("poisson max |Δβ| {worst:.4}"));

    let fx = materialize(
        common::multinomial_config(20_000, 404),
        dir,
        "multinomial.csv",
    );
    let reference = full(&fx.data, &fx.spec);
    let r = reference.categories.unwrap_or(0);
    let p = reference.len() / (r - 1).max(1);
    let mut blocks = vec![0.0_f64; r - 1];
    for division in divisions() {
        let fit = dr(&fx.data, &fx.spec, 10, &division);
        for (k, worst) in blocks.iter_mut().enumerate() {
            let range = k * p..(k + 1) * p;
            *worst = worst.max(max_abs(
                &fit.beta.as_slice()[range.clone()],
                &reference.beta.as_slice()[range],
            ));
        }
    }
    pass &= r == 4 && blocks.iter().all(|&b| b < 0.01);
    let levels = &reference.labels;
    let per_block: Vec<String> = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let cat = levels[k * p].split(':').next().unwrap_or("?");
            format!("{cat} {b:.4}")
        })
        .collect();
    parts.push(format!(
        "multinomial r={r} per-block max |Δβ| [{}]",
        per_block.join(", ")
    ));
    outcome(
        pass,
        format!("n=20000, S=10: {} (< 0.01)", parts.join("; ")),
    )
}

/// Normal and t quantiles computed with 40-digit arithmetic.
const NORMAL_ORACLE: [(f64, f64); 4] = [
    (0.9, 1.281551565544600466965),
    (0.95, 1.644853626951472714864),
    (0.975, 1.959963984540054235525),
    (0.995, 2.575829303548900760979),
];

const T_ORACLE: [(f64, f64, f64); 18] = [
    (1.0, 0.95, 6.313751514675043098979),
    (1.0, 0.975, 12.70620473617470464602),
    (1.0, 0.995, 63.656741162871580995),
    (3.0, 0.95, 2.353363434801823877671),
    (3.0, 0.975, 3.182446305283709592723),
    (3.0, 0.995, 5.840909309733357260682),
    (10.0, 0.95, 1.812461122811676413626),
    (10.0, 0.975, 2.228138851986274748395),
    (10.0, 0.995, 3.169272672616951234597),
    (30.0, 0.95, 1.697260886593957848609),
    (30.0, 0.975, 2.042272456301238309958),
    (30.0, 0.995, 2.749995653567225332401),
    (9992.0, 0.95, 1.64500614009112698304),
    (9992.0, 0.975, 1.96020142986949197006),
    (9992.0, 0.995, 2.576321440448802955802),
    (19994.0, 0.95, 1.644929841825009345116),
    (19994.0, 0.975, 1.960082640757118014289),
    (19994.0, 0.995, 2.576075226800859566944),
];

fn oracle_quantile(df: Option<usize>, prob: f64) -> Option<f64> {
    match df {
        None => NORMAL_ORACLE
            .iter()
            .find(|(p, _)| (p - prob).abs() < 1e-12)
            .map(|(_, q)| *q),
        Some(df) => T_ORACLE
            .iter()
            .find(|(d, p, _)| *d == df as f64 && (p - prob).abs() < 1e-12)
            .map(|(_, _, q)| *q),
    }
}

fn inference_criterion(dir: &Path) -> Outcome {
    let mut problems = Vec::new();
    let mut quantile_err: f64 = 0.0;

    for &(prob, q) in &NORMAL_ORACLE {
        quantile_err = quantile_err.max((normal_quantile(prob) - q).abs());
    }
    for &(df, prob, q) in &T_ORACLE {
        quantile_err = quantile_err.max((t_quantile(prob, df) - q).abs());
    }

    for family in FAMILIES {
        let n = if family == FamilyKind::Gaussian {
            10_000
        } else {
            4_000
        };
        let mut fx = materialize(
            config_for(family, n, 505),
            dir,
            &format!("inference_{}.csv", family.name()),
        );
        for confidence in [0.9, 0.95, 0.99] {
            fx.spec.confidence = confidence;
            let fit = dr(&fx.data, &fx.spec, 4, &Division::Sequential);
            let prob = 0.5 + confidence / 2.0;
            match oracle_quantile(fit.df, prob) {
                Some(q) => quantile_err = quantile_err.max((fit.critical_value - q).abs()),
                None => problems.push(format!(
                    "{} df {:?}: no oracle value",
                    family.name(),
                    fit.df
                )),
            }
            for j in 0..fit.len() {
                let (b, se) = (fit.beta[j], fit.se[j]);
                if fit.stat[j].to_bits() != (b / se).to_bits() {
                    problems.push(format!(
                        "{} {}: stat != estimate/se",
                        family.name(),
                        fit.labels[j]
                    ));
                }
                let lo = b - fit.critical_value * se;
                let hi = b + fit.critical_value * se;
                if fit.ci_low[j].to_bits() != lo.to_bits()
                    || fit.ci_high[j].to_bits() != hi.to_bits()
                {
                    problems.push(format!(
                        "{} {}: interval mismatch",
                        family.name(),
                        fit.labels[j]
                    ));
                }
            }
        }

        // p-values over a grid of statistics, through the same inference path.
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.08).collect();
        let fam = match family {
            FamilyKind::Multinomial => Family::multinomial(4).unwrap(),
            other => Family::from_kind(other, None).unwrap(),
        };
        let d = grid.len();
        let est = Estimate {
            beta: DVector::from_vec(grid.clone()),
            variance: DMatrix::identity(d, d),
            method: CombineMethod::for_family(fam),
            subsets: 1,
            n: 40,
        };
        let labels = (0..d).map(|i| format!("g{i}")).collect();
        let p = if family == FamilyKind::Gaussian {
            10
        } else {
            0
        };
        let grid_fit = wald_inference(est, fam, p, 0.95, labels).expect("grid inference");
        let pv = grid_fit.p_value.as_slice();
        if !pv.iter().all(|p| (0.0..=1.0).contains(p)) {
            problems.push(format!("{}: p-value outside [0, 1]", family.name()));
        }
        if pv[0] != 1.0 || !pv.windows(2).all(|w| w[1] < w[0]) {
            problems.push(format!(
                "{}: p-values not decreasing in |stat|",
                family.name()
            ));
        }
    }
    let pass = problems.is_empty() && quantile_err < 1e-6;
    let mut detail = format!(
        "stat = est/se and CI bit-exact for 4 families x 3 levels, max quantile error {quantile_err:.1e} (< 1e-6), \
         p-values monotone on 100-point grid"
    );
    if !problems.is_empty() {
        detail = format!("{detail}; problems: {}", problems.join("; "));
    }
    outcome(pass, detail)
}

/// One random design and response drawn from `family` at `beta`.
fn random_instance(
    family: Family,
    rng: &mut ChaCha8Rng,
) -> (DesignBlock, ResponseBlock, DVector<f64>) {
    let n = 60;
    let p = 4;
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut values = Vec::with_capacity(n * p);
    for _ in 0..n {
        values.extend(std::iter::once(1.0).chain((1..p).map(|_| z.sample(rng))));
    }
    let x = DesignBlock::new(n, p, values).unwrap();
    let d = family.num_params(p);
    let beta = DVector::from_fn(d, |_, _| 0.4 * z.sample(rng));
    let mut y = Vec::with_capacity(n);
    for row in x.iter_rows() {
        let eta: Vec<f64> = beta
            .as_slice()
            .chunks(p)
            .map(|b| row.iter().zip(b).map(|(a, c)| a * c).sum())
            .collect();
        let v = match family {
            Family::Gaussian => eta[0] + z.sample(rng),
            Family::Binomial => f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta[0]).exp())),
            Family::Poisson => Poisson::new(eta[0].exp()).unwrap().sample(rng),
            Family::Multinomial(_) => {
                let weights: Vec<f64> = std::iter::once(1.0)
                    .chain(eta.iter().map(|e| e.exp()))
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut k = 0;
                while k + 1 < weights.len() && u >= weights[k] {
                    u -= weights[k];
                    k += 1;
                }
                (k + 1) as f64
            }
        };
        y.push(v);
    }
    (x, ResponseBlock::new(y).unwrap(), beta)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-8);
    max_abs(a, b) / scale
}

fn derivative_criterion() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut score_err, mut info_err): (f64, f64) = (0.0, 0.0);
    let families = [
        Family::Gaussian,
        Family::Binomial,
        Family::Poisson,
        Family::multinomial(3).unwrap(),
    ];
    for family in families {
        for _ in 0..20 {
            let (x, y, beta) = random_instance(family, &mut rng);
            let d = beta.len();
            let g = score(family, &beta, &x, &y).unwrap();
            let ll = |b: &DVector<f64>| log_likelihood(family, b, &x, &y).unwrap();
            // The gaussian likelihood profiles out σ²; its gradient is the
            // scale-free score divided by σ̂²(β) = RSS/n.
            let scale = if family == Family::Gaussian {
                let eta = &x_times(&x, &beta);
                let rss: f64 = y
                    .values()
                    .iter()
                    .zip(eta)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                rss / y.len() as f64
            } else {
                1.0
            };
            let mut fd = vec![0.0; d];
            for j in 0..d {
                let h = 1e-5 * beta[j].abs().max(1.0);
                let (mut up, mut down) = (beta.clone(), beta.clone());
                up[j] += h;
                down[j] -= h;
                fd[j] = scale * (ll(&up) - ll(&down)) / (2.0 * h);
            }
            score_err = score_err.max(rel_err(&fd, g.as_slice()));

            let info = observed_information(family, &beta, &x, &y).unwrap();
            let mut fd_info = DMatrix::zeros(d, d);
            for j in 0..d {
                let h = 1e-5 * beta[j].abs().max(1.0);
                let (mut up, mut down) = (beta.clone(), beta.clone());
                up[j] += h;
                down[j] -= h;
                let diff = (score(family, &up, &x, &y).unwrap()
                    - score(family, &down, &x, &y).unwrap())
                    / (2.0 * h);
                fd_info.set_column(j, &(-diff));
            }
            info_err = info_err.max(rel_err(fd_info.as_slice(), info.as_slice()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        score_err < 1e-5 && info_err < 1e-4 && secs < 5.0,
        format!(
            "20 instances x 4 families: score rel err {score_err:.1e} (< 1e-5), \
             information rel err {info_err:.1e} (< 1e-4), {secs:.2}s (< 5s)"
        ),
    )
}

fn x_times(x: &DesignBlock, beta: &DVector<f64>) -> Vec<f64> {
    x.iter_rows()
        .map(|row| row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum())
        .collect()
}

/// Direct in-memory fit of the whole file, bypassing partitioning,
/// streaming and recombination.
fn direct_fit(path: &Path, spec: &ModelSpec) -> (DVector<f64>, DMatrix<f64>) {
    let schema = scan_schema(path, &spec.declarations()).unwrap();
    let encoder = Encoder::new(&schema, spec).unwrap();
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let mut values = Vec::new();
    let mut response = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        response.push(
            encoder
                .encode_record(&rec.unwrap(), i + 1, &mut values)
                .unwrap(),
        );
    }
    let x = DesignBlock::new(response.len(), encoder.width(), values).unwrap();
    let y = ResponseBlock::new(response).unwrap();
    let fit = match encoder.family() {
        Family::Gaussian => fit_ols(&accumulate_gram(&x, &y).unwrap()).unwrap(),
        family => fit_irls(family, &x, &y, &spec.fit, None).unwrap(),
    };
    (fit.beta, fit.covariance)
}

fn collapse_criterion(dir: &Path) -> Outcome {
    let mut problems = Vec::new();
    for family in FAMILIES {
        let fx = materialize(
            config_for(family, 3_000, 707),
            dir,
            &format!("collapse_{}.csv", family.name()),
        );
        let reference = full(&fx.data, &fx.spec);
        for threads in [1, 4] {
            let options = RunOptions {
                threads: Some(threads),
                ..RunOptions::default()
            };
            let run = run_csv(&fx.data, &fx.spec, 1, &Division::Sequential, &options).unwrap();
            if run.fit != reference {
                problems.push(format!(
                    "{} with {threads} threads differs from the full fit",
                    family.name()
                ));
            }
        }
        let (beta, covariance) = direct_fit(&fx.data, &fx.spec);
        let same_bits =
            |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits());
        if !same_bits(beta.as_slice(), reference.beta.as_slice())
            || !same_bits(covariance.as_slice(), reference.variance.as_slice())
        {
            problems.push(format!(
                "{} differs from a direct in-memory fit",
                family.name()
            ));
        }
    }
    let pass = problems.is_empty();
    let detail = if pass {
        "S=1 runs bit-identical to the full fit and to a direct in-memory fit for all 4 families"
            .to_string()
    } else {
        problems.join("; ")
    };
    outcome(pass, detail)
}

fn check_bijection(plan: &PartitionPlan, n: usize) -> bool {
    let mut seen = vec![false; n];
    for k in 0..plan.num_subsets() {
        for row in plan.subset_rows(k) {
            if row >= n || seen[row] {
                return false;
            }
            seen[row] = true;
        }
    }
    seen.into_iter().all(|s| s) && plan.total_rows() == n
}

fn partition_criterion() -> Outcome {
    let ns = [1, 2, 3, 10, 97, 1_000, 4_321, 10_000];
    let ss = [1, 2, 3, 7, 10, 64];
    let mut checked = 0;
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for &n in &ns {
        for &s in ss.iter().filter(|&&s| s <= n) {
            let expected = balanced_sizes(n, s);
            let seq = sequential_plan(n, s).unwrap();
            if !check_bijection(&seq, n) || seq.sizes() != expected || !seq.is_contiguous() {
                problems.push(format!("sequential n={n} S={s}"));
            }
            let rep = replicate_plan(n, s, 42 + n as u64).unwrap();
            let again = replicate_plan(n, s, 42 + n as u64).unwrap();
            if !check_bijection(&rep, n) || rep.sizes() != expected || rep != again {
                problems.push(format!("replicate n={n} S={s}"));
            }
            let values: Vec<String> = (0..n)
                .map(|_| format!("v{}", rng.random_range(0..s)))
                .collect();
            let cap = n.div_ceil(s);
            let strat = stratified_plan("c", &values, cap).unwrap();
            let mut ok = check_bijection(&strat, n);
            for k in 0..strat.num_subsets() {
                let rows = strat.subset_rows(k);
                ok &= !rows.is_empty() && rows.len() <= cap;
                ok &= rows.iter().all(|&r| values[r] == values[rows[0]]);
            }
            if !ok {
                problems.push(format!("stratified n={n} S={s}"));
            }
            checked += 3;
        }
    }
    let pass = problems.is_empty();
    let mut detail = format!(
        "{checked} plans over n <= 10000 and 3 strategies are bijections with balanced sizes"
    );
    if !pass {
        detail = format!("failures: {}", problems.join(", "));
    }
    outcome(pass, detail)
}

/// Published linear-model standard errors for the full 5,000,000-row data,
/// in the order of the published estimates.
const CLEVELAND_LINEAR_SE: [(&str, f64); 19] = [
    ("(Intercept)", 0.334),
    ("Age", 0.003),
    ("Sex1", 0.052),
    ("Chest_Pain_Type2", 0.099),
    ("Chest_Pain_Type3", 0.091),
    ("Chest_Pain_Type4", 0.093),
    ("Resting_Blood_Pressure", 0.001),
    ("Fasting_Blood_Sugar1", 0.065),
    ("Resting_ECG1", 0.192),
    ("Resting_ECG2", 0.046),
    ("Max_Heart_Rate_Achieved", 0.001),
    ("Exercise_Induced_Angina1", 0.055),
    ("ST_Depression_Exercise", 0.023),
    ("Peak_Exercise_ST_Segment2", 0.054),
    ("Peak_Exercise_ST_Segment3", 0.096),
    ("Num_Major_Vessles_Flouro", 0.026),
    ("Thalassemia6", 0.100),
    ("Thalassemia7", 0.056),
    ("Diagonosis_Heart_Disease1", 0.057),
];

/// Case- and punctuation-insensitive key that also absorbs the two
/// misspellings found in published column names.
fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
        .replace("vessles", "vessels")
        .replace("diagonosis", "diagnosis")
}

fn cleveland_criterion() -> Outcome {
    let Ok(path) = std::env::var("DRGLM_CLEVELAND_CSV") else {
        return Outcome {
            status: Status::Skip,
            detail: "set DRGLM_CLEVELAND_CSV to the 5,000,000-row Cleveland CSV to run".into(),
        };
    };
    let path = Path::new(&path);
    let header: Vec<String> =
        match csv::Reader::from_path(path).and_then(|mut r| r.headers().cloned()) {
            Ok(h) => h.iter().map(str::to_string).collect(),
            Err(e) => return outcome(false, format!("cannot read {}: {e}", path.display())),
        };
    let Some(response) = header.iter().find(|h| normalize(h) == "serumcholesterol") else {
        return outcome(false, "no serum cholesterol column".into());
    };
    let predictors: Vec<&str> = header
        .iter()
        .filter(|h| *h != response)
        .map(String::as_str)
        .collect();
    let mut spec = ModelSpec::new(response, &predictors, FamilyKind::Gaussian);
    let numeric = [
        "age",
        "restingbloodpressure",
        "maxheartrateachieved",
        "stdepressionexercise",
        "nummajorvesselsflouro",
    ];
    for h in &predictors {
        let kind = if numeric.contains(&normalize(h).as_str()) {
            ColumnType::Numeric
        } else {
            ColumnType::Categorical
        };
        spec.column_types.insert(h.to_string(), kind);
    }
    let run = match run_csv(
        path,
        &spec,
        10,
        &Division::Sequential,
        &RunOptions::default(),
    ) {
        Ok(run) => run,
        Err(e) => return outcome(false, format!("D&R fit failed: {e}")),
    };
    let reference = full(path, &spec);
    let agreement = compare_fits(
        &run.fit,
        &reference,
        Tolerances {
            coef: 1e-8,
            se: 0.02,
        },
    )
    .map(|r| r.passed)
    .unwrap_or(false);

    let published = cleveland_config(FamilyKind::Gaussian, 1, 0).beta_true;
    let published: BTreeMap<String, f64> = published
        .into_iter()
        .map(|(k, v)| (normalize(&k), v))
        .collect();
    let ses: BTreeMap<String, f64> = CLEVELAND_LINEAR_SE
        .iter()
        .map(|(k, v)| (normalize(k), *v))
        .collect();
    let mut worst_coef: f64 = 0.0;
    let mut worst_se: f64 = 0.0;
    let mut missing = Vec::new();
    for (j, label) in run.fit.labels.iter().enumerate() {
        let key = normalize(label);
        match (published.get(&key), ses.get(&key)) {
            (Some(b), Some(se)) => {
                worst_coef = worst_coef.max((run.fit.beta[j] - b).abs());
                worst_se = worst_se.max((run.fit.se[j] - se).abs());
            }
            _ => missing.push(label.clone()),
        }
    }
    // Published values are rounded to three decimals.
    let tol = 0.001 + 5e-4;
    let pass = missing.is_empty() && worst_coef <= tol && worst_se <= tol && agreement;
    outcome(
        pass,
        format!(
            "max |Δβ| vs published {worst_coef:.4}, max |ΔSE| {worst_se:.4} (<= 0.001 after rounding), \
             D&R vs full agree: {agreement}, unmatched labels {missing:?}"
        ),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let (c1, c2) = gaussian_criteria(dir.path());
    let results = [
        (1, "gaussian D&R equals full fit", c1),
        (2, "aggregated SE fidelity", c2),
        (
            3,
            "logistic Hessian-weighted combination",
            logistic_criterion(dir.path()),
        ),
        (
            4,
            "poisson and multinomial mean combination",
            mean_criterion(dir.path()),
        ),
        (5, "inference pipeline", inference_criterion(dir.path())),
        (
            6,
            "score and information vs finite differences",
            derivative_criterion(),
        ),
        (7, "S=1 collapse", collapse_criterion(dir.path())),
        (8, "partition bijection", partition_criterion()),
        (
            9,
            "full-scale Cleveland reproduction",
            cleveland_criterion(),
        ),
    ];
    let mut failed = false;
    for (id, name, o) in &results {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed = true;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("criterion {id} {tag}: {name}: {}", o.detail);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
