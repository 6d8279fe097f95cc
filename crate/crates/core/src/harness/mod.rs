//! Verification tooling: a parametric data generator, the full-data fit
//! used as ground truth, and a D&R-versus-reference comparator.

mod cleveland;
mod compare;
mod synth;

use std::path::Path;

pub use cleveland::{cleveland_config, response_column, COLUMNS as CLEVELAND_COLUMNS};
pub use compare::{
    compare_baseline, compare_fits, read_baseline, rel_diff, render_text, BaselineRow,
    ComparisonReport, ComparisonRow, Summary, Tolerances, P_FLOOR, REL_EPSILON,
};
pub use synth::{
    generate_synthetic, sidecar, ColumnSpec, GroundTruth, ResponseConfig, SynthConfig, SynthOutput,
};

use crate::data::ModelSpec;
use crate::error::Result;
use crate::pipeline::{run_csv, Division, RunOptions, RunOutput};

/// Fit the whole file as one subset. Identical to a sequential D&R run with
/// one subset.
pub fn fit_full(path: &Path, spec: &ModelSpec, options: &RunOptions) -> Result<RunOutput> {
    run_csv(path, spec, 1, &Division::Sequential, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::glm::FamilyKind;

    fn intercept_only(family: FamilyKind, n: usize, beta0: f64) -> SynthConfig {
        let mut cfg = SynthConfig {
            n,
            seed: 42,
            family,
            columns: vec![],
            response: ResponseConfig {
                name: "y".into(),
                position: None,
                noise_sd: (family == FamilyKind::Gaussian).then_some(1.0),
                levels: None,
                decimals: None,
            },
            beta_true: Default::default(),
        };
        cfg.beta_true.insert("(Intercept)".into(), beta0);
        cfg
    }

    fn column_values(path: &Path, col: usize) -> Vec<f64> {
        let mut rdr = csv::Reader::from_path(path).unwrap();
        rdr.records()
            .map(|r| r.unwrap()[col].parse().unwrap())
            .collect()
    }

    #[test]
    fn gaussian_mean_concentrates() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("g.csv");
        let n = 4000;
        generate_synthetic(&intercept_only(FamilyKind::Gaussian, n, 0.0), &out).unwrap();
        let y = column_values(&out, 0);
        let mean = y.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn binomial_rate_concentrates() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("b.csv");
        let n = 4000;
        generate_synthetic(&intercept_only(FamilyKind::Binomial, n, 0.0), &out).unwrap();
        let y = column_values(&out, 0);
        let rate = y.iter().sum::<f64>() / n as f64;
        assert!((rate - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt(), "{rate}");
    }

    #[test]
    fn generation_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cleveland_config(FamilyKind::Gaussian, 500, 7);
        let a = generate_synthetic(&cfg, &dir.path().join("a.csv")).unwrap();
        let b = generate_synthetic(&cfg, &dir.path().join("b.csv")).unwrap();
        assert_eq!(
            std::fs::read(&a.data).unwrap(),
            std::fs::read(&b.data).unwrap()
        );
        assert_eq!(a.ground_truth, b.ground_truth);
    }

    #[test]
    fn cleveland_header_and_labels() {
        for family in [
            FamilyKind::Gaussian,
            FamilyKind::Binomial,
            FamilyKind::Poisson,
            FamilyKind::Multinomial,
        ] {
            let cfg = cleveland_config(family, 10, 1);
            cfg.validate().unwrap();
            assert_eq!(cfg.header(), CLEVELAND_COLUMNS);
        }
        let cfg = cleveland_config(FamilyKind::Gaussian, 10, 1);
        let labels = cfg.coefficient_labels();
        assert_eq!(labels.len(), 19);
        assert_eq!(&labels[..3], ["(Intercept)", "Age", "Sex1"]);
        assert_eq!(cfg.beta_true["(Intercept)"], 160.735);
        let cfg = cleveland_config(FamilyKind::Multinomial, 10, 1);
        assert_eq!(cfg.coefficient_labels().len(), 3 * 17);
        assert_eq!(cfg.beta_true["4:Diagonosis_Heart_Disease1"], 1.675);
    }

    #[test]
    fn config_errors_carry_paths() {
        let path_of = |text: &str| match SynthConfig::from_json(text) {
            Err(Error::InvalidConfig { path, .. }) => path,
            other => panic!("unexpected {other:?}"),
        };
        let base = r#"{"n": 0, "seed": 1, "family": "gaussian", "columns": [],
                       "response": {"name": "y", "noise_sd": 1}}"#;
        assert_eq!(path_of(base), "n");
        let bad_prob = r#"{"n": 5, "seed": 1, "family": "gaussian",
            "columns": [{"type": "categorical", "name": "c", "levels": ["a","b"], "probabilities": [0.5, 0.6]}],
            "response": {"name": "y", "noise_sd": 1}}"#;
        assert_eq!(path_of(bad_prob), "columns[0].probabilities");
        let bad_type = r#"{"n": 5, "seed": 1, "family": "gaussian",
            "columns": [{"type": "numeric", "name": "c", "mean": "x", "sd": 1}],
            "response": {"name": "y", "noise_sd": 1}}"#;
        assert_eq!(path_of(bad_type), "columns[0].mean");
        let bad_beta = r#"{"n": 5, "seed": 1, "family": "gaussian", "columns": [],
            "response": {"name": "y", "noise_sd": 1}, "beta_true": {"zz": 1}}"#;
        assert_eq!(path_of(bad_beta), "beta_true.zz");
    }

    #[test]
    fn full_fit_recovers_intercepts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("b.csv");
        let mut cfg = intercept_only(FamilyKind::Binomial, 2000, 0.0);
        cfg.beta_true.insert("(Intercept)".into(), -1.0);
        let synth = generate_synthetic(&cfg, &out).unwrap();
        let spec = ModelSpec::from_path(&synth.spec).unwrap();
        let fit = fit_full(&out, &spec, &RunOptions::default()).unwrap().fit;
        let y = column_values(&out, 0);
        let rate = y.iter().sum::<f64>() / y.len() as f64;
        assert!((fit.beta[0] - (rate / (1.0 - rate)).ln()).abs() < 1e-8);
    }

    #[test]
    fn compare_identical_and_shifted() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("g.csv");
        let synth =
            generate_synthetic(&cleveland_config(FamilyKind::Gaussian, 800, 3), &out).unwrap();
        let spec = ModelSpec::from_path(&synth.spec).unwrap();
        let full = fit_full(&out, &spec, &RunOptions::default()).unwrap().fit;
        let tol = Tolerances {
            coef: 1e-2,
            se: 1e-2,
        };
        let same = compare_fits(&full, &full, tol).unwrap();
        assert!(same.passed);
        assert_eq!(same.summary.max_abs_diff, 0.0);

        let mut shifted = full.clone();
        let j = shifted.labels.iter().position(|l| l == "Sex1").unwrap();
        shifted.beta[j] = full.beta[j] * (1.0 + 1e-3);
        let report = compare_fits(&shifted, &full, tol).unwrap();
        assert!(report.passed);
        assert!((report.rows[j].rel_diff - 1e-3).abs() < 1e-12);
        let text = render_text(&report);
        assert!(text.contains("Sex1") && text.contains("PASS"));

        let mut renamed = full.clone();
        renamed.labels[1] = "Age2".into();
        match compare_fits(&renamed, &full, tol) {
            Err(Error::LabelMismatch {
                only_left,
                only_right,
            }) => {
                assert_eq!(only_left, ["Age2"]);
                assert_eq!(only_right, ["Age"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn baseline_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("g.csv");
        let synth =
            generate_synthetic(&cleveland_config(FamilyKind::Gaussian, 500, 3), &out).unwrap();
        let spec = ModelSpec::from_path(&synth.spec).unwrap();
        let fit = fit_full(&out, &spec, &RunOptions::default()).unwrap().fit;
        let base = dir.path().join("base.csv");
        let mut text = String::from("label,estimate,se\n");
        for r in fit.rows().iter().rev() {
            text.push_str(&format!("{},{},{}\n", r.label, r.estimate, r.se));
        }
        std::fs::write(&base, text).unwrap();
        let rows = read_baseline(&base).unwrap();
        let report = compare_baseline(
            &fit,
            &rows,
            Tolerances {
                coef: 1e-12,
                se: 1e-12,
            },
        )
        .unwrap();
        assert!(report.passed);
        assert!(report.summary.max_stat_rel_diff < 1e-12);
    }
}
