#![allow(dead_code)]

use std::path::{Path, PathBuf};

use drglm::data::{ColumnType, ModelSpec};
use drglm::glm::FamilyKind;
use drglm::harness::{generate_synthetic, ColumnSpec, ResponseConfig, SynthConfig};

pub struct Fixture {
    pub data: PathBuf,
    pub spec: ModelSpec,
    pub config: SynthConfig,
}

fn response(name: &str, family: FamilyKind) -> ResponseConfig {
    ResponseConfig {
        name: name.into(),
        position: None,
        noise_sd: (family == FamilyKind::Gaussian).then_some(2.0),
        levels: (family == FamilyKind::Multinomial)
            .then(|| ["a", "b", "c", "d"].map(String::from).to_vec()),
        decimals: None,
    }
}

fn config(
    family: FamilyKind,
    n: usize,
    seed: u64,
    columns: Vec<ColumnSpec>,
    beta: &[(&str, f64)],
) -> SynthConfig {
    SynthConfig {
        n,
        seed,
        family,
        columns,
        response: response("y", family),
        beta_true: beta.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

/// Eight design columns: intercept, three numerics, a four-level factor and
/// a binary factor.
pub fn gaussian_config(n: usize, seed: u64) -> SynthConfig {
    let columns = vec![
        ColumnSpec::numeric("x1", 0.0, 1.0, None),
        ColumnSpec::numeric("x2", 5.0, 2.0, Some(2)),
        ColumnSpec::numeric("x3", -1.0, 0.5, None),
        ColumnSpec::factor(
            "g",
            ColumnType::Categorical,
            &["a", "b", "c", "d"],
            &[0.25, 0.25, 0.3, 0.2],
        ),
        ColumnSpec::factor("s", ColumnType::Binary, &["0", "1"], &[0.4, 0.6]),
    ];
    config(
        FamilyKind::Gaussian,
        n,
        seed,
        columns,
        &[
            ("(Intercept)", 3.0),
            ("x1", 1.5),
            ("x2", -0.7),
            ("x3", 2.0),
            ("gb", 0.5),
            ("gc", -1.0),
            ("gd", 1.2),
            ("s1", -0.8),
        ],
    )
}

fn six_columns() -> Vec<ColumnSpec> {
    vec![
        ColumnSpec::numeric("x1", 0.0, 1.0, None),
        ColumnSpec::numeric("x2", 0.0, 1.0, None),
        ColumnSpec::numeric("x3", 0.0, 1.0, None),
        ColumnSpec::factor(
            "g",
            ColumnType::Categorical,
            &["a", "b", "c"],
            &[0.4, 0.3, 0.3],
        ),
    ]
}

/// Six design columns: intercept, three numerics, a three-level factor.
pub fn binomial_config(n: usize, seed: u64) -> SynthConfig {
    config(
        FamilyKind::Binomial,
        n,
        seed,
        six_columns(),
        &[
            ("(Intercept)", -0.5),
            ("x1", 0.8),
            ("x2", -0.6),
            ("x3", 0.3),
            ("gb", 0.5),
            ("gc", -0.4),
        ],
    )
}

pub fn poisson_config(n: usize, seed: u64) -> SynthConfig {
    config(
        FamilyKind::Poisson,
        n,
        seed,
        six_columns(),
        &[
            ("(Intercept)", 0.5),
            ("x1", 0.3),
            ("x2", -0.2),
            ("x3", 0.1),
            ("gb", 0.2),
            ("gc", -0.3),
        ],
    )
}

/// Four response categories, six design columns per equation.
pub fn multinomial_config(n: usize, seed: u64) -> SynthConfig {
    let rows = [
        ("b", [0.2, 0.5, -0.3, 0.1, 0.3, -0.2]),
        ("c", [-0.1, -0.4, 0.2, 0.3, -0.2, 0.4]),
        ("d", [0.3, 0.2, 0.4, -0.3, 0.1, 0.2]),
    ];
    let terms = ["(Intercept)", "x1", "x2", "x3", "gb", "gc"];
    let mut cfg = config(FamilyKind::Multinomial, n, seed, six_columns(), &[]);
    for (cat, vals) in rows {
        for (t, v) in terms.iter().zip(vals) {
            cfg.beta_true.insert(format!("{cat}:{t}"), v);
        }
    }
    cfg
}

pub fn config_for(family: FamilyKind, n: usize, seed: u64) -> SynthConfig {
    match family {
        FamilyKind::Gaussian => gaussian_config(n, seed),
        FamilyKind::Binomial => binomial_config(n, seed),
        FamilyKind::Poisson => poisson_config(n, seed),
        FamilyKind::Multinomial => multinomial_config(n, seed),
    }
}

pub fn materialize(config: SynthConfig, dir: &Path, name: &str) -> Fixture {
    let out = generate_synthetic(&config, &dir.join(name)).expect("synthetic data");
    let spec = ModelSpec::from_path(&out.spec).expect("spec sidecar");
    Fixture {
        data: out.data,
        spec,
        config,
    }
}

pub const FAMILIES: [FamilyKind; 4] = [
    FamilyKind::Gaussian,
    FamilyKind::Binomial,
    FamilyKind::Poisson,
    FamilyKind::Multinomial,
];
