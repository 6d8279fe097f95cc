//! Generator configs shaped like the Cleveland heart-disease data: 14
//! columns with the published code names and level codings, marginals close
//! to the original study, and true coefficients set to the published
//! full-data estimates for each model.

use std::collections::BTreeMap;

use super::synth::{ColumnSpec, ResponseConfig, SynthConfig};
use crate::data::ColumnType;
use crate::glm::FamilyKind;

pub const COLUMNS: [&str; 14] = [
    "Age",
    "Sex",
    "Chest_Pain_Type",
    "Resting_Blood_Pressure",
    "Serum_cholesterol",
    "Fasting_Blood_Sugar",
    "Resting_ECG",
    "Max_Heart_Rate_Achieved",
    "Exercise_Induced_Angina",
    "ST_Depression_Exercise",
    "Peak_Exercise_ST_Segment",
    "Num_Major_Vessles_Flouro",
    "Thalassemia",
    "Diagonosis_Heart_Disease",
];

fn column(name: &str) -> ColumnSpec {
    match name {
        "Age" => ColumnSpec::numeric(name, 54.4, 9.0, Some(0)),
        "Sex" => ColumnSpec::factor(name, ColumnType::Binary, &["0", "1"], &[0.32, 0.68]),
        "Chest_Pain_Type" => ColumnSpec::factor(
            name,
            ColumnType::Categorical,
            &["1", "2", "3", "4"],
            &[0.08, 0.16, 0.28, 0.48],
        ),
        "Resting_Blood_Pressure" => ColumnSpec::numeric(name, 131.7, 17.6, Some(0)),
        "Serum_cholesterol" => ColumnSpec::numeric(name, 246.7, 51.8, Some(0)),
        "Fasting_Blood_Sugar" => {
            ColumnSpec::factor(name, ColumnType::Binary, &["0", "1"], &[0.85, 0.15])
        }
        "Resting_ECG" => ColumnSpec::factor(
            name,
            ColumnType::Categorical,
            &["0", "1", "2"],
            &[0.49, 0.02, 0.49],
        ),
        "Max_Heart_Rate_Achieved" => ColumnSpec::numeric(name, 149.6, 22.9, Some(0)),
        "Exercise_Induced_Angina" => {
            ColumnSpec::factor(name, ColumnType::Binary, &["0", "1"], &[0.67, 0.33])
        }
        "ST_Depression_Exercise" => ColumnSpec::numeric(name, 1.04, 1.16, Some(1)),
        "Peak_Exercise_ST_Segment" => ColumnSpec::factor(
            name,
            ColumnType::Categorical,
            &["1", "2", "3"],
            &[0.47, 0.46, 0.07],
        ),
        "Num_Major_Vessles_Flouro" => ColumnSpec::count(name, 0.67),
        "Thalassemia" => ColumnSpec::factor(
            name,
            ColumnType::Categorical,
            &["3", "6", "7"],
            &[0.55, 0.06, 0.39],
        ),
        "Diagonosis_Heart_Disease" => {
            ColumnSpec::factor(name, ColumnType::Binary, &["0", "1"], &[0.54, 0.46])
        }
        other => unreachable!("unknown column {other}"),
    }
}

/// Coefficients in the order: intercept, Age, Sex1, Chest_Pain_Type2..4,
/// Resting_Blood_Pressure, Serum_cholesterol, Fasting_Blood_Sugar1,
/// Resting_ECG1..2, Max_Heart_Rate_Achieved, Exercise_Induced_Angina1,
/// ST_Depression_Exercise, Peak_Exercise_ST_Segment2..3,
/// Num_Major_Vessles_Flouro, Thalassemia6..7, Diagonosis_Heart_Disease1.
const TERMS: [&str; 20] = [
    "(Intercept)",
    "Age",
    "Sex1",
    "Chest_Pain_Type2",
    "Chest_Pain_Type3",
    "Chest_Pain_Type4",
    "Resting_Blood_Pressure",
    "Serum_cholesterol",
    "Fasting_Blood_Sugar1",
    "Resting_ECG1",
    "Resting_ECG2",
    "Max_Heart_Rate_Achieved",
    "Exercise_Induced_Angina1",
    "ST_Depression_Exercise",
    "Peak_Exercise_ST_Segment2",
    "Peak_Exercise_ST_Segment3",
    "Num_Major_Vessles_Flouro",
    "Thalassemia6",
    "Thalassemia7",
    "Diagonosis_Heart_Disease1",
];

/// Published estimates per model over [`TERMS`]; `None` marks the
/// response's own terms.
const LINEAR: [Option<f64>; 20] = [
    Some(160.735),
    Some(0.824),
    Some(-23.482),
    Some(7.227),
    Some(-2.251),
    Some(4.415),
    Some(0.111),
    None,
    Some(-3.026),
    Some(18.395),
    Some(18.350),
    Some(0.168),
    Some(6.375),
    Some(2.904),
    Some(2.685),
    Some(0.236),
    Some(-0.021),
    Some(-11.756),
    Some(2.058),
    Some(1.353),
];

const LOGISTIC: [Option<f64>; 20] = [
    Some(-5.027),
    Some(0.009),
    Some(0.154),
    Some(0.218),
    Some(0.204),
    Some(1.748),
    Some(0.010),
    Some(0.000),
    Some(0.043),
    Some(-0.028),
    Some(0.027),
    Some(0.001),
    Some(0.039),
    Some(0.207),
    Some(0.401),
    Some(-0.071),
    Some(0.725),
    Some(1.947),
    Some(1.751),
    None,
];

const POISSON: [Option<f64>; 20] = [
    Some(-3.630),
    Some(0.047),
    Some(0.214),
    Some(-0.080),
    Some(0.147),
    Some(0.225),
    Some(-0.003),
    Some(0.000),
    Some(0.460),
    Some(0.007),
    Some(-0.011),
    Some(-0.001),
    Some(0.028),
    Some(0.180),
    Some(-0.051),
    Some(-0.043),
    None,
    Some(-0.129),
    Some(-0.115),
    Some(0.771),
];

/// Multinomial model for chest pain type; one row per non-reference
/// category (2, 3, 4), terms as in [`TERMS`] without the chest pain dummies.
const MULTINOMIAL: [[f64; 17]; 3] = [
    [
        7.865, -0.030, -0.798, -0.021, 0.002, -0.835, 0.117, -0.838, -0.008, 0.095, -0.872, -0.493,
        -0.565, -0.042, 0.203, -0.034, 0.105,
    ],
    [
        10.760, -0.027, -1.254, -0.027, -0.002, -0.050, -0.062, -0.483, -0.016, 0.343, -0.172,
        -0.422, -0.457, 0.123, 0.209, -0.044, 0.153,
    ],
    [
        12.482, -0.044, -1.265, -0.023, 0.001, -1.016, 0.012, -0.133, -0.034, 1.862, -0.365,
        -0.633, -0.545, 0.212, 0.344, 0.385, 1.675,
    ],
];

/// Response column for each model.
pub fn response_column(family: FamilyKind) -> &'static str {
    match family {
        FamilyKind::Gaussian => "Serum_cholesterol",
        FamilyKind::Binomial => "Diagonosis_Heart_Disease",
        FamilyKind::Poisson => "Num_Major_Vessles_Flouro",
        FamilyKind::Multinomial => "Chest_Pain_Type",
    }
}

/// Cleveland-shaped generator config for `family` with `n` rows.
pub fn cleveland_config(family: FamilyKind, n: usize, seed: u64) -> SynthConfig {
    let response = response_column(family);
    let position = COLUMNS.iter().position(|c| *c == response);
    let columns = COLUMNS
        .iter()
        .filter(|c| **c != response)
        .map(|c| column(c))
        .collect();

    let mut beta_true = BTreeMap::new();
    let fixed = |table: &[Option<f64>; 20], beta: &mut BTreeMap<String, f64>| {
        for (term, value) in TERMS.iter().zip(table) {
            if let Some(v) = value {
                beta.insert(term.to_string(), *v);
            }
        }
    };
    let (noise_sd, levels, decimals) = match family {
        FamilyKind::Gaussian => {
            fixed(&LINEAR, &mut beta_true);
            (Some(50.0), None, Some(0))
        }
        FamilyKind::Binomial => {
            fixed(&LOGISTIC, &mut beta_true);
            (None, Some(vec!["0".to_string(), "1".to_string()]), None)
        }
        FamilyKind::Poisson => {
            fixed(&POISSON, &mut beta_true);
            (None, None, None)
        }
        FamilyKind::Multinomial => {
            let terms: Vec<&str> = TERMS
                .iter()
                .filter(|t| !t.starts_with("Chest_Pain_Type"))
                .copied()
                .collect();
            for (row, category) in MULTINOMIAL.iter().zip(["2", "3", "4"]) {
                for (term, v) in terms.iter().zip(row) {
                    beta_true.insert(format!("{category}:{term}"), *v);
                }
            }
            (
                None,
                Some(["1", "2", "3", "4"].map(String::from).to_vec()),
                None,
            )
        }
    };

    SynthConfig {
        n,
        seed,
        family,
        columns,
        response: ResponseConfig {
            name: response.to_string(),
            position,
            noise_sd,
            levels,
            decimals,
        },
        beta_true,
    }
}
