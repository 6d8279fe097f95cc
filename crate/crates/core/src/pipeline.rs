//! Scan, partition, fit subsets in parallel, recombine.
//!
//! The CSV is read once by a single producer that hands finished chunks to a
//! rayon pool. Gaussian chunks are reduced to Gram sums as they arrive;
//! other families wait until a subset is complete and then run Newton's
//! method on it, so one subset must fit in memory. At most `2 × threads`
//! tasks are in flight; the producer blocks beyond that. Results are reduced
//! in ascending subset and chunk order, so the output does not depend on the
//! thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{
    read_column, scan_schema, scan_schema_cached, Encoder, ModelSpec, Schema, SubsetStream,
};
use crate::error::{Error, Result};
use crate::glm::{
    accumulate_gram, fit_irls, fit_ols, DesignBlock, Family, FitConfig, GramStats, ResponseBlock,
    SubsetFit,
};
use crate::partition::{replicate_plan, sequential_plan, stratified_plan, PartitionPlan};
use crate::recombine::{
    aggregate_variance, combine_hessian_weighted, combine_linear, combine_mean, wald_inference,
    CombineMethod, CombinedFit, Estimate, VarianceScheme,
};

pub const DEFAULT_CHUNK_ROWS: usize = 65_536;

/// How rows are divided into subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Division {
    Sequential,
    Replicate {
        seed: u64,
    },
    /// One or more subsets per distinct value of `column`. Groups larger
    /// than `max_subset_rows` (default `⌈n/S⌉`) are cut sequentially.
    Stratified {
        column: String,
        max_subset_rows: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub chunk_rows: usize,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    pub variance: VarianceScheme,
    /// Schema sidecar to reuse or refresh.
    pub schema_cache: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            chunk_rows: DEFAULT_CHUNK_ROWS,
            threads: None,
            variance: VarianceScheme::Aggregated,
            schema_cache: None,
        }
    }
}

/// Convergence record of one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub subset: usize,
    pub rows: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub fit_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub scan_ms: f64,
    pub plan_ms: f64,
    pub fit_ms: f64,
    pub recombine_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub schema: Schema,
    pub plan: PartitionPlan,
    pub fit: CombinedFit,
    pub subsets: Vec<SubsetRecord>,
    pub timings: Timings,
    pub peak_chunk_rows: usize,
    pub threads: usize,
    pub schema_cache_hit: bool,
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Worker count from an explicit request or the machine.
pub fn resolve_threads(requested: Option<usize>) -> Result<usize> {
    match requested {
        Some(0) => Err(Error::InvalidConfig {
            path: "threads".into(),
            message: "must be at least 1".into(),
        }),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Build the partition plan for `n` rows of `path`.
pub fn make_plan(
    path: &Path,
    n: usize,
    subsets: usize,
    division: &Division,
) -> Result<PartitionPlan> {
    match division {
        Division::Sequential => sequential_plan(n, subsets),
        Division::Replicate { seed } => replicate_plan(n, subsets, *seed),
        Division::Stratified {
            column,
            max_subset_rows,
        } => {
            if subsets == 0 {
                return Err(Error::InvalidPartition(
                    "number of subsets must be at least 1".into(),
                ));
            }
            let values = read_column(path, column)?;
            if values.len() != n {
                return Err(Error::RowCountDrift {
                    expected: n,
                    actual: values.len(),
                });
            }
            let cap = max_subset_rows.unwrap_or_else(|| n.div_ceil(subsets));
            stratified_plan(column, &values, cap)
        }
    }
}

enum Job {
    Gram {
        subset: usize,
        sequence: usize,
        design: DesignBlock,
        response: ResponseBlock,
    },
    Fit {
        subset: usize,
        design: DesignBlock,
        response: ResponseBlock,
    },
}

impl Job {
    fn subset(&self) -> usize {
        match self {
            Job::Gram { subset, .. } | Job::Fit { subset, .. } => *subset,
        }
    }
}

enum Done {
    Gram {
        subset: usize,
        sequence: usize,
        gram: GramStats,
        ms: f64,
    },
    Fit {
        subset: usize,
        fit: SubsetFit,
        ms: f64,
    },
}

fn run_job(job: Job, family: Family, config: &FitConfig) -> (usize, Result<Done>) {
    let start = Instant::now();
    match job {
        Job::Gram {
            subset,
            sequence,
            design,
            response,
        } => (
            subset,
            accumulate_gram(&design, &response).map(|gram| Done::Gram {
                subset,
                sequence,
                gram,
                ms: millis(start),
            }),
        ),
        Job::Fit {
            subset,
            design,
            response,
        } => (
            subset,
            fit_irls(family, &design, &response, config, None)
                .map(|fit| Done::Fit {
                    subset,
                    fit: fit.with_index(subset),
                    ms: millis(start),
                })
                .map_err(|e| e.in_subset(subset)),
        ),
    }
}

/// Fitted subsets in ascending index order plus their records.
pub struct SubsetFits {
    pub fits: Vec<SubsetFit>,
    pub records: Vec<SubsetRecord>,
    pub peak_chunk_rows: usize,
}

/// Stream `plan` out of `path` and fit every subset.
pub fn fit_subsets(
    path: &Path,
    plan: &PartitionPlan,
    encoder: &Encoder,
    config: &FitConfig,
    chunk_rows: usize,
    threads: usize,
) -> Result<SubsetFits> {
    let family = encoder.family();
    let gaussian = family == Family::Gaussian;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig {
            path: "threads".into(),
            message: e.to_string(),
        })?;
    let mut stream = SubsetStream::open(path, plan, encoder, chunk_rows)?;
    let (done_tx, done_rx) = crossbeam_channel::unbounded::<(usize, Result<Done>)>();
    let (permit_tx, permit_rx) = crossbeam_channel::bounded::<()>(2 * threads);
    // lowest failed subset index; later subsets are skipped
    let failed = AtomicUsize::new(usize::MAX);
    let mut stream_error = None;
    let mut partial: BTreeMap<usize, (Vec<DesignBlock>, Vec<ResponseBlock>)> = BTreeMap::new();

    pool.in_place_scope(|scope| {
        for item in stream.by_ref() {
            if failed.load(Ordering::Relaxed) != usize::MAX {
                break;
            }
            let chunk = match item {
                Ok(c) => c,
                Err(e) => {
                    stream_error = Some(e);
                    break;
                }
            };
            let job = if gaussian {
                Job::Gram {
                    subset: chunk.subset,
                    sequence: chunk.sequence,
                    design: chunk.design,
                    response: chunk.response,
                }
            } else {
                let entry = partial.entry(chunk.subset).or_default();
                entry.0.push(chunk.design);
                entry.1.push(chunk.response);
                if !chunk.last {
                    continue;
                }
                let (xs, ys) = partial.remove(&chunk.subset).unwrap_or_default();
                let stacked = if xs.len() == 1 {
                    Ok((
                        xs.into_iter().next().unwrap(),
                        ys.into_iter().next().unwrap(),
                    ))
                } else {
                    DesignBlock::stack(&xs).and_then(|x| Ok((x, ResponseBlock::stack(&ys)?)))
                };
                match stacked {
                    Ok((design, response)) => Job::Fit {
                        subset: chunk.subset,
                        design,
                        response,
                    },
                    Err(e) => {
                        stream_error = Some(e);
                        break;
                    }
                }
            };
            if permit_tx.send(()).is_err() {
                break;
            }
            let done_tx = done_tx.clone();
            let permit_rx = permit_rx.clone();
            let failed = &failed;
            scope.spawn(move |_| {
                if job.subset() < failed.load(Ordering::Relaxed) {
                    let (subset, result) = run_job(job, family, config);
                    if result.is_err() {
                        failed.fetch_min(subset, Ordering::Relaxed);
                    }
                    let _ = done_tx.send((subset, result));
                }
                let _ = permit_rx.recv();
            });
        }
    });
    drop(done_tx);
    if let Some(e) = stream_error {
        return Err(e);
    }

    let mut failures: BTreeMap<usize, Error> = BTreeMap::new();
    let mut grams: BTreeMap<(usize, usize), (GramStats, f64)> = BTreeMap::new();
    let mut fitted: BTreeMap<usize, (SubsetFit, f64)> = BTreeMap::new();
    for (subset, result) in done_rx.iter() {
        match result {
            Ok(Done::Gram {
                subset,
                sequence,
                gram,
                ms,
            }) => {
                grams.insert((subset, sequence), (gram, ms));
            }
            Ok(Done::Fit { subset, fit, ms }) => {
                fitted.insert(subset, (fit, ms));
            }
            Err(e) => {
                failures.entry(subset).or_insert(e);
            }
        }
    }
    if let Some((_, e)) = failures.into_iter().next() {
        return Err(e);
    }

    if gaussian {
        let mut pooled: BTreeMap<usize, (GramStats, f64)> = BTreeMap::new();
        for ((subset, _), (gram, ms)) in grams {
            match pooled.get_mut(&subset) {
                Some((acc, total)) => {
                    acc.add(&gram)?;
                    *total += ms;
                }
                None => {
                    pooled.insert(subset, (gram, ms));
                }
            }
        }
        for (subset, (gram, ms)) in pooled {
            let start = Instant::now();
            let fit = fit_ols(&gram)
                .map_err(|e| e.in_subset(subset))?
                .with_index(subset);
            fitted.insert(subset, (fit, ms + millis(start)));
        }
    }

    let expected = plan.num_subsets();
    if fitted.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "fitted subsets",
            expected,
            actual: fitted.len(),
        });
    }
    let mut fits = Vec::with_capacity(expected);
    let mut records = Vec::with_capacity(expected);
    for (subset, (fit, ms)) in fitted {
        records.push(SubsetRecord {
            subset,
            rows: fit.n_rows,
            converged: fit.converged,
            iterations: fit.iterations,
            final_gradient_norm: fit.final_gradient_norm,
            fit_ms: ms,
        });
        fits.push(fit);
    }
    Ok(SubsetFits {
        fits,
        records,
        peak_chunk_rows: stream.peak_resident_rows(),
    })
}

/// Recombine subset fits and attach Wald inference.
///
/// `n` is the total row count and `p` the number of design columns.
pub fn recombine(
    family: Family,
    fits: &[SubsetFit],
    n: usize,
    p: usize,
    variance: VarianceScheme,
    confidence: f64,
    labels: Vec<String>,
) -> Result<CombinedFit> {
    let method = CombineMethod::for_family(family);
    let (beta, var) = match family {
        Family::Gaussian => {
            let mut sorted: Vec<&SubsetFit> = fits.iter().collect();
            sorted.sort_by_key(|f| f.subset_index);
            let grams = sorted
                .iter()
                .map(|f| {
                    f.gram.clone().ok_or_else(|| {
                        Error::InvalidSpec(format!(
                            "subset {} has no Gram statistics",
                            f.subset_index
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let lin = combine_linear(&grams)?;
            let var = match variance {
                VarianceScheme::Aggregated => aggregate_variance(fits)?,
                VarianceScheme::PooledExact => lin.pooled_variance()?,
            };
            (lin.beta, var)
        }
        Family::Binomial => (combine_hessian_weighted(fits)?, aggregate_variance(fits)?),
        Family::Poisson | Family::Multinomial(_) => {
            (combine_mean(fits)?, aggregate_variance(fits)?)
        }
    };
    let estimate = Estimate {
        beta,
        variance: var,
        method,
        subsets: fits.len(),
        n,
    };
    wald_inference(estimate, family, p, confidence, labels)
}

/// Complete run on a CSV file: scan, plan, fit, recombine, infer.
pub fn run_csv(
    path: &Path,
    spec: &ModelSpec,
    subsets: usize,
    division: &Division,
    options: &RunOptions,
) -> Result<RunOutput> {
    spec.check()?;
    let threads = resolve_threads(options.threads)?;

    let start = Instant::now();
    let declarations = spec.declarations();
    let (schema, schema_cache_hit) = match &options.schema_cache {
        Some(cache) => scan_schema_cached(path, &declarations, cache)?,
        None => (scan_schema(path, &declarations)?, false),
    };
    let encoder = Encoder::new(&schema, spec)?;
    let scan_ms = millis(start);

    let start = Instant::now();
    let mut plan = make_plan(path, schema.row_count, subsets, division)?;
    let family = encoder.family();
    plan.flag_small_subsets(family.num_params(encoder.width()));
    let plan_ms = millis(start);

    let start = Instant::now();
    let fitted = fit_subsets(
        path,
        &plan,
        &encoder,
        &spec.fit,
        options.chunk_rows,
        threads,
    )?;
    let fit_ms = millis(start);

    let start = Instant::now();
    let fit = recombine(
        family,
        &fitted.fits,
        schema.row_count,
        encoder.width(),
        options.variance,
        spec.confidence,
        encoder.labels().to_vec(),
    )?;
    let recombine_ms = millis(start);

    Ok(RunOutput {
        schema,
        plan,
        fit,
        subsets: fitted.records,
        timings: Timings {
            scan_ms,
            plan_ms,
            fit_ms,
            recombine_ms,
        },
        peak_chunk_rows: fitted.peak_chunk_rows,
        threads,
        schema_cache_hit,
    })
}
