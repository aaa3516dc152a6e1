//! Streams datasets through learners and assembles reports.

use std::time::Instant;

use omks_core::data::{gen_lowerbound, normalize_minmax, parse_libsvm, permute};
use omks_core::{
    Dataset, Diagnostics, HingeConfig, HingeLearner, HingeLoss, LogisticLoss, OnlineLearner, Raker,
    RakerConfig, RoundRecord, SmoothConfig, SmoothLearner,
};

use crate::config::{Algorithm, DatasetSpec, ExperimentConfig, LossKind};
use crate::error::{BenchError, Result};
use crate::report::{mean_std, GridPoint, Report, Row, RowKind};

/// Loads (and optionally scales) the configured dataset.
pub fn load_dataset(spec: &DatasetSpec, normalize: bool) -> Result<Dataset> {
    let ds = match spec {
        DatasetSpec::Path(p) => parse_libsvm(p).map_err(BenchError::Dataset)?,
        DatasetSpec::Lowerbound {
            budget,
            rounds,
            seed,
        } => gen_lowerbound(*budget, *rounds, *seed).map_err(BenchError::Dataset)?,
    };
    if ds.is_empty() {
        return Err(BenchError::Config(format!("dataset {} is empty", ds.name)));
    }
    Ok(if normalize { normalize_minmax(&ds) } else { ds })
}

/// Tuning grid in the order it is swept.
pub fn grid(cfg: &ExperimentConfig, rounds: usize) -> Vec<GridPoint> {
    match cfg.algorithm {
        Algorithm::Raker => {
            let root_t = (rounds as f64).sqrt();
            let mut g = Vec::new();
            for eta in &cfg.raker_eta {
                for reg in &cfg.raker_reg {
                    g.push(GridPoint {
                        lambda_scale: None,
                        eta: Some(eta / root_t),
                        reg: Some(*reg),
                    });
                }
            }
            g
        }
        _ => match cfg.lambda_rule {
            crate::config::LambdaRule::Theoretical => vec![GridPoint::default()],
            crate::config::LambdaRule::Experimental => cfg
                .lambda_scale
                .iter()
                .map(|c| GridPoint {
                    lambda_scale: Some(*c),
                    ..GridPoint::default()
                })
                .collect(),
        },
    }
}

pub fn radius(cfg: &ExperimentConfig) -> f64 {
    cfg.radius.unwrap_or((effective_budget(cfg) as f64).sqrt())
}

/// The configured budget, rounded down to even for the shared smooth buffer,
/// which is split in halves.
pub fn effective_budget(cfg: &ExperimentConfig) -> usize {
    match cfg.algorithm {
        Algorithm::MomdS => cfg.budget / 2 * 2,
        _ => cfg.budget,
    }
}

pub fn build_learner(
    cfg: &ExperimentConfig,
    point: GridPoint,
    ds: &Dataset,
    horizon: u64,
    seed: u64,
) -> Result<Box<dyn OnlineLearner>> {
    let kernels = cfg.kernels();
    let mode = cfg.lambda_rule.mode(point.lambda_scale.unwrap_or(1.0));
    Ok(match cfg.algorithm {
        Algorithm::MomdH => {
            let mut h = HingeConfig::new(kernels, cfg.budget, horizon);
            h.scope = cfg.budget_scope.into();
            h.reservoir_capacity = cfg.reservoir_capacity;
            h.radius = cfg.radius;
            h.lambda = mode;
            h.removal = cfg.removal.into();
            h.seed = seed;
            Box::new(HingeLearner::new(h)?)
        }
        Algorithm::MomdS => {
            let mut s = SmoothConfig::new(kernels, effective_budget(cfg));
            s.radius = cfg.radius;
            s.lambda = mode;
            s.removal = cfg.removal.into();
            s.seed = seed;
            Box::new(SmoothLearner::new(s, LogisticLoss)?)
        }
        Algorithm::Raker => {
            let mut r = RakerConfig::new(kernels, ds.dim.max(1));
            r.features = cfg.features;
            r.eta = point.eta.unwrap_or(r.eta);
            r.reg = point.reg.unwrap_or(r.reg);
            r.seed = seed;
            match cfg.loss() {
                LossKind::Hinge => Box::new(Raker::new(r, HingeLoss)?),
                LossKind::Logistic => Box::new(Raker::new(r, LogisticLoss)?),
            }
        }
    })
}

/// Outcome of streaming one dataset through one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub rounds: usize,
    pub mistakes: usize,
    pub cum_loss: f64,
    pub diagnostics: Diagnostics,
    /// Rounds after which `budget_violations` was non-empty.
    pub violation_rounds: usize,
    pub first_violation: Option<String>,
    pub wall_time_s: f64,
}

impl StreamOutcome {
    pub fn amr_percent(&self) -> f64 {
        100.0 * self.mistakes as f64 / self.rounds as f64
    }
}

/// Predict-then-update over the whole dataset, checking invariants after
/// every round. `observe` sees each round record together with the learner.
pub fn stream_with<F>(
    learner: &mut dyn OnlineLearner,
    ds: &Dataset,
    mut observe: F,
) -> Result<StreamOutcome>
where
    F: FnMut(&RoundRecord, &dyn OnlineLearner),
{
    let start = Instant::now();
    let mut mistakes = 0;
    let mut cum_loss = 0.0;
    let mut violation_rounds = 0;
    let mut first_violation = None;
    for e in &ds.examples {
        let rec = learner.update(&e.x, e.y)?;
        mistakes += rec.mistake as usize;
        cum_loss += rec.loss;
        let v = learner.budget_violations();
        if !v.is_empty() {
            violation_rounds += 1;
            first_violation.get_or_insert_with(|| format!("round {}: {}", rec.round, v.join("; ")));
        }
        observe(&rec, &*learner);
    }
    Ok(StreamOutcome {
        rounds: ds.len(),
        mistakes,
        cum_loss,
        diagnostics: learner.diagnostics(),
        violation_rounds,
        first_violation,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn stream(learner: &mut dyn OnlineLearner, ds: &Dataset) -> Result<StreamOutcome> {
    stream_with(learner, ds, |_, _| {})
}

/// Loads the dataset and runs the full grid.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset, cfg.normalize)?;
    run_on(cfg, &ds)
}

/// Runs every grid point `repeats` times on permutations of `ds`.
pub fn run_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.validate()?;
    let horizon = cfg.horizon.unwrap_or(ds.len() as u64);
    if cfg.algorithm == Algorithm::MomdS && cfg.kernels().len() > ds.dim {
        eprintln!(
            "warning: K={} exceeds the input dimension d={}",
            cfg.kernels().len(),
            ds.dim
        );
    }
    if cfg.algorithm == Algorithm::MomdS && cfg.budget % 2 == 1 {
        eprintln!(
            "warning: odd budget B={} is rounded down to {}",
            cfg.budget,
            cfg.budget - 1
        );
    }
    // construction errors (budget too small, ...) are configuration errors
    for point in grid(cfg, ds.len()) {
        build_learner(cfg, point, ds, horizon, cfg.seed)
            .map_err(|e| BenchError::Config(e.to_string()))?;
    }

    let template = Row {
        dataset: ds.name.clone(),
        rounds: ds.len(),
        algorithm: cfg.algorithm.name().into(),
        loss: cfg.loss().name().into(),
        budget: cfg.budget,
        reservoir: cfg.reservoir_capacity,
        radius: radius(cfg),
        grid: GridPoint::default(),
        seed: cfg.seed,
        kind: RowKind::Mean,
        best: false,
        status: "ok".into(),
        amr_percent: f64::NAN,
        cum_loss: f64::NAN,
        alignment_proxy_min: None,
        removals: Vec::new(),
        removal_bound: Vec::new(),
        archive_size: f64::NAN,
        wall_time_s: f64::NAN,
        invariant_violations: f64::NAN,
    };

    let mut rows = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for point in grid(cfg, ds.len()) {
        let mut group = Vec::with_capacity(cfg.repeats);
        for r in 0..cfg.repeats {
            let seed = cfg.seed + r as u64;
            let perm = permute(ds, seed);
            let mut row = Row {
                grid: point,
                seed,
                kind: RowKind::Repeat(r),
                ..template.clone()
            };
            let outcome = build_learner(cfg, point, &perm, horizon, seed)
                .and_then(|mut l| stream(l.as_mut(), &perm));
            match outcome {
                Ok(o) => {
                    let d = &o.diagnostics;
                    row.amr_percent = o.amr_percent();
                    row.cum_loss = o.cum_loss;
                    row.alignment_proxy_min = (!d.alignment_proxy.is_empty()).then(|| {
                        d.alignment_proxy
                            .iter()
                            .copied()
                            .fold(f64::INFINITY, f64::min)
                    });
                    row.removals = d.removals.iter().map(|j| *j as f64).collect();
                    row.removal_bound = d.removal_bound.clone();
                    row.archive_size = d.archive_size as f64;
                    row.wall_time_s = o.wall_time_s;
                    row.invariant_violations = o.violation_rounds as f64;
                    if let Some(v) = o.first_violation {
                        eprintln!(
                            "invariant violated ({} repeat {r}): {v}",
                            cfg.algorithm.name()
                        );
                    }
                }
                Err(e) => row.status = format!("failed: {e}"),
            }
            group.push(row);
        }
        let (mean, std) = aggregate(&template, point, &group);
        if mean.is_ok() && best.is_none_or(|(amr, _)| mean.amr_percent < amr) {
            best = Some((mean.amr_percent, rows.len() + group.len()));
        }
        rows.extend(group);
        rows.push(mean);
        rows.push(std);
    }
    if let Some((_, i)) = best {
        rows[i].best = true;
        rows[i + 1].best = true;
    }
    Ok(Report {
        rows,
        provenance: ds.provenance.clone(),
        config_json: serde_json::to_string(cfg).expect("config serializes"),
        horizon,
    })
}

fn aggregate(template: &Row, point: GridPoint, group: &[Row]) -> (Row, Row) {
    let ok: Vec<&Row> = group.iter().filter(|r| r.is_ok()).collect();
    let status = if ok.len() == group.len() {
        "ok".to_string()
    } else {
        format!(
            "failed: {} of {} repeats",
            group.len() - ok.len(),
            group.len()
        )
    };
    let stat = |f: &dyn Fn(&Row) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    let stat_vec = |f: &dyn Fn(&Row) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        let n = ok.first().map_or(0, |r| f(r).len());
        (0..n).map(|i| stat(&|r: &Row| f(r)[i])).unzip()
    };
    let (amr_m, amr_s) = stat(&|r| r.amr_percent);
    let (loss_m, loss_s) = stat(&|r| r.cum_loss);
    let (arch_m, arch_s) = stat(&|r| r.archive_size);
    let (wall_m, wall_s) = stat(&|r| r.wall_time_s);
    let (viol_m, viol_s) = stat(&|r| r.invariant_violations);
    let (rem_m, rem_s) = stat_vec(&|r| &r.removals);
    let (bound_m, bound_s) = stat_vec(&|r| &r.removal_bound);
    let has_align = ok.iter().all(|r| r.alignment_proxy_min.is_some()) && !ok.is_empty();
    let (al_m, al_s) = if has_align {
        let (m, s) = stat(&|r| r.alignment_proxy_min.unwrap());
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    let base = Row {
        grid: point,
        status,
        ..template.clone()
    };
    let mean = Row {
        kind: RowKind::Mean,
        amr_percent: amr_m,
        cum_loss: loss_m,
        alignment_proxy_min: al_m,
        removals: rem_m,
        removal_bound: bound_m,
        archive_size: arch_m,
        wall_time_s: wall_m,
        invariant_violations: viol_m,
        ..base.clone()
    };
    let std = Row {
        kind: RowKind::Std,
        amr_percent: amr_s,
        cum_loss: loss_s,
        alignment_proxy_min: al_s,
        removals: rem_s,
        removal_bound: bound_s,
        archive_size: arch_s,
        wall_time_s: wall_s,
        invariant_violations: viol_s,
        ..base
    };
    (mean, std)
}

/// Per-kernel alignment proxy at the end of one hinge run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentProbe {
    pub per_kernel: Vec<f64>,
    pub min: f64,
    pub rounds: usize,
}

/// Runs the hinge learner once with M = 30 and B = 400 on the first
/// permutation and returns the per-kernel alignment proxy.
pub fn alignment_probe(cfg: &ExperimentConfig, ds: &Dataset) -> Result<AlignmentProbe> {
    if cfg.algorithm != Algorithm::MomdH {
        return Err(BenchError::Config(
            "alignment probe needs algorithm momd_h".into(),
        ));
    }
    let mut probe = cfg.clone();
    probe.reservoir_capacity = 30;
    probe.budget = 400;
    let point = grid(&probe, ds.len())[0];
    let horizon = probe.horizon.unwrap_or(ds.len() as u64);
    let perm = permute(ds, probe.seed);
    let mut learner = build_learner(&probe, point, &perm, horizon, probe.seed)?;
    let out = stream(learner.as_mut(), &perm)?;
    let per_kernel = out.diagnostics.alignment_proxy;
    Ok(AlignmentProbe {
        min: per_kernel.iter().copied().fold(f64::INFINITY, f64::min),
        per_kernel,
        rounds: out.rounds,
    })
}
