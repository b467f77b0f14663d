//! The model × strategy × method benchmark grid.

use super::config::RunConfig;
use super::report::{emit_report, OutputSet, ReportBundle, ReportFormat};
use super::train::{fit_model, prepare_data, PreparedData};
use super::{seeds, STAGE_BENCHMARK, STAGE_WRITE};
use crate::balancing::StrategyTag;
use crate::cfgen::{generate_in, CfContext, CfMethod, CfQuery};
use crate::error::StageExt;
use crate::evaluation::{aggregate_benchmark, BenchmarkGrid, CellKey, DesiderataRecord, DesiderataScorer};
use crate::trees::ModelKind;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingCell {
    pub model: ModelKind,
    pub strategy: StrategyTag,
    pub seed: u64,
}

impl TrainingCell {
    pub fn label(&self) -> String {
        format!("{}/{}", self.model, self.strategy)
    }
}

/// Model × strategy pairs in grid order, each with its derived seed.
pub fn training_cells(cfg: &RunConfig) -> Result<Vec<TrainingCell>> {
    let master = cfg.master_seed()?;
    let mut out = Vec::new();
    for &model in &cfg.benchmark.models {
        for &strategy in &cfg.benchmark.strategies {
            out.push(TrainingCell {
                model,
                strategy,
                seed: seeds::cell(master, model, strategy),
            });
        }
    }
    Ok(out)
}

/// Records from one trained model, per method.
struct CellRun {
    factuals: usize,
    methods: Vec<(CfMethod, MethodRun)>,
}

struct MethodRun {
    records: Vec<DesiderataRecord>,
    explained: usize,
    last_reason: Option<String>,
}

/// Test rows predicted failing, in partition order, capped.
pub fn benchmark_factuals(model: &crate::trees::EnsembleModel, data: &PreparedData, cap: usize) -> Vec<Vec<f64>> {
    data.test_rows()
        .map(|r| &r.indicators)
        .filter(|x| model.predict_label(x).is_ok_and(|l| l == 1))
        .take(cap)
        .cloned()
        .collect()
}

fn run_cell(data: &PreparedData, cfg: &RunConfig, cell: TrainingCell) -> std::result::Result<CellRun, String> {
    let model = fit_model(data, cfg, cell.model, cell.strategy, cell.seed).map_err(|e| format!("training failed: {e}"))?;
    let factuals = benchmark_factuals(&model, data, cfg.counterfactuals.factual_cap);
    if factuals.is_empty() {
        return Err("no test bank predicted failing".into());
    }
    let cf = &cfg.counterfactuals;
    let ctx = CfContext::new(&model, data.reference(), cf.moc.k_plausibility).map_err(|e| e.to_string())?;
    let scorer = DesiderataScorer::new(&model, data.reference(), cfg.desiderata).map_err(|e| e.to_string())?;
    let methods = cf
        .methods
        .iter()
        .map(|&method| {
            let mut run = MethodRun {
                records: Vec::new(),
                explained: 0,
                last_reason: None,
            };
            for (i, x) in factuals.iter().enumerate() {
                let mut moc = cf.moc.clone();
                moc.seed = seeds::factual(cell.seed, i);
                let outcome = CfQuery::flip(&model, x.clone())
                    .map(|q| q.with_frozen(cf.frozen_features.iter().cloned()).with_max(cf.max_per_factual))
                    .and_then(|q| generate_in(&ctx, &q, method, &moc, None));
                match outcome {
                    Ok(o) if !o.is_empty() => {
                        run.explained += 1;
                        for c in &o.counterfactuals {
                            match scorer.score(x, c) {
                                Ok(r) => run.records.push(r),
                                Err(e) => run.last_reason = Some(e.to_string()),
                            }
                        }
                    }
                    Ok(o) => run.last_reason = o.reason,
                    Err(e) => run.last_reason = Some(e.to_string()),
                }
            }
            (method, run)
        })
        .collect();
    Ok(CellRun {
        factuals: factuals.len(),
        methods,
    })
}

/// Runs every configured cell; failures become reasoned-empty cells.
pub fn run_benchmark(data: &PreparedData, cfg: &RunConfig) -> Result<BenchmarkGrid> {
    cfg.validate()?;
    let cells = training_cells(cfg)?;
    let runs = par::map_slice(&cells, |&c| run_cell(data, cfg, c));

    let mut records = Vec::new();
    let mut empties = Vec::new();
    let mut coverage = Vec::new();
    for (cell, run) in cells.iter().zip(&runs) {
        let key = |method| CellKey {
            model: cell.model,
            strategy: cell.strategy,
            method,
        };
        match run {
            Err(reason) => {
                for &m in &cfg.counterfactuals.methods {
                    empties.push((key(m), reason.clone()));
                }
            }
            Ok(run) => {
                for (m, r) in &run.methods {
                    coverage.push((key(*m), run.factuals, r.explained));
                    if r.records.is_empty() {
                        let why = r.last_reason.clone().unwrap_or_else(|| "no counterfactual".into());
                        empties.push((key(*m), format!("no counterfactual for any of {} factuals: {why}", run.factuals)));
                    }
                    records.extend(r.records.iter().map(|rec| (key(*m), *rec)));
                }
            }
        }
    }

    let mut grid = aggregate_benchmark(&records);
    for (k, f, e) in coverage {
        grid.set_coverage(k, f, e);
    }
    for (k, reason) in empties {
        grid.record_empty(k, reason);
    }
    grid.provenance.config_hash = cfg.config_hash();
    grid.provenance.seed = cfg.master_seed()?;
    grid.provenance.cell_seeds = cells.iter().map(|c| (c.label(), c.seed)).collect();
    Ok(grid)
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub bundle: ReportBundle,
    pub files: Vec<std::path::PathBuf>,
}

impl BenchmarkOutcome {
    pub fn grid(&self) -> &BenchmarkGrid {
        self.bundle.grid.as_ref().expect("benchmark bundle has a grid")
    }
}

/// Runs the grid and writes `grid.csv`, `grid.json`, `plotdata.json` and
/// `config.toml`.
pub fn cmd_benchmark(cfg: &RunConfig) -> Result<BenchmarkOutcome> {
    let data = prepare_data(cfg)?;
    let grid = run_benchmark(&data, cfg).stage(STAGE_BENCHMARK)?;
    let bundle = ReportBundle {
        config_hash: cfg.config_hash(),
        seed: cfg.master_seed()?,
        config_snapshot: cfg.to_toml()?,
        grid: Some(grid),
        ..ReportBundle::default()
    };
    let mut out = OutputSet::new(cfg.out_dir()).stage(STAGE_WRITE)?;
    let written = (|| {
        out.write("config.toml", &bundle.config_snapshot)?;
        for f in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plotdata] {
            emit_report(&bundle, f, &mut out)?;
        }
        Ok::<_, Error>(())
    })();
    match written {
        Ok(()) => Ok(BenchmarkOutcome {
            bundle,
            files: out.finish(),
        }),
        Err(e) => {
            out.discard();
            Err(e.in_stage(STAGE_WRITE))
        }
    }
}
