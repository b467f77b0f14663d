//! Multi-objective counterfactual search.
//!
//! An NSGA-II style (μ + λ) loop over candidate feature vectors, minimising
//! the four objectives of [`ObjectiveVector`]. Parents are chosen by binary
//! tournament on (front rank, crowding distance); children come from uniform
//! crossover, Gaussian mutation scaled by each feature's observed range and a
//! per-feature reset to the factual value that pushes towards sparse
//! candidates. Crowding adds an objective-space term and a feature-space term
//! so that candidates with equal objectives but different changes survive.
//!
//! Randomness for generation `g` comes from `seed` and `g`; candidate
//! evaluation is the only parallel step, so results do not depend on the
//! thread count.

use std::collections::HashSet;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::context::CfContext;
use super::pareto::{crowding_by, nondominated_sort_points};
use super::{sort_by_sparsity_then_proximity, CfMethod, CfOutcome, CfQuery, Counterfactual};
use crate::dataset::{DataTable, FeatureKind};
use crate::trees::EnsembleModel;
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MocConfig {
    pub population_size: usize,
    pub generations: usize,
    pub p_crossover: f64,
    pub p_mut: f64,
    pub p_reset: f64,
    /// Mutation standard deviation as a fraction of the observed range.
    pub mutation_scale: f64,
    /// Probability that an initial member changes a given feature.
    pub p_init_change: f64,
    /// Desired-class reference rows seeded into the initial population.
    pub reference_seeds: usize,
    pub k_plausibility: usize,
    pub seed: u64,
}

impl Default for MocConfig {
    fn default() -> Self {
        MocConfig {
            population_size: 50,
            generations: 100,
            p_crossover: 0.7,
            p_mut: 0.2,
            p_reset: 0.3,
            mutation_scale: 0.1,
            p_init_change: 0.5,
            reference_seeds: 5,
            k_plausibility: super::context::DEFAULT_PLAUSIBILITY_K,
            seed: 0,
        }
    }
}

impl MocConfig {
    fn validate(&self) -> Result<()> {
        let probs = [self.p_crossover, self.p_mut, self.p_reset, self.p_init_change];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Parameter("MOC probabilities must lie in [0, 1]".into()));
        }
        if self.population_size < 2 || self.mutation_scale < 0.0 || self.k_plausibility == 0 {
            return Err(Error::Parameter("MOC needs population >= 2, k >= 1 and a non-negative mutation scale".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Counterfactual>,
    pub generation: usize,
    pub seed: u64,
}

impl Population {
    pub fn objective_points(&self) -> Vec<[f64; 4]> {
        self.members.iter().map(|m| m.objectives.as_array()).collect()
    }

    /// Indices of the first Pareto front.
    pub fn first_front(&self) -> Vec<usize> {
        nondominated_sort_points(&self.objective_points())
            .into_iter()
            .next()
            .unwrap_or_default()
    }
}

struct Search<'c, 'a> {
    ctx: &'c CfContext<'a>,
    query: &'c CfQuery,
    frozen: Vec<bool>,
    cfg: &'c MocConfig,
}

impl Search<'_, '_> {
    fn evaluate(&self, candidates: Vec<Vec<f64>>) -> Vec<Counterfactual> {
        par::map_slice(&candidates, |x| {
            Counterfactual::build(x.clone(), CfMethod::Moc, self.query, self.ctx.model, &self.ctx.plausibility)
        })
    }

    fn width(&self, j: usize) -> f64 {
        self.ctx.model.schema[j].range_width()
    }

    /// A value for feature `j` drawn from the reference rows' marginal.
    fn marginal_draw(&self, j: usize, r: &mut rng::Rng) -> f64 {
        let i = r.random_range(0..self.ctx.reference.len());
        self.ctx.reference.row_values(i)[j]
    }

    fn initial(&self) -> Population {
        let mut r = rng::child(self.cfg.seed, u64::MAX);
        let mu = self.cfg.population_size;
        let mut out = Vec::with_capacity(mu);
        let desired: Vec<usize> = self.ctx.rows_predicted(self.query.desired_class).collect();
        let n_ref = self.cfg.reference_seeds.min(desired.len()).min(mu);
        for _ in 0..n_ref {
            let mut x = self.ctx.reference.row_values(desired[r.random_range(0..desired.len())]).to_vec();
            for (j, &f) in self.frozen.iter().enumerate() {
                if f {
                    x[j] = self.query.factual[j];
                }
            }
            out.push(x);
        }
        while out.len() < mu {
            let mut x = self.query.factual.clone();
            for j in 0..x.len() {
                if !self.frozen[j] && r.random_bool(self.cfg.p_init_change) {
                    x[j] = self.marginal_draw(j, &mut r);
                }
            }
            out.push(x);
        }
        Population {
            members: self.evaluate(out),
            generation: 0,
            seed: self.cfg.seed,
        }
    }

    /// Rank and crowding of every member of `points`.
    fn rank_and_crowding(&self, values: &[&[f64]], points: &[[f64; 4]]) -> (Vec<usize>, Vec<f64>) {
        let n = points.len();
        let mut rank = vec![0; n];
        let mut crowd = vec![0.0; n];
        for (r, front) in nondominated_sort_points(points).into_iter().enumerate() {
            let c = self.combined_crowding(values, points, &front);
            for (k, &i) in front.iter().enumerate() {
                rank[i] = r;
                crowd[i] = c[k];
            }
        }
        (rank, crowd)
    }

    /// Objective-space crowding plus feature-space crowding (gaps scaled by
    /// each feature's observed range).
    fn combined_crowding(&self, values: &[&[f64]], points: &[[f64; 4]], front: &[usize]) -> Vec<f64> {
        let objective = crowding_by(points, front, None);
        let widths: Vec<f64> = (0..self.query.factual.len()).map(|j| self.width(j)).collect();
        let feature = crowding_by(values, front, Some(&widths));
        objective.iter().zip(&feature).map(|(a, b)| a + b).collect()
    }

    fn tournament(&self, rank: &[usize], crowd: &[f64], r: &mut rng::Rng) -> usize {
        let a = r.random_range(0..rank.len());
        let b = r.random_range(0..rank.len());
        let a_better = rank[a] < rank[b] || (rank[a] == rank[b] && (crowd[a] > crowd[b] || (crowd[a] == crowd[b] && a <= b)));
        if a_better {
            a
        } else {
            b
        }
    }

    fn offspring(&self, pop: &Population, r: &mut rng::Rng) -> Vec<Vec<f64>> {
        let values: Vec<&[f64]> = pop.members.iter().map(|m| m.values.as_slice()).collect();
        let (rank, crowd) = self.rank_and_crowding(&values, &pop.objective_points());
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let d = self.query.factual.len();
        (0..pop.members.len())
            .map(|_| {
                let p1 = self.tournament(&rank, &crowd, r);
                let p2 = self.tournament(&rank, &crowd, r);
                let mut child = values[p1].to_vec();
                if r.random_bool(self.cfg.p_crossover) {
                    for (j, c) in child.iter_mut().enumerate() {
                        if r.random_bool(0.5) {
                            *c = values[p2][j];
                        }
                    }
                }
                for j in 0..d {
                    if self.frozen[j] {
                        child[j] = self.query.factual[j];
                        continue;
                    }
                    if r.random_bool(self.cfg.p_mut) {
                        let spec = &self.ctx.model.schema[j];
                        child[j] = match spec.kind {
                            FeatureKind::Numeric => {
                                let w = spec.range_width();
                                let v = child[j] + self.cfg.mutation_scale * w * unit.sample(r);
                                match spec.observed_range.or(spec.valid_range) {
                                    Some(range) => range.clamp(v),
                                    None => v,
                                }
                            }
                            FeatureKind::Categorical => self.marginal_draw(j, r),
                        };
                    }
                    if r.random_bool(self.cfg.p_reset) {
                        child[j] = self.query.factual[j];
                    }
                }
                child
            })
            .collect()
    }

    /// (μ + λ) survivor selection with duplicate removal. Survivors keep
    /// their pool order (parents first).
    fn survivors(&self, pool: Vec<Counterfactual>, mu: usize) -> Vec<Counterfactual> {
        let mut seen = HashSet::new();
        let unique: Vec<bool> = pool
            .iter()
            .map(|m| seen.insert(m.values.iter().map(|v| v.to_bits()).collect::<Vec<u64>>()))
            .collect();
        let n_unique = unique.iter().filter(|&&u| u).count();
        let mut keep = vec![false; pool.len()];
        if n_unique <= mu {
            let mut n = 0;
            for (i, &u) in unique.iter().enumerate() {
                if u {
                    keep[i] = true;
                    n += 1;
                }
            }
            for (i, &u) in unique.iter().enumerate() {
                if n >= mu {
                    break;
                }
                if !u {
                    keep[i] = true;
                    n += 1;
                }
            }
        } else {
            let idx: Vec<usize> = (0..pool.len()).filter(|&i| unique[i]).collect();
            let values: Vec<&[f64]> = idx.iter().map(|&i| pool[i].values.as_slice()).collect();
            let points: Vec<[f64; 4]> = idx.iter().map(|&i| pool[i].objectives.as_array()).collect();
            let mut n = 0;
            for front in nondominated_sort_points(&points) {
                if n + front.len() <= mu {
                    for &k in &front {
                        keep[idx[k]] = true;
                    }
                    n += front.len();
                    continue;
                }
                let crowd = self.combined_crowding(&values, &points, &front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(front[a].cmp(&front[b])));
                for &k in order.iter().take(mu - n) {
                    keep[idx[front[k]]] = true;
                }
                break;
            }
        }
        pool.into_iter().zip(keep).filter(|(_, k)| *k).map(|(m, _)| m).collect()
    }

    fn step(&self, pop: Population) -> Population {
        let mut r = rng::child(pop.seed, pop.generation as u64);
        let children = self.offspring(&pop, &mut r);
        let mu = pop.members.len();
        let mut pool = pop.members;
        pool.extend(self.evaluate(children));
        Population {
            members: self.survivors(pool, mu),
            generation: pop.generation + 1,
            seed: pop.seed,
        }
    }
}

fn search<'c, 'a>(ctx: &'c CfContext<'a>, query: &'c CfQuery, cfg: &'c MocConfig) -> Result<Search<'c, 'a>> {
    cfg.validate()?;
    let frozen = query.validate(ctx.model)?;
    Ok(Search { ctx, query, frozen, cfg })
}

pub fn initial_population(ctx: &CfContext<'_>, query: &CfQuery, cfg: &MocConfig) -> Result<Population> {
    Ok(search(ctx, query, cfg)?.initial())
}

/// Runs `budget` generations (stopping early past `deadline`).
pub fn evolve_in(
    ctx: &CfContext<'_>,
    pop: Population,
    query: &CfQuery,
    cfg: &MocConfig,
    budget: usize,
    deadline: Option<Instant>,
) -> Result<Population> {
    if budget == 0 {
        return Err(Error::Input("generation budget must be at least 1".into()));
    }
    let s = search(ctx, query, cfg)?;
    let mut pop = pop;
    for _ in 0..budget {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        pop = s.step(pop);
    }
    Ok(pop)
}

pub fn evolve_population(
    pop: Population,
    query: &CfQuery,
    model: &EnsembleModel,
    training: &DataTable,
    cfg: &MocConfig,
    budget: usize,
) -> Result<Population> {
    let ctx = CfContext::new(model, training, cfg.k_plausibility)?;
    evolve_in(&ctx, pop, query, cfg, budget, None)
}

fn dedup_key(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| format!("{v:.11e}")).collect()
}

/// Valid members of the final first front, deduplicated and capped.
pub fn extract_counterfactuals(pop: &Population, query: &CfQuery, model: &EnsembleModel) -> CfOutcome {
    let mut seen = HashSet::new();
    let mut cfs: Vec<Counterfactual> = pop
        .first_front()
        .into_iter()
        .map(|i| &pop.members[i])
        .filter(|m| m.objectives.prediction_gap == 0.0 && query.flips(model, &m.values))
        .filter(|m| seen.insert(dedup_key(&m.values)))
        .cloned()
        .collect();
    if cfs.is_empty() {
        let best = pop
            .members
            .iter()
            .map(|m| m.objectives.prediction_gap)
            .fold(f64::INFINITY, f64::min);
        return CfOutcome::none(format!(
            "no valid candidate on the final Pareto front; best prediction gap found {best:.6}"
        ));
    }
    sort_by_sparsity_then_proximity(&mut cfs);
    cfs.truncate(query.max_counterfactuals);
    CfOutcome::found(cfs)
}

pub fn moc_in(ctx: &CfContext<'_>, query: &CfQuery, cfg: &MocConfig, deadline: Option<Instant>) -> Result<CfOutcome> {
    let pop = initial_population(ctx, query, cfg)?;
    let pop = if cfg.generations > 0 {
        evolve_in(ctx, pop, query, cfg, cfg.generations, deadline)?
    } else {
        pop
    };
    Ok(extract_counterfactuals(&pop, query, ctx.model))
}

pub fn generate_moc(query: &CfQuery, model: &EnsembleModel, training: &DataTable, cfg: &MocConfig) -> Result<CfOutcome> {
    let ctx = CfContext::new(model, training, cfg.k_plausibility)?;
    moc_in(&ctx, query, cfg, None)
}
