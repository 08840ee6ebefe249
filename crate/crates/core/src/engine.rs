//! Generational memetic loop with elitism, tournament selection, LCS
//! crossover, mutation and bottleneck local search.
//!
//! Every random decision draws from a stream derived from
//! `(seed, generation, slot, operator)`, so offspring can be produced in
//! parallel and the run is identical for any thread count.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::InstanceBundle;
use crate::error::{DwscError, Result};
use crate::genome::Genome;
use crate::model::{FitnessBreakdown, ProblemInstance};
use crate::operators::{self, LsOutcome, SearchKinds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    NoLocalSearch,
    Type1Only,
    Type2Only,
}

impl Ablation {
    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoLocalSearch => "no_local_search",
            Ablation::Type1Only => "type1_only",
            Ablation::Type2Only => "type2_only",
        }
    }

    fn kinds(self) -> Option<SearchKinds> {
        match self {
            Ablation::Full => Some(SearchKinds::Both),
            Ablation::NoLocalSearch => None,
            Ablation::Type1Only => Some(SearchKinds::TypeIOnly),
            Ablation::Type2Only => Some(SearchKinds::TypeIIOnly),
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = DwscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Ablation::Full),
            "no_local_search" => Ok(Ablation::NoLocalSearch),
            "type1_only" => Ok(Ablation::Type1Only),
            "type2_only" => Ok(Ablation::Type2Only),
            other => Err(DwscError::InvalidConfig(format!("unknown ablation {other:?}"))),
        }
    }
}

/// How `p_local_search` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsGranularity {
    /// Each offspring undergoes local search with probability p.
    #[default]
    PerIndividual,
    /// With probability p per generation, one random offspring does.
    PerGeneration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub population_size: usize,
    pub generations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub p_local_search: f64,
    /// Neighbourhood size of one local-search call.
    pub n_l: usize,
    pub elitism: usize,
    pub tournament_k: usize,
    pub seed: u64,
    pub ablation: Ablation,
    pub ls_granularity: LsGranularity,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            population_size: 100,
            generations: 100,
            p_crossover: 0.95,
            p_mutation: 0.05,
            p_local_search: 0.05,
            n_l: 20,
            elitism: 2,
            tournament_k: 2,
            seed: 0,
            ablation: Ablation::Full,
            ls_granularity: LsGranularity::PerIndividual,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DwscError::InvalidConfig(msg));
        if self.population_size == 0 {
            return bad("population_size must be positive".into());
        }
        if self.elitism > self.population_size {
            return bad(format!(
                "elitism {} exceeds population_size {}",
                self.elitism, self.population_size
            ));
        }
        for (name, p) in [
            ("p_crossover", self.p_crossover),
            ("p_mutation", self.p_mutation),
            ("p_local_search", self.p_local_search),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.n_l == 0 || !self.n_l.is_multiple_of(2) {
            return bad(format!("n_l must be a positive even number, got {}", self.n_l));
        }
        if self.tournament_k == 0 || self.tournament_k > self.population_size {
            return bad(format!(
                "tournament_k must lie in [1, population_size], got {}",
                self.tournament_k
            ));
        }
        Ok(())
    }
}

/// Statistics of one generation. Generation 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_f: f64,
    pub mean_f: f64,
    pub std_f: f64,
    pub elapsed_ms: u64,
    pub ls_t1_improved: usize,
    pub ls_t2_improved: usize,
    pub ls_none: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Genome,
    pub generations: Vec<GenerationStats>,
    pub config: RunConfig,
    pub instance_digest: String,
    /// Evaluated individuals whose totals exceeded a normalization bound.
    pub clamped_evaluations: usize,
    pub elapsed_ms: u64,
}

impl RunResult {
    pub fn best_breakdown(&self) -> &FitnessBreakdown {
        self.best.breakdown().expect("best genome is evaluated")
    }

    pub fn ls_totals(&self) -> (usize, usize, usize) {
        self.generations.iter().fold((0, 0, 0), |(a, b, c), g| {
            (a + g.ls_t1_improved, b + g.ls_t2_improved, c + g.ls_none)
        })
    }
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Op {
    Init = 1,
    Breed = 2,
    Child = 3,
    PickLs = 4,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn stream(seed: u64, generation: usize, slot: usize, op: Op) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for part in [generation as u64, slot as u64, op as u64] {
        h = splitmix(h ^ part);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// `population_size` random permutations of the whole repository, each
/// decoded, evaluated and stripped.
pub fn init_population(instance: &ProblemInstance, config: &RunConfig) -> Result<Vec<Genome>> {
    if !instance.is_feasible() {
        return Err(DwscError::Infeasible);
    }
    (0..config.population_size)
        .into_par_iter()
        .map(|slot| {
            let mut rng = stream(config.seed, 0, slot, Op::Init);
            let mut seq: Vec<_> = instance.service_ids().collect();
            seq.shuffle(&mut rng);
            Genome::decode(&seq, instance).ok_or(DwscError::Infeasible)
        })
        .collect()
}

fn stats(generation: usize, pop: &[Genome], started: Instant, ls: [usize; 3]) -> GenerationStats {
    let n = pop.len() as f64;
    let values: Vec<f64> = pop.iter().map(Genome::fitness).collect();
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    GenerationStats {
        generation,
        best_f: values.iter().copied().fold(f64::INFINITY, f64::min),
        mean_f: mean,
        std_f: var.sqrt(),
        elapsed_ms: started.elapsed().as_millis() as u64,
        ls_t1_improved: ls[0],
        ls_t2_improved: ls[1],
        ls_none: ls[2],
    }
}

fn fittest(pop: &[Genome]) -> &Genome {
    pop.iter()
        .min_by(|a, b| a.fitness().total_cmp(&b.fitness()))
        .expect("population is non-empty")
}

pub fn evolve(instance: &ProblemInstance, config: &RunConfig) -> Result<RunResult> {
    evolve_observed(instance, config, |_, _| {})
}

/// Runs the memetic loop; `observer` sees every generation's population,
/// starting with the initial one.
pub fn evolve_observed<F>(instance: &ProblemInstance, config: &RunConfig, mut observer: F) -> Result<RunResult>
where
    F: FnMut(usize, &[Genome]),
{
    config.validate()?;
    let started = Instant::now();
    let mut population = init_population(instance, config)?;
    let mut clamped = population
        .iter()
        .filter(|g| g.breakdown().is_some_and(|b| b.clamped))
        .count();
    observer(0, &population);
    let mut rows = vec![stats(0, &population, started, [0; 3])];
    let mut best = fittest(&population).clone();
    let n = instance.len();
    let kinds = config.ablation.kinds();

    for generation in 1..=config.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|a, b| {
            population[*a]
                .fitness()
                .total_cmp(&population[*b].fitness())
                .then(a.cmp(b))
        });
        let offspring_count = config.population_size - config.elitism;
        let pairs = offspring_count.div_ceil(2);

        let ls_slot = match (kinds, config.ls_granularity) {
            (Some(_), LsGranularity::PerGeneration) if offspring_count > 0 => {
                let mut rng = stream(config.seed, generation, 0, Op::PickLs);
                rng.random_bool(config.p_local_search)
                    .then(|| rng.random_range(0..offspring_count))
            }
            _ => None,
        };

        let produced: Vec<(Genome, Option<LsOutcome>)> = (0..pairs)
            .into_par_iter()
            .flat_map_iter(|pair| {
                let mut rng = stream(config.seed, generation, pair, Op::Breed);
                let i = operators::tournament_select(&population, config.tournament_k, &mut rng)
                    .expect("validated tournament size");
                let j = operators::tournament_select(&population, config.tournament_k, &mut rng)
                    .expect("validated tournament size");
                let (c1, c2) = if rng.random_bool(config.p_crossover) {
                    operators::crossover(&population[i], &population[j], instance, &mut rng)
                } else {
                    (population[i].clone(), population[j].clone())
                };
                [c1, c2]
                    .into_iter()
                    .enumerate()
                    .map(|(k, mut child)| {
                        let slot = 2 * pair + k;
                        let mut rng = stream(config.seed, generation, slot, Op::Child);
                        if rng.random_bool(config.p_mutation) {
                            let seq = operators::mutate(child.sequence(), n, &mut rng);
                            if let Some(g) = Genome::decode_or_repair(&seq, instance, &mut rng) {
                                child = g;
                            }
                        }
                        let mut outcome = None;
                        if let Some(kinds) = kinds {
                            let apply = match config.ls_granularity {
                                LsGranularity::PerIndividual => rng.random_bool(config.p_local_search),
                                LsGranularity::PerGeneration => ls_slot == Some(slot),
                            };
                            if apply {
                                let (g, o) = operators::local_search(&child, instance, config.n_l, kinds, &mut rng);
                                child = g;
                                outcome = Some(o);
                            }
                        }
                        (child, outcome)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();

        let mut ls = [0usize; 3];
        let mut next: Vec<Genome> = ranked[..config.elitism]
            .iter()
            .map(|i| population[*i].clone())
            .collect();
        for (child, outcome) in produced.into_iter().take(offspring_count) {
            match outcome {
                Some(LsOutcome::ImprovedByTypeI) => ls[0] += 1,
                Some(LsOutcome::ImprovedByTypeII) => ls[1] += 1,
                Some(LsOutcome::NoImprovement) => ls[2] += 1,
                None => {}
            }
            if child.breakdown().is_some_and(|b| b.clamped) {
                clamped += 1;
            }
            next.push(child);
        }
        population = next;
        observer(generation, &population);
        rows.push(stats(generation, &population, started, ls));
        let gen_best = fittest(&population);
        if gen_best.fitness() < best.fitness() {
            best = gen_best.clone();
        }
    }

    Ok(RunResult {
        best,
        generations: rows,
        config: config.clone(),
        instance_digest: InstanceBundle::from_parts(instance.parts()).digest(),
        clamped_evaluations: clamped,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic, SyntheticParams};
    use crate::testing::toy_instance;
    use crate::EvalOptions;

    fn small() -> ProblemInstance {
        generate_synthetic(
            SyntheticParams {
                n_services: 40,
                n_concepts: 30,
                layers: 3,
                items_per_service: 1,
                seed: 9,
            },
            EvalOptions::default(),
        )
        .unwrap()
    }

    fn quick(seed: u64) -> RunConfig {
        RunConfig {
            population_size: 20,
            generations: 10,
            p_local_search: 0.3,
            seed,
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = [
            RunConfig { elitism: 200, ..RunConfig::default() },
            RunConfig { n_l: 3, ..RunConfig::default() },
            RunConfig { p_mutation: 1.5, ..RunConfig::default() },
            RunConfig { population_size: 0, ..RunConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn init_population_is_seeded_and_decodes() {
        let inst = small();
        let a = init_population(&inst, &quick(1)).unwrap();
        let b = init_population(&inst, &quick(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        for g in &a {
            g.dag().unwrap().validate(&inst).unwrap();
        }
        let one = RunConfig { population_size: 1, elitism: 1, tournament_k: 1, ..quick(1) };
        assert_eq!(init_population(&inst, &one).unwrap().len(), 1);
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let inst = small();
        let cfg = RunConfig { generations: 0, ..quick(4) };
        let r = evolve(&inst, &cfg).unwrap();
        let init = init_population(&inst, &cfg).unwrap();
        assert_eq!(r.best.fitness(), fittest(&init).fitness());
        assert_eq!(r.generations.len(), 1);
    }

    #[test]
    fn all_elite_population_is_static() {
        let inst = small();
        let cfg = RunConfig { elitism: 20, ..quick(5) };
        let mut first: Option<Vec<f64>> = None;
        evolve_observed(&inst, &cfg, |_, pop| {
            let mut f: Vec<f64> = pop.iter().map(Genome::fitness).collect();
            f.sort_by(f64::total_cmp);
            match &first {
                None => first = Some(f),
                Some(x) => assert_eq!(x, &f),
            }
        })
        .unwrap();
    }

    #[test]
    fn runs_are_deterministic_and_monotone() {
        let inst = small();
        let a = evolve(&inst, &quick(7)).unwrap();
        let b = evolve(&inst, &quick(7)).unwrap();
        assert_eq!(a.best, b.best);
        let strip = |r: &RunResult| {
            r.generations
                .iter()
                .map(|g| (g.best_f, g.mean_f, g.ls_t1_improved, g.ls_t2_improved, g.ls_none))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        for w in a.generations.windows(2) {
            assert!(w[1].best_f <= w[0].best_f);
        }
    }

    #[test]
    fn no_local_search_ablation_has_zero_counters() {
        let inst = small();
        let cfg = RunConfig { ablation: Ablation::NoLocalSearch, ..quick(2) };
        let r = evolve(&inst, &cfg).unwrap();
        assert_eq!(r.ls_totals(), (0, 0, 0));
    }

    #[test]
    fn infeasible_instance_is_rejected_before_evolution() {
        let mut b = crate::testing::toy_bundle();
        b.task.provided = vec!["c".into()];
        b.services.retain(|s| s.id != "S4");
        let inst = b.to_instance(EvalOptions::default()).unwrap();
        assert!(matches!(evolve(&inst, &quick(0)), Err(DwscError::Infeasible)));
        assert!(toy_instance().is_feasible());
    }
}
