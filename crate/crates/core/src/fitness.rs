//! Chromosome fitness: the worst-case unknown count minus the knowns each
//! valid tuple points at. Lower is fitter.

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::genome::{Chromosome, GaConfig, Population};
use crate::stores::KnownsStore;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub value: u32,
    pub max_value: u32,
    /// Knowns matched by each tuple, in chromosome order.
    pub matched_counts: Vec<u32>,
}

pub fn max_fitness(config: &GaConfig, domain: &Domain) -> u32 {
    max_fitness_for(config.tuples_per_chromosome(), domain)
}

fn max_fitness_for(tuples: usize, domain: &Domain) -> u32 {
    (tuples * domain.max_var_count()) as u32
}

/// Number of knowns for each `(object, equation, zone)` triple, indexed by the
/// nine bits `n e z`.
struct MatchTable([u32; 512]);

impl MatchTable {
    fn build(knowns: &KnownsStore) -> MatchTable {
        let mut counts = [0u32; 512];
        for k in knowns.iter() {
            if k.object <= 7 && k.eqn <= 7 && k.zone <= 7 {
                counts[Self::slot(k.object, k.eqn, k.zone)] += 1;
            }
        }
        MatchTable(counts)
    }

    fn slot(n: u8, e: u8, z: u8) -> usize {
        (usize::from(n) << 6) | (usize::from(e) << 3) | usize::from(z)
    }

    fn get(&self, n: u8, e: u8, z: u8) -> u32 {
        self.0[Self::slot(n, e, z)]
    }
}

pub fn fitness(
    chromosome: &Chromosome,
    knowns: &KnownsStore,
    config: &GaConfig,
    domain: &Domain,
) -> Result<FitnessReport> {
    fitness_with(chromosome, &MatchTable::build(knowns), config, domain)
}

fn fitness_with(
    chromosome: &Chromosome,
    table: &MatchTable,
    config: &GaConfig,
    domain: &Domain,
) -> Result<FitnessReport> {
    if chromosome.len() != config.chromosome_bits {
        return Err(Error::MalformedChromosome {
            bits: chromosome.len(),
            expected: config.chromosome_bits,
        });
    }
    let max_value = max_fitness(config, domain);
    let matched_counts: Vec<u32> = chromosome
        .tuples()
        .map(|t| {
            if domain.is_valid(t.e, t.v) {
                table.get(t.n, t.e, t.z)
            } else {
                0
            }
        })
        .collect();
    let matched: u32 = matched_counts.iter().sum();
    Ok(FitnessReport {
        value: max_value.saturating_sub(matched),
        max_value,
        matched_counts,
    })
}

/// Fitness value of every member, in member order.
pub fn population_fitness(
    population: &Population,
    knowns: &KnownsStore,
    config: &GaConfig,
    domain: &Domain,
) -> Result<Vec<u32>> {
    let table = MatchTable::build(knowns);
    population
        .members
        .iter()
        .map(|c| fitness_with(c, &table, config, domain).map(|r| r.value))
        .collect()
}
