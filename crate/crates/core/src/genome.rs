//! Chromosomes, populations and the GA operators.
//!
//! Every stochastic operator draws from a caller-supplied generator. Within
//! one reproduction step the draws happen in a fixed order: parent selection
//! (two draws), the crossover decision, the crossover point (only when
//! crossing), then one draw per bit of the first child followed by the
//! second child for mutation.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use bitvec::prelude::*;
use rand::distributions::{Bernoulli, Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::QuadTuple;
use crate::error::{Error, Result};

pub const TUPLE_BITS: usize = 12;

pub type Bits = BitVec<u8, Msb0>;

/// The generator every session and operator in this crate uses.
pub type SessionRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SessionRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ChromosomeRepr", into = "ChromosomeRepr")]
pub struct Chromosome {
    bits: Bits,
}

#[derive(Serialize, Deserialize)]
struct ChromosomeRepr {
    bits: usize,
    hex: String,
}

impl TryFrom<ChromosomeRepr> for Chromosome {
    type Error = Error;

    fn try_from(repr: ChromosomeRepr) -> Result<Chromosome> {
        let bytes = hex::decode(&repr.hex).map_err(|e| Error::Snapshot(e.to_string()))?;
        let mut bits = Bits::from_vec(bytes);
        if bits.len() < repr.bits {
            return Err(Error::Snapshot(format!(
                "hex payload holds {} bits, header says {}",
                bits.len(),
                repr.bits
            )));
        }
        bits.truncate(repr.bits);
        Chromosome::from_bits(bits)
    }
}

impl From<Chromosome> for ChromosomeRepr {
    fn from(c: Chromosome) -> ChromosomeRepr {
        let len = c.bits.len();
        let mut bits = c.bits;
        bits.set_uninitialized(false);
        ChromosomeRepr {
            bits: len,
            hex: hex::encode(bits.as_raw_slice()),
        }
    }
}

impl Chromosome {
    pub fn from_bits(bits: Bits) -> Result<Chromosome> {
        if !bits.len().is_multiple_of(TUPLE_BITS) {
            return Err(Error::MalformedChromosome {
                bits: bits.len(),
                expected: bits.len().next_multiple_of(TUPLE_BITS),
            });
        }
        Ok(Chromosome { bits })
    }

    /// Uniformly random bits, drawn a byte at a time.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Chromosome> {
        let mut bytes = vec![0u8; len.div_ceil(8)];
        rng.fill(bytes.as_mut_slice());
        let mut bits = Bits::from_vec(bytes);
        bits.truncate(len);
        Chromosome::from_bits(bits)
    }

    pub fn from_tuples(tuples: &[QuadTuple]) -> Chromosome {
        let mut bits = Bits::with_capacity(tuples.len() * TUPLE_BITS);
        for t in tuples {
            let word = t.encode();
            for shift in (0..TUPLE_BITS).rev() {
                bits.push((word >> shift) & 1 == 1);
            }
        }
        Chromosome { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn groups(&self) -> usize {
        self.bits.len() / TUPLE_BITS
    }

    pub fn bits(&self) -> &BitSlice<u8, Msb0> {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    /// Splits group `index` into four 3-bit fields, object first.
    pub fn decode_tuple(&self, index: usize) -> Result<QuadTuple> {
        if index >= self.groups() {
            return Err(Error::IndexOutOfRange {
                index,
                groups: self.groups(),
            });
        }
        let start = index * TUPLE_BITS;
        let word: u16 = self.bits[start..start + TUPLE_BITS].load_be();
        Ok(QuadTuple::decode(word))
    }

    pub fn tuples(&self) -> impl Iterator<Item = QuadTuple> + '_ {
        self.bits
            .chunks_exact(TUPLE_BITS)
            .map(|chunk| QuadTuple::decode(chunk.load_be::<u16>()))
    }

    pub fn hamming_distance(&self, other: &Chromosome) -> usize {
        self.bits
            .iter()
            .by_vals()
            .zip(other.bits.iter().by_vals())
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Bits as `0`/`1`, one space between 12-bit groups.
impl std::fmt::Display for Chromosome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, group) in self.bits().chunks(TUPLE_BITS).enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            for bit in group.iter() {
                f.write_str(if *bit { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

impl FromStr for Chromosome {
    type Err = Error;

    /// Parses a string of `0`/`1`, ignoring whitespace, `.`, `·` and `|`.
    fn from_str(s: &str) -> Result<Chromosome> {
        let mut bits = Bits::new();
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() || matches!(c, '.' | '·' | '|' | '_') => {}
                other => {
                    return Err(Error::AnswerShape(format!(
                        "unexpected character {other:?} in bit string"
                    )))
                }
            }
        }
        Chromosome::from_bits(bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Ga,
    RandomControl,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ga => "ga",
            Mode::RandomControl => "random-control",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "ga" => Ok(Mode::Ga),
            "random-control" | "random" => Ok(Mode::RandomControl),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub chromosome_bits: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub max_generations: u32,
    pub mode: Mode,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            chromosome_bits: 12_000,
            crossover_probability: 0.25,
            mutation_probability: 0.01,
            max_generations: 500,
            mode: Mode::Ga,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            ));
        }
        if self.chromosome_bits == 0 || !self.chromosome_bits.is_multiple_of(TUPLE_BITS) {
            return bad(format!(
                "chromosome_bits must be a positive multiple of {TUPLE_BITS}, got {}",
                self.chromosome_bits
            ));
        }
        for (name, p) in [
            ("crossover_probability", self.crossover_probability),
            ("mutation_probability", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    pub fn tuples_per_chromosome(&self) -> usize {
        self.chromosome_bits / TUPLE_BITS
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Chromosome>,
    pub generation: u32,
    pub rng_seed: u64,
}

impl Population {
    pub fn random<R: Rng + ?Sized>(
        config: &GaConfig,
        seed: u64,
        rng: &mut R,
    ) -> Result<Population> {
        config.validate()?;
        let members = (0..config.population_size)
            .map(|_| Chromosome::random(config.chromosome_bits, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Population {
            members,
            generation: 1,
            rng_seed: seed,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Population> {
        let text = std::fs::read_to_string(path)?;
        let pop: Population =
            serde_json::from_str(&text).map_err(|e| Error::Snapshot(e.to_string()))?;
        if let Some(first) = pop.members.first() {
            if let Some(odd) = pop.members.iter().find(|m| m.len() != first.len()) {
                return Err(Error::LengthMismatch {
                    left: first.len(),
                    right: odd.len(),
                });
            }
        }
        Ok(pop)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Snapshot(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Fresh uniform population reproducible from `seed`.
pub fn init_population(config: &GaConfig, seed: u64) -> Result<Population> {
    let mut rng = seeded_rng(seed);
    Population::random(config, seed, &mut rng)
}

/// Selection weight of one member: the reciprocal of its fitness, floored at 1.
pub fn selection_weight(fitness: u32) -> f64 {
    1.0 / f64::from(fitness.max(1))
}

/// Inverse-fitness roulette wheel built once per generation.
#[derive(Debug, Clone)]
pub struct RouletteWheel {
    index: WeightedIndex<f64>,
}

impl RouletteWheel {
    pub fn new(fitness: &[u32]) -> Result<RouletteWheel> {
        if fitness.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let index = WeightedIndex::new(fitness.iter().map(|f| selection_weight(*f)))
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(RouletteWheel { index })
    }

    pub fn spin<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }

    pub fn select_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let first = self.spin(rng);
        let second = self.spin(rng);
        (first, second)
    }
}

pub fn roulette_select<R: Rng + ?Sized>(fitness: &[u32], rng: &mut R) -> Result<(usize, usize)> {
    Ok(RouletteWheel::new(fitness)?.select_pair(rng))
}

/// Swaps every bit from `point` to the end between the two slices.
pub fn single_point_swap(a: &mut BitSlice<u8, Msb0>, b: &mut BitSlice<u8, Msb0>, point: usize) {
    assert_eq!(a.len(), b.len());
    assert!(point <= a.len());
    a[point..].swap_with_bitslice(&mut b[point..]);
}

/// Crosses at a uniform point in `[0, len]`, returning the children and the
/// point used (`None` when the crossover draw failed).
pub fn crossover_with_point<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
    probability: f64,
) -> Result<(Chromosome, Chromosome, Option<usize>)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut left = a.clone();
    let mut right = b.clone();
    if !rng.gen_bool(probability.clamp(0.0, 1.0)) {
        return Ok((left, right, None));
    }
    let point = rng.gen_range(0..=a.len());
    single_point_swap(&mut left.bits, &mut right.bits, point);
    Ok((left, right, Some(point)))
}

pub fn crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
    probability: f64,
) -> Result<(Chromosome, Chromosome)> {
    crossover_with_point(a, b, rng, probability).map(|(l, r, _)| (l, r))
}

pub fn mutate<R: Rng + ?Sized>(
    c: &Chromosome,
    rng: &mut R,
    probability_per_bit: f64,
) -> Chromosome {
    let mut out = c.clone();
    mutate_in_place(&mut out, rng, probability_per_bit);
    out
}

fn mutate_in_place<R: Rng + ?Sized>(c: &mut Chromosome, rng: &mut R, probability_per_bit: f64) {
    let flip = Bernoulli::new(probability_per_bit.clamp(0.0, 1.0)).expect("clamped probability");
    for mut bit in c.bits.iter_mut() {
        if flip.sample(rng) {
            *bit = !*bit;
        }
    }
}

/// Produces the next generation.
///
/// `ga` sorts members by ascending fitness, then fills the new population with
/// crossed and mutated pairs chosen by the roulette wheel. `random-control`
/// discards the population and draws a fresh uniform one.
pub fn ga_step<R: Rng + ?Sized>(
    population: &Population,
    fitness: &[u32],
    config: &GaConfig,
    rng: &mut R,
) -> Result<Population> {
    if fitness.len() != population.len() {
        return Err(Error::FitnessLengthMismatch {
            expected: population.len(),
            actual: fitness.len(),
        });
    }
    let members = match config.mode {
        Mode::RandomControl => {
            let bits = population
                .members
                .first()
                .map(Chromosome::len)
                .unwrap_or(config.chromosome_bits);
            (0..population.len())
                .map(|_| Chromosome::random(bits, rng))
                .collect::<Result<Vec<_>>>()?
        }
        Mode::Ga => {
            if population.is_empty() {
                return Err(Error::EmptyPopulation);
            }
            let mut ranked: Vec<(u32, &Chromosome)> = fitness
                .iter()
                .copied()
                .zip(population.members.iter())
                .collect();
            ranked.sort_by_key(|(f, _)| *f);
            let sorted_fitness: Vec<u32> = ranked.iter().map(|(f, _)| *f).collect();
            let wheel = RouletteWheel::new(&sorted_fitness)?;

            let target = population.len();
            let mut next = Vec::with_capacity(target + 1);
            while next.len() < target {
                let (i, j) = wheel.select_pair(rng);
                let (mut a, mut b) =
                    crossover(ranked[i].1, ranked[j].1, rng, config.crossover_probability)?;
                mutate_in_place(&mut a, rng, config.mutation_probability);
                mutate_in_place(&mut b, rng, config.mutation_probability);
                next.push(a);
                next.push(b);
            }
            next.truncate(target);
            next
        }
    };
    Ok(Population {
        members,
        generation: population.generation + 1,
        rng_seed: population.rng_seed,
    })
}

/// Writes all members' bits back to back, eight per byte, most significant
/// bit first, zero-padding the final byte. Returns the byte count.
pub fn export_bitstream<W: Write>(population: &Population, mut destination: W) -> Result<usize> {
    let mut all = Bits::with_capacity(population.members.iter().map(Chromosome::len).sum());
    for m in &population.members {
        all.extend_from_bitslice(m.bits());
    }
    all.set_uninitialized(false);
    let bytes = all.as_raw_slice();
    destination.write_all(bytes)?;
    destination.flush()?;
    Ok(bytes.len())
}
