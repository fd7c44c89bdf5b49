//! The equation domain: variable vocabulary, equation table, zone-link pairs
//! and the interrelationship texts used for cautionary confirmations.
//!
//! The domain is loaded from JSON. The kinematics table ships bundled and is
//! available through [`Domain::bundled`]; see `data/kinematics.json` for the
//! schema.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest value a 3-bit tuple field can carry.
pub const FIELD_MAX: u8 = 7;

/// One of the eight kinematic quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VariableId {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "x0")]
    X0,
    #[serde(rename = "v0x")]
    V0x,
    #[serde(rename = "dt")]
    Dt,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "vx")]
    Vx,
    #[serde(rename = "t")]
    T,
    #[serde(rename = "t0")]
    T0,
}

impl VariableId {
    pub const ALL: [VariableId; 8] = [
        VariableId::X,
        VariableId::X0,
        VariableId::V0x,
        VariableId::Dt,
        VariableId::A,
        VariableId::Vx,
        VariableId::T,
        VariableId::T0,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            VariableId::X => "x",
            VariableId::X0 => "x0",
            VariableId::V0x => "v0x",
            VariableId::Dt => "dt",
            VariableId::A => "a",
            VariableId::Vx => "vx",
            VariableId::T => "t",
            VariableId::T0 => "t0",
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for VariableId {
    type Err = Error;

    /// Accepts the canonical symbols plus the usual typed spellings
    /// (`ax`, `Δt`, `v0`, ...).
    fn from_str(s: &str) -> Result<Self> {
        let token: String = s
            .trim()
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .collect::<String>()
            .to_lowercase();
        let var = match token.as_str() {
            "x" => VariableId::X,
            "x0" => VariableId::X0,
            "v0x" | "v0" => VariableId::V0x,
            "dt" | "δt" | "deltat" => VariableId::Dt,
            "a" | "ax" => VariableId::A,
            "vx" | "v" => VariableId::Vx,
            "t" => VariableId::T,
            "t0" => VariableId::T0,
            _ => return Err(Error::DomainData(format!("unknown variable symbol {s:?}"))),
        };
        Ok(var)
    }
}

/// Where in an acceleration zone a quantity lives; picks the caution wording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Initial,
    Final,
    Interval,
}

impl Phase {
    pub fn preposition(self) -> &'static str {
        match self {
            Phase::Initial => "at the start of",
            Phase::Final => "at the end of",
            Phase::Interval => "during",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub symbol: VariableId,
    pub display: String,
    pub description: String,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationSpec {
    #[serde(rename = "number")]
    pub eqn_number: u8,
    pub display: String,
    /// Position `p` (1-based) holds `variables[p - 1]`.
    pub variables: Vec<VariableId>,
}

impl EquationSpec {
    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    pub fn variable_at(&self, position: u8) -> Option<VariableId> {
        let idx = usize::from(position).checked_sub(1)?;
        self.variables.get(idx).copied()
    }

    pub fn position_of(&self, var: VariableId) -> Option<u8> {
        self.variables
            .iter()
            .position(|v| *v == var)
            .map(|i| i as u8 + 1)
    }
}

/// A terminal quantity of one zone that carries into the initial quantity
/// of the next zone (x into x0, vx into v0x).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneLinkSpec {
    pub terminal: VariableId,
    pub initial: VariableId,
    pub quantity: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RelationshipRow {
    new: VariableId,
    past: VariableId,
    text: String,
}

/// Descriptions for every ordered pair of distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterrelationshipTable {
    rows: BTreeMap<(VariableId, VariableId), String>,
}

impl InterrelationshipTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, new: VariableId, past: VariableId) -> Result<&str> {
        if new == past {
            return Err(Error::SameVariable(new));
        }
        self.rows
            .get(&(new, past))
            .map(String::as_str)
            .ok_or_else(|| Error::DomainData(format!("no interrelationship for ({new}, {past})")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (VariableId, VariableId, &str)> {
        self.rows.iter().map(|((n, p), t)| (*n, *p, t.as_str()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DomainFile {
    name: String,
    variables: Vec<VariableInfo>,
    equations: Vec<EquationSpec>,
    #[serde(default)]
    links: Vec<ZoneLinkSpec>,
    relationships: Vec<RelationshipRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DomainFile", into = "DomainFile")]
pub struct Domain {
    name: String,
    variables: Vec<VariableInfo>,
    equations: Vec<EquationSpec>,
    links: Vec<ZoneLinkSpec>,
    relationships: InterrelationshipTable,
}

const BUNDLED_KINEMATICS: &str = include_str!("../data/kinematics.json");

impl Domain {
    /// The three-equation kinematics domain shipped with the crate.
    pub fn bundled() -> Domain {
        Domain::from_json(BUNDLED_KINEMATICS).expect("bundled kinematics domain is valid")
    }

    pub fn from_json(text: &str) -> Result<Domain> {
        let file: DomainFile =
            serde_json::from_str(text).map_err(|e| Error::DomainData(e.to_string()))?;
        Domain::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Domain> {
        let text = std::fs::read_to_string(path)?;
        Domain::from_json(&text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[VariableInfo] {
        &self.variables
    }

    pub fn variable(&self, var: VariableId) -> &VariableInfo {
        // validated at construction: one entry per symbol
        self.variables
            .iter()
            .find(|v| v.symbol == var)
            .expect("every variable is described")
    }

    pub fn equations(&self) -> &[EquationSpec] {
        &self.equations
    }

    pub fn equation_count(&self) -> usize {
        self.equations.len()
    }

    pub fn equation(&self, eqn: u8) -> Result<&EquationSpec> {
        usize::from(eqn)
            .checked_sub(1)
            .and_then(|i| self.equations.get(i))
            .ok_or(Error::InvalidEquation(eqn))
    }

    pub fn links(&self) -> &[ZoneLinkSpec] {
        &self.links
    }

    pub fn relationships(&self) -> &InterrelationshipTable {
        &self.relationships
    }

    /// The validity predicate applied to decoded `(e, v)` pairs.
    pub fn is_valid(&self, eqn: u8, position: u8) -> bool {
        self.equation(eqn)
            .map(|spec| position >= 1 && usize::from(position) <= spec.var_count())
            .unwrap_or(false)
    }

    pub fn variable_at(&self, eqn: u8, position: u8) -> Option<VariableId> {
        self.equation(eqn).ok()?.variable_at(position)
    }

    pub fn position_of(&self, eqn: u8, var: VariableId) -> Option<u8> {
        self.equation(eqn).ok()?.position_of(var)
    }

    /// Every `(equation, position)` in which `var` appears, in equation order.
    pub fn occurrences(&self, var: VariableId) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.equations
            .iter()
            .filter_map(move |spec| spec.position_of(var).map(|p| (spec.eqn_number, p)))
    }

    /// Other equations holding the same physical quantity as `var` in `eqn`.
    pub fn shared_equations(&self, var: VariableId, eqn: u8) -> Result<Vec<u8>> {
        let spec = self.equation(eqn)?;
        if spec.position_of(var).is_none() {
            return Err(Error::VariableNotInEquation { var, eqn });
        }
        Ok(self
            .occurrences(var)
            .map(|(e, _)| e)
            .filter(|e| *e != eqn)
            .collect())
    }

    pub fn lookup_caution(&self, new: VariableId, past: VariableId) -> Result<&str> {
        self.relationships.get(new, past)
    }

    /// Largest unknown count of any equation; the per-tuple worst case.
    pub fn max_var_count(&self) -> usize {
        self.equations
            .iter()
            .map(EquationSpec::var_count)
            .max()
            .unwrap_or(0)
    }
}

impl TryFrom<DomainFile> for Domain {
    type Error = Error;

    fn try_from(file: DomainFile) -> Result<Domain> {
        let bad = |msg: String| Err(Error::DomainData(msg));

        let mut variables = Vec::with_capacity(VariableId::ALL.len());
        for var in VariableId::ALL {
            let mut found = file.variables.iter().filter(|v| v.symbol == var);
            match (found.next(), found.next()) {
                (Some(info), None) if !info.description.trim().is_empty() => {
                    variables.push(info.clone())
                }
                (Some(_), None) => return bad(format!("variable {var} has no description")),
                (None, _) => return bad(format!("variable {var} is not described")),
                (Some(_), Some(_)) => return bad(format!("variable {var} is described twice")),
            }
        }

        if file.equations.is_empty() || file.equations.len() > usize::from(FIELD_MAX) {
            return bad(format!(
                "between 1 and {FIELD_MAX} equations are addressable, got {}",
                file.equations.len()
            ));
        }
        for (i, spec) in file.equations.iter().enumerate() {
            if usize::from(spec.eqn_number) != i + 1 {
                return bad(format!(
                    "equations must be numbered 1.. in order; found {} at slot {}",
                    spec.eqn_number,
                    i + 1
                ));
            }
            if spec.variables.is_empty() || spec.variables.len() > usize::from(FIELD_MAX) {
                return bad(format!(
                    "equation {} must hold 1..={FIELD_MAX} variables",
                    spec.eqn_number
                ));
            }
            for (j, var) in spec.variables.iter().enumerate() {
                if spec.variables[..j].contains(var) {
                    return bad(format!("equation {} lists {var} twice", spec.eqn_number));
                }
            }
        }

        let mut rows = BTreeMap::new();
        for row in file.relationships {
            if row.new == row.past {
                return bad(format!(
                    "relationship ({0}, {0}) pairs a variable with itself",
                    row.new
                ));
            }
            if row.text.trim().is_empty() {
                return bad(format!(
                    "relationship ({}, {}) has no text",
                    row.new, row.past
                ));
            }
            if rows.insert((row.new, row.past), row.text).is_some() {
                return bad(format!(
                    "relationship ({}, {}) is listed twice",
                    row.new, row.past
                ));
            }
        }
        let expected = VariableId::ALL.len() * (VariableId::ALL.len() - 1);
        if rows.len() != expected {
            return bad(format!(
                "{expected} interrelationships are required, found {}",
                rows.len()
            ));
        }

        Ok(Domain {
            name: file.name,
            variables,
            equations: file.equations,
            links: file.links,
            relationships: InterrelationshipTable { rows },
        })
    }
}

impl From<Domain> for DomainFile {
    fn from(domain: Domain) -> DomainFile {
        DomainFile {
            name: domain.name,
            variables: domain.variables,
            equations: domain.equations,
            links: domain.links,
            relationships: domain
                .relationships
                .rows
                .into_iter()
                .map(|((new, past), text)| RelationshipRow { new, past, text })
                .collect(),
        }
    }
}

/// A decoded `(object, equation, variable, zone)` pointer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QuadTuple {
    pub n: u8,
    pub e: u8,
    pub v: u8,
    pub z: u8,
}

impl QuadTuple {
    pub fn new(n: u8, e: u8, v: u8, z: u8) -> QuadTuple {
        debug_assert!([n, e, v, z].iter().all(|f| *f <= FIELD_MAX));
        QuadTuple { n, e, v, z }
    }

    /// Packs the four fields into the low 12 bits, object first.
    pub fn encode(self) -> u16 {
        (u16::from(self.n & 7) << 9)
            | (u16::from(self.e & 7) << 6)
            | (u16::from(self.v & 7) << 3)
            | u16::from(self.z & 7)
    }

    pub fn decode(word: u16) -> QuadTuple {
        QuadTuple {
            n: ((word >> 9) & 7) as u8,
            e: ((word >> 6) & 7) as u8,
            v: ((word >> 3) & 7) as u8,
            z: (word & 7) as u8,
        }
    }
}

impl fmt::Display for QuadTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.e, self.v, self.z)
    }
}
