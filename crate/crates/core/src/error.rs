use thiserror::Error;

use crate::domain::VariableId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("equation {0} does not exist in the domain")]
    InvalidEquation(u8),

    #[error("variable {var} does not appear in equation {eqn}")]
    VariableNotInEquation { var: VariableId, eqn: u8 },

    #[error("an interrelationship needs two different variables, got {0} twice")]
    SameVariable(VariableId),

    #[error("invalid domain data: {0}")]
    DomainData(String),

    #[error("known ({object}, {eqn}, {var}, {zone}) is already recorded")]
    DuplicateKnown {
        object: u8,
        eqn: u8,
        var: u8,
        zone: u8,
    },

    #[error("tuple group {index} is out of range for a chromosome with {groups} groups")]
    IndexOutOfRange { index: usize, groups: usize },

    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),

    #[error("population is empty")]
    EmptyPopulation,

    #[error("chromosome lengths differ ({left} vs {right} bits)")]
    LengthMismatch { left: usize, right: usize },

    #[error("expected {expected} fitness values, got {actual}")]
    FitnessLengthMismatch { expected: usize, actual: usize },

    #[error("chromosome of {bits} bits does not match the configured length of {expected}")]
    MalformedChromosome { bits: usize, expected: usize },

    #[error("object {0} is not registered")]
    UnknownObject(u8),

    #[error("zone {zone} is not registered for object {object}")]
    UnknownZone { object: u8, zone: u8 },

    #[error("the student session was closed mid-exchange")]
    IoClosed,

    #[error("answer does not fit the prompt: {0}")]
    AnswerShape(String),

    #[error("no prompt is waiting for an answer")]
    NoPendingPrompt,

    #[error("problem script parse error at line {line}, column {column}: {message}")]
    ScriptParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("problem script is invalid: {0}")]
    SchemaViolation(String),

    #[error("scripted student cannot answer prompt: {0}")]
    UnanswerablePrompt(String),

    #[error("malformed event log: {0}")]
    MalformedLog(String),

    #[error("comparison needs solved runs only")]
    UnsolvedRunPresent,

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
