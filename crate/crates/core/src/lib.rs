//! A Socratic tutor for one-dimensional kinematics word problems.
//!
//! A genetic algorithm evolves populations of bit strings. Each 12-bit group
//! decodes to an (object, equation, variable, zone) tuple that the question
//! engine turns into a question for the student, unless an earlier answer or
//! a rejection rule makes it moot. Fitness rewards chromosomes whose tuples
//! point at things the student has not told us yet.
//!
//! ```
//! use socratic_ga::{Domain, GaConfig, ProblemScript, ScriptedStudent, Session};
//!
//! let config = GaConfig { population_size: 4, ..GaConfig::default() };
//! let session = Session::new(config, 7, Domain::bundled()).unwrap();
//! let mut student = ScriptedStudent::new(ProblemScript::car());
//! let done = session.run_session(&mut student).unwrap();
//! assert!(done.is_finished());
//! ```

pub mod domain;
pub mod engine;
pub mod error;
pub mod events;
pub mod fitness;
pub mod genome;
pub mod metrics;
pub mod session;
pub mod stores;
pub mod student;

pub use domain::{Domain, QuadTuple, VariableId};
pub use engine::{Answer, Expected, Prompt, PromptKind, StudentIo};
pub use error::{Error, Result};
pub use events::{EventRecord, SessionEvent};
pub use fitness::{fitness, max_fitness, population_fitness};
pub use genome::{Chromosome, GaConfig, Mode, Population};
pub use metrics::{compare, compute, Comparison, RunMetrics};
pub use session::{Session, SessionStatus, Target, Turn};
pub use stores::{KnownEntry, Stores};
pub use student::{load_script, ProblemScript, ScriptedStudent};

/// Runs one scripted session to completion and folds its metrics.
pub fn run_scripted(
    script: &ProblemScript,
    config: GaConfig,
    seed: u64,
    domain: Domain,
) -> Result<(Session, RunMetrics)> {
    let mut student = ScriptedStudent::new(script.clone());
    let session = Session::new(config, seed, domain)?.run_session(&mut student)?;
    let metrics = compute(session.events())?;
    Ok((session, metrics))
}
