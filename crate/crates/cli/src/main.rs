//! `socratic`: interactive tutoring, scripted experiments and bitstream
//! export.

use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use socratic_ga::engine::{render_solve_advice, Expected};
use socratic_ga::events::write_jsonl;
use socratic_ga::genome::export_bitstream;
use socratic_ga::metrics::{compare, compute, Quartiles};
use socratic_ga::stores::Provenance;
use socratic_ga::{
    run_scripted, Answer, Domain, Error, GaConfig, Mode, Population, ProblemScript, Prompt,
    PromptKind, RunMetrics, Session, SessionStatus, StudentIo, VariableId,
};

/// Seed used when neither `--seed`, the config file nor the environment
/// supplies one.
const DEFAULT_SEED: u64 = 1;
const SEED_ENV: &str = "SOCRATIC_GA_SEED";

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;
const EXIT_ABORTED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "socratic",
    version,
    about = "A GA-driven Socratic tutor for 1D kinematics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tutor a student at the terminal.
    Tutor {
        #[command(flatten)]
        ga: GaArgs,
        /// Skip the opening question by naming the sought quantity (x, v0x, ...).
        #[arg(long)]
        target: Option<VariableId>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run one scripted session unattended.
    Run {
        /// Problem script (JSON).
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        ga: GaArgs,
        #[command(flatten)]
        out: OutputArgs,
        /// Save the final population here.
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
    },
    /// Compare GA and random-control generations-to-solve over many seeds.
    Compare {
        #[arg(long)]
        problem: PathBuf,
        /// Number of seeds, counted from --seed.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[command(flatten)]
        ga: GaArgs,
        /// Write the comparison summary (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pack a population snapshot into a raw bitstream.
    ExportBits {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct GaArgs {
    /// TOML file with any of the GA flags plus `seed`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    chromosome_bits: Option<usize>,
    #[arg(long)]
    crossover_probability: Option<f64>,
    #[arg(long)]
    mutation_probability: Option<f64>,
    #[arg(long)]
    max_generations: Option<u32>,
}

#[derive(Args, Clone, Default)]
struct OutputArgs {
    /// Directory for generations.csv, knowns.jsonl and events.jsonl.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    mode: Option<Mode>,
    population_size: Option<usize>,
    chromosome_bits: Option<usize>,
    crossover_probability: Option<f64>,
    mutation_probability: Option<f64>,
    max_generations: Option<u32>,
}

/// Why a command stopped early, mapped onto exit codes.
enum Failure {
    Usage(String),
    Io(String),
    Status(SessionStatus),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            Error::UnsolvedRunPresent => Failure::Status(SessionStatus::Exhausted),
            other => Failure::Io(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Io(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

impl GaArgs {
    /// Defaults, then the config file, then flags. The seed falls back to
    /// the environment and finally [`DEFAULT_SEED`].
    fn resolve(&self) -> Result<(GaConfig, u64), Failure> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let d = GaConfig::default();
        let config = GaConfig {
            population_size: self
                .population_size
                .or(file.population_size)
                .unwrap_or(d.population_size),
            chromosome_bits: self
                .chromosome_bits
                .or(file.chromosome_bits)
                .unwrap_or(d.chromosome_bits),
            crossover_probability: self
                .crossover_probability
                .or(file.crossover_probability)
                .unwrap_or(d.crossover_probability),
            mutation_probability: self
                .mutation_probability
                .or(file.mutation_probability)
                .unwrap_or(d.mutation_probability),
            max_generations: self
                .max_generations
                .or(file.max_generations)
                .unwrap_or(d.max_generations),
            mode: self.mode.or(file.mode).unwrap_or(d.mode),
        };
        config.validate()?;
        let seed = match self.seed.or(file.seed) {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not a number")))?,
                Err(_) => DEFAULT_SEED,
            },
        };
        Ok((config, seed))
    }
}

/// Prompts on a writer, answers from lines of a reader.
struct Terminal<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> Terminal<R, W> {
    fn show(&mut self, prompt: &Prompt) -> io::Result<()> {
        let text = prompt.text.replace("**", "");
        match prompt.kind {
            PromptKind::SolveAdvice => writeln!(self.output, "\n>> {text}\n"),
            PromptKind::Info => writeln!(self.output, "note: {text}"),
            _ => writeln!(self.output, "{text}"),
        }
    }
}

impl<R: BufRead, W: Write> StudentIo for Terminal<R, W> {
    fn present(&mut self, prompt: &Prompt) -> socratic_ga::Result<()> {
        self.show(prompt)?;
        Ok(())
    }

    fn receive(&mut self, prompt: &Prompt) -> socratic_ga::Result<Answer> {
        loop {
            write!(self.output, "> ")?;
            self.output.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                writeln!(self.output)?;
                return Err(Error::IoClosed);
            }
            let answer = Answer::from_line(&line);
            match prompt.check(&answer) {
                Ok(()) => return Ok(answer),
                Err(e) => {
                    let hint = match prompt.expected {
                        Expected::YesNo => "Please answer yes or no.".to_string(),
                        _ => e.to_string(),
                    };
                    writeln!(self.output, "{hint}")?;
                }
            }
        }
    }
}

fn write_outputs(dir: &Path, session: &Session, metrics: &RunMetrics) -> CmdResult {
    fs::create_dir_all(dir)?;
    metrics.write_csv(BufWriter::new(File::create(dir.join("generations.csv"))?))?;
    metrics.write_timeline_jsonl(BufWriter::new(File::create(dir.join("knowns.jsonl"))?))?;
    write_jsonl(
        session.events(),
        BufWriter::new(File::create(dir.join("events.jsonl"))?),
    )?;
    Ok(())
}

fn finish(status: SessionStatus) -> CmdResult {
    match status {
        SessionStatus::Solved => Ok(()),
        other => Err(Failure::Status(other)),
    }
}

fn tutor(ga: &GaArgs, target: Option<VariableId>, out: &OutputArgs) -> CmdResult {
    let (config, seed) = ga.resolve()?;
    let stdin = io::stdin();
    let mut term = Terminal {
        input: stdin.lock(),
        output: io::stdout(),
    };
    let domain = Domain::bundled();
    let mut session = Session::new(config, seed, domain.clone())?;
    if let Some(v) = target {
        session = session.with_target_variable(v);
    }
    let session = session.run_session(&mut term)?;
    let out_w = &mut term.output;
    match session.status() {
        SessionStatus::Solved => {
            let t = session.target().expect("solved sessions have a target");
            if let Some(k) = session
                .stores()
                .knowns
                .first_with_symbol(t.object, t.zone, t.variable)
            {
                if k.provenance == Provenance::SolvedAlgebraically {
                    let advice = render_solve_advice(k, session.stores(), &domain)?;
                    writeln!(out_w, "\n>> {}", advice.text.replace("**", ""))?;
                }
            }
            writeln!(
                out_w,
                "\nSolved in generation {}. What we know:",
                session.generation()
            )?;
            writeln!(
                out_w,
                "{:>4} {:>4} {:>4} {:>5}  {:<22} response",
                "obj", "eqn", "var", "zone", "how"
            )?;
            for k in session.stores().knowns.iter() {
                writeln!(
                    out_w,
                    "{:>4} {:>4} {:>4} {:>5}  {:<22} {}",
                    k.object,
                    k.eqn,
                    k.symbol.symbol(),
                    k.zone,
                    format!("{:?}", k.provenance),
                    k.response
                )?;
            }
        }
        SessionStatus::Exhausted => writeln!(
            out_w,
            "Stopped after {} generations without reaching the answer.",
            session.config().max_generations
        )?,
        SessionStatus::Aborted => writeln!(out_w, "Session ended before the problem was solved.")?,
        SessionStatus::Running => {}
    }
    if let Some(dir) = &out.metrics_out {
        let metrics = compute(session.events()).ok();
        if let Some(m) = metrics {
            write_outputs(dir, &session, &m)?;
        }
    }
    finish(session.status())
}

fn load_problem(path: &Path) -> Result<ProblemScript, Failure> {
    ProblemScript::load(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn run(problem: &Path, ga: &GaArgs, out: &OutputArgs, snapshot: Option<&Path>) -> CmdResult {
    let script = load_problem(problem)?;
    let (config, seed) = ga.resolve()?;
    let (session, metrics) = run_scripted(&script, config, seed, Domain::bundled())?;
    if let Some(dir) = &out.metrics_out {
        write_outputs(dir, &session, &metrics)?;
    }
    if let Some(path) = snapshot {
        session.population().save(path)?;
    }
    println!(
        "{}: {} after {} generations ({} responses)",
        session.config().mode.as_str(),
        status_word(session.status()),
        session.generation(),
        metrics.total_responses()
    );
    finish(session.status())
}

fn status_word(s: SessionStatus) -> &'static str {
    match s {
        SessionStatus::Running => "running",
        SessionStatus::Solved => "solved",
        SessionStatus::Exhausted => "exhausted",
        SessionStatus::Aborted => "aborted",
    }
}

fn compare_cmd(problem: &Path, seeds: u64, ga: &GaArgs, out: Option<&Path>) -> CmdResult {
    if seeds == 0 {
        return Err(Failure::Usage("--seeds must be at least 1".into()));
    }
    let script = load_problem(problem)?;
    let (config, first) = ga.resolve()?;
    let runs = |mode: Mode| -> Result<Vec<RunMetrics>, Error> {
        (first..first + seeds)
            .into_par_iter()
            .map(|seed| {
                let config = GaConfig {
                    mode,
                    ..config.clone()
                };
                run_scripted(&script, config, seed, Domain::bundled()).map(|(_, m)| m)
            })
            .collect()
    };
    let ga_runs = runs(Mode::Ga)?;
    let control_runs = runs(Mode::RandomControl)?;
    let summary = compare(&ga_runs, &control_runs)?;
    let row = |name: &str, q: Quartiles| {
        println!(
            "{name:<15} min {:>6.1}  q1 {:>6.1}  median {:>6.1}  q3 {:>6.1}  max {:>6.1}",
            q.min, q.q1, q.median, q.q3, q.max
        )
    };
    println!(
        "generations to solve over seeds {first}..{}",
        first + seeds - 1
    );
    row("ga", summary.ga);
    row("random-control", summary.control);
    println!(
        "median(ga) <= median(random-control): {}",
        summary.ga_not_slower
    );
    if let Some(path) = out {
        let text =
            serde_json::to_string_pretty(&summary).map_err(|e| Failure::Io(e.to_string()))?;
        fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn export_bits(input: &Path, out: &Path) -> CmdResult {
    let population =
        Population::load(input).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
    let mut file = BufWriter::new(File::create(out)?);
    let bytes = export_bitstream(&population, &mut file)?;
    file.flush()?;
    println!("wrote {bytes} bytes to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Tutor { ga, target, out } => tutor(ga, *target, out),
        Command::Run {
            problem,
            ga,
            out,
            snapshot_out,
        } => run(problem, ga, out, snapshot_out.as_deref()),
        Command::Compare {
            problem,
            seeds,
            ga,
            out,
        } => compare_cmd(problem, *seeds, ga, out.as_deref()),
        Command::ExportBits { input, out } => export_bits(input, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Status(SessionStatus::Aborted)) => ExitCode::from(EXIT_ABORTED),
        Err(Failure::Status(_)) => ExitCode::from(EXIT_EXHAUSTED),
    }
}
