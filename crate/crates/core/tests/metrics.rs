use socratic_ga::domain::Domain;
use socratic_ga::metrics::compute;
use socratic_ga::{run_scripted, Error, GaConfig, Mode, ProblemScript};

#[test]
fn empty_log_is_malformed() {
    assert!(matches!(compute(&[]), Err(Error::MalformedLog(_))));
}

#[test]
fn car_run_metrics_are_consistent() {
    let config = GaConfig {
        population_size: 10,
        mode: Mode::Ga,
        ..GaConfig::default()
    };
    let (session, m) = run_scripted(&ProblemScript::car(), config, 2, Domain::bundled()).unwrap();
    let generations: Vec<u32> = m.per_generation.iter().map(|g| g.generation).collect();
    assert_eq!(generations, (1..=session.generation()).collect::<Vec<_>>());
    for g in &m.per_generation {
        let (lo, mean, hi) = (
            g.min_fitness.unwrap(),
            g.mean_fitness.unwrap(),
            g.max_fitness.unwrap(),
        );
        assert!(f64::from(lo) <= mean && mean <= f64::from(hi));
    }
    let answers = session
        .events()
        .iter()
        .filter(|e| e.record.kind_name() == "answer")
        .count();
    assert_eq!(m.total_responses() as usize, answers);
    assert_eq!(m.knowns_timeline.len(), session.stores().knowns.len());
    assert_eq!(m.solved_at, Some(session.generation()));

    let mut csv = Vec::new();
    m.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("generation,responses,min_fitness,mean_fitness,max_fitness\n"));
    assert_eq!(compute(session.events()).unwrap(), m);
}
