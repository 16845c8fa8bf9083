//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Seeds are fixed so every run checks the same corpus.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plderive::generate::{random_model, scalable_model, Shape};
use plderive::io::{parse_model, serialize_model};
use plderive::matcher::{cosine, dice, jaccard, sim, Lexicon};
use plderive::rational::{from_int, ratio};
use plderive::session::{Session, Status};
use plderive::solver::{self, Depth, Direction, Objective, Propagation};
use plderive::terms::TermBag;
use plderive::validator::{check_contradictions, validate, validate_model};
use plderive::{
    compile, enumerate_brute_force, Configuration, FeatureId, FeatureModel, ModelDraft, PartialConfiguration, Rational,
    State,
};

const CORPUS: usize = 500;
const CORPUS_SEED: u64 = 0x5eed_0001;
const SUITE_BUDGET: Duration = Duration::from_secs(60);
const FIRST_SOLUTION_BUDGET: Duration = Duration::from_secs(1);
const PROPAGATION_BUDGET: Duration = Duration::from_millis(100);
const SIMILARITY_TOLERANCE: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], detail: String) -> Outcome {
    match failures.first() {
        None => Outcome { pass: true, detail },
        Some(first) => {
            Outcome { pass: false, detail: format!("{detail}; {} failure(s), first: {first}", failures.len()) }
        }
    }
}

struct Sample {
    model: FeatureModel,
    solutions: Vec<Configuration>,
}

fn corpus() -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..CORPUS)
        .map(|_| {
            let model = random_model(&mut rng, &Shape::default());
            let solutions = enumerate_brute_force(&model).expect("corpus models are small");
            Sample { model, solutions }
        })
        .collect()
}

fn random_partial(rng: &mut ChaCha8Rng, model: &FeatureModel) -> PartialConfiguration {
    let mut p = PartialConfiguration::empty();
    for f in model.ids() {
        if rng.gen_bool(0.3) {
            p.decide(f.clone(), State::from_bool(rng.gen_bool(0.5))).expect("each feature decided once");
        }
    }
    p
}

fn set(configs: &[Configuration]) -> BTreeSet<Configuration> {
    configs.iter().cloned().collect()
}

fn c1_oracle_equivalence(corpus: &[Sample]) -> Outcome {
    let mut failures = Vec::new();
    let unsat = corpus.iter().filter(|s| s.solutions.is_empty()).count();
    for (i, s) in corpus.iter().enumerate() {
        let got = solver::enumerate(&compile(&s.model), &PartialConfiguration::empty(), None).unwrap();
        if got.len() != s.solutions.len() || set(&got) != set(&s.solutions) {
            failures.push(format!("model {i}: solver {} vs oracle {}", got.len(), s.solutions.len()));
        }
    }
    outcome(&failures, format!("{} models ({unsat} unsatisfiable), exact set equality", corpus.len()))
}

fn c2_propagation_soundness(corpus: &[Sample]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 2);
    let mut failures = Vec::new();
    let mut literals = 0usize;
    let mut partials = 0usize;
    // five slices of 100 models, 100 partials drawn per slice
    for slice in corpus.chunks(100) {
        for _ in 0..100 {
            let s = slice.choose(&mut rng).unwrap();
            let p = random_partial(&mut rng, &s.model);
            partials += 1;
            let system = compile(&s.model);
            let remaining: Vec<&Configuration> = s.solutions.iter().filter(|c| p.admits(c)).collect();
            if let Propagation::Consistent(assignment) = solver::propagate(&system, &p).unwrap() {
                for value in [true, false] {
                    for f in assignment.forced(value) {
                        literals += 1;
                        if remaining.iter().any(|c| c.contains(f.as_str()) != value) {
                            failures.push(format!("{f} = {value} forced but violated by a solution"));
                        }
                    }
                }
            }
            let c = solver::consequences(&system, &p, Depth::Propagation).unwrap();
            if c.is_conflict() && !remaining.is_empty() {
                failures.push("propagation conflict on a satisfiable partial".to_owned());
            }
            if !c.is_conflict() {
                let violated = remaining.iter().any(|cfg| {
                    c.forced_in.iter().any(|f| !cfg.contains(f.as_str()))
                        || c.forced_out.iter().any(|f| cfg.contains(f.as_str()))
                });
                if violated {
                    failures.push("consequences(propagation) forced a literal some solution violates".to_owned());
                }
            }
        }
    }
    outcome(&failures, format!("{partials} partials, {literals} forced literals, zero violations allowed"))
}

fn c3_probing_exactness(corpus: &[Sample]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 3);
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for (i, s) in corpus.iter().enumerate() {
        for _ in 0..2 {
            let p = random_partial(&mut rng, &s.model);
            let remaining: Vec<&Configuration> = s.solutions.iter().filter(|c| p.admits(c)).collect();
            let c = solver::consequences(&compile(&s.model), &p, Depth::Probing).unwrap();
            if remaining.is_empty() {
                if !c.is_conflict() {
                    failures.push(format!("model {i}: no conflict on an unsatisfiable partial"));
                }
                continue;
            }
            checked += 1;
            let ids: Vec<&FeatureId> = s.model.ids().collect();
            let always: BTreeSet<FeatureId> =
                ids.iter().filter(|f| remaining.iter().all(|c| c.contains(f.as_str()))).map(|f| (*f).clone()).collect();
            let never: BTreeSet<FeatureId> = ids
                .iter()
                .filter(|f| remaining.iter().all(|c| !c.contains(f.as_str())))
                .map(|f| (*f).clone())
                .collect();
            if c.is_conflict() || c.all_in() != always || c.all_out() != never {
                failures.push(format!("model {i}: probing sets differ from the oracle"));
            }
        }
    }
    outcome(&failures, format!("{checked} satisfiable partials, exact set equality"))
}

fn c4_press_numbers() -> Outcome {
    let m = press();
    let system = compile(&m);
    let oracle = enumerate_brute_force(&m).unwrap();
    let empty = PartialConfiguration::empty();
    let mut failures = Vec::new();
    let mut check = |what: &str, ok: bool| {
        if !ok {
            failures.push(what.to_owned());
        }
    };
    let count = solver::count(&system, &empty).unwrap();
    check("count = 8", count == 8 && oracle.len() == 8);
    let first_two = solver::enumerate(&system, &empty, Some(2)).unwrap();
    check("first {A,E,R}", first_two[0] == Configuration::of(&["A", "E", "R"]) && oracle.contains(&first_two[0]));
    check("second {A,D,R}", first_two[1] == Configuration::of(&["A", "D", "R"]) && oracle.contains(&first_two[1]));

    let e = PartialConfiguration::of(&["E"], &[]);
    let c = solver::consequences(&system, &e, Depth::Probing).unwrap();
    let with_e: Vec<&Configuration> = oracle.iter().filter(|c| e.admits(c)).collect();
    let ids = |names: &[&str]| names.iter().map(|n| n.parse().unwrap()).collect::<BTreeSet<FeatureId>>();
    let oracle_in: BTreeSet<FeatureId> =
        m.ids().filter(|f| with_e.iter().all(|c| c.contains(f.as_str()))).cloned().collect();
    check(
        "consequences(select E) = in{A,E,R} out{D} open{B,C}",
        c.all_in() == ids(&["A", "E", "R"])
            && c.all_out() == ids(&["D"])
            && c.open == ids(&["B", "C"])
            && oracle_in == c.all_in(),
    );

    let objective = Objective::attribute(&system, "cost", Direction::Minimize).unwrap();
    let best = solver::optimize(&system, &empty, &objective).unwrap();
    let oracle_min = oracle.iter().map(|c| objective.value(c)).min().unwrap();
    check(
        "optimize cost/min = ({A,D,R}, 4)",
        best.configuration == Configuration::of(&["A", "D", "R"])
            && best.value == from_int(4)
            && oracle_min == from_int(4),
    );

    let bounded =
        solver::add_attribute_bound(&system, "cost", plderive::compiler::BoundDirection::AtMost, &from_int(5)).unwrap();
    let n = solver::count(&bounded, &empty).unwrap();
    let oracle_n = oracle.iter().filter(|c| objective.value(c) <= from_int(5)).count();
    check("count with cost <= 5 = 2", n == 2 && oracle_n == 2);
    outcome(&failures, "6 fixture values, each cross-checked against brute force, exact".to_owned())
}

fn c5_optimization(corpus: &[Sample]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 5);
    let mut failures = Vec::new();
    let mut solved = 0usize;
    for (i, s) in corpus.iter().enumerate() {
        let system = compile(&s.model);
        let coefficients = s.model.ids().map(|f| (f.clone(), from_int(rng.gen_range(0..=9)))).collect();
        let ordered = solver::enumerate(&system, &PartialConfiguration::empty(), None).unwrap();
        for direction in [Direction::Minimize, Direction::Maximize] {
            let objective =
                Objective { attribute: "cost".into(), direction, coefficients: Clone::clone(&coefficients) };
            let result = solver::optimize(&system, &PartialConfiguration::empty(), &objective);
            let values: Vec<Rational> = s.solutions.iter().map(|c| objective.value(c)).collect();
            let extreme = match direction {
                Direction::Minimize => values.iter().min().cloned(),
                Direction::Maximize => values.iter().max().cloned(),
            };
            match (result, extreme) {
                (Ok(best), Some(extreme)) => {
                    solved += 1;
                    let first = ordered.iter().find(|c| objective.value(c) == extreme);
                    if best.value != extreme || Some(&best.configuration) != first {
                        failures.push(format!("model {i} {direction:?}: got {} expected {extreme}", best.value));
                    }
                }
                (Err(solver::SolverError::Unsat(_)), None) => {}
                (r, e) => {
                    failures.push(format!("model {i} {direction:?}: solver {:?} vs oracle {e:?}", r.map(|b| b.value)))
                }
            }
        }
    }
    outcome(
        &failures,
        format!("{solved} optimizations with costs in [0,9], exact value and first optimum in enumeration order"),
    )
}

fn bag(terms: &[&str]) -> TermBag {
    TermBag::from_tokens(terms.iter().copied())
}

fn c6_similarity() -> Outcome {
    let mut failures = Vec::new();
    let mut lexicon = Lexicon::default();
    lexicon.set_b(ratio(1, 4)).unwrap();
    lexicon.add_hyponym("plasma", "blood").unwrap();
    let (a, b) = (bag(&["measure", "plasma"]), bag(&["measure", "blood"]));
    let expected = [
        ("dice", dice(&a, &b, &lexicon), ratio(3, 4)),
        ("jaccard", jaccard(&a, &b, &lexicon), ratio(3, 5)),
        ("cosine", cosine(&a, &b, &lexicon), ratio(3, 4)),
    ];
    for (name, got, want) in expected {
        let got = got.unwrap();
        let close = (to_f64(&got) - to_f64(&want)).abs() < SIMILARITY_TOLERANCE;
        if got != want || !close {
            failures.push(format!("{name} = {got}, expected {want}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 6);
    let vocabulary = ["blood", "plasma", "serum", "pressure", "sensor", "gauge", "frame", "display", "pump", "valve"];
    for round in 0..100 {
        let lexicon = random_lexicon(&mut rng, &vocabulary);
        let size = rng.gen_range(1..=5);
        let terms: Vec<&str> = vocabulary.choose_multiple(&mut rng, size).copied().collect();
        let x = bag(&terms);
        for (name, score) in [
            ("dice", dice(&x, &x, &lexicon)),
            ("jaccard", jaccard(&x, &x, &lexicon)),
            ("cosine", cosine(&x, &x, &lexicon)),
        ] {
            if score.unwrap() != from_int(1) {
                failures.push(format!("round {round}: {name}(A, A) != 1"));
            }
        }
    }
    outcome(&failures, format!("fixture dice 0.75 / jaccard 0.6 / cosine 0.75 (tolerance {SIMILARITY_TOLERANCE:e}, compared exactly), identity on 100 random bags and lexicons"))
}

fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap()
}

fn random_parameter(rng: &mut ChaCha8Rng) -> Rational {
    // strictly inside (0.01, 0.99)
    ratio(rng.gen_range(101..9899), 10_000)
}

fn random_lexicon(rng: &mut ChaCha8Rng, vocabulary: &[&str]) -> Lexicon {
    let mut lexicon = Lexicon::new(random_parameter(rng), random_parameter(rng)).unwrap();
    for _ in 0..rng.gen_range(0..6) {
        let pair: Vec<&str> = vocabulary.choose_multiple(rng, 2).copied().collect();
        // inconsistent additions are refused by the lexicon and simply skipped
        let _ = if rng.gen_bool(0.5) {
            lexicon.add_homonym(pair[0], pair[1])
        } else {
            lexicon.add_hyponym(pair[0], pair[1])
        };
    }
    lexicon
}

fn c7_sim_table() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 7);
    let mut failures = Vec::new();
    for round in 0..200 {
        let (a, b) = (random_parameter(&mut rng), random_parameter(&mut rng));
        let mut lexicon = Lexicon::new(a.clone(), b.clone()).unwrap();
        lexicon.add_homonym("tension", "voltage").unwrap();
        lexicon.add_hyponym("plasma", "blood").unwrap();
        let one = from_int(1);
        let rows = [
            ("identical", sim("blood", "blood", &lexicon), one.clone()),
            ("homonym", sim("tension", "voltage", &lexicon), &one - &a),
            ("homonym reversed", sim("voltage", "tension", &lexicon), &one - &a),
            ("hyponym", sim("plasma", "blood", &lexicon), &one - &b),
            ("hyperonym", sim("blood", "plasma", &lexicon), b.clone()),
            ("unrelated", sim("blood", "voltage", &lexicon), from_int(0)),
        ];
        for (name, got, want) in rows {
            if got != want {
                failures.push(format!("round {round} (a={a}, b={b}): {name} = {got}, expected {want}"));
            }
        }
    }
    outcome(&failures, "200 random (a, b) in (0.01, 0.99), 6 table rows each, exact".to_owned())
}

fn codes_of(draft: &ModelDraft) -> Vec<&'static str> {
    validate(draft).0.diagnostics.iter().map(|d| d.code.as_str()).collect()
}

fn c8_validator() -> Outcome {
    let fixtures: Vec<(&str, ModelDraft, Vec<&str>)> = vec![
        ("CYCLE", ModelDraft::new("m", "R").mandatory("R", "X").mandatory("A", "B").mandatory("B", "A"), vec!["CYCLE"]),
        ("ISOLATED", ModelDraft::new("m", "R").optional("R", "X").attr("cost", "Y", from_int(1)), vec!["ISOLATED"]),
        (
            "DUP_CARD",
            ModelDraft::new("m", "R").group("R", "g1", 1, 2, &["C", "D"]).group("R", "g1", 1, 1, &[]),
            vec!["DUP_CARD"],
        ),
        ("CARD_RANGE", ModelDraft::new("m", "R").group("R", "g1", 2, 3, &["C", "D"]), vec!["CARD_RANGE"]),
        (
            "CONTRA_REQ_MUTEX",
            ModelDraft::new("m", "R").optional("R", "B").optional("R", "C").requires("B", "C").mutex("B", "C"),
            vec!["CONTRA_REQ_MUTEX", "DEAD_FEATURE"],
        ),
        (
            "MUTEX_MANDATORY",
            ModelDraft::new("m", "R").mandatory("R", "X").mandatory("R", "Y").mutex("X", "Y"),
            vec!["MUTEX_MANDATORY", "UNSAT_MODEL"],
        ),
        (
            "FALSE_OPTIONAL",
            ModelDraft::new("m", "R").mandatory("R", "A").optional("R", "B").requires("A", "B"),
            vec!["FALSE_OPTIONAL"],
        ),
        (
            "DEAD_FEATURE",
            ModelDraft::new("m", "R").mandatory("R", "A").optional("R", "F").mutex("F", "A"),
            vec!["DEAD_FEATURE"],
        ),
    ];
    let mut failures = Vec::new();
    for (name, draft, expected) in &fixtures {
        let got = codes_of(draft);
        if &got != expected {
            failures.push(format!("{name} fixture gave {got:?}, expected {expected:?}"));
        }
    }
    let contra = fixtures[4].1.build().unwrap();
    let scan: Vec<&str> = check_contradictions(&contra).iter().map(|d| d.code.as_str()).collect();
    if scan != ["CONTRA_REQ_MUTEX"] {
        failures.push(format!("contradiction scan gave {scan:?}"));
    }
    if !validate_model(&press()).diagnostics.is_empty() {
        failures.push("PRESS has diagnostics".to_owned());
    }
    outcome(&failures, format!("{} fixtures with exact code lists, PRESS clean", fixtures.len()))
}

fn c9_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 9);
    let mut failures = Vec::new();
    for i in 0..200 {
        let m = random_model(&mut rng, &Shape::default());
        let text = serialize_model(&m);
        match parse_model(&text) {
            Ok(back) if back == m && serialize_model(&back).text == text.text => {}
            Ok(_) => failures.push(format!("model {i}: round trip changed the model")),
            Err(e) => failures.push(format!("model {i}: {e}")),
        }
    }
    let golden = common::dir("golden");
    let mut files: Vec<_> = fs::read_dir(&golden).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let mut covered = BTreeSet::new();
    for path in &files {
        let expected = fs::read_to_string(path).unwrap();
        let args = expected.lines().next().and_then(|l| l.strip_prefix("$ plderive ")).unwrap_or("").to_owned();
        if common::transcript(&args) != expected {
            failures.push(format!("golden {} differs", path.display()));
        }
        let mut words = args.split_whitespace();
        if let (Some(cmd), Some(file)) = (words.next(), words.next()) {
            covered.insert((cmd.to_owned(), file.to_owned()));
        }
    }
    for fixture in ["press.fm", "cycle.fm", "unsat.fm", "anomalies.fm"] {
        for cmd in ["validate", "solve", "optimize", "consequences", "compile", "match"] {
            if !covered.contains(&(cmd.to_owned(), fixture.to_owned())) {
                failures.push(format!("no golden file for `{cmd} {fixture}`"));
            }
        }
    }
    outcome(
        &failures,
        format!("200 random models parse(serialize(m)) = m, {} golden transcripts byte-exact", files.len()),
    )
}

fn c10_session_laws(corpus: &[Sample]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 10);
    let mut failures = Vec::new();
    let mut round_trips = 0usize;
    let mut confluence = 0usize;
    let eligible: Vec<&Sample> =
        corpus.iter().filter(|s| !s.solutions.is_empty() && !validate_model(&s.model).has_errors()).collect();
    for s in eligible.iter().cycle().take(100) {
        let model = std::sync::Arc::new(s.model.clone());
        let mut session = Session::new(model.clone()).unwrap();
        while session.status() == Status::Open {
            let before = session.consequences().clone();
            let open: Vec<FeatureId> = before.open.iter().cloned().collect();
            let f = open.choose(&mut rng).unwrap().clone();
            session.decide(f.as_str(), State::from_bool(rng.gen_bool(0.5))).unwrap();
            let after = session.consequences().clone();
            let last = session.undo().unwrap();
            round_trips += 1;
            if session.consequences() != &before {
                failures.push("decide;undo changed the consequences".to_owned());
            }
            session.decide(last.feature.as_str(), last.state).unwrap();
            if session.consequences() != &after {
                failures.push("re-deciding gave different consequences".to_owned());
            }
        }

        let target = s.solutions.choose(&mut rng).unwrap();
        let mut decisions: Vec<(FeatureId, State)> = model
            .ids()
            .filter(|_| rng.gen_bool(0.5))
            .map(|f| (f.clone(), State::from_bool(target.contains(f.as_str()))))
            .collect();
        let apply = |order: &[(FeatureId, State)]| {
            let mut session = Session::new(model.clone()).unwrap();
            for (f, state) in order {
                if session.consequences().determination(f.as_str()).is_none() {
                    session.decide(f.as_str(), *state).unwrap();
                }
            }
            session
        };
        let first = apply(&decisions);
        decisions.shuffle(&mut rng);
        let second = apply(&decisions);
        confluence += 1;
        let remaining = |session: &Session| -> BTreeSet<Configuration> {
            s.solutions.iter().filter(|c| session.partial().admits(c)).cloned().collect()
        };
        let (c1, c2) = (first.consequences(), second.consequences());
        if c1.all_in() != c2.all_in() || c1.all_out() != c2.all_out() || c1.open != c2.open {
            failures.push("decision order changed the consequences".to_owned());
        }
        let (r1, r2) = (remaining(&first), remaining(&second));
        if r1 != r2 {
            failures.push("decision order changed the remaining solutions".to_owned());
        }
        for session in [&first, &second] {
            if (session.status() == Status::Complete) != (remaining(session).len() == 1) {
                failures.push("complete status disagrees with a unique remaining solution".to_owned());
            }
        }
    }
    outcome(
        &failures,
        format!(
            "{round_trips} decide;undo round trips, {confluence} confluence checks, completion <=> unique solution"
        ),
    )
}

fn depth_of(model: &FeatureModel, mut f: usize) -> usize {
    let mut depth = 0;
    while let Some(parent) = model.incoming(f).parent() {
        f = parent;
        depth += 1;
    }
    depth
}

fn c11_scalability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 11);
    let m = scalable_model(&mut rng, 200, 6, 20, 30);
    let depth = (0..m.len()).map(|f| depth_of(&m, f)).max().unwrap_or(0);
    let mut failures = Vec::new();
    if m.len() != 200 || depth > 6 || m.groups().len() != 20 || m.constraints().len() != 30 {
        failures.push(format!(
            "shape {} features, depth {depth}, {} groups, {} constraints",
            m.len(),
            m.groups().len(),
            m.constraints().len()
        ));
    }
    let system = compile(&m);
    let empty = PartialConfiguration::empty();
    let start = Instant::now();
    let first = solver::first_solution(&system, &empty);
    let first_time = start.elapsed();
    if first.is_err() {
        failures.push("no first solution".to_owned());
    }
    let start = Instant::now();
    let c = solver::consequences(&system, &empty, Depth::Propagation).unwrap();
    let propagation_time = start.elapsed();
    if c.is_conflict() {
        failures.push("propagation conflict on the empty partial".to_owned());
    }
    if first_time >= FIRST_SOLUTION_BUDGET {
        failures.push(format!("first_solution took {first_time:?}"));
    }
    if propagation_time >= PROPAGATION_BUDGET {
        failures.push(format!("propagation took {propagation_time:?}"));
    }
    outcome(
        &failures,
        format!(
            "200 features, depth {depth}, 20 groups, 30 constraints: first_solution {first_time:.2?} (< {FIRST_SOLUTION_BUDGET:?}), propagation {propagation_time:.2?} (< {PROPAGATION_BUDGET:?})"
        ),
    )
}

fn press() -> FeatureModel {
    ModelDraft::new("PRESS", "R")
        .mandatory("R", "A")
        .optional("R", "B")
        .group("R", "g1", 1, 2, &["C", "D", "E"])
        .requires("B", "C")
        .mutex("D", "E")
        .attr("cost", "R", from_int(0))
        .attr("cost", "A", from_int(1))
        .attr("cost", "B", from_int(2))
        .attr("cost", "C", from_int(5))
        .attr("cost", "D", from_int(3))
        .attr("cost", "E", from_int(4))
        .build()
        .unwrap()
}

fn main() {
    let suite = Instant::now();
    let corpus = corpus();
    let mut results = Vec::new();
    let timed = |f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        (o, start.elapsed())
    };
    results.push(("oracle equivalence", timed(&|| c1_oracle_equivalence(&corpus))));
    results.push(("propagation soundness", timed(&|| c2_propagation_soundness(&corpus))));
    results.push(("probing exactness", timed(&|| c3_probing_exactness(&corpus))));
    results.push(("PRESS fixture numbers", timed(&c4_press_numbers)));
    results.push(("optimization exactness", timed(&|| c5_optimization(&corpus))));
    results.push(("similarity fixtures", timed(&c6_similarity)));
    results.push(("SIM table", timed(&c7_sim_table)));
    results.push(("validator battery", timed(&c8_validator)));
    results.push(("round-trips", timed(&c9_round_trips)));
    results.push(("session laws", timed(&|| c10_session_laws(&corpus))));
    results.push(("scalability smoke", timed(&c11_scalability)));

    let total = suite.elapsed();
    if total >= SUITE_BUDGET {
        let first = &mut results[0].1 .0;
        first.pass = false;
        first.detail.push_str(&format!("; suite took {total:.1?}, budget {SUITE_BUDGET:?}"));
    } else {
        results[0].1 .0.detail.push_str(&format!("; suite {total:.1?} (< {SUITE_BUDGET:?})"));
    }

    let mut failed = 0;
    for (i, (name, (o, elapsed))) in results.iter().enumerate() {
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} [{elapsed:.2?}]: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
