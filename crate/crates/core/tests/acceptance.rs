//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p ontoquery --test acceptance -- --nocapture` shows the report.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use ontoquery::assembly::{choose_winners, insert_hidden, AssemblyError};
use ontoquery::compiler::QueryKind;
use ontoquery::dialogue::{Condition, ReplyKind};
use ontoquery::docgraph::{weakly_connected_components, Provenance};
use ontoquery::engine::Engine;
use ontoquery::rdf::{match_bgp, vocab, Iri, Literal, Term};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    }};
}

const BASE: &str = "http://example.org/plant#";

fn base(local: &str) -> Iri {
    Iri::new(format!("{BASE}{local}"))
}

fn golden_query() -> Check {
    let engine = Engine::demo();
    let started = Instant::now();
    let reply = engine.ask(Q1);
    let elapsed = started.elapsed();
    let answer = reply.answer.ok_or_else(|| format!("no answer: {}", reply.text))?;
    ensure!(answer.kind == QueryKind::Select, "kind {:?}", answer.kind);
    let parsed = parse_sparql(&answer.sparql)?;
    ensure!(
        matches_under_bijection(&parsed.patterns, &Q1_PATTERNS, true),
        "pattern multiset differs:\n{}",
        answer.sparql
    );
    let card = answer.cards.first().map(|c| c.text()).unwrap_or_default();
    ensure!(
        card == "Petrov Petr\nclass: Person\nIs an employee of the unit: Gas liquefaction units.",
        "card {card:?}"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(())
}

fn golden_augmentation() -> Check {
    let engine = Engine::demo();
    let mut session = engine.new_session("acceptance");
    engine.handle_turn(&mut session, Q1);
    let reply = engine.handle_turn(&mut session, Q2);
    let answer = reply.answer.ok_or_else(|| format!("no answer: {}", reply.text))?;
    let parsed = parse_sparql(&answer.sparql)?;
    ensure!(
        matches_under_bijection(&parsed.patterns, &Q2_AUGMENTATION, false),
        "augmentation missing:\n{}",
        answer.sparql
    );
    let phone = Term::Literal(Literal::string("+7-900-123-45-67"));
    ensure!(
        answer.solutions.iter().any(|s| s.values().any(|v| *v == phone)),
        "phone literal not returned"
    );
    Ok(())
}

fn golden_clarification() -> Check {
    let none = Engine::demo().ask("Smith's phone");
    ensure!(
        none.kind == ReplyKind::ClarifyingQuestion,
        "zero Smiths: {:?} {}",
        none.kind,
        none.text
    );
    let two = Engine::demo_with(&["abox-smiths.ttl"]).ask("Smith's phone");
    ensure!(
        two.kind == ReplyKind::ClarifyingQuestion,
        "two Smiths: {:?} {}",
        two.kind,
        two.text
    );
    ensure!(
        two.condition == Condition::AmbiguousBinding,
        "condition {:?}",
        two.condition
    );
    ensure!(two.candidate_count == Some(2), "candidates {:?}", two.candidate_count);
    Ok(())
}

fn golden_extraction() -> Check {
    let engine = Engine::demo();
    let first = engine.extract(TANKS, true).map_err(|e| e.to_string())?;
    let insert = &first.plan.insert;
    let tank: Term = base("Tank").into();
    let tanks: BTreeSet<&Iri> = insert
        .iter()
        .filter(|t| t.predicate == vocab::rdf_type() && t.object == tank)
        .map(|t| &t.subject)
        .collect();
    ensure!(tanks.len() == 3, "{} tanks", tanks.len());
    let numbers: BTreeSet<i64> = insert
        .iter()
        .filter(|t| t.predicate == base("hasNumber") && tanks.contains(&t.subject))
        .filter_map(|t| match &t.object {
            Term::Literal(l) => l.as_integer(),
            Term::Iri(_) => None,
        })
        .collect();
    ensure!(numbers == BTreeSet::from([1, 2, 3]), "numbers {numbers:?}");
    let parts: Vec<_> = insert.iter().filter(|t| t.predicate == base("isPartOf")).collect();
    ensure!(parts.len() == 3, "{} isPartOf triples", parts.len());
    let units: BTreeSet<&Term> = parts.iter().map(|t| &t.object).collect();
    ensure!(units.len() == 1, "{} plant units", units.len());
    let kg = engine.kg().read().unwrap();
    let unit = units.iter().next().unwrap();
    let plant_unit: Term = base("PlantUnit").into();
    ensure!(
        !kg.matching(unit.as_iri(), Some(&vocab::rdf_type()), Some(&plant_unit))
            .is_empty(),
        "{unit:?} is not a PlantUnit"
    );
    drop(kg);
    ensure!(first.inserted == 9, "first run inserted {}", first.inserted);
    let again = engine.extract(TANKS, true).map_err(|e| e.to_string())?;
    ensure!(again.inserted == 0, "re-run inserted {}", again.inserted);
    Ok(())
}

fn hidden_node() -> Check {
    let engine = Engine::demo();
    let parsed = engine.parse(&[Q1]).map_err(|e| e.to_string())?;
    let d = &parsed.graph;
    ensure!(d.hidden.len() == 1, "{} hidden nodes", d.hidden.len());
    let h = &d.hidden[0];
    let org = Iri::new("http://www.w3.org/ns/org#OrganizationalUnit");
    ensure!(h.reference == org, "hidden node is {}", h.reference);
    let preds: BTreeSet<String> = d
        .edges
        .iter()
        .filter(|e| e.provenance == Provenance::Hidden && (e.from == h.id || e.to == h.id))
        .map(|e| e.predicate.local_name().to_string())
        .collect();
    ensure!(
        preds == BTreeSet::from(["memberOf".to_string(), "operates".to_string()]),
        "hidden edges {preds:?}"
    );
    ensure!(weakly_connected_components(d).len() == 1, "graph still split");
    Ok(())
}

fn flow_oracle() -> Check {
    let started = Instant::now();
    for seed in 0..256u64 {
        let mut r = rng(seed);
        let inst = random_cover(&mut r, 8, 12);
        let mut d = cover_document(&inst, 1.0);
        choose_winners(&mut d, 0.05).map_err(|e| e.to_string())?;
        let chosen: Vec<usize> = (0..inst.mentions.len()).filter(|&i| !d.mentions[i].discarded).collect();
        let (cover, cost) = cover_oracle(&inst);
        ensure!(is_disjoint(&inst, &chosen), "seed {seed}: overlapping winners");
        ensure!(covered(&inst, &chosen) == cover, "seed {seed}: coverage differs");
        let ours = cover_cost(&inst, &chosen);
        ensure!(
            (ours - cost).abs() <= 1e-6 * cost.max(1.0),
            "seed {seed}: cost {ours} vs {cost}"
        );
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(())
}

fn connector_oracle_check() -> Check {
    for seed in 0..128u64 {
        let mut r = rng(seed);
        let s = random_schema(&mut r, 10);
        let g = schema_graph(&s);
        let n = s.classes.len();
        let a = (seed as usize) % n;
        let b = (a + 1 + (seed as usize / n) % (n - 1)) % n;
        let mut d = two_fragment_document(&s.classes[a], &s.classes[b]);
        match (insert_hidden(&mut d, &g), connector_oracle(&s, a, b)) {
            (Ok(()), Some(k)) => ensure!(d.hidden.len() == k, "seed {seed}: {} hidden vs {k}", d.hidden.len()),
            (Err(AssemblyError::Disconnected { .. }), None) => {}
            (got, want) => return Err(format!("seed {seed}: {got:?} vs {want:?}")),
        }
    }
    Ok(())
}

fn bgp_oracle() -> Check {
    for seed in 0..256u64 {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 100);
        let patterns = random_patterns(&mut r, 4);
        ensure!(
            sorted(match_bgp(&g, &patterns)) == nested_loop_bgp(&g, &patterns),
            "seed {seed}: solutions differ"
        );
    }
    Ok(())
}

fn transcript(engine: &Engine, script: &[&str]) -> String {
    let mut session = engine.new_session("replay");
    script
        .iter()
        .map(|u| serde_json::to_string(&engine.handle_turn(&mut session, u)).unwrap())
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Check {
    let scripts: [(&[&str], &[&str]); 3] = [
        (&[], &[Q1, Q2]),
        (&[], &["Smith's phone"]),
        (&["abox-smiths.ttl"], &["Smith's phone", "John"]),
    ];
    for (extra, script) in scripts {
        let a = transcript(&Engine::demo_with(extra), script);
        let b = transcript(&Engine::demo_with(extra), script);
        ensure!(a == b, "transcript {script:?} differs between replays");
    }
    let runs: Vec<String> = (0..2)
        .map(|_| {
            let e = Engine::demo();
            let x = e.extract(TANKS, true).unwrap();
            format!(
                "{}{}",
                x.sparql,
                serde_json::to_string(&e.ask("Is tank 3 part of the gas liquefaction unit?")).unwrap()
            )
        })
        .collect();
    ensure!(runs[0] == runs[1], "extraction replay differs");
    Ok(())
}

#[test]
fn acceptance() {
    let checks: [Criterion; 9] = [
        ("golden query", golden_query),
        ("golden augmentation", golden_augmentation),
        ("golden clarification", golden_clarification),
        ("golden extraction", golden_extraction),
        ("hidden node", hidden_node),
        ("flow oracle", flow_oracle),
        ("connector oracle", connector_oracle_check),
        ("bgp oracle", bgp_oracle),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
