//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the terminal; exits non-zero if any
//! criterion fails.

mod common;
#[path = "../../core/tests/common/reference.rs"]
mod reference;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use frictionbench_core::booking::*;
use frictionbench_core::corpus::{keyed_rng, load_corpus, Dialogue, SourceKind, Speaker, Turn};
use frictionbench_core::detection::{crosstab, detect_rule, Detector, RuleContext};
use frictionbench_core::embodied::{
    agent_script, aggregate_metrics, generate_world, run_episode as run_embodied, EmbodiedMetrics, UserOracle,
    DEFAULT_ROOMS, DEFAULT_STEP_LIMIT,
};
use frictionbench_core::goal::{Domain, DomainGoal, UserGoal};
use frictionbench_core::llm::{Script, ScriptEntry, ScriptedBackend};
use frictionbench_core::satisfaction::{friction_effect_analysis, write_reports, FrictionEffectReport};
use frictionbench_core::stats::{cohen_kappa, kruskal_wallis, kruskal_wallis_exact, mean_ci, mse};
use frictionbench_core::taxonomy::{
    in_context_example, parse_label, FrictionCategory, FrictionLabel, FrictionSubcategory, Setting,
};
use reference::SplitMix;
use serde_json::json;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- stats

fn statistics_oracle_equivalence() -> Outcome {
    const TOL: f64 = 1e-9;
    let start = Instant::now();
    let mut rng = SplitMix(101);
    let mut matched = BTreeMap::<&str, usize>::new();

    let mut k = 0;
    while k < 25 {
        let n = 5 + rng.below(40) as usize;
        let a: Vec<String> = (0..n).map(|_| format!("c{}", rng.below(4))).collect();
        let b: Vec<String> = a
            .iter()
            .map(|x| if rng.unit() < 0.4 { format!("c{}", rng.below(4)) } else { x.clone() })
            .collect();
        let Ok(ours) = cohen_kappa(&a, &b) else { continue };
        let ar: Vec<&str> = a.iter().map(String::as_str).collect();
        let br: Vec<&str> = b.iter().map(String::as_str).collect();
        let theirs = reference::kappa(&ar, &br);
        check((ours - theirs).abs() < TOL, || format!("kappa {ours} vs {theirs}"))?;
        k += 1;
    }
    matched.insert("kappa", k);

    for i in 0..25 {
        let g: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..(2 + rng.below(8))).map(|_| rng.below(10) as f64 + rng.unit().round()).collect())
            .collect();
        let kw = kruskal_wallis(&g).map_err(|e| e.to_string())?;
        check((kw.h - reference::kw_h(&g)).abs() < TOL, || format!("KW h fixture {i}"))?;
        check((kw.p - reference::kw_p(&g)).abs() < TOL, || format!("KW p fixture {i}"))?;
    }
    matched.insert("kruskal_wallis", 25);

    for i in 0..25 {
        let n = 2 + rng.below(40) as usize;
        let v: Vec<f64> = (0..n).map(|_| rng.unit() * 10.0 - 2.0).collect();
        let level = [0.90, 0.95, 0.99][i % 3];
        let ci = mean_ci(&v, level).map_err(|e| e.to_string())?;
        let (m, lo, hi) = reference::mean_ci(&v, level);
        check(
            (ci.mean - m).abs() < TOL && (ci.lower - lo).abs() < TOL && (ci.upper - hi).abs() < TOL,
            || format!("mean_ci fixture {i}"),
        )?;
    }
    matched.insert("mean_ci", 25);

    for i in 0..25 {
        let n = 1 + rng.below(30) as usize;
        let p: Vec<f64> = (0..n).map(|_| 1.0 + 4.0 * rng.unit()).collect();
        let a: Vec<f64> = (0..n).map(|_| 1.0 + rng.below(5) as f64).collect();
        let ours = mse(&p, &a).map_err(|e| e.to_string())?;
        check((ours - reference::mse(&p, &a)).abs() < TOL, || format!("mse fixture {i}"))?;
    }
    matched.insert("mse", 25);

    // Exact permutation test vs chi-square approximation, all n <= 10.
    let mut agree = 0;
    let mut disagreements = Vec::new();
    let fixtures = 200;
    for i in 0..fixtures {
        let k = 2 + rng.below(2) as usize;
        let total = 6 + rng.below(5) as usize;
        let mut sizes = vec![2usize; k];
        for _ in 0..total - 2 * k {
            sizes[rng.below(k as u64) as usize] += 1;
        }
        let shift = [0.0, 1.5, 3.0, 6.0][i % 4];
        let g: Vec<Vec<f64>> = sizes
            .iter()
            .enumerate()
            .map(|(gi, m)| (0..*m).map(|_| rng.below(8) as f64 + shift * gi as f64).collect())
            .collect();
        let approx = kruskal_wallis(&g).map_err(|e| e.to_string())?;
        let exact = kruskal_wallis_exact(&g).map_err(|e| e.to_string())?;
        check((exact.p - reference::kw_exact_p(&g)).abs() < TOL, || format!("exact p fixture {i}"))?;
        if (approx.p < 0.05) == (exact.p < 0.05) {
            agree += 1;
        } else {
            disagreements.push(format!("#{i} n={total} approx={:.4} exact={:.4}", approx.p, exact.p));
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    let summary = format!(
        "reference within 1e-9: {matched:?}; KW rejection agreement {agree}/{fixtures}; {:.2?}",
        start.elapsed()
    );
    if disagreements.is_empty() {
        Ok(summary)
    } else {
        let shown: Vec<&str> = disagreements.iter().take(4).map(String::as_str).collect();
        Err(format!("{summary}; e.g. {}", shown.join(", ")))
    }
}

// ---------------------------------------------------------------- taxonomy

#[derive(serde::Deserialize)]
struct Prior {
    speaker: Speaker,
    text: String,
}

#[derive(serde::Deserialize)]
struct Row {
    label: String,
    speaker: Speaker,
    text: String,
    #[serde(default)]
    preceding: Vec<Prior>,
    #[serde(default)]
    goal_values: Vec<String>,
}

fn taxonomy_completeness() -> Outcome {
    for sub in FrictionSubcategory::ALL {
        let label = FrictionLabel::subcategory(sub);
        let parsed = parse_label(sub.canonical_name()).map_err(|e| e.to_string())?;
        check(parsed == label, || format!("{sub} parses to {parsed}"))?;
        let json = serde_json::to_string(&label).map_err(|e| e.to_string())?;
        let back: FrictionLabel = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        check(back == label, || format!("{sub} does not round-trip"))?;
        check(!sub.exemplars().is_empty(), || format!("{sub} has no exemplar"))?;
    }
    let path = fixtures().join("exemplar_utterances.json");
    let rows: Vec<Row> =
        serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for row in &rows {
        let expected = parse_label(&row.label).map_err(|e| e.to_string())?.friction_category();
        let preceding: Vec<Turn> = row
            .preceding
            .iter()
            .enumerate()
            .map(|(i, p)| Turn::new(i, p.speaker, p.text.clone()))
            .collect();
        let turn = Turn::new(preceding.len(), row.speaker, row.text.clone());
        let ctx = RuleContext {
            preceding: &preceding,
            goal_values: &row.goal_values,
        };
        hits += usize::from(detect_rule(&turn, &ctx).friction_category() == expected);
    }
    check(rows.len() == 13 && hits >= 11, || format!("rule detector {hits}/{}", rows.len()))?;
    Ok(format!("{} subcategories ok; rule detector {hits}/{}", FrictionSubcategory::ALL.len(), rows.len()))
}

// ---------------------------------------------------------------- crosstab

fn corpus() -> Result<Vec<Dialogue>, String> {
    load_corpus(fixtures().join("dialogues.jsonl"), Some(SourceKind::MultiwozLike)).map_err(|e| e.to_string())
}

fn crosstab_integrity() -> Outcome {
    let dialogues = corpus()?;
    let start = Instant::now();
    let a = crosstab(&dialogues, Detector::Rule, 50, 13).map_err(|e| e.to_string())?;
    let b = crosstab(&dialogues, Detector::Rule, 50, 13).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for (act, row) in &a.counts {
        let sum: usize = row.values().sum();
        check(sum == 50, || format!("act {act} sums to {sum}"))?;
    }
    check(a == b, || "crosstab differs between runs".into())?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{} acts x 50, deterministic, {elapsed:.2?}", a.counts.len()))
}

// ---------------------------------------------------------------- booking

/// Entity by transcript scan that never touches the query engine.
fn brute_force_success(db: &EntityDb, ep: &BookingEpisode) -> bool {
    let assistant: Vec<String> = ep
        .turns
        .iter()
        .filter(|t| t.speaker == Speaker::System)
        .map(|t| t.text.to_lowercase())
        .collect();
    let tools: Vec<String> = ep.tool_calls.iter().map(|c| c.result.to_string().to_lowercase()).collect();
    ep.goal.domains.iter().all(|(domain, g)| {
        if g.constraints.is_empty() && g.requests.is_empty() && g.booking.is_empty() {
            return true;
        }
        db.table(*domain).unwrap().iter().any(|e| {
            let fits = g.constraints.iter().all(|(k, v)| e.get(k) == Some(v.as_str()));
            let name = e.name.to_lowercase();
            let named = assistant.iter().chain(&tools).any(|line| line.contains(&name));
            let told = g.requests.iter().all(|r| {
                let v = e.get(r).unwrap_or("\u{0}").to_lowercase();
                assistant.iter().any(|line| line.contains(&v))
            });
            fits && named && told
        })
    })
}

fn booking_success_oracle() -> Outcome {
    let start = Instant::now();
    let db = EntityDb::fixture(5);
    let mut agree = 0;
    let mut successes = 0;
    for i in 0..20 {
        let goal = generate_goal(&db, 5, i).map_err(|e| e.to_string())?;
        let mut rng = keyed_rng(5, &format!("acceptance/{i}"));
        let s = policy_scripts(&db, &goal, &[], &SlipRates::default(), &mut rng);
        let ep = run_episode(
            format!("e{i}"),
            &ScriptedBackend::new(s.assistant),
            &ScriptedBackend::new(s.user),
            &db,
            &goal,
            &[],
            &BookingCaps::default(),
        )
        .map_err(|e| e.to_string())?;
        agree += usize::from(ep.outcome.success == brute_force_success(&db, &ep));
        successes += usize::from(ep.outcome.success);
    }
    check(agree == 20, || format!("oracle agrees with brute force on {agree}/20"))?;

    let mut vacuous = BTreeMap::new();
    vacuous.insert(Domain::Taxi, DomainGoal::default());
    check(success_oracle(&[], &[], &db, &UserGoal { domains: vacuous }).success, || {
        "vacuous goal not satisfied".into()
    })?;

    let e = db.table(Domain::Hotel).map_err(|e| e.to_string())?[0].clone();
    let mut g = DomainGoal::default();
    g.constraints.insert("name".into(), e.name.clone());
    g.requests.push("phone".into());
    let mut domains = BTreeMap::new();
    domains.insert(Domain::Hotel, g);
    let goal = UserGoal { domains };
    let mut turns = vec![
        Turn::new(0, Speaker::User, "I want that hotel"),
        Turn::new(1, Speaker::System, format!("{} is a fine choice.", e.name)),
    ];
    check(!success_oracle(&turns, &[], &db, &goal).success, || {
        "missing requested attribute still succeeded".into()
    })?;
    turns.push(Turn::new(2, Speaker::System, format!("Its phone is {}.", e.get("phone").unwrap_or("?"))));
    check(success_oracle(&turns, &[], &db, &goal).success, || {
        "supplying the attribute did not succeed".into()
    })?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "20/20 agree ({successes} successes); vacuous and missing-attribute ok; {:.2?}",
        start.elapsed()
    ))
}

fn prompt_property() -> Outcome {
    let db = EntityDb::fixture(0);
    let pool = [
        FrictionCategory::AssumptionReveal,
        FrictionCategory::Probing,
        FrictionCategory::Overspecification,
    ];
    let others: Vec<FrictionCategory> = FrictionCategory::MOVEMENTS
        .into_iter()
        .filter(|c| !pool.contains(c))
        .collect();
    for mask in 1u8..8 {
        let enabled: Vec<FrictionCategory> = (0..3).filter(|b| mask & (1 << b) != 0).map(|b| pool[b]).collect();
        let prompt = agent_prompt(&db, &enabled).map_err(|e| e.to_string())?;
        for cat in pool.iter().chain(&others) {
            let on = enabled.contains(cat);
            check(prompt.contains(cat.definition()) == on, || format!("{cat} definition, subset {enabled:?}"))?;
            if let Some(example) = in_context_example(*cat, Setting::Booking) {
                check(prompt.contains(example) == on, || format!("{cat} example, subset {enabled:?}"))?;
            } else if pool.contains(cat) {
                return Err(format!("{cat} has no booking example"));
            }
        }
    }
    Ok("7/7 subsets carry exactly the enabled definitions and examples".into())
}

// ---------------------------------------------------------------- embodied

fn embodied_metrics(friction: &[FrictionCategory], limit: usize) -> Result<EmbodiedMetrics, String> {
    let mut eps = Vec::new();
    for i in 0..30 {
        let wf = generate_world(42, i, DEFAULT_ROOMS);
        let agent = ScriptedBackend::new(agent_script(&wf, friction));
        eps.push(run_embodied("e", &agent, UserOracle::Rule, &wf, friction, limit).map_err(|e| e.to_string())?);
    }
    aggregate_metrics(&eps).map_err(|e| e.to_string())
}

fn embodied_directional() -> Outcome {
    let start = Instant::now();
    let probing = [FrictionCategory::Probing];
    let all_three = [
        FrictionCategory::AssumptionReveal,
        FrictionCategory::Probing,
        FrictionCategory::Overspecification,
    ];
    let search = embodied_metrics(&[], DEFAULT_STEP_LIMIT)?;
    let asked = embodied_metrics(&probing, DEFAULT_STEP_LIMIT)?;
    check(asked.success_rate >= search.success_rate, || {
        format!("probing success {} < search {}", asked.success_rate, search.success_rate)
    })?;
    check(asked.mean_physical_actions < search.mean_physical_actions, || {
        format!("probing actions {} >= search {}", asked.mean_physical_actions, search.mean_physical_actions)
    })?;
    let tight_probing = embodied_metrics(&probing, 8)?;
    let tight_all = embodied_metrics(&all_three, 8)?;
    check(tight_all.success_rate < tight_probing.success_rate, || {
        format!("limit 8: all-three {} >= probing {}", tight_all.success_rate, tight_probing.success_rate)
    })?;
    check(embodied_metrics(&probing, 8)? == tight_probing, || "not deterministic".into())?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "success {:.2}->{:.2}, actions {:.1}->{:.1}; limit 8: probing {:.2} vs all-three {:.2}; {:.2?}",
        search.success_rate,
        asked.success_rate,
        search.mean_physical_actions,
        asked.mean_physical_actions,
        tight_probing.success_rate,
        tight_all.success_rate,
        start.elapsed()
    ))
}

// ---------------------------------------------------------------- satisfaction

/// Ten single-turn dialogues per group, each with a marker the scripted
/// rater keys its reply on.
fn rated_corpus(offset: impl Fn(usize) -> f64) -> (Vec<Dialogue>, Script) {
    let texts = [
        "Which area would you like to stay in",
        "Hmm, let me check what we have",
        "The hotel has free parking",
    ];
    let mut dialogues = Vec::new();
    let mut entries = Vec::new();
    for (g, text) in texts.iter().enumerate() {
        for i in 0..10 {
            let marker = format!("mark{g}q{i:02}");
            let end = if g == 0 { "?" } else { "." };
            let mut d = Dialogue::new(
                format!("g{g}-{i:02}"),
                SourceKind::Synthetic,
                vec![Turn::new(0, Speaker::System, format!("{text} {marker}{end}"))],
            );
            let actual = 1.0 + ((g + i) % 3) as f64;
            d.satisfaction = Some(actual);
            entries.push(ScriptEntry::when(marker, format!("{}", actual + offset(g))));
            dialogues.push(d);
        }
    }
    (dialogues, Script::new(entries))
}

fn analyse(d: &[Dialogue], s: &Script) -> Result<FrictionEffectReport, String> {
    friction_effect_analysis(d, &ScriptedBackend::new(s.clone()), Detector::Rule, 21).map_err(|e| e.to_string())
}

fn satisfaction_pipeline() -> Outcome {
    let (d, s) = rated_corpus(|g| if g == 0 { 0.0 } else { 2.0 });
    let offset = analyse(&d, &s)?;
    let p = offset.kw_error.ok_or("no KW test")?.p;
    check(p < 0.01, || format!("offset corpus p = {p}"))?;

    let (d, s) = rated_corpus(|_| 1.0);
    let h = analyse(&d, &s)?.kw_error.ok_or("no KW test")?.h;
    check(h.abs() < 1e-9, || format!("identical corpus H = {h}"))?;

    let (d, s) = rated_corpus(|g| 0.5 * g as f64);
    let render = || -> Result<Vec<u8>, String> {
        let mut buf = Vec::new();
        write_reports(&mut buf, &[analyse(&d, &s)?]).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    check(render()? == render()?, || "reports differ".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = dir.path().join("rater.json");
    std::fs::write(&script, serde_json::to_string(&vec![json!({"reply": "4"}); 80]).unwrap()).unwrap();
    let spec = format!("scripted:{}", script.display());
    let corpus = fixtures().join("dialogues.jsonl");
    let args = ["satisfaction", "--corpus", corpus.to_str().unwrap(), "--backend", &spec, "--seed", "8"];
    check(run_ok(&args) == run_ok(&args), || "CLI reports differ".into())?;
    Ok(format!("offset p = {p:.2e}; identical H = {h:.1e}; reports byte-identical"))
}

// ---------------------------------------------------------------- reproducibility

fn episode_reproducibility() -> Outcome {
    let booking = [
        "booking", "run", "--n", "15", "--seed", "4", "--friction", "probing,overspecification,assumption-reveal",
    ];
    let b1 = run_ok(&booking);
    check(!b1.is_empty() && b1 == run_ok(&booking), || "booking run output differs".into())?;
    let embodied = ["embodied", "run", "--n", "10", "--seed", "4", "--friction", "probing", "--step-limit", "50"];
    let e1 = run_ok(&embodied);
    check(!e1.is_empty() && e1 == run_ok(&embodied), || "embodied run output differs".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (bf, ef) = (dir.path().join("b.jsonl"), dir.path().join("e.jsonl"));
    std::fs::write(&bf, &b1).unwrap();
    std::fs::write(&ef, &e1).unwrap();
    let table = run_ok(&["report", "--booking", bf.to_str().unwrap(), "--embodied", ef.to_str().unwrap()]);
    let table = String::from_utf8(table).map_err(|e| e.to_string())?;
    let header = table.lines().next().unwrap_or_default();
    check(header == "condition,Success,Fric.%,Avg. Turns", || format!("header {header:?}"))?;
    check(table.lines().count() == 3, || format!("expected two rows:\n{table}"))?;
    Ok(format!(
        "booking {} B and embodied {} B byte-identical; table header {header:?}",
        b1.len(),
        e1.len()
    ))
}

// ---------------------------------------------------------------- service

fn service_durability_and_isolation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = dir.path().join("store.jsonl");
    let (sessions, messages) = (4, 6);
    let mut entries = Vec::new();
    for a in 0..sessions {
        for i in 0..messages {
            entries.push(json!({"match": format!("msg {a}-{i}."), "reply": format!("Response: reply {a}-{i}.")}));
        }
    }
    let script = dir.path().join("script.json");
    std::fs::write(&script, serde_json::to_string(&entries).unwrap()).unwrap();

    let s = serve(&store, &script);
    let mut committed = 0;
    for _ in 0..12 {
        let (_, task) = get(&s.url("/tasks/next?annotator=k&kind=detection&seed=1"));
        let rec = json!({
            "annotator": "k", "task": "detection", "dialogue_id": task["dialogue_id"],
            "turn": task["turn"], "labels": ["probing"],
        });
        let (status, _) = post(&s.url("/annotations"), rec);
        check(status == 201, || format!("append returned {status}"))?;
        committed += 1;
    }
    // Served but never annotated when the process dies.
    let _ = get(&s.url("/tasks/next?annotator=k&kind=detection&seed=1"));
    let before = get(&s.url("/annotations/export")).1;
    s.kill();

    let s = serve(&store, &script);
    let after = get(&s.url("/annotations/export")).1;
    let kept = after["records"].as_array().map_or(0, Vec::len);
    check(before == after && kept == committed, || format!("{kept}/{committed} records after restart"))?;

    let ids: Vec<String> = (0..sessions)
        .map(|_| post(&s.url("/sessions"), json!({"mode": "booking"})).1["id"].as_str().unwrap_or("").to_string())
        .collect();
    let failures: Vec<String> = std::thread::scope(|scope| {
        let handles: Vec<_> = ids
            .iter()
            .enumerate()
            .map(|(a, id)| {
                let s = &s;
                scope.spawn(move || {
                    (0..messages)
                        .filter_map(|i| {
                            let (status, out) = post(
                                &s.url(&format!("/sessions/{id}/message")),
                                json!({"text": format!("msg {a}-{i}.")}),
                            );
                            (status != 200 || out["reply"]["text"] != format!("reply {a}-{i}."))
                                .then(|| format!("{id} message {i}: {status} {out}"))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    check(failures.is_empty(), || failures.join("; "))?;
    for (a, id) in ids.iter().enumerate() {
        let (_, snap) = get(&s.url(&format!("/sessions/{id}")));
        let texts: Vec<String> = snap["transcript"]
            .as_array()
            .map(|t| t.iter().map(|x| x["text"].as_str().unwrap_or("").to_string()).collect())
            .unwrap_or_default();
        let want: Vec<String> = (0..messages)
            .flat_map(|i| [format!("msg {a}-{i}."), format!("reply {a}-{i}.")])
            .collect();
        check(texts == want, || format!("session {id} transcript interleaved: {texts:?}"))?;
    }
    Ok(format!(
        "{committed}/{committed} records survive SIGKILL; {sessions} concurrent sessions x {messages} messages isolated"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("statistics oracle equivalence", statistics_oracle_equivalence),
        ("taxonomy completeness", taxonomy_completeness),
        ("crosstab integrity", crosstab_integrity),
        ("booking success oracle", booking_success_oracle),
        ("friction-injection prompt property", prompt_property),
        ("embodied directional replication", embodied_directional),
        ("satisfaction determinism and sensitivity", satisfaction_pipeline),
        ("episode and report reproducibility", episode_reproducibility),
        ("service durability and isolation", service_durability_and_isolation),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
