use frictionbench_core::corpus::{Dialogue, SourceKind, Speaker, Turn};
use frictionbench_core::detection::Detector;
use frictionbench_core::llm::{Script, ScriptEntry, ScriptedBackend};
use frictionbench_core::satisfaction::*;
use frictionbench_core::taxonomy::FrictionCategory;

/// Single-turn dialogues so the sampled turn is always turn 0. Each carries
/// a unique marker the scripted rater keys on.
fn corpus(offset_for: impl Fn(usize) -> f64) -> (Vec<Dialogue>, Script) {
    let texts = [
        "Which area would you like to stay in",
        "Hmm, let me check what we have",
        "The hotel has free parking",
    ];
    let mut dialogues = Vec::new();
    let mut entries = Vec::new();
    for g in 0..3 {
        for i in 0..10 {
            let id = format!("g{g}-{i:02}");
            let marker = format!("ref{g}x{i:02}");
            let suffix = if g == 0 { "?" } else { "." };
            let text = format!("{} {marker}{suffix}", texts[g]);
            let mut d = Dialogue::new(id, SourceKind::Synthetic, vec![Turn::new(0, Speaker::System, text)]);
            let actual = 1.0 + ((g + i) % 3) as f64;
            d.satisfaction = Some(actual);
            entries.push(ScriptEntry::when(marker, format!("{}", actual + offset_for(g))));
            dialogues.push(d);
        }
    }
    (dialogues, Script::new(entries))
}

fn analyse(dialogues: &[Dialogue], script: &Script) -> FrictionEffectReport {
    let backend = ScriptedBackend::new(script.clone());
    friction_effect_analysis(dialogues, &backend, Detector::Rule, 17).unwrap()
}

#[test]
fn probing_exact_others_off_by_two() {
    let (d, s) = corpus(|g| if g == 0 { 0.0 } else { 2.0 });
    let r = analyse(&d, &s);
    let per = &r.per_category;
    assert_eq!(per[&FrictionCategory::Probing].mse, 0.0);
    assert_eq!(per[&FrictionCategory::ReflectivePause].mse, 4.0);
    assert_eq!(per[&FrictionCategory::NoFriction].mse, 4.0);
    assert!(r.kw_error.unwrap().p < 0.01);
    assert_eq!(r.clamped, 0);
}

#[test]
fn identical_error_distributions_give_zero_h() {
    let (d, s) = corpus(|_| 1.0);
    let r = analyse(&d, &s);
    let kw = r.kw_error.unwrap();
    assert!(kw.h.abs() < 1e-12);
    assert!((kw.p - 1.0).abs() < 1e-12);
}

#[test]
fn reports_are_byte_identical() {
    let (d, s) = corpus(|g| g as f64 * 0.5);
    let render = || {
        let r = analyse(&d, &s);
        let mut buf = Vec::new();
        write_reports(&mut buf, &[r.clone(), pooled_report(&[r]).unwrap()]).unwrap();
        buf
    };
    let a = render();
    assert_eq!(a, render());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("metric,group,value,lower,upper\n"));
}

#[test]
fn report_ignores_prediction_order() {
    let (d, s) = corpus(|g| g as f64);
    let r = analyse(&d, &s);
    let mut shuffled = r.predictions.clone();
    shuffled.reverse();
    assert_eq!(effect_report(r.label.clone(), shuffled).unwrap(), r);
}

#[test]
fn out_of_range_ratings_are_clamped() {
    let (d, _) = corpus(|_| 0.0);
    let backend = ScriptedBackend::new(Script::replies(vec!["7"; d.len()]));
    let r = friction_effect_analysis(&d, &backend, Detector::Rule, 1).unwrap();
    assert_eq!(r.clamped, d.len());
    assert!(r.predictions.iter().all(|p| p.predicted == 5.0));
}

#[test]
fn missing_satisfaction_and_bad_replies_are_errors() {
    let (mut d, s) = corpus(|_| 0.0);
    d[3].satisfaction = None;
    let backend = ScriptedBackend::new(s.clone());
    assert!(matches!(
        friction_effect_analysis(&d, &backend, Detector::Rule, 1),
        Err(SatisfactionError::MissingSatisfaction(_))
    ));
    let (d, _) = corpus(|_| 0.0);
    let backend = ScriptedBackend::new(Script::replies(["not sure"]));
    assert!(matches!(
        friction_effect_analysis(&d, &backend, Detector::Rule, 1),
        Err(SatisfactionError::UnparseableReply(_))
    ));
}
