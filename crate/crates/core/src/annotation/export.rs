use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::record::{AnnotationLabel, AnnotationRecord, TaskKind};
use super::AnnotationError;
use crate::stats::cohen_kappa;
use crate::taxonomy::FrictionLabel;

/// Pairwise Cohen's kappa between annotators, rows and columns in
/// `annotators` order. `None` where the pair shares no usable items or the
/// statistic is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaMatrix {
    pub annotators: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl KappaMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.annotators.iter().position(|x| x == a)?;
        let j = self.annotators.iter().position(|x| x == b)?;
        self.values[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelHistograms {
    pub category: BTreeMap<String, usize>,
    pub label: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementBundle {
    pub category_kappa: KappaMatrix,
    /// Full labels: the subcategory when given, else the bare category.
    pub subcategory_kappa: KappaMatrix,
    pub detection_histograms: LabelHistograms,
    pub production_histograms: LabelHistograms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationExport {
    pub records: Vec<AnnotationRecord>,
    pub agreement: AgreementBundle,
}

/// Latest detection label per annotator and item; `other` is left out.
fn detection_labels(records: &[AnnotationRecord]) -> BTreeMap<String, BTreeMap<(String, usize), FrictionLabel>> {
    let mut out: BTreeMap<String, BTreeMap<(String, usize), FrictionLabel>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.task == TaskKind::Detection) {
        let slot = out.entry(r.annotator.clone()).or_default();
        let key = (r.dialogue_id.clone(), r.turn);
        match r.labels.first().and_then(AnnotationLabel::as_friction) {
            Some(l) => {
                slot.insert(key, l);
            }
            None => {
                slot.remove(&key);
            }
        }
    }
    out
}

fn kappa_matrix<F>(labels: &BTreeMap<String, BTreeMap<(String, usize), FrictionLabel>>, annotators: &[String], name: F) -> KappaMatrix
where
    F: Fn(&FrictionLabel) -> &'static str,
{
    let n = annotators.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        values[i][i] = Some(1.0);
        let Some(a) = labels.get(&annotators[i]) else { continue };
        for j in (i + 1)..n {
            let Some(b) = labels.get(&annotators[j]) else { continue };
            let (xs, ys): (Vec<&str>, Vec<&str>) = a
                .iter()
                .filter_map(|(k, la)| b.get(k).map(|lb| (name(la), name(lb))))
                .unzip();
            let k = cohen_kappa(&xs, &ys).ok();
            values[i][j] = k;
            values[j][i] = k;
        }
    }
    KappaMatrix {
        annotators: annotators.to_vec(),
        values,
    }
}

fn histograms(records: &[AnnotationRecord], kind: TaskKind) -> LabelHistograms {
    let mut h = LabelHistograms {
        category: BTreeMap::new(),
        label: BTreeMap::new(),
    };
    for r in records.iter().filter(|r| r.task == kind) {
        for l in &r.labels {
            let cat = match l {
                AnnotationLabel::Friction(f) => f.friction_category().canonical_name().to_string(),
                AnnotationLabel::Other => l.to_string(),
            };
            *h.category.entry(cat).or_default() += 1;
            *h.label.entry(l.to_string()).or_default() += 1;
        }
    }
    h
}

pub fn agreement(records: &[AnnotationRecord]) -> Result<AgreementBundle, AnnotationError> {
    if records.is_empty() {
        return Err(AnnotationError::EmptyStore);
    }
    let annotators: Vec<String> = records
        .iter()
        .filter(|r| r.task == TaskKind::Detection)
        .map(|r| r.annotator.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels = detection_labels(records);
    Ok(AgreementBundle {
        category_kappa: kappa_matrix(&labels, &annotators, |l| l.friction_category().canonical_name()),
        subcategory_kappa: kappa_matrix(&labels, &annotators, |l| l.canonical_name()),
        detection_histograms: histograms(records, TaskKind::Detection),
        production_histograms: histograms(records, TaskKind::Production),
    })
}

pub fn export(records: &[AnnotationRecord]) -> Result<AnnotationExport, AnnotationError> {
    Ok(AnnotationExport {
        agreement: agreement(records)?,
        records: records.to_vec(),
    })
}
