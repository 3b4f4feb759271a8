use std::collections::BTreeMap;

use super::StatsError;

/// Sentinel emitted by [`majority_vote`] for unresolved ties.
pub const TIE: &str = "TIE";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Emit [`TIE`].
    #[default]
    MarkTied,
    /// Pick the tied label that appears first in the list; [`TIE`] if none do.
    Priority(Vec<String>),
}

/// Unweighted Cohen's kappa over nominal labels.
///
/// Returns exactly 1.0 when both raters use one identical label throughout.
pub fn cohen_kappa<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = a.len();
    let mut agree = 0usize;
    let mut margins: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_ref(), y.as_ref());
        if x == y {
            agree += 1;
        }
        margins.entry(x).or_default().0 += 1;
        margins.entry(y).or_default().1 += 1;
    }
    let chance_num: usize = margins.values().map(|(ca, cb)| ca * cb).sum();
    if chance_num == n * n {
        return if agree == n {
            Ok(1.0)
        } else {
            Err(StatsError::DegenerateMarginals)
        };
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let p_e = chance_num as f64 / (nf * nf);
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Kappa over the items where neither series carries `sentinel`.
pub fn cohen_kappa_excluding<S: AsRef<str>>(
    a: &[S],
    b: &[S],
    sentinel: &str,
) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (fa, fb): (Vec<&str>, Vec<&str>) = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x.as_ref(), y.as_ref()))
        .filter(|(x, y)| *x != sentinel && *y != sentinel)
        .unzip();
    cohen_kappa(&fa, &fb)
}

/// Per-item modal label across aligned series.
pub fn majority_vote<S: AsRef<str>>(
    series: &[Vec<S>],
    tie_rule: &TieRule,
) -> Result<Vec<String>, StatsError> {
    let first = series.first().ok_or(StatsError::Empty)?;
    let len = first.len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(StatsError::LengthMismatch {
            left: len,
            right: bad.len(),
        });
    }
    Ok((0..len)
        .map(|i| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for s in series {
                *counts.entry(s[i].as_ref()).or_default() += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            let leaders: Vec<&str> = counts
                .iter()
                .filter(|(_, c)| **c == top)
                .map(|(l, _)| *l)
                .collect();
            match (leaders.as_slice(), tie_rule) {
                ([only], _) => (*only).to_string(),
                (_, TieRule::MarkTied) => TIE.to_string(),
                (_, TieRule::Priority(order)) => order
                    .iter()
                    .find(|p| leaders.contains(&p.as_str()))
                    .cloned()
                    .unwrap_or_else(|| TIE.to_string()),
            }
        })
        .collect())
}

/// One voter subset of the held-out majority protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutAgreement {
    /// Indices of the annotators forming the majority.
    pub voters: Vec<usize>,
    /// Mean kappa of the majority against each voter (in-sample).
    pub majority_in_sample: Option<f64>,
    /// Mean kappa of the majority against each held-out annotator.
    pub majority_held_out: Option<f64>,
    /// Mean kappa of the reference labels against each held-out annotator.
    pub reference_held_out: Option<f64>,
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Enumerates every `voters`-sized annotator subset, builds its majority
/// vote (ties dropped) and compares it, and optionally a reference labeler
/// such as an automatic detector, with the annotators left out.
///
/// Kappas that are undefined for a pair (degenerate marginals, no items) are
/// skipped when averaging.
pub fn held_out_majority<S: AsRef<str>>(
    series: &[Vec<S>],
    voters: usize,
    reference: Option<&[S]>,
) -> Result<Vec<HeldOutAgreement>, StatsError> {
    let n = series.len();
    if voters == 0 || voters >= n {
        return Err(StatsError::TooFewSamples {
            got: n,
            need: voters + 1,
        });
    }
    let owned: Vec<Vec<&str>> = series
        .iter()
        .map(|s| s.iter().map(AsRef::as_ref).collect())
        .collect();
    if let Some(r) = reference {
        if r.len() != owned[0].len() {
            return Err(StatsError::LengthMismatch {
                left: owned[0].len(),
                right: r.len(),
            });
        }
    }
    let reference: Option<Vec<&str>> = reference.map(|r| r.iter().map(AsRef::as_ref).collect());
    let mut out = Vec::new();
    for subset in k_subsets(n, voters) {
        let members: Vec<Vec<&str>> = subset.iter().map(|&i| owned[i].clone()).collect();
        let majority = majority_vote(&members, &TieRule::MarkTied)?;
        let majority: Vec<&str> = majority.iter().map(String::as_str).collect();
        let held: Vec<usize> = (0..n).filter(|i| !subset.contains(i)).collect();
        let vs = |labels: &[&str], who: &[usize]| {
            mean_of(
                who.iter()
                    .filter_map(|&i| cohen_kappa_excluding(labels, &owned[i], TIE).ok()),
            )
        };
        out.push(HeldOutAgreement {
            majority_in_sample: vs(&majority, &subset),
            majority_held_out: vs(&majority, &held),
            reference_held_out: reference.as_ref().and_then(|r| vs(r, &held)),
            voters: subset,
        });
    }
    Ok(out)
}
