use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::StatsError;

/// Group name -> observations.
pub type GroupedSamples = BTreeMap<String, Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p: f64,
    pub df: usize,
}

/// Largest pooled sample size accepted by [`kruskal_wallis_exact`].
pub const EXACT_MAX_N: usize = 10;

struct Ranked {
    sizes: Vec<usize>,
    /// rank of each pooled observation, in group order
    ranks: Vec<f64>,
    n: usize,
    /// 1 - sum(t^3 - t) / (n^3 - n)
    tie_factor: f64,
}

fn rank_groups<S: AsRef<[f64]>>(groups: &[S], names: &[String]) -> Result<Ranked, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for (g, name) in groups.iter().zip(names) {
        if g.as_ref().is_empty() {
            return Err(StatsError::EmptyGroup(name.clone()));
        }
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = pooled.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { got: n, need: 3 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; n];
    let mut tie_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j share the average of ranks i+1..=j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        let t = (j - i + 1) as f64;
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    let nf = n as f64;
    Ok(Ranked {
        sizes: groups.iter().map(|g| g.as_ref().len()).collect(),
        ranks,
        n,
        tie_factor: 1.0 - tie_sum / (nf * nf * nf - nf),
    })
}

fn h_from_rank_sums(rank_sums: &[f64], sizes: &[usize], n: usize, tie_factor: f64) -> f64 {
    let nf = n as f64;
    let s: f64 = rank_sums
        .iter()
        .zip(sizes)
        .map(|(r, &m)| r * r / m as f64)
        .sum();
    let h = (12.0 / (nf * (nf + 1.0)) * s - 3.0 * (nf + 1.0)) / tie_factor;
    h.max(0.0)
}

fn group_names(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

/// Kruskal-Wallis H with tie correction; p from the chi-square
/// approximation with k-1 degrees of freedom.
///
/// When every observation is tied the statistic is defined as H = 0, p = 1.
pub fn kruskal_wallis<S: AsRef<[f64]>>(groups: &[S]) -> Result<KruskalWallis, StatsError> {
    let ranked = rank_groups(groups, &group_names(groups.len()))?;
    let df = groups.len() - 1;
    if ranked.tie_factor <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, p: 1.0, df });
    }
    let mut sums = vec![0.0; groups.len()];
    let mut pos = 0;
    for (g, &m) in ranked.sizes.iter().enumerate() {
        sums[g] = ranked.ranks[pos..pos + m].iter().sum();
        pos += m;
    }
    let h = h_from_rank_sums(&sums, &ranked.sizes, ranked.n, ranked.tie_factor);
    let chi = ChiSquared::new(df as f64).expect("df >= 1");
    let p = chi.sf(h).clamp(0.0, 1.0);
    Ok(KruskalWallis { h, p, df })
}

/// Same statistic with the p-value from full enumeration of group
/// assignments. Limited to pooled n <= [`EXACT_MAX_N`].
pub fn kruskal_wallis_exact<S: AsRef<[f64]>>(groups: &[S]) -> Result<KruskalWallis, StatsError> {
    let observed = kruskal_wallis(groups)?;
    let ranked = rank_groups(groups, &group_names(groups.len()))?;
    if ranked.n > EXACT_MAX_N {
        return Err(StatsError::ExactTooLarge {
            n: ranked.n,
            max: EXACT_MAX_N,
        });
    }
    if ranked.tie_factor <= 0.0 {
        return Ok(observed);
    }

    struct Enum<'a> {
        ranks: &'a [f64],
        sizes: &'a [usize],
        n: usize,
        tie_factor: f64,
        threshold: f64,
        total: u64,
        extreme: u64,
    }

    impl Enum<'_> {
        fn walk(&mut self, group: usize, used: &mut Vec<bool>, sums: &mut Vec<f64>) {
            if group == self.sizes.len() {
                self.total += 1;
                let h = h_from_rank_sums(sums, self.sizes, self.n, self.tie_factor);
                if h >= self.threshold {
                    self.extreme += 1;
                }
                return;
            }
            self.choose(group, 0, self.sizes[group], used, sums);
        }

        fn choose(
            &mut self,
            group: usize,
            start: usize,
            left: usize,
            used: &mut Vec<bool>,
            sums: &mut Vec<f64>,
        ) {
            if left == 0 {
                self.walk(group + 1, used, sums);
                return;
            }
            for i in start..self.n {
                if used[i] {
                    continue;
                }
                used[i] = true;
                sums[group] += self.ranks[i];
                self.choose(group, i + 1, left - 1, used, sums);
                sums[group] -= self.ranks[i];
                used[i] = false;
            }
        }
    }

    let mut e = Enum {
        ranks: &ranked.ranks,
        sizes: &ranked.sizes,
        n: ranked.n,
        tie_factor: ranked.tie_factor,
        threshold: observed.h - 1e-9 * observed.h.abs().max(1.0),
        total: 0,
        extreme: 0,
    };
    e.walk(0, &mut vec![false; ranked.n], &mut vec![0.0; ranked.sizes.len()]);
    Ok(KruskalWallis {
        h: observed.h,
        p: e.extreme as f64 / e.total as f64,
        df: observed.df,
    })
}

impl KruskalWallis {
    /// Runs the test over named groups, reporting empty groups by name.
    pub fn from_groups(groups: &GroupedSamples) -> Result<Self, StatsError> {
        let names: Vec<String> = groups.keys().cloned().collect();
        let values: Vec<&[f64]> = groups.values().map(Vec::as_slice).collect();
        rank_groups(&values, &names)?;
        kruskal_wallis(&values)
    }
}
