//! Straightforward re-derivations of the statistics, written without
//! sharing code or libraries with the crate, plus a tiny seeded generator
//! for fixtures.

#![allow(dead_code)]

pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Kappa from an explicit confusion matrix.
pub fn kappa(a: &[&str], b: &[&str]) -> f64 {
    let mut labels: Vec<&str> = a.iter().chain(b).copied().collect();
    labels.sort();
    labels.dedup();
    let k = labels.len();
    let idx = |s: &str| labels.iter().position(|l| *l == s).unwrap();
    let mut m = vec![vec![0.0f64; k]; k];
    for (x, y) in a.iter().zip(b) {
        m[idx(x)][idx(y)] += 1.0;
    }
    let n = a.len() as f64;
    let po: f64 = (0..k).map(|i| m[i][i]).sum::<f64>() / n;
    let pe: f64 = (0..k)
        .map(|i| {
            let row: f64 = m[i].iter().sum();
            let col: f64 = m.iter().map(|r| r[i]).sum();
            row * col
        })
        .sum::<f64>()
        / (n * n);
    (po - pe) / (1.0 - pe)
}

/// Average ranks by counting, O(n^2).
fn ranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|x| {
            let less = pooled.iter().filter(|y| *y < x).count() as f64;
            let equal = pooled.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn kw_h(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let r = ranks(&pooled);
    let n = pooled.len() as f64;
    let mut at = 0;
    let mut s = 0.0;
    for g in groups {
        let sum: f64 = r[at..at + g.len()].iter().sum();
        s += sum * sum / g.len() as f64;
        at += g.len();
    }
    let h = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
    let mut ties = 0.0;
    let mut seen: Vec<f64> = Vec::new();
    for x in &pooled {
        if seen.contains(x) {
            continue;
        }
        seen.push(*x);
        let t = pooled.iter().filter(|y| *y == x).count() as f64;
        ties += t * t * t - t;
    }
    let c = 1.0 - ties / (n * n * n - n);
    if c <= 0.0 {
        0.0
    } else {
        (h / c).max(0.0)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma Q(a, x): series below a + 1,
/// continued fraction above.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let lead = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        1.0 - sum * lead.exp()
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        lead.exp() * h
    }
}

pub fn chi2_sf(x: f64, df: usize) -> f64 {
    gamma_q(df as f64 / 2.0, x / 2.0)
}

pub fn kw_p(groups: &[Vec<f64>]) -> f64 {
    chi2_sf(kw_h(groups), groups.len() - 1)
}

/// Two-sided normal quantiles for common levels.
pub fn z_for(level: f64) -> f64 {
    match (level * 100.0).round() as u32 {
        90 => 1.644_853_626_951_472_2,
        95 => 1.959_963_984_540_054,
        99 => 2.575_829_303_548_900_4,
        _ => panic!("no reference quantile for {level}"),
    }
}

pub fn mean_ci(values: &[f64], level: f64) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().rev().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let se = (ss / (n - 1.0) / n).sqrt();
    let z = z_for(level);
    (mean, mean - z * se, mean + z * se)
}

pub fn mse(p: &[f64], a: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in (0..p.len()).rev() {
        let d = a[i] - p[i];
        acc += d * d;
    }
    acc / p.len() as f64
}

/// Permutation p-value by assigning each pooled observation a group label,
/// over every distinct labelling with the observed group sizes.
pub fn kw_exact_p(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let observed = kw_h(groups);
    let mut left = sizes.clone();
    let mut labels = vec![0usize; pooled.len()];
    let (mut total, mut extreme) = (0u64, 0u64);
    fn go(
        pos: usize,
        pooled: &[f64],
        left: &mut [usize],
        labels: &mut [usize],
        observed: f64,
        total: &mut u64,
        extreme: &mut u64,
    ) {
        if pos == pooled.len() {
            let k = left.len();
            let g: Vec<Vec<f64>> = (0..k)
                .map(|j| (0..pooled.len()).filter(|i| labels[*i] == j).map(|i| pooled[i]).collect())
                .collect();
            *total += 1;
            if kw_h(&g) >= observed - 1e-9 * observed.abs().max(1.0) {
                *extreme += 1;
            }
            return;
        }
        for j in 0..left.len() {
            if left[j] > 0 {
                left[j] -= 1;
                labels[pos] = j;
                go(pos + 1, pooled, left, labels, observed, total, extreme);
                left[j] += 1;
            }
        }
    }
    go(0, &pooled, &mut left, &mut labels, observed, &mut total, &mut extreme);
    extreme as f64 / total as f64
}
