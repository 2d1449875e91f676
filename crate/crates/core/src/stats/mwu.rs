use serde::Serialize;
use statrs::function::erf::erfc;

use super::StatsError;

/// Largest pooled sample the exact distribution is computed for.
pub const EXACT_SIZE_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwuMethod {
    Exact,
    Normal,
    /// Exact up to the size cap, normal beyond it.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuTest {
    Exact,
    NormalTieCorrected,
}

impl MwuTest {
    pub fn as_str(self) -> &'static str {
        match self {
            MwuTest::Exact => "exact",
            MwuTest::NormalTieCorrected => "normal_tie_corrected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MwuResult {
    pub u: f64,
    pub z: Option<f64>,
    pub p_two_sided: f64,
    pub method: MwuTest,
    pub n1: usize,
    pub n2: usize,
}

/// Pooled values grouped into ties, ascending: (value, count in a, count in b).
fn tie_groups(a: &[f64], b: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&y| (y, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (v, in_a) in pooled {
        match groups.last_mut() {
            Some(g) if g.0 == v => {}
            _ => groups.push((v, 0, 0)),
        }
        let g = groups.last_mut().expect("just pushed");
        if in_a {
            g.1 += 1;
        } else {
            g.2 += 1;
        }
    }
    groups
}

/// U = #{(x, y) : x < y} + ½ #{x = y} over x in `a`, y in `b`.
///
/// Small U means `a` tends to hold the larger values.
pub fn mann_whitney_u(a: &[f64], b: &[f64], method: MwuMethod) -> Result<MwuResult, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptySample('a'));
    }
    if b.is_empty() {
        return Err(StatsError::EmptySample('b'));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::Range("samples must be finite".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let groups = tie_groups(a, b);
    // Twice U, as an integer: every b above contributes 2, every tie 1.
    let mut twice_u = 0usize;
    let mut b_above = 0usize;
    for &(_, ca, cb) in groups.iter().rev() {
        twice_u += ca * (2 * b_above + cb);
        b_above += cb;
    }
    let u = twice_u as f64 / 2.0;
    let exact = match method {
        MwuMethod::Exact => true,
        MwuMethod::Normal => false,
        MwuMethod::Auto => n1 + n2 <= EXACT_SIZE_CAP,
    };
    if exact {
        if n1 + n2 > EXACT_SIZE_CAP {
            return Err(StatsError::SizeCap {
                n: n1 + n2,
                max: EXACT_SIZE_CAP,
            });
        }
        let counts: Vec<usize> = groups.iter().map(|g| g.1 + g.2).collect();
        let dist = exact_distribution(&counts, n1);
        let total: u64 = dist.iter().sum();
        let lower: u64 = dist[..=twice_u].iter().sum();
        let upper: u64 = dist[twice_u..].iter().sum();
        let p = (2.0 * lower.min(upper) as f64 / total as f64).min(1.0);
        return Ok(MwuResult {
            u,
            z: None,
            p_two_sided: p,
            method: MwuTest::Exact,
            n1,
            n2,
        });
    }
    let n = (n1 + n2) as f64;
    let (f1, f2) = (n1 as f64, n2 as f64);
    let mean = f1 * f2 / 2.0;
    let ties: f64 = groups
        .iter()
        .map(|g| {
            let t = (g.1 + g.2) as f64;
            t * t * t - t
        })
        .sum();
    let var = if n > 1.0 {
        f1 * f2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)))
    } else {
        0.0
    };
    let (z, p) = if var <= 0.0 {
        (0.0, 1.0)
    } else {
        let dev = ((u - mean).abs() - 0.5).max(0.0);
        let z = (u - mean).signum() * dev / var.sqrt();
        (z, erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0))
    };
    Ok(MwuResult {
        u,
        z: Some(z),
        p_two_sided: p,
        method: MwuTest::NormalTieCorrected,
        n1,
        n2,
    })
}

/// Number of ways to draw `n1` of the pooled items into the first sample,
/// indexed by the resulting 2U. `counts` are tie-group sizes, ascending.
fn exact_distribution(counts: &[usize], n1: usize) -> Vec<u64> {
    let n: usize = counts.iter().sum();
    let n2 = n - n1;
    let width = 2 * n1 * n2 + 1;
    // table[k][s]: ways with k items chosen so far and partial 2U = s.
    let mut table = vec![vec![0u64; width]; n1 + 1];
    table[0][0] = 1;
    let mut processed = 0usize;
    for &c in counts.iter().rev() {
        let mut next = vec![vec![0u64; width]; n1 + 1];
        for (chosen, row) in table.iter().enumerate() {
            if chosen > processed || processed - chosen > n2 {
                continue;
            }
            let b_above = processed - chosen;
            for (s, &ways) in row.iter().enumerate().filter(|(_, w)| **w > 0) {
                for k in 0..=c.min(n1 - chosen) {
                    if c - k + b_above > n2 {
                        continue;
                    }
                    let s2 = s + k * (2 * b_above + (c - k));
                    next[chosen + k][s2] += ways * binomial(c, k);
                }
            }
        }
        table = next;
        processed += c;
    }
    table.swap_remove(n1)
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}
