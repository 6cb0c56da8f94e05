//! Seeded, feature-stratified splitting of a suite into T_d and T_e.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::test_case::TestCase;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("suite has {0} test(s); at least 2 are needed")]
    TooSmall(usize),
    #[error("split ratio {0} is outside (0, 1)")]
    BadRatio(f64),
}

/// Partition `suite` so that about `ratio` of it lands in the first part.
///
/// Tests are grouped by their first feature tag. Each group with at least
/// two tests contributes at least one test to each side. Within the
/// constraints the size of the first part is `round(ratio * n)`.
pub fn split_suite(
    suite: &[TestCase],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<TestCase>, Vec<TestCase>), SplitError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError::BadRatio(ratio));
    }
    let n = suite.len();
    if n < 2 {
        return Err(SplitError::TooSmall(n));
    }
    let target = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in suite.iter().enumerate() {
        let key = t.features.first().map(String::as_str).unwrap_or("");
        groups.entry(key).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
    }
    // Largest-remainder apportionment with per-group bounds.
    let mut alloc: Vec<(usize, usize, usize, f64)> = Vec::new(); // (take, min, max, remainder)
    for members in groups.values() {
        let g = members.len();
        let (lo, hi) = if g >= 2 { (1, g - 1) } else { (0, g) };
        let quota = ratio * g as f64;
        let take = (quota.floor() as usize).clamp(lo, hi);
        alloc.push((take, lo, hi, quota - quota.floor()));
    }
    let mut total: usize = alloc.iter().map(|a| a.0).sum();
    let mut order: Vec<usize> = (0..alloc.len()).collect();
    order.sort_by(|&a, &b| alloc[b].3.total_cmp(&alloc[a].3).then(a.cmp(&b)));
    while total < target {
        let Some(&g) = order.iter().find(|&&g| alloc[g].0 < alloc[g].2) else {
            break;
        };
        alloc[g].0 += 1;
        alloc[g].3 = -1.0;
        total += 1;
        order.sort_by(|&a, &b| alloc[b].3.total_cmp(&alloc[a].3).then(a.cmp(&b)));
    }
    while total > target {
        let Some(&g) = order.iter().rev().find(|&&g| alloc[g].0 > alloc[g].1) else {
            break;
        };
        alloc[g].0 -= 1;
        alloc[g].3 = 2.0;
        total -= 1;
        order.sort_by(|&a, &b| alloc[b].3.total_cmp(&alloc[a].3).then(a.cmp(&b)));
    }
    let mut in_d = vec![false; n];
    for (members, a) in groups.values().zip(&alloc) {
        for &i in &members[..a.0] {
            in_d[i] = true;
        }
    }
    let mut t_d = Vec::new();
    let mut t_e = Vec::new();
    for (i, t) in suite.iter().enumerate() {
        if in_d[i] {
            t_d.push(t.clone());
        } else {
            t_e.push(t.clone());
        }
    }
    Ok((t_d, t_e))
}
