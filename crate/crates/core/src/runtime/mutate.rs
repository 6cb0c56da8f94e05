//! Seeded test mutation and robustness fuzzing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interp::execute;
use super::test_case::TestCase;
use crate::minic::{lower, LowerError, SourceUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationKind {
    StdinByteFlip,
    ArgDuplicate,
    ArgTruncate,
    ArgInsertRandom,
    ArgDrop,
}

fn random_arg(rng: &mut ChaCha8Rng) -> String {
    const EXTRA: &[u8] = b"-/.=: ";
    let len = rng.gen_range(1..=8);
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.25) {
                *EXTRA.choose(rng).expect("nonempty") as char
            } else {
                rng.gen_range(0x21u8..0x7f) as char
            }
        })
        .collect()
}

fn mutate_stdin(stdin: &mut Vec<u8>, rng: &mut ChaCha8Rng) {
    if stdin.is_empty() {
        stdin.push(rng.gen());
    } else {
        let i = rng.gen_range(0..stdin.len());
        stdin[i] ^= 1 << rng.gen_range(0..8);
    }
}

/// Apply one seeded mutation. Arguments after `argv[0]` are mutated; a test
/// without arguments gets a stdin mutation instead. Expected outputs are
/// cleared.
pub fn mutate_test_with_kind(test: &TestCase, seed: u64) -> (TestCase, MutationKind) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = test.clone();
    t.id = format!("{}~m{seed:016x}", test.id);
    t.expected_stdout = None;
    t.expected_exit = None;
    if t.argv.is_empty() {
        t.argv.push("prog".to_string());
    }
    let nargs = t.argv.len() - 1;
    let kind = if nargs == 0 {
        MutationKind::StdinByteFlip
    } else {
        let mut kinds = vec![
            MutationKind::ArgDuplicate,
            MutationKind::ArgTruncate,
            MutationKind::ArgInsertRandom,
            MutationKind::ArgDrop,
        ];
        if !t.stdin.is_empty() {
            kinds.push(MutationKind::StdinByteFlip);
        }
        *kinds.choose(&mut rng).expect("nonempty")
    };
    match kind {
        MutationKind::StdinByteFlip => mutate_stdin(&mut t.stdin, &mut rng),
        MutationKind::ArgDuplicate => {
            let i = rng.gen_range(1..=nargs);
            let a = t.argv[i].clone();
            t.argv.insert(i + 1, a);
        }
        MutationKind::ArgTruncate => {
            let i = rng.gen_range(1..=nargs);
            let len = t.argv[i].len();
            let keep = if len == 0 { 0 } else { rng.gen_range(0..len) };
            let mut cut = keep;
            while !t.argv[i].is_char_boundary(cut) {
                cut -= 1;
            }
            t.argv[i].truncate(cut);
        }
        MutationKind::ArgInsertRandom => {
            let at = rng.gen_range(1..=nargs + 1);
            let a = random_arg(&mut rng);
            t.argv.insert(at, a);
        }
        MutationKind::ArgDrop => {
            let i = rng.gen_range(1..=nargs);
            t.argv.remove(i);
        }
    }
    (t, kind)
}

pub fn mutate_test(test: &TestCase, seed: u64) -> TestCase {
    mutate_test_with_kind(test, seed).0
}

/// Seeds for the mutants of one fuzzing campaign.
pub fn mutant_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// The mutants a campaign runs: mutant `i` mutates seed test `i mod len`.
pub fn mutants(seed_tests: &[TestCase], n_mutants: usize, seed: u64) -> Vec<TestCase> {
    let fallback = [TestCase::new("empty", &["prog"], b"")];
    let seeds = if seed_tests.is_empty() {
        &fallback[..]
    } else {
        seed_tests
    };
    mutant_seeds(seed, n_mutants)
        .into_iter()
        .enumerate()
        .map(|(i, s)| mutate_test(&seeds[i % seeds.len()], s))
        .collect()
}

/// Fraction of mutants on which `unit` terminates normally.
pub fn fuzz_robustness(
    unit: &SourceUnit,
    seed_tests: &[TestCase],
    n_mutants: usize,
    step_budget: u64,
    seed: u64,
) -> Result<f64, LowerError> {
    let ir = lower(unit)?;
    let ms = mutants(seed_tests, n_mutants.max(1), seed);
    let ok = ms
        .par_iter()
        .filter(|t| execute(&ir, &t.argv, &t.stdin, step_budget).is_normal())
        .count();
    Ok(ok as f64 / ms.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::parse;
    use std::collections::BTreeSet;

    #[test]
    fn mutation_is_deterministic() {
        let t = TestCase::new("t", &["mkpath", "-p", "a/b"], b"");
        assert_eq!(mutate_test(&t, 11), mutate_test(&t, 11));
    }

    #[test]
    fn many_mutants_use_several_kinds() {
        let t = TestCase::new("t", &["mkpath", "-p", "a/b"], b"x");
        let kinds: BTreeSet<_> = mutant_seeds(5, 1000)
            .into_iter()
            .map(|s| mutate_test_with_kind(&t, s).1)
            .collect();
        assert!(kinds.len() >= 2);
    }

    #[test]
    fn argument_free_test_mutates_stdin() {
        let t = TestCase::new("t", &["p"], b"abc");
        let (m, kind) = mutate_test_with_kind(&t, 3);
        assert_eq!(kind, MutationKind::StdinByteFlip);
        assert_eq!(m.argv, t.argv);
        assert_ne!(m.stdin, t.stdin);
    }

    #[test]
    fn expected_fields_are_cleared() {
        let mut t = TestCase::new("t", &["p", "a"], b"");
        t.expected_stdout = Some(b"x".to_vec());
        t.expected_exit = Some(0);
        let m = mutate_test(&t, 1);
        assert!(m.expected_stdout.is_none() && m.expected_exit.is_none());
    }

    #[test]
    fn straight_line_program_is_fully_robust() {
        let u = parse("int main() { prints(\"ok\"); return 0; }", "s").unwrap();
        let seeds = [TestCase::new("t", &["p", "a"], b"")];
        assert_eq!(fuzz_robustness(&u, &seeds, 200, 1000, 9).unwrap(), 1.0);
    }
}
