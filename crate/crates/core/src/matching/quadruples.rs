use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use super::MatchError;

/// Number of 4-element subsets of `{0..n}`.
pub(crate) fn quadruple_count(n: usize) -> u128 {
    if n < 4 {
        return 0;
    }
    let n = n as u128;
    n * (n - 1) * (n - 2) * (n - 3) / 24
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    num / den
}

/// The combination of lexicographic rank `rank` among all 4-element subsets
/// of `{0..n}` in increasing index order.
fn unrank(mut rank: u128, n: usize) -> [usize; 4] {
    let mut combo = [0usize; 4];
    let mut x = 0;
    for (slot, entry) in combo.iter_mut().enumerate() {
        let remaining = 3 - slot;
        loop {
            let with_x = binomial(n - 1 - x, remaining);
            if rank < with_x {
                *entry = x;
                x += 1;
                break;
            }
            rank -= with_x;
            x += 1;
        }
    }
    combo
}

/// Enumerates index quadruples over `n` correspondences.
///
/// When the total count stays within `cap` the full lexicographic enumeration
/// is returned. Otherwise `cap` distinct quadruples are drawn uniformly
/// without replacement (by sampling lexicographic ranks with a seeded
/// generator), and returned in lexicographic order, so equal seeds give
/// identical subsets.
pub fn enumerate_quadruples(n: usize, cap: usize, seed: u64) -> Result<Vec<[usize; 4]>, MatchError> {
    if n < 4 {
        return Err(MatchError::TooFewPoints { needed: 4, got: n });
    }
    if cap == 0 {
        return Err(MatchError::InvalidConfig(
            "quadruple cap must be at least 1".into(),
        ));
    }
    let total = quadruple_count(n);
    if total <= cap as u128 {
        let mut out = Vec::with_capacity(total as usize);
        for a in 0..n - 3 {
            for b in a + 1..n - 2 {
                for c in b + 1..n - 1 {
                    for d in c + 1..n {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        return Ok(out);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = HashSet::with_capacity(cap);
    while ranks.len() < cap {
        ranks.insert(rng.random_range(0..total));
    }
    let mut ranks: Vec<u128> = ranks.into_iter().collect();
    ranks.sort_unstable();
    Ok(ranks.into_iter().map(|r| unrank(r, n)).collect())
}
