//! Shared test oracles: Pascal-triangle binomials and exhaustive
//! composition enumeration, independent of the library's arithmetic.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rkmode::analysis::rational::Rat;

/// Pascal-triangle binomial.
pub fn pascal(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut row = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = vec![BigInt::one()];
        for i in 1..row.len() {
            next.push(&row[i - 1] + &row[i]);
        }
        next.push(BigInt::one());
        row = next;
    }
    row[k].clone()
}

/// Walk every composition `(j_0..j_k)` of `n` with `j_l <= m_l`, weighting
/// by `prod C(m_l, j_l)`.
pub fn for_each_composition(counts: &[u64], n: u64, visit: &mut dyn FnMut(&[u64], &BigInt)) {
    fn rec(
        counts: &[u64],
        idx: usize,
        left: u64,
        acc: &mut Vec<u64>,
        weight: &BigInt,
        visit: &mut dyn FnMut(&[u64], &BigInt),
    ) {
        if idx == counts.len() {
            if left == 0 {
                visit(acc, weight);
            }
            return;
        }
        let top = counts[idx].min(left);
        for j in 0..=top {
            let w = weight * pascal(counts[idx] as usize, j as usize);
            acc.push(j);
            rec(counts, idx + 1, left - j, acc, &w, visit);
            acc.pop();
        }
    }
    rec(counts, 0, n, &mut Vec::new(), &BigInt::one(), visit);
}

/// Strict argmax of a composition, `None` on ties.
pub fn strict_max(comp: &[u64]) -> Option<(usize, u64)> {
    let mut best = (0usize, 0u64);
    let mut tied = false;
    for (l, &c) in comp.iter().enumerate() {
        if c > best.1 {
            best = (l, c);
            tied = false;
        } else if c == best.1 && c > 0 {
            tied = true;
        }
    }
    (!tied && best.1 > 0).then_some(best)
}

/// Exhaustive `P(strict mode = (l, g))` table indexed `[l][g]`.
pub fn enumerate_mode_probs(counts: &[u64], n: u64) -> Vec<Vec<Rat>> {
    let k1 = counts.len();
    let mut table = vec![vec![Rat::zero(); n as usize + 1]; k1];
    let mut total = BigInt::zero();
    for_each_composition(counts, n, &mut |comp, w| {
        total += w;
        if let Some((l, g)) = strict_max(comp) {
            table[l][g as usize] += Rat::from_integer(w.clone());
        }
    });
    let denom = Rat::from_integer(total);
    for row in &mut table {
        for cell in row.iter_mut() {
            *cell /= denom.clone();
        }
    }
    table
}

/// All integer worker layouts with `N <= max_n`, sample sizes
/// `2..=max_sample`, and up to `max_k` adversarial categories.
pub fn generate_configs(max_n: u64, max_sample: u64, max_k: usize) -> Vec<(Vec<u64>, u64)> {
    let mut out = Vec::new();
    fn adversarial_parts(
        m0: u64,
        budget: u64,
        k_left: usize,
        cur: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if k_left == 0 {
            return;
        }
        let cap = cur.last().copied().unwrap_or(m0 - 1).min(budget);
        for m in (1..=cap).rev() {
            cur.push(m);
            adversarial_parts(m0, budget - m, k_left - 1, cur, out);
            cur.pop();
        }
    }
    for m0 in 2..=max_n {
        let mut advs: Vec<Vec<u64>> = vec![vec![]];
        adversarial_parts(m0, max_n - m0, max_k, &mut Vec::new(), &mut advs);
        for adv in advs {
            if adv.iter().any(|&m| m >= m0) {
                continue;
            }
            let mut counts = vec![m0];
            counts.extend(adv);
            let total: u64 = counts.iter().sum();
            for n in 2..=max_sample.min(total) {
                out.push((counts.clone(), n));
            }
        }
    }
    out
}
