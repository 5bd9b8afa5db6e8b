//! Residual grouping, per-row mode selection, and cross-row row selection.
//!
//! Workers answering one row return scalar residuals; identical categories
//! produce identical values up to float noise, so a sort-and-scan pass with
//! a relative gap tolerance recovers the category groups. The largest group
//! that reaches the qualifying threshold is that row's mode; across the
//! sampled rows one winner supplies the Kaczmarz step.

use crate::rng::Rng;
use rand::Rng as _;

/// Default relative tolerance for grouping returned residuals. Category
/// errors in the experiments are separated by at least 1e-3, far above
/// float noise at this scale.
pub const DEFAULT_GROUP_TOL: f64 = 1e-9;

/// One worker's answer for one row.
#[derive(Debug, Clone, Copy)]
pub struct ReturnedResidual {
    pub worker: u32,
    pub row: usize,
    /// `(b_r + e_l - <A_r, x>) / |A_r|^2`; reliable workers have `e = 0`.
    pub value: f64,
    /// Ground truth, visible to evaluation code only.
    pub true_category: u16,
}

/// A value group: member indices into the return list plus a representative.
#[derive(Debug, Clone)]
pub struct Group {
    /// Lower-median member value; exact category value for pure groups.
    pub value: f64,
    /// Indices into the original `returns` slice.
    pub members: Vec<usize>,
}

impl Group {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Result of grouping one row's returns and applying the size test.
#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub row: usize,
    pub groups: Vec<Group>,
    /// Index into `groups` of the selected mode, absent when no group
    /// reaches the threshold.
    pub chosen: Option<usize>,
    /// `ceil(n_r * p_{r,0})`.
    pub threshold: u64,
}

impl ModeOutcome {
    pub fn mode_size(&self) -> Option<u64> {
        self.chosen.map(|i| self.groups[i].len() as u64)
    }

    pub fn chosen_value(&self) -> Option<f64> {
        self.chosen.map(|i| self.groups[i].value)
    }

    pub fn chosen_group(&self) -> Option<&Group> {
        self.chosen.map(|i| &self.groups[i])
    }
}

/// Sort-and-scan clustering: sorted by value, a new group opens when the
/// gap to the previous value exceeds `group_tol * max(1, |value|)`. The
/// partition depends only on the value multiset, not on input order.
pub fn group_residuals(returns: &[ReturnedResidual], group_tol: f64) -> Vec<Group> {
    assert!(!returns.is_empty(), "cannot group an empty return set");
    let mut order: Vec<usize> = (0..returns.len()).collect();
    order.sort_by(|&i, &j| {
        returns[i]
            .value
            .partial_cmp(&returns[j].value)
            .expect("residual values must be finite")
            .then(returns[i].worker.cmp(&returns[j].worker))
    });
    let mut groups: Vec<Group> = Vec::new();
    let mut current: Vec<usize> = vec![order[0]];
    let mut prev = returns[order[0]].value;
    for &idx in &order[1..] {
        let v = returns[idx].value;
        if v - prev > group_tol * prev.abs().max(1.0) {
            groups.push(finish_group(returns, std::mem::take(&mut current)));
        }
        current.push(idx);
        prev = v;
    }
    groups.push(finish_group(returns, current));
    groups
}

fn finish_group(returns: &[ReturnedResidual], members: Vec<usize>) -> Group {
    // members are in ascending value order; lower median is a real member
    let value = returns[members[(members.len() - 1) / 2]].value;
    Group { value, members }
}

/// Apply the size test: qualifying groups have `len >= ceil(n_r * p_r0)`;
/// among them a maximum-size group is chosen, ties uniform at random.
pub fn select_mode(
    row: usize,
    groups: Vec<Group>,
    threshold: u64,
    rng: &mut Rng,
) -> ModeOutcome {
    let chosen = select_mode_index(&groups.iter().map(|g| g.len() as u64).collect::<Vec<_>>(), threshold, rng);
    ModeOutcome { row, groups, chosen, threshold }
}

/// Size-only variant shared with the counter-process simulation: pick the
/// index of a largest group with size >= threshold, ties uniform, or none.
pub fn select_mode_index(sizes: &[u64], threshold: u64, rng: &mut Rng) -> Option<usize> {
    let best = sizes.iter().copied().max()?;
    if best < threshold.max(1) {
        return None;
    }
    let ties: Vec<usize> = sizes
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (s == best).then_some(i))
        .collect();
    Some(ties[rng.gen_range(0..ties.len())])
}

/// How the winning row is chosen among rows that produced a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum RowStrategy {
    /// Largest absolute residual of the chosen groups (algorithm box).
    #[default]
    MaxResidual,
    /// Largest mode group; ties by larger |residual|, then uniform.
    MaxModeSize,
}

/// Index of the winning outcome; rows without a mode are skipped. Returns
/// `None` when no sampled row produced a mode (the iteration is a no-op).
pub fn select_row(outcomes: &[ModeOutcome], strategy: RowStrategy, rng: &mut Rng) -> Option<usize> {
    let key = |o: &ModeOutcome| -> (u64, f64) {
        let val = o.chosen_value().unwrap().abs();
        match strategy {
            RowStrategy::MaxResidual => (0, val),
            RowStrategy::MaxModeSize => (o.mode_size().unwrap(), val),
        }
    };
    let mut best: Vec<usize> = Vec::new();
    let mut best_key = (0u64, f64::NEG_INFINITY);
    for (i, o) in outcomes.iter().enumerate() {
        if o.chosen.is_none() {
            continue;
        }
        let k = key(o);
        if k.0 > best_key.0 || (k.0 == best_key.0 && k.1 > best_key.1) {
            best_key = k;
            best = vec![i];
        } else if k.0 == best_key.0 && k.1 == best_key.1 {
            best.push(i);
        }
    }
    if best.is_empty() {
        None
    } else {
        Some(best[rng.gen_range(0..best.len())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn ret(worker: u32, value: f64) -> ReturnedResidual {
        ReturnedResidual { worker, row: 0, value, true_category: 0 }
    }

    #[test]
    fn identical_values_one_group() {
        let r = vec![ret(0, 1.0), ret(1, 1.0), ret(2, 1.0)];
        let g = group_residuals(&r, DEFAULT_GROUP_TOL);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].len(), 3);
        assert_eq!(g[0].value, 1.0);
    }

    #[test]
    fn tolerance_merges_float_noise() {
        let r = vec![ret(0, 1.0), ret(1, 1.0 + 1e-12), ret(2, 5.0)];
        let g = group_residuals(&r, 1e-9);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].len(), 2);
        assert_eq!(g[1].len(), 1);
    }

    #[test]
    fn separated_categories_make_expected_groups() {
        // 7 returns across a reliable value and 3 error categories, all
        // pairwise farther apart than the tolerance: 4 groups.
        let r = vec![
            ret(0, 0.5),
            ret(1, 0.5),
            ret(2, 0.5 + 1e-3),
            ret(3, 0.5 + 2e-3),
            ret(4, 0.5 + 2e-3),
            ret(5, 0.5 - 4e-3),
            ret(6, 0.5),
        ];
        let g = group_residuals(&r, 1e-9);
        assert_eq!(g.len(), 4);
        let mut sizes: Vec<usize> = g.iter().map(|x| x.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 2, 3]);
    }

    #[test]
    fn grouping_is_permutation_invariant() {
        let mut rng = rng_from_seed(9);
        let base = vec![
            ret(0, 0.1),
            ret(1, 0.1 + 5e-10),
            ret(2, 0.7),
            ret(3, -2.0),
            ret(4, 0.7),
            ret(5, 0.1),
        ];
        let canon: Vec<Vec<f64>> = group_residuals(&base, 1e-9)
            .iter()
            .map(|g| {
                let mut v: Vec<f64> = g.members.iter().map(|&i| base[i].value).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        use rand::seq::SliceRandom;
        for _ in 0..50 {
            let mut shuf = base.clone();
            shuf.shuffle(&mut rng);
            let got: Vec<Vec<f64>> = group_residuals(&shuf, 1e-9)
                .iter()
                .map(|g| {
                    let mut v: Vec<f64> = g.members.iter().map(|&i| shuf[i].value).collect();
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect();
            assert_eq!(got, canon);
        }
    }

    #[test]
    fn mode_selection_threshold() {
        let mut rng = rng_from_seed(1);
        // n=5, p0=0.4 -> threshold 2; sizes [3,1,1] -> group 0
        let groups = vec![
            Group { value: 1.0, members: vec![0, 1, 2] },
            Group { value: 2.0, members: vec![3] },
            Group { value: 3.0, members: vec![4] },
        ];
        let o = select_mode(0, groups, 2, &mut rng);
        assert_eq!(o.chosen, Some(0));
        assert_eq!(o.mode_size(), Some(3));
    }

    #[test]
    fn no_mode_when_threshold_unmet() {
        let mut rng = rng_from_seed(1);
        // n=5, p0=0.7 -> threshold 4; sizes [3,2] -> none
        let groups = vec![
            Group { value: 1.0, members: vec![0, 1, 2] },
            Group { value: 2.0, members: vec![3, 4] },
        ];
        let o = select_mode(0, groups, 4, &mut rng);
        assert_eq!(o.chosen, None);
        assert_eq!(o.mode_size(), None);
    }

    #[test]
    fn tie_break_is_roughly_fair() {
        // sizes [2,2], threshold 2: each chosen about half the time
        let mut hits = [0u32; 2];
        for seed in 0..10_000 {
            let mut rng = rng_from_seed(seed);
            let groups = vec![
                Group { value: 1.0, members: vec![0, 1] },
                Group { value: 2.0, members: vec![2, 3] },
            ];
            let o = select_mode(0, groups, 2, &mut rng);
            hits[o.chosen.unwrap()] += 1;
        }
        let f = hits[0] as f64 / 10_000.0;
        assert!((f - 0.5).abs() < 0.02, "tie-break frequency {f}");
    }

    #[test]
    fn threshold_monotonicity() {
        // raising the threshold never grows the qualifying set
        let sizes = [3u64, 2, 2, 1];
        let mut rng = rng_from_seed(4);
        let mut prev_qualifying = usize::MAX;
        for threshold in 1..=5 {
            let qualifying = sizes.iter().filter(|&&s| s >= threshold).count();
            assert!(qualifying <= prev_qualifying);
            prev_qualifying = qualifying;
            let got = select_mode_index(&sizes, threshold, &mut rng);
            if threshold <= 3 {
                assert_eq!(got, Some(0));
            } else {
                assert_eq!(got, None);
            }
        }
    }

    fn outcome(row: usize, value: f64, size: usize) -> ModeOutcome {
        ModeOutcome {
            row,
            groups: vec![Group { value, members: (0..size).collect() }],
            chosen: Some(0),
            threshold: 1,
        }
    }

    #[test]
    fn row_selection_strategies_differ() {
        let mut rng = rng_from_seed(2);
        let outcomes = vec![outcome(0, 0.5, 3), outcome(1, 0.2, 4)];
        let a = select_row(&outcomes, RowStrategy::MaxResidual, &mut rng).unwrap();
        assert_eq!(outcomes[a].row, 0);
        let b = select_row(&outcomes, RowStrategy::MaxModeSize, &mut rng).unwrap();
        assert_eq!(outcomes[b].row, 1);
    }

    #[test]
    fn single_mode_row_wins() {
        let mut rng = rng_from_seed(2);
        let mut no_mode = outcome(5, 9.0, 2);
        no_mode.chosen = None;
        let outcomes = vec![no_mode, outcome(1, 0.1, 1)];
        let w = select_row(&outcomes, RowStrategy::MaxResidual, &mut rng).unwrap();
        assert_eq!(outcomes[w].row, 1);
    }

    #[test]
    fn all_no_mode_yields_none() {
        let mut rng = rng_from_seed(2);
        let mut a = outcome(0, 1.0, 2);
        a.chosen = None;
        let mut b = outcome(1, 2.0, 2);
        b.chosen = None;
        assert!(select_row(&[a, b], RowStrategy::MaxResidual, &mut rng).is_none());
    }

    #[test]
    fn selection_scale_equivariant() {
        for seed in 0..20 {
            let outcomes = vec![outcome(0, 0.3, 2), outcome(1, -0.9, 3), outcome(2, 0.4, 3)];
            let scaled: Vec<ModeOutcome> = outcomes
                .iter()
                .map(|o| {
                    let mut c = o.clone();
                    c.groups[0].value *= 7.5;
                    c
                })
                .collect();
            for strat in [RowStrategy::MaxResidual, RowStrategy::MaxModeSize] {
                let mut r1 = rng_from_seed(seed);
                let mut r2 = rng_from_seed(seed);
                let w1 = select_row(&outcomes, strat, &mut r1).unwrap();
                let w2 = select_row(&scaled, strat, &mut r2).unwrap();
                assert_eq!(w1, w2);
            }
        }
    }
}
