//! Brute-force reference implementations. Everything here trades speed for
//! transparency and exists to certify the optimizing code paths at desk
//! scale: exhaustive matching enumeration with per-matching annotations, a
//! matrix-reduction Hungarian solver independent of the production one, an
//! independent stability check, and Pareto frontier extraction.

use num_bigint::BigUint;
use thiserror::Error;

use crate::metrics;
use crate::model::{Instance, Matching, School};
use crate::solver::{Assignment, CostMatrix};

/// Enumeration refuses instances past this many students or schools.
pub const MAX_BRUTE_FORCE_SIDE: usize = 9;
/// Hard ceiling on enumerated matchings, independent of instance shape.
const MATCHING_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for exhaustive enumeration ({students} students, {schools} schools)")]
    TooLarge { students: usize, schools: usize },
    #[error("exhaustive enumeration requires complete preferences")]
    IncompletePreferences,
}

/// One enumerated matching with everything precomputed.
#[derive(Debug, Clone)]
pub struct MatchingAnnotation {
    pub matching: Matching,
    /// 1-based preference tier per student (complete matchings only).
    pub ranks: Vec<u32>,
    pub mu: u64,
    pub omega: BigUint,
    pub stable: bool,
    pub rank_compatible: bool,
}

/// Exhaustive annotated enumeration of all capacity-respecting complete
/// matchings, with the index sets acceptance checks care about.
#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub profile_rank: u32,
    pub matchings: Vec<MatchingAnnotation>,
    /// Indices of matchings attaining the minimum preference index.
    pub mu_minima: Vec<usize>,
    /// Indices of matchings attaining the minimum exponential rank index.
    pub omega_minima: Vec<usize>,
    /// Indices of stable matchings.
    pub stable: Vec<usize>,
    /// Indices of Pareto-undominated matchings.
    pub frontier: Vec<usize>,
}

/// Enumerates every capacity-respecting complete matching of the instance
/// and annotates each one. Requires complete preferences (so every index is
/// defined) and refuses instances beyond desk scale.
pub fn enumerate_all(instance: &Instance) -> Result<ExhaustiveResult, OracleError> {
    let (n, m) = (instance.n_students(), instance.n_schools());
    if n > MAX_BRUTE_FORCE_SIDE || m > MAX_BRUTE_FORCE_SIDE {
        return Err(OracleError::TooLarge { students: n, schools: m });
    }
    if !instance.complete_preferences() {
        return Err(OracleError::IncompletePreferences);
    }
    let profile_rank = if m == 0 {
        0
    } else {
        metrics::profile_rank(instance)
            .expect("complete preferences cover every school")
            .rank
    };

    let mut capacity_left: Vec<u32> = instance.schools().map(|s| instance.capacity(s)).collect();
    let mut slots: Vec<Option<School>> = vec![None; n];
    let mut raw: Vec<Vec<Option<School>>> = Vec::new();
    collect_complete(instance, 0, &mut capacity_left, &mut slots, &mut raw)?;

    let omega_base = BigUint::from(n);
    let mut matchings = Vec::with_capacity(raw.len());
    for assigned in raw {
        let matching = Matching::new(instance, assigned)
            .expect("enumeration respects capacities by construction");
        let ranks: Vec<u32> = matching
            .iter()
            .map(|(i, s)| instance.rank_of(i, s.expect("complete")).expect("complete"))
            .collect();
        let mu = ranks.iter().map(|&r| r as u64 - 1).sum();
        let omega = ranks.iter().map(|&r| omega_base.pow(r)).sum();
        let stable = stable_direct(instance, &matching);
        let rank_compatible = ranks.iter().all(|&r| r <= profile_rank);
        matchings.push(MatchingAnnotation { matching, ranks, mu, omega, stable, rank_compatible });
    }

    let mu_minima = argmins(&matchings, |a| a.mu);
    let omega_minima = argmins(&matchings, |a| a.omega.clone());
    let stable = (0..matchings.len()).filter(|&k| matchings[k].stable).collect();
    let frontier = frontier_indices(&matchings);
    Ok(ExhaustiveResult { profile_rank, matchings, mu_minima, omega_minima, stable, frontier })
}

fn collect_complete(
    instance: &Instance,
    student: usize,
    capacity_left: &mut Vec<u32>,
    slots: &mut Vec<Option<School>>,
    out: &mut Vec<Vec<Option<School>>>,
) -> Result<(), OracleError> {
    if student == instance.n_students() {
        if out.len() >= MATCHING_BUDGET {
            return Err(OracleError::TooLarge {
                students: instance.n_students(),
                schools: instance.n_schools(),
            });
        }
        out.push(slots.clone());
        return Ok(());
    }
    for s in 0..instance.n_schools() {
        if capacity_left[s] > 0 {
            capacity_left[s] -= 1;
            slots[student] = Some(School(s));
            collect_complete(instance, student + 1, capacity_left, slots, out)?;
            slots[student] = None;
            capacity_left[s] += 1;
        }
    }
    Ok(())
}

fn argmins<K: Ord>(items: &[MatchingAnnotation], key: impl Fn(&MatchingAnnotation) -> K) -> Vec<usize> {
    let Some(best) = items.iter().map(&key).min() else { return Vec::new() };
    (0..items.len()).filter(|&k| key(&items[k]) == best).collect()
}

/// Pairwise dominance scan over the annotated rank vectors.
fn frontier_indices(matchings: &[MatchingAnnotation]) -> Vec<usize> {
    (0..matchings.len())
        .filter(|&k| {
            !matchings
                .iter()
                .any(|other| dominates_by_ranks(&other.ranks, &matchings[k].ranks))
        })
        .collect()
}

fn dominates_by_ranks(a: &[u32], b: &[u32]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Direct-from-definition stability check, written as a blocking-pair scan
/// so it shares no logic with the metrics-side check it certifies: a
/// matching is unstable iff some student strictly prefers a school that has
/// either a free seat or a strictly lower-priority occupant.
pub fn stable_direct(instance: &Instance, matching: &Matching) -> bool {
    for (i, mine) in matching.iter() {
        for school in instance.schools() {
            if !instance.prefers(i, school, mine) {
                continue;
            }
            let roster = matching.roster(school);
            if (roster.len() as u32) < instance.capacity(school) {
                return false;
            }
            if roster.iter().any(|&j| instance.prioritizes(school, i, j)) {
                return false;
            }
        }
    }
    true
}

/// All Pareto-undominated complete matchings.
pub fn pareto_frontier(instance: &Instance) -> Result<Vec<Matching>, OracleError> {
    let result = enumerate_all(instance)?;
    Ok(result.frontier.iter().map(|&k| result.matchings[k].matching.clone()).collect())
}

/// Min-cost assignment by the classical matrix-reduction loop: reduce rows,
/// reduce columns, then alternate between matching on zeros and shifting the
/// minimum uncovered entry until a complete zero assignment appears. Kept
/// deliberately separate from (and structurally unlike) the potentials
/// solver so the two can certify each other.
pub fn reference_hungarian(matrix: &CostMatrix) -> Assignment {
    let n = matrix.n();
    if n == 0 {
        return Assignment { permutation: Vec::new(), total_cost: BigUint::ZERO };
    }
    let mut a: Vec<Vec<BigUint>> =
        (0..n).map(|r| (0..n).map(|c| matrix.entry(r, c).clone()).collect()).collect();

    // row reduction
    for row in a.iter_mut() {
        let min = row.iter().min().unwrap().clone();
        for cell in row.iter_mut() {
            *cell -= &min;
        }
    }
    // column reduction
    for c in 0..n {
        let min = (0..n).map(|r| a[r][c].clone()).min().unwrap();
        for row in a.iter_mut() {
            row[c] -= &min;
        }
    }

    loop {
        let zero_adj: Vec<Vec<usize>> = (0..n)
            .map(|r| (0..n).filter(|&c| a[r][c] == BigUint::ZERO).collect())
            .collect();
        let (size, row_match, col_match) = kuhn_max_matching(&zero_adj, n);
        if size == n {
            let permutation: Vec<usize> = row_match.into_iter().map(|c| c.unwrap()).collect();
            let total_cost =
                permutation.iter().enumerate().map(|(r, &c)| matrix.entry(r, c)).sum();
            return Assignment { permutation, total_cost };
        }

        // König cover: alternate from the unmatched rows across zero edges
        let mut row_marked = vec![false; n];
        let mut col_marked = vec![false; n];
        let mut queue: Vec<usize> =
            (0..n).filter(|&r| row_match[r].is_none()).collect();
        for &r in &queue {
            row_marked[r] = true;
        }
        while let Some(r) = queue.pop() {
            for &c in &zero_adj[r] {
                if !col_marked[c] {
                    col_marked[c] = true;
                    if let Some(r2) = col_match[c] {
                        if !row_marked[r2] {
                            row_marked[r2] = true;
                            queue.push(r2);
                        }
                    }
                }
            }
        }

        // smallest entry outside the cover; strictly positive by construction
        let mut delta: Option<BigUint> = None;
        for r in 0..n {
            for c in 0..n {
                if row_marked[r] && !col_marked[c] {
                    let v = &a[r][c];
                    if delta.as_ref().is_none_or(|d| v < d) {
                        delta = Some(v.clone());
                    }
                }
            }
        }
        let delta = delta.expect("incomplete zero matching leaves uncovered cells");
        for r in 0..n {
            for c in 0..n {
                if row_marked[r] && !col_marked[c] {
                    a[r][c] -= &delta;
                } else if !row_marked[r] && col_marked[c] {
                    a[r][c] += &delta;
                }
            }
        }
    }
}

/// Augmenting-path maximum matching (Kuhn) returning both sides.
fn kuhn_max_matching(
    adj: &[Vec<usize>],
    cols: usize,
) -> (usize, Vec<Option<usize>>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut row_match: Vec<Option<usize>> = vec![None; n];
    let mut col_match: Vec<Option<usize>> = vec![None; cols];
    fn try_augment(
        r: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        row_match: &mut [Option<usize>],
        col_match: &mut [Option<usize>],
    ) -> bool {
        for &c in &adj[r] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            let free = match col_match[c] {
                None => true,
                Some(r2) => try_augment(r2, adj, seen, row_match, col_match),
            };
            if free {
                row_match[r] = Some(c);
                col_match[c] = Some(r);
                return true;
            }
        }
        false
    }
    let mut size = 0;
    for r in 0..n {
        let mut seen = vec![false; cols];
        if try_augment(r, adj, &mut seen, &mut row_match, &mut col_match) {
            size += 1;
        }
    }
    (size, row_match, col_match)
}
