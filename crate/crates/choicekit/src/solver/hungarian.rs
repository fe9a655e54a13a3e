//! Exact min-cost perfect assignment on a square matrix with an optional
//! cell mask, plus a deterministic tie-break pass.
//!
//! The solver is the O(n³) potentials/augmenting-path variant, generic over
//! the cost type so that small instances run on machine integers while
//! huge-entry matrices fall back to arbitrary-precision integers with
//! identical results. Infeasible cells are handled by the mask rather than a
//! numeric infinity.

use std::ops::{AddAssign, SubAssign};

use num_traits::Zero;

pub(crate) trait SolverCost:
    Clone + Ord + Zero + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self>
{
}

impl<T> SolverCost for T where
    T: Clone + Ord + Zero + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self>
{
}

struct Duals<C> {
    perm: Vec<usize>,
    row_potential: Vec<C>,
    col_potential: Vec<C>,
}

/// Min-cost perfect matching over allowed cells; `None` when the mask admits
/// no perfect matching. Returns an optimal permutation together with the
/// optimal dual potentials.
fn solve_with_duals<C, F, A>(n: usize, cost: &F, allowed: &A) -> Option<Duals<C>>
where
    C: SolverCost,
    F: Fn(usize, usize) -> C,
    A: Fn(usize, usize) -> bool,
{
    // 1-based arrays; row 0 / column 0 are sentinels for the scan front.
    let mut u = vec![C::zero(); n + 1];
    let mut v = vec![C::zero(); n + 1];
    let mut matched_row = vec![0usize; n + 1]; // per column; 0 = free
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_reduced: Vec<Option<C>> = vec![None; n + 1];
        let mut committed = vec![false; n + 1];
        loop {
            committed[j0] = true;
            let i0 = matched_row[j0];
            let mut delta: Option<C> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if committed[j] {
                    continue;
                }
                if allowed(i0 - 1, j - 1) {
                    let mut cur = cost(i0 - 1, j - 1);
                    cur -= &u[i0];
                    cur -= &v[j];
                    if min_reduced[j].as_ref().is_none_or(|m| cur < *m) {
                        min_reduced[j] = Some(cur);
                        way[j] = j0;
                    }
                }
                if let Some(m) = &min_reduced[j] {
                    if delta.as_ref().is_none_or(|d| m < d) {
                        delta = Some(m.clone());
                        j1 = j;
                    }
                }
            }
            // every reachable column exhausted without a free one
            let delta = delta?;
            for j in 0..=n {
                if committed[j] {
                    u[matched_row[j]] += &delta;
                    v[j] -= &delta;
                } else if let Some(m) = &mut min_reduced[j] {
                    *m -= &delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    Some(Duals { perm, row_potential: u[1..].to_vec(), col_potential: v[1..].to_vec() })
}

/// Min-cost perfect matching over allowed cells, canonicalized: among all
/// optimal permutations, returns the lexicographically smallest by (row,
/// column) index. `None` when no perfect matching exists on the mask.
///
/// Canonicalization is exact: with the optimal duals in hand, every optimal
/// permutation consists solely of zero-reduced-cost cells, and every perfect
/// matching on those cells attains the optimum. Fixing rows in order to the
/// smallest such column that still admits a perfect completion yields the
/// lexicographic minimum.
pub(crate) fn canonical_min_cost_perm<C, F, A>(n: usize, cost: F, allowed: A) -> Option<Vec<usize>>
where
    C: SolverCost,
    F: Fn(usize, usize) -> C,
    A: Fn(usize, usize) -> bool,
{
    if n == 0 {
        return Some(Vec::new());
    }
    let Duals { mut perm, row_potential, col_potential } = solve_with_duals(n, &cost, &allowed)?;

    let tight: Vec<Vec<usize>> = (0..n)
        .map(|r| {
            (0..n)
                .filter(|&c| {
                    allowed(r, c) && {
                        let mut reduced = cost(r, c);
                        reduced -= &row_potential[r];
                        reduced -= &col_potential[c];
                        reduced.is_zero()
                    }
                })
                .collect()
        })
        .collect();

    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (r, &c) in perm.iter().enumerate() {
        owner[c] = Some(r);
    }
    let mut fixed_col = vec![false; n];
    for r in 0..n {
        for idx in 0..tight[r].len() {
            let c = tight[r][idx];
            if fixed_col[c] {
                continue;
            }
            if perm[r] == c {
                break; // nothing smaller is reachable
            }
            // Tentatively give c to r and reroute the displaced row through
            // the remaining tight cells.
            let displaced = owner[c].expect("perfect matching owns every column");
            let freed = perm[r];
            perm[r] = c;
            owner[c] = Some(r);
            owner[freed] = None;
            let mut visited = vec![false; n];
            visited[c] = true;
            if reroute(displaced, &tight, &fixed_col, &mut visited, &mut perm, &mut owner) {
                break;
            }
            perm[r] = freed;
            owner[freed] = Some(r);
            owner[c] = Some(displaced);
        }
        fixed_col[perm[r]] = true;
    }
    Some(perm)
}

/// Kuhn-style augmenting search on the tight cells; mutates the matching
/// only when a full alternating path to a free column is found.
fn reroute(
    row: usize,
    tight: &[Vec<usize>],
    fixed_col: &[bool],
    visited: &mut [bool],
    perm: &mut [usize],
    owner: &mut [Option<usize>],
) -> bool {
    for &c in &tight[row] {
        if fixed_col[c] || visited[c] {
            continue;
        }
        visited[c] = true;
        let next = owner[c];
        let ok = match next {
            None => true,
            Some(next) => reroute(next, tight, fixed_col, visited, perm, owner),
        };
        if ok {
            perm[row] = c;
            owner[c] = Some(row);
            return true;
        }
    }
    false
}
