//! Ranked assignment enumeration: a lazy stream of perfect assignments in
//! nondecreasing total cost, via Murty's partitioning of the solution space
//! into disjoint subproblems with forced and forbidden cells.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigUint;
use thiserror::Error;

use super::{permutation_cost, solve_masked, Assignment, CostMatrix};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("more than {cap} minimum-cost assignments exist")]
pub struct CapExceeded {
    pub cap: usize,
}

struct Node {
    cost: BigUint,
    seq: u64,
    forced: Vec<(usize, usize)>,
    forbidden: Vec<(usize, usize)>,
    perm: Vec<usize>,
}

// min-heap on (cost, insertion order); insertion order keeps equal-cost
// yields deterministic
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.cmp(&self.cost).then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.seq == other.seq
    }
}
impl Eq for Node {}

/// Lazily yields every perfect assignment of the matrix exactly once, in
/// nondecreasing total cost. Draining it fully enumerates all n!
/// permutations. Single-consumer; independent streams may run in parallel.
pub struct AssignmentStream<'a> {
    matrix: &'a CostMatrix,
    heap: BinaryHeap<Node>,
    next_seq: u64,
}

/// Opens a ranked stream over all perfect assignments of the matrix.
pub fn k_best(matrix: &CostMatrix) -> AssignmentStream<'_> {
    let mut stream = AssignmentStream { matrix, heap: BinaryHeap::new(), next_seq: 0 };
    stream.push_solved(Vec::new(), Vec::new());
    stream
}

impl AssignmentStream<'_> {
    /// Solves the subproblem and enqueues it when feasible.
    fn push_solved(&mut self, forced: Vec<(usize, usize)>, forbidden: Vec<(usize, usize)>) {
        let n = self.matrix.n();
        let free_rows: Vec<usize> =
            (0..n).filter(|r| !forced.iter().any(|&(fr, _)| fr == *r)).collect();
        let free_cols: Vec<usize> =
            (0..n).filter(|c| !forced.iter().any(|&(_, fc)| fc == *c)).collect();
        let sub = solve_masked(
            free_rows.len(),
            |r, c| self.matrix.entry(free_rows[r], free_cols[c]).clone(),
            |r, c| !forbidden.contains(&(free_rows[r], free_cols[c])),
        );
        let Some(sub_perm) = sub else { return };
        let mut perm = vec![usize::MAX; n];
        for &(r, c) in &forced {
            perm[r] = c;
        }
        for (sub_r, &sub_c) in sub_perm.iter().enumerate() {
            perm[free_rows[sub_r]] = free_cols[sub_c];
        }
        let cost = permutation_cost(self.matrix, &perm);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Node { cost, seq, forced, forbidden, perm });
    }
}

impl Iterator for AssignmentStream<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let node = self.heap.pop()?;
        // partition the remaining solution space around the yielded
        // assignment: child k forces the first k-1 free rows to their
        // yielded columns and forbids the k-th pairing
        let free_rows: Vec<usize> = (0..self.matrix.n())
            .filter(|r| !node.forced.iter().any(|&(fr, _)| fr == *r))
            .collect();
        for (k, &row) in free_rows.iter().enumerate() {
            let mut forced = node.forced.clone();
            forced.extend(free_rows[..k].iter().map(|&r| (r, node.perm[r])));
            let mut forbidden = node.forbidden.clone();
            forbidden.push((row, node.perm[row]));
            self.push_solved(forced, forbidden);
        }
        Some(Assignment { permutation: node.perm, total_cost: node.cost })
    }
}

/// All assignments attaining the minimum total cost, in stream order.
/// Errors when more than `cap` optimal assignments exist, signalling
/// combinatorial blowup to the caller.
pub fn enumerate_min_cost(matrix: &CostMatrix, cap: usize) -> Result<Vec<Assignment>, CapExceeded> {
    let mut stream = k_best(matrix);
    let Some(first) = stream.next() else { return Ok(Vec::new()) };
    let optimum = first.total_cost.clone();
    let mut out = vec![first];
    for assignment in stream {
        if assignment.total_cost > optimum {
            break;
        }
        if out.len() == cap {
            return Err(CapExceeded { cap });
        }
        out.push(assignment);
    }
    Ok(out)
}
