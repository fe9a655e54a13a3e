//! Exact square assignment over instance-derived cost matrices: seat
//! expansion, dummy padding, min-cost solving, all-optima enumeration, and
//! ranked assignment streams.
//!
//! Costs are nonnegative arbitrary-precision integers throughout; the
//! rank-exponential rule produces entries like n^n that no machine word
//! holds. Internally the solver runs on i128 whenever the entries allow it
//! and on big integers otherwise, with identical output either way.

mod hungarian;
mod kbest;

pub use kbest::{enumerate_min_cost, k_best, AssignmentStream, CapExceeded};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use thiserror::Error;

use crate::model::{Instance, Matching, School, Student};

/// What a row of the cost matrix stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowMeta {
    /// A real student.
    Student(Student),
    /// Padding for an open seat; costs are all zero.
    Dummy,
}

/// What a column of the cost matrix stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColMeta {
    /// One seat of a real school; `ordinal` counts seats within the school.
    Seat { school: School, ordinal: u32 },
    /// Padding for a missing seat; a real student landing here stays
    /// unassigned.
    Dummy,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CostMatrixError {
    #[error("cost matrix must be square and non-ragged")]
    NotSquare,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MatrixBuildError {
    #[error("student {student:?} does not rank school {school:?}; complete the preferences first")]
    IncompletePreferences { student: String, school: String },
    #[error("school {school:?} does not prioritize student {student:?}; the total-cost rule needs complete priorities")]
    IncompletePriorities { school: String, student: String },
}

/// Square nonnegative integer cost matrix with row/column provenance.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<BigUint>, // row-major
    row_meta: Vec<RowMeta>,
    col_meta: Vec<ColMeta>,
}

impl CostMatrix {
    /// Wraps a raw square matrix; row `r` is treated as student `r` and
    /// column `c` as the single seat of school `c`.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self, CostMatrixError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CostMatrixError::NotSquare);
        }
        let entries = rows.into_iter().flatten().map(BigUint::from).collect();
        Ok(CostMatrix {
            n,
            entries,
            row_meta: (0..n).map(|r| RowMeta::Student(Student(r))).collect(),
            col_meta: (0..n).map(|c| ColMeta::Seat { school: School(c), ordinal: 0 }).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigUint {
        &self.entries[row * self.n + col]
    }

    pub fn row_meta(&self) -> &[RowMeta] {
        &self.row_meta
    }

    pub fn col_meta(&self) -> &[ColMeta] {
        &self.col_meta
    }
}

/// One perfect assignment on a cost matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Column selected for each row.
    pub permutation: Vec<usize>,
    pub total_cost: BigUint,
}

/// Cost rule used to embed an instance into a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostRule {
    /// tier − 1: the solved total equals the preference index of the decoded
    /// matching (when nobody lands on a dummy column).
    Index,
    /// n^tier with n the student count: minimizing the total enforces rank
    /// compatibility.
    RankExponential,
    /// weight_pref·tier + weight_prio·(priority tier), both raw (1-based).
    /// Weights are nonnegative rationals (numerator, denominator), realized
    /// by scaling every entry with the common denominator so arithmetic
    /// stays exact.
    TotalCost { weight_pref: (u64, u64), weight_prio: (u64, u64) },
}

/// Embeds an instance into a square cost matrix: one row per student, one
/// column per seat (capacity-many per school), padded with dummy rows (open
/// seats, zero cost) or dummy columns (unassigned slots, prohibitive cost)
/// to square.
pub fn build_cost_matrix(instance: &Instance, rule: &CostRule) -> Result<CostMatrix, MatrixBuildError> {
    let n_students = instance.n_students();
    let mut seats: Vec<(School, u32)> = Vec::new();
    for school in instance.schools() {
        for ordinal in 0..instance.capacity(school) {
            seats.push((school, ordinal));
        }
    }
    let dim = n_students.max(seats.len());

    // real entries first; the dummy-column sentinel depends on their maximum
    let mut real_rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_students);
    for student in instance.students() {
        let mut row = Vec::with_capacity(seats.len());
        for &(school, _) in &seats {
            row.push(rule_entry(instance, rule, student, school)?);
        }
        real_rows.push(row);
    }
    let max_real = real_rows.iter().flatten().max().cloned().unwrap_or_default();
    // strictly dearer than any full assignment of real seats, so a real
    // student is pushed onto a dummy column only when seats run out
    let dummy_col_cost = max_real * BigUint::from(dim) + BigUint::from(1u32);

    let mut entries = Vec::with_capacity(dim * dim);
    for row in 0..dim {
        for col in 0..dim {
            entries.push(match (real_rows.get(row), col < seats.len()) {
                (Some(r), true) => r[col].clone(),
                (Some(_), false) => dummy_col_cost.clone(),
                (None, _) => BigUint::ZERO,
            });
        }
    }
    let row_meta = (0..dim)
        .map(|r| if r < n_students { RowMeta::Student(Student(r)) } else { RowMeta::Dummy })
        .collect();
    let col_meta = (0..dim)
        .map(|c| match seats.get(c) {
            Some(&(school, ordinal)) => ColMeta::Seat { school, ordinal },
            None => ColMeta::Dummy,
        })
        .collect();
    Ok(CostMatrix { n: dim, entries, row_meta, col_meta })
}

fn rule_entry(
    instance: &Instance,
    rule: &CostRule,
    student: Student,
    school: School,
) -> Result<BigUint, MatrixBuildError> {
    let rank = instance.rank_of(student, school).ok_or_else(|| {
        MatrixBuildError::IncompletePreferences {
            student: instance.student_id(student).to_string(),
            school: instance.school_id(school).to_string(),
        }
    })?;
    Ok(match rule {
        CostRule::Index => BigUint::from(rank - 1),
        CostRule::RankExponential => BigUint::from(instance.n_students()).pow(rank),
        CostRule::TotalCost { weight_pref, weight_prio } => {
            let prio = instance.priority_rank(school, student).ok_or_else(|| {
                MatrixBuildError::IncompletePriorities {
                    school: instance.school_id(school).to_string(),
                    student: instance.student_id(student).to_string(),
                }
            })?;
            let denom = weight_pref.1.lcm(&weight_prio.1);
            let pref_scale = weight_pref.0 * (denom / weight_pref.1);
            let prio_scale = weight_prio.0 * (denom / weight_prio.1);
            BigUint::from(rank) * pref_scale + BigUint::from(prio) * prio_scale
        }
    })
}

/// Total cost of a permutation against the matrix.
pub(crate) fn permutation_cost(matrix: &CostMatrix, perm: &[usize]) -> BigUint {
    perm.iter().enumerate().map(|(r, &c)| matrix.entry(r, c)).sum()
}

/// Threshold under which all arithmetic stays within i128: entries plus the
/// potentials they induce. Generous headroom on top of n·max_entry.
fn fits_machine_lane(n: usize, max_entry: &BigUint) -> bool {
    let limit = BigUint::from(i128::MAX as u128 >> 8) / BigUint::from(n as u64 + 2);
    *max_entry <= limit
}

/// Canonical min-cost permutation over allowed cells, or `None` when the
/// mask admits no perfect matching.
pub(crate) fn solve_masked<F>(n: usize, entry: impl Fn(usize, usize) -> BigUint, allowed: F) -> Option<Vec<usize>>
where
    F: Fn(usize, usize) -> bool,
{
    if n == 0 {
        return Some(Vec::new());
    }
    let mut max = BigUint::ZERO;
    let mut grid: Vec<BigUint> = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let e = if allowed(r, c) { entry(r, c) } else { BigUint::ZERO };
            if e > max {
                max = e.clone();
            }
            grid.push(e);
        }
    }
    if fits_machine_lane(n, &max) {
        let small: Vec<i128> = grid
            .iter()
            .map(|e| i128::try_from(e).expect("entry bounded by machine-lane check"))
            .collect();
        hungarian::canonical_min_cost_perm(n, |r, c| small[r * n + c], allowed)
    } else {
        let big: Vec<BigInt> = grid.iter().map(|e| BigInt::from(e.clone())).collect();
        hungarian::canonical_min_cost_perm(n, |r, c| big[r * n + c].clone(), allowed)
    }
}

/// Globally min-cost assignment. Deterministic: among optimal permutations
/// it returns the lexicographically smallest by (row, column) index.
pub fn solve_min_cost(matrix: &CostMatrix) -> Assignment {
    let n = matrix.n();
    let perm = solve_masked(n, |r, c| matrix.entry(r, c).clone(), |_, _| true)
        .expect("unmasked square matrix always has a perfect assignment");
    let total_cost = permutation_cost(matrix, &perm);
    Assignment { permutation: perm, total_cost }
}

/// Reads the school-level matching off an assignment: real students keep
/// their seat's school, dummy columns mean unassigned, dummy rows are
/// dropped.
pub fn decode(matrix: &CostMatrix, assignment: &Assignment, instance: &Instance) -> Matching {
    let mut assigned = vec![None; instance.n_students()];
    for (row, &col) in assignment.permutation.iter().enumerate() {
        if let RowMeta::Student(Student(i)) = matrix.row_meta()[row] {
            assigned[i] = match matrix.col_meta()[col] {
                ColMeta::Seat { school, .. } => Some(school),
                ColMeta::Dummy => None,
            };
        }
    }
    Matching::new(instance, assigned)
        .expect("seat expansion caps per-school load at capacity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{fixture, strict_instance};

    #[test]
    fn solves_the_three_by_three_rank_matrix() {
        let m = CostMatrix::from_rows(vec![vec![1, 2, 3], vec![3, 2, 1], vec![3, 1, 2]]).unwrap();
        let a = solve_min_cost(&m);
        assert_eq!(a.total_cost, BigUint::from(3u32));
        assert_eq!(a.permutation, vec![0, 2, 1]);
    }

    #[test]
    fn all_equal_matrix_is_canonical_identity() {
        let m = CostMatrix::from_rows(vec![vec![4; 3]; 3]).unwrap();
        let a = solve_min_cost(&m);
        assert_eq!(a.permutation, vec![0, 1, 2]);
        assert_eq!(a.total_cost, BigUint::from(12u32));
    }

    #[test]
    fn rejects_ragged_matrix() {
        assert_eq!(
            CostMatrix::from_rows(vec![vec![1, 2], vec![1]]),
            Err(CostMatrixError::NotSquare)
        );
    }

    #[test]
    fn index_rule_matches_shifted_ranks() {
        let inst = strict_instance(
            &["i1", "i2", "i3"],
            &[("s1", 1), ("s2", 1), ("s3", 1)],
            &[&["s1", "s2", "s3"], &["s3", "s2", "s1"], &["s2", "s3", "s1"]],
            &[],
        );
        let m = build_cost_matrix(&inst, &CostRule::Index).unwrap();
        assert_eq!(m.n(), 3);
        // the tier matrix minus one in every cell
        let expect = [[0u32, 1, 2], [2, 1, 0], [2, 0, 1]];
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(m.entry(r, c), &BigUint::from(expect[r][c]));
            }
        }
        let a = solve_min_cost(&m);
        assert_eq!(a.total_cost, BigUint::ZERO);
    }

    #[test]
    fn seat_expansion_duplicates_columns() {
        let inst = strict_instance(
            &["a", "b"],
            &[("x", 2)],
            &[&["x"], &["x"]],
            &[],
        );
        let m = build_cost_matrix(&inst, &CostRule::Index).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.col_meta()[0], ColMeta::Seat { school: School(0), ordinal: 0 });
        assert_eq!(m.col_meta()[1], ColMeta::Seat { school: School(0), ordinal: 1 });
        assert_eq!(m.entry(0, 0), m.entry(0, 1));
        let a = solve_min_cost(&m);
        let matching = decode(&m, &a, &inst);
        assert_eq!(matching.roster(School(0)).len(), 2);
    }

    #[test]
    fn scarce_seats_leave_exactly_one_student_unassigned() {
        let inst = strict_instance(
            &["a", "b", "c"],
            &[("x", 1), ("y", 1)],
            &[&["x", "y"], &["x", "y"], &["x", "y"]],
            &[],
        );
        let m = build_cost_matrix(&inst, &CostRule::Index).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.col_meta()[2], ColMeta::Dummy);
        let a = solve_min_cost(&m);
        let matching = decode(&m, &a, &inst);
        assert_eq!(matching.unassigned_count(), 1);
        assert_eq!(matching.roster(School(0)).len(), 1);
        assert_eq!(matching.roster(School(1)).len(), 1);
    }

    #[test]
    fn dummy_rows_signal_open_seats() {
        let inst = strict_instance(&["a"], &[("x", 1), ("y", 1)], &[&["y", "x"]], &[]);
        let m = build_cost_matrix(&inst, &CostRule::Index).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.row_meta()[1], RowMeta::Dummy);
        assert_eq!(m.entry(1, 0), &BigUint::ZERO);
        let a = solve_min_cost(&m);
        let matching = decode(&m, &a, &inst);
        assert_eq!(matching.school_of(Student(0)), inst.find_school("y"));
    }

    #[test]
    fn incomplete_preferences_fail_the_index_rule() {
        let inst = strict_instance(&["a"], &[("x", 1), ("y", 1)], &[&["x"]], &[]);
        assert!(matches!(
            build_cost_matrix(&inst, &CostRule::Index),
            Err(MatrixBuildError::IncompletePreferences { .. })
        ));
    }

    #[test]
    fn rank_exponential_entries_are_exact_powers() {
        let inst = fixture("omega_pair_3x3");
        let m = build_cost_matrix(&inst, &CostRule::RankExponential).unwrap();
        let a = solve_min_cost(&m);
        assert_eq!(a.total_cost, BigUint::from(15u32));
    }

    #[test]
    fn huge_entries_stay_exact() {
        // entries around 30^30 (45 digits, past i128); the solved total must
        // be the exact big-integer sum, not a rounded double
        let base = BigUint::from(30u32).pow(30);
        let inst = strict_instance(
            &["a", "b"],
            &[("x", 1), ("y", 1)],
            &[&["x", "y"], &["x", "y"]],
            &[],
        );
        let m = build_cost_matrix(&inst, &CostRule::Index).unwrap();
        // splice huge entries in via a raw matrix instead
        let raw = CostMatrix {
            n: 2,
            entries: vec![base.clone(), &base + 1u32, &base + 1u32, &base + 3u32],
            row_meta: m.row_meta.clone(),
            col_meta: m.col_meta.clone(),
        };
        let a = solve_min_cost(&raw);
        // identity: base + base+3 = 2·base+3; swap: 2·base+2 — swap wins
        assert_eq!(a.permutation, vec![1, 0]);
        assert_eq!(a.total_cost, &base * 2u32 + 2u32);
    }
}
