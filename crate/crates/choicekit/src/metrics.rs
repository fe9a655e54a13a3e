//! Matching and profile diagnostics: preference index, priority index,
//! exponential rank index, profile rank, rank compatibility, priority
//! violations, stability, and Pareto dominance.
//!
//! All functions are pure reads over immutable inputs. Index sums run over
//! assigned students only; reports carry an explicit unassigned count so
//! callers can refuse to compare matchings that strand different numbers of
//! students.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use thiserror::Error;

use crate::model::{Instance, Matching, School, Student};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("student {student:?} is assigned to {school:?}, which they did not rank")]
    UnrankedAssignment { student: String, school: String },
    #[error("student {student:?} is assigned to {school:?}, which does not prioritize them")]
    UnprioritizedAssignment { student: String, school: String },
    #[error("school {school:?} is ranked by no student; profile rank is undefined")]
    UncoveredSchool { school: String },
    #[error("operation requires an equal number of students and schools (got {students}x{schools})")]
    NonSquare { students: usize, schools: usize },
    #[error("operation requires unit capacities; school {school:?} has capacity {capacity}")]
    NonUnitCapacity { school: String, capacity: u32 },
}

/// One priority violation: `violator` holds a seat at `school` that
/// `violated` prefers to their own assignment and is entitled to by priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PriorityViolation {
    pub violated: Student,
    pub violator: Student,
    pub school: School,
}

/// Everything the toolkit knows about one matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexReport {
    /// Sum over assigned students of (preference tier - 1).
    pub mu: u64,
    /// Sum over assigned students of n^tier, n = number of students.
    pub omega: BigUint,
    /// School-side analogue of `mu`; `None` when some assigned student is
    /// missing from their school's priority tiers.
    pub priority_index: Option<u64>,
    /// 1-based preference tier of each student's assignment; `None` for
    /// unassigned students.
    pub per_student_rank: Vec<Option<u32>>,
    pub violations: Vec<PriorityViolation>,
    pub stable: bool,
    pub unassigned: usize,
}

/// Rank structure of a preference profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankProfile {
    /// Smallest `r` such that every school appears within the top `r` tiers
    /// of some student.
    pub rank: u32,
    /// `marginal_sets[a]` holds the schools first introduced at tier `a+1`;
    /// the sets partition the school set and the last one is nonempty.
    pub marginal_sets: Vec<BTreeSet<School>>,
    /// True when a capacity-respecting matching exists that assigns every
    /// student within the profile rank.
    pub compatible: bool,
}

/// Preference reverence index: Σ (tier of assigned school − 1) over assigned
/// students. Lower honors preferences better; 0 means everyone got a first
/// choice.
pub fn preference_index(instance: &Instance, matching: &Matching) -> Result<u64, MetricError> {
    let mut total = 0u64;
    for (student, school) in matching.iter() {
        if let Some(school) = school {
            let rank = rank_or_err(instance, student, school)?;
            total += rank as u64 - 1;
        }
    }
    Ok(total)
}

/// Priority reverence index: Σ (priority tier of assigned student − 1) over
/// assigned students.
pub fn priority_index(instance: &Instance, matching: &Matching) -> Result<u64, MetricError> {
    let mut total = 0u64;
    for (student, school) in matching.iter() {
        if let Some(school) = school {
            let rank = instance.priority_rank(school, student).ok_or_else(|| {
                MetricError::UnprioritizedAssignment {
                    student: instance.student_id(student).to_string(),
                    school: instance.school_id(school).to_string(),
                }
            })?;
            total += rank as u64 - 1;
        }
    }
    Ok(total)
}

/// Exponential rank index: Σ n^(tier of assigned school) over assigned
/// students, with n the total number of students. Exact integer arithmetic;
/// the terms overflow machine words already at modest sizes.
pub fn omega_index(instance: &Instance, matching: &Matching) -> Result<BigUint, MetricError> {
    let n = BigUint::from(instance.n_students());
    let mut total = BigUint::ZERO;
    for (student, school) in matching.iter() {
        if let Some(school) = school {
            let rank = rank_or_err(instance, student, school)?;
            total += n.pow(rank);
        }
    }
    Ok(total)
}

fn rank_or_err(instance: &Instance, student: Student, school: School) -> Result<u32, MetricError> {
    instance.rank_of(student, school).ok_or_else(|| MetricError::UnrankedAssignment {
        student: instance.student_id(student).to_string(),
        school: instance.school_id(school).to_string(),
    })
}

/// Computes the profile rank and the marginal school sets, and decides
/// whether the profile is rank-compatible. Errors when some school is ranked
/// by no student (the rank would never close).
pub fn profile_rank(instance: &Instance) -> Result<RankProfile, MetricError> {
    let m = instance.n_schools();
    // first_level[s] = smallest tier at which any student ranks s
    let mut first_level: Vec<Option<u32>> = vec![None; m];
    for student in instance.students() {
        for (t, tier) in instance.preference_tiers(student).iter().enumerate() {
            for &School(s) in tier {
                let level = t as u32 + 1;
                if first_level[s].is_none_or(|cur| level < cur) {
                    first_level[s] = Some(level);
                }
            }
        }
    }
    for (s, level) in first_level.iter().enumerate() {
        if level.is_none() {
            return Err(MetricError::UncoveredSchool {
                school: instance.school_id(School(s)).to_string(),
            });
        }
    }
    let rank = first_level.iter().map(|l| l.unwrap()).max().unwrap_or(0);
    let mut marginal_sets = vec![BTreeSet::new(); rank as usize];
    for (s, level) in first_level.iter().enumerate() {
        marginal_sets[level.unwrap() as usize - 1].insert(School(s));
    }
    let compatible = rank_limited_matching_exists(instance, rank);
    Ok(RankProfile { rank, marginal_sets, compatible })
}

/// True iff every student is assigned within the profile rank.
pub fn is_rank_compatible(instance: &Instance, matching: &Matching) -> Result<bool, MetricError> {
    let profile = profile_rank(instance)?;
    for (student, school) in matching.iter() {
        match school {
            None => return Ok(false),
            Some(school) => {
                let rank = rank_or_err(instance, student, school)?;
                if rank > profile.rank {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// True iff some capacity-respecting matching assigns every student a school
/// within the profile rank.
pub fn profile_is_rank_compatible(instance: &Instance) -> Result<bool, MetricError> {
    Ok(profile_rank(instance)?.compatible)
}

/// Decides existence of a matching that covers all students using only
/// (student, school) edges with tier ≤ `rank`, by maximum bipartite matching
/// over seat-expanded columns (Hopcroft–Karp).
fn rank_limited_matching_exists(instance: &Instance, rank: u32) -> bool {
    let n = instance.n_students();
    let mut seat_of_school = Vec::new();
    for school in instance.schools() {
        for _ in 0..instance.capacity(school) {
            seat_of_school.push(school);
        }
    }
    let adj: Vec<Vec<usize>> = instance
        .students()
        .map(|i| {
            seat_of_school
                .iter()
                .enumerate()
                .filter(|(_, &s)| instance.rank_of(i, s).is_some_and(|r| r <= rank))
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    max_bipartite_matching(&adj, seat_of_school.len()) == n
}

/// Hopcroft–Karp maximum matching size for a bipartite graph given as
/// left-vertex adjacency lists over `right` right vertices.
pub(crate) fn max_bipartite_matching(adj: &[Vec<usize>], right: usize) -> usize {
    const NIL: usize = usize::MAX;
    let n = adj.len();
    let mut match_l = vec![NIL; n];
    let mut match_r = vec![NIL; right];
    let mut dist = vec![0u32; n];
    let mut size = 0;

    loop {
        // BFS layers from free left vertices
        let mut queue = std::collections::VecDeque::new();
        for u in 0..n {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match match_r[v] {
                    NIL => found = true,
                    w => {
                        if dist[w] == u32::MAX {
                            dist[w] = dist[u] + 1;
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        if !found {
            return size;
        }
        fn dfs(
            u: usize,
            adj: &[Vec<usize>],
            dist: &mut [u32],
            match_l: &mut [usize],
            match_r: &mut [usize],
        ) -> bool {
            for k in 0..adj[u].len() {
                let v = adj[u][k];
                let w = match_r[v];
                if w == NIL || (dist[w] == dist[u] + 1 && dfs(w, adj, dist, match_l, match_r)) {
                    match_l[u] = v;
                    match_r[v] = u;
                    return true;
                }
            }
            dist[u] = u32::MAX;
            false
        }
        for u in 0..n {
            if match_l[u] == NIL && dfs(u, adj, &mut dist, &mut match_l, &mut match_r) {
                size += 1;
            }
        }
    }
}

/// Lower and upper preference-index bounds derived from the marginal school
/// sets. Requires a square instance with unit capacities. The lower bound
/// holds for every complete matching; the upper bound only for
/// rank-compatible ones.
pub fn mu_bounds(instance: &Instance) -> Result<(u64, u64), MetricError> {
    let (n, m) = (instance.n_students(), instance.n_schools());
    if n != m {
        return Err(MetricError::NonSquare { students: n, schools: m });
    }
    for school in instance.schools() {
        let capacity = instance.capacity(school);
        if capacity != 1 {
            return Err(MetricError::NonUnitCapacity {
                school: instance.school_id(school).to_string(),
                capacity,
            });
        }
    }
    let profile = profile_rank(instance)?;
    let lower = profile
        .marginal_sets
        .iter()
        .enumerate()
        .map(|(a, set)| a as u64 * set.len() as u64)
        .sum();
    let upper = m as u64 * profile.rank as u64 - m as u64;
    Ok((lower, upper))
}

/// All triples (violated, violator, school): the violator holds a seat at a
/// school the violated student strictly prefers to their own assignment and
/// where the violated student has strictly higher priority. Sorted by
/// (violated, school, violator) dense indices.
pub fn priority_violations(instance: &Instance, matching: &Matching) -> Vec<PriorityViolation> {
    let mut out = Vec::new();
    for (i, assigned_i) in matching.iter() {
        for school in instance.schools() {
            if !instance.prefers(i, school, assigned_i) {
                continue;
            }
            for j in matching.roster(school) {
                if j != i && instance.prioritizes(school, i, j) {
                    out.push(PriorityViolation { violated: i, violator: j, school });
                }
            }
        }
    }
    out.sort_by_key(|v| (v.violated, v.school, v.violator));
    out
}

/// Students whose priority is violated at least once (a student violated by
/// several others counts once).
pub fn violated_students(instance: &Instance, matching: &Matching) -> BTreeSet<Student> {
    priority_violations(instance, matching).into_iter().map(|v| v.violated).collect()
}

/// A matching is stable when it produces no priority violations and no
/// student sits below a preferred school with an open seat.
pub fn is_stable(instance: &Instance, matching: &Matching) -> bool {
    if !priority_violations(instance, matching).is_empty() {
        return false;
    }
    no_justified_envy_of_open_seats(instance, matching)
}

fn no_justified_envy_of_open_seats(instance: &Instance, matching: &Matching) -> bool {
    let mut load = vec![0u32; instance.n_schools()];
    for (_, school) in matching.iter() {
        if let Some(School(s)) = school {
            load[s] += 1;
        }
    }
    for (i, assigned) in matching.iter() {
        for school in instance.schools() {
            let School(s) = school;
            if load[s] < instance.capacity(school) && instance.prefers(i, school, assigned) {
                return false;
            }
        }
    }
    true
}

/// True iff `better` Pareto dominates `worse`: weakly preferred by every
/// student and strictly preferred by at least one. Unassigned compares below
/// any ranked school; a school the student did not rank compares like
/// unassigned.
pub fn pareto_dominates(instance: &Instance, better: &Matching, worse: &Matching) -> bool {
    let mut strict = false;
    for (i, b) in better.iter() {
        let w = worse.school_of(i);
        let rb = comparison_rank(instance, i, b);
        let rw = comparison_rank(instance, i, w);
        if rb > rw {
            return false;
        }
        if rb < rw {
            strict = true;
        }
    }
    strict
}

fn comparison_rank(instance: &Instance, student: Student, school: Option<School>) -> u32 {
    school.and_then(|s| instance.rank_of(student, s)).unwrap_or(u32::MAX)
}

/// Builds the full report for one matching. The preference-side indices must
/// be computable (every assigned student ranks their school); the priority
/// index degrades to `None` when priorities do not cover the assignment.
pub fn index_report(instance: &Instance, matching: &Matching) -> Result<IndexReport, MetricError> {
    let mu = preference_index(instance, matching)?;
    let omega = omega_index(instance, matching)?;
    let priority = priority_index(instance, matching).ok();
    let per_student_rank = matching
        .iter()
        .map(|(i, s)| s.and_then(|s| instance.rank_of(i, s)))
        .collect();
    let violations = priority_violations(instance, matching);
    let stable = violations.is_empty() && no_justified_envy_of_open_seats(instance, matching);
    Ok(IndexReport {
        mu,
        omega,
        priority_index: priority,
        per_student_rank,
        violations,
        stable,
        unassigned: matching.unassigned_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{fixture, strict_instance};

    fn matching_by_ids(instance: &Instance, pairs: &[(&str, &str)]) -> Matching {
        let mut assigned = vec![None; instance.n_students()];
        for (i, s) in pairs {
            let Student(idx) = instance.find_student(i).unwrap();
            assigned[idx] = Some(instance.find_school(s).unwrap());
        }
        Matching::new(instance, assigned).unwrap()
    }

    #[test]
    fn indices_on_the_priority_conflict_fixture() {
        let inst = fixture("roth_conflict");
        let stable = matching_by_ids(&inst, &[("i1", "s1"), ("i2", "s2"), ("i3", "s3")]);
        let efficient = matching_by_ids(&inst, &[("i1", "s2"), ("i2", "s1"), ("i3", "s3")]);

        assert_eq!(preference_index(&inst, &stable).unwrap(), 4);
        assert_eq!(priority_index(&inst, &stable).unwrap(), 2);
        assert_eq!(preference_index(&inst, &efficient).unwrap(), 2);
        assert_eq!(priority_index(&inst, &efficient).unwrap(), 5);

        let violations = priority_violations(&inst, &efficient);
        let i3 = inst.find_student("i3").unwrap();
        let i2 = inst.find_student("i2").unwrap();
        let s1 = inst.find_school("s1").unwrap();
        assert_eq!(violations, vec![PriorityViolation { violated: i3, violator: i2, school: s1 }]);
        assert_eq!(violated_students(&inst, &efficient), BTreeSet::from([i3]));

        assert!(is_stable(&inst, &stable));
        assert!(!is_stable(&inst, &efficient));
        assert!(priority_violations(&inst, &stable).is_empty());

        assert!(pareto_dominates(&inst, &efficient, &stable));
        assert!(!pareto_dominates(&inst, &stable, &stable));
    }

    #[test]
    fn all_first_choices_scores_zero() {
        let inst = strict_instance(
            &["a", "b"],
            &[("x", 1), ("y", 1)],
            &[&["x", "y"], &["y", "x"]],
            &[&["a", "b"], &["b", "a"]],
        );
        let m = matching_by_ids(&inst, &[("a", "x"), ("b", "y")]);
        assert_eq!(preference_index(&inst, &m).unwrap(), 0);
        assert_eq!(priority_index(&inst, &m).unwrap(), 0);
        assert!(is_stable(&inst, &m));
    }

    #[test]
    fn single_student_single_school_is_stable() {
        let inst = strict_instance(&["a"], &[("x", 1)], &[&["x"]], &[&["a"]]);
        let m = matching_by_ids(&inst, &[("a", "x")]);
        assert!(is_stable(&inst, &m));
        assert_eq!(preference_index(&inst, &m).unwrap(), 0);
        assert_eq!(omega_index(&inst, &m).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn omega_on_the_rank_tradeoff_fixture() {
        let inst = fixture("omega_pair_3x3");
        let m1 = matching_by_ids(&inst, &[("i1", "s3"), ("i2", "s2"), ("i3", "s1")]);
        let m2 = matching_by_ids(&inst, &[("i1", "s2"), ("i2", "s3"), ("i3", "s1")]);
        assert_eq!(omega_index(&inst, &m1).unwrap(), BigUint::from(15u32));
        assert_eq!(preference_index(&inst, &m1).unwrap(), 1);
        assert_eq!(omega_index(&inst, &m2).unwrap(), BigUint::from(27u32));
        assert_eq!(preference_index(&inst, &m2).unwrap(), 3);
        assert!(pareto_dominates(&inst, &m1, &m2));
    }

    #[test]
    fn omega_term_is_exact_at_rank_30_of_30() {
        // one student out of 30 lands on their 30th choice; the term must be
        // exactly 30^30 with no rounding
        let ids: Vec<String> = (1..=30).map(|k| format!("i{k}")).collect();
        let school_ids: Vec<String> = (1..=30).map(|k| format!("s{k}")).collect();
        let mut b = Instance::builder();
        for id in &ids {
            b.student(id.clone());
        }
        for sid in &school_ids {
            b.school(sid.clone(), 1);
        }
        // everyone ranks schools in the same order
        for id in &ids {
            b.preferences(id.clone(), school_ids.iter().map(|s| vec![s.clone()]).collect());
        }
        let inst = b.build().unwrap();
        // identity assignment: student k gets school k (rank k)
        let assigned = (0..30).map(|k| Some(School(k))).collect();
        let m = Matching::new(&inst, assigned).unwrap();
        let omega = omega_index(&inst, &m).unwrap();
        let expected: BigUint = (1..=30u32).map(|r| BigUint::from(30u32).pow(r)).sum();
        assert_eq!(omega, expected);
        assert!(omega > BigUint::from(30u32).pow(30));
    }

    #[test]
    fn profile_rank_marginal_sets() {
        let inst = fixture("bounds_4x4");
        let profile = profile_rank(&inst).unwrap();
        assert_eq!(profile.rank, 3);
        let sets: Vec<Vec<&str>> = profile
            .marginal_sets
            .iter()
            .map(|set| set.iter().map(|&s| inst.school_id(s)).collect())
            .collect();
        assert_eq!(sets, vec![vec!["s1", "s2", "s3"], vec![], vec!["s4"]]);
        assert!(profile.compatible);
    }

    #[test]
    fn profile_rank_two_on_the_stability_counterexample() {
        let inst = fixture("rank_vs_stability_4x4");
        let profile = profile_rank(&inst).unwrap();
        assert_eq!(profile.rank, 2);
        assert!(profile.compatible);

        let witness = matching_by_ids(&inst, &[("i1", "s4"), ("i2", "s2"), ("i3", "s3"), ("i4", "s1")]);
        assert!(is_rank_compatible(&inst, &witness).unwrap());
        let stable = matching_by_ids(&inst, &[("i1", "s1"), ("i2", "s2"), ("i3", "s3"), ("i4", "s4")]);
        assert!(!is_rank_compatible(&inst, &stable).unwrap());
    }

    #[test]
    fn distinct_first_choices_have_rank_one() {
        let inst = strict_instance(
            &["a", "b"],
            &[("x", 1), ("y", 1)],
            &[&["x", "y"], &["y", "x"]],
            &[],
        );
        let profile = profile_rank(&inst).unwrap();
        assert_eq!(profile.rank, 1);
        assert!(profile.compatible);
        let m = matching_by_ids(&inst, &[("a", "x"), ("b", "y")]);
        assert!(is_rank_compatible(&inst, &m).unwrap());
        assert_eq!(mu_bounds(&inst).unwrap(), (0, 0));
    }

    #[test]
    fn contested_top_choices_are_not_rank_compatible() {
        // three students share the same top-two schools; the fourth wants the
        // others: rank 2, but no rank-2 matching exists
        let shared: &[&str] = &["s1", "s4", "s3", "s2"];
        let inst = strict_instance(
            &["i1", "i2", "i3", "i4"],
            &[("s1", 1), ("s2", 1), ("s3", 1), ("s4", 1)],
            &[shared, shared, shared, &["s2", "s3", "s1", "s4"]],
            &[],
        );
        let profile = profile_rank(&inst).unwrap();
        assert_eq!(profile.rank, 2);
        assert!(!profile.compatible);
    }

    #[test]
    fn rank_limits_profile_is_rank_two_compatible() {
        let inst = fixture("rank_limits_5x5");
        let profile = profile_rank(&inst).unwrap();
        assert_eq!(profile.rank, 2);
        assert!(profile.compatible);
    }

    #[test]
    fn uncovered_school_has_no_rank() {
        let inst = strict_instance(
            &["a", "b"],
            &[("x", 1), ("y", 1)],
            &[&["x"], &["x"]],
            &[],
        );
        assert!(matches!(profile_rank(&inst), Err(MetricError::UncoveredSchool { .. })));
    }

    #[test]
    fn mu_bounds_on_the_bounds_fixture() {
        let inst = fixture("bounds_4x4");
        assert_eq!(mu_bounds(&inst).unwrap(), (2, 8));
    }

    #[test]
    fn mu_bounds_rejects_non_square() {
        let inst = strict_instance(&["a"], &[("x", 1), ("y", 1)], &[&["x", "y"]], &[]);
        assert!(matches!(mu_bounds(&inst), Err(MetricError::NonSquare { .. })));
    }

    #[test]
    fn one_student_violated_by_two_counts_once() {
        // c is entitled to x (top priority) but sits at z while a and b hold x
        let inst = strict_instance(
            &["a", "b", "c"],
            &[("x", 2), ("z", 1)],
            &[&["x", "z"], &["x", "z"], &["x", "z"]],
            &[&["c", "a", "b"], &["a", "b", "c"]],
        );
        let m = matching_by_ids(&inst, &[("a", "x"), ("b", "x"), ("c", "z")]);
        let violations = priority_violations(&inst, &m);
        assert_eq!(violations.len(), 2);
        assert_eq!(violated_students(&inst, &m).len(), 1);
    }

    #[test]
    fn unfilled_preferred_school_breaks_stability() {
        // no priority violation, but a strictly preferred seat stays open
        let inst = strict_instance(
            &["a"],
            &[("x", 1), ("y", 1)],
            &[&["x", "y"]],
            &[&["a"], &["a"]],
        );
        let m = matching_by_ids(&inst, &[("a", "y")]);
        assert!(priority_violations(&inst, &m).is_empty());
        assert!(!is_stable(&inst, &m));
    }

    #[test]
    fn unassigned_student_with_open_ranked_seat_is_unstable() {
        let inst = strict_instance(&["a"], &[("x", 1)], &[&["x"]], &[&["a"]]);
        let m = Matching::empty(&inst);
        assert!(!is_stable(&inst, &m));
    }

    #[test]
    fn unranked_assignment_errors() {
        let inst = strict_instance(&["a"], &[("x", 1), ("y", 1)], &[&["x"]], &[]);
        let m = matching_by_ids(&inst, &[("a", "y")]);
        assert!(matches!(
            preference_index(&inst, &m),
            Err(MetricError::UnrankedAssignment { .. })
        ));
        assert!(matches!(priority_index(&inst, &m), Err(MetricError::UnprioritizedAssignment { .. })));
    }

    #[test]
    fn report_carries_unassigned_count_and_optional_priority() {
        let inst = strict_instance(&["a", "b"], &[("x", 1)], &[&["x"], &["x"]], &[]);
        let m = matching_by_ids(&inst, &[("a", "x")]);
        let report = index_report(&inst, &m).unwrap();
        assert_eq!(report.unassigned, 1);
        assert_eq!(report.priority_index, None);
        assert_eq!(report.per_student_rank, vec![Some(1), None]);
    }
}
