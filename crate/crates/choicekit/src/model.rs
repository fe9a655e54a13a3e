//! Domain model: instances (students, schools, capacities, tiered
//! preferences and priorities) and capacity-respecting matchings.
//!
//! Identifiers are opaque strings. Construction assigns each student and
//! school a dense index in input order; those indices define row and column
//! order everywhere downstream, so repeated runs over the same input are
//! reproducible. Instances and matchings are immutable once built.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Dense index of a student (input order).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Student(pub usize);

/// Dense index of a school (input order).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct School(pub usize);

/// One problem found while checking raw instance data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateStudent { id: String },
    DuplicateSchool { id: String },
    UnknownStudent { context: String, id: String },
    UnknownSchool { context: String, id: String },
    /// A school appears in two preference tiers of the same student.
    DuplicateRanking { student: String, school: String },
    /// A student appears in two priority tiers of the same school.
    DuplicatePriority { school: String, student: String },
    NonpositiveCapacity { school: String },
    EmptyTier { context: String },
    /// Distance is negative or not finite.
    BadDistance { student: String, school: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateStudent { id } => write!(f, "duplicate student id {id:?}"),
            Violation::DuplicateSchool { id } => write!(f, "duplicate school id {id:?}"),
            Violation::UnknownStudent { context, id } => {
                write!(f, "unknown student {id:?} in {context}")
            }
            Violation::UnknownSchool { context, id } => {
                write!(f, "unknown school {id:?} in {context}")
            }
            Violation::DuplicateRanking { student, school } => {
                write!(f, "duplicate ranking: student {student:?} lists {school:?} twice")
            }
            Violation::DuplicatePriority { school, student } => {
                write!(f, "duplicate priority: school {school:?} lists {student:?} twice")
            }
            Violation::NonpositiveCapacity { school } => {
                write!(f, "nonpositive capacity for school {school:?}")
            }
            Violation::EmptyTier { context } => write!(f, "empty tier in {context}"),
            Violation::BadDistance { student, school } => {
                write!(f, "bad distance for ({student:?}, {school:?})")
            }
        }
    }
}

/// Raw data failed validation; carries every violation found.
#[derive(Debug, Clone, Error)]
pub struct InvalidInstance(pub Vec<Violation>);

impl fmt::Display for InvalidInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid instance ({} violation(s))", self.0.len())?;
        for v in &self.0 {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

/// Accumulates raw, name-based instance data and validates it into an
/// [`Instance`]. Validation reports all violations, not just the first.
#[derive(Debug, Clone, Default)]
pub struct InstanceBuilder {
    students: Vec<String>,
    schools: Vec<(String, u32)>,
    preferences: Vec<(String, Vec<Vec<String>>)>,
    priorities: Vec<(String, Vec<Vec<String>>)>,
    distances: Vec<(String, String, f64)>,
}

impl InstanceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn student(&mut self, id: impl Into<String>) -> &mut Self {
        self.students.push(id.into());
        self
    }

    pub fn school(&mut self, id: impl Into<String>, capacity: u32) -> &mut Self {
        self.schools.push((id.into(), capacity));
        self
    }

    /// Tiered preference list for one student; schools inside a tier are
    /// ranked equally. Later calls for the same student replace earlier ones.
    pub fn preferences<S: Into<String>>(
        &mut self,
        student: impl Into<String>,
        tiers: Vec<Vec<S>>,
    ) -> &mut Self {
        let tiers = tiers
            .into_iter()
            .map(|t| t.into_iter().map(Into::into).collect())
            .collect();
        let student = student.into();
        self.preferences.retain(|(s, _)| *s != student);
        self.preferences.push((student, tiers));
        self
    }

    /// Tiered priority list for one school.
    pub fn priorities<S: Into<String>>(
        &mut self,
        school: impl Into<String>,
        tiers: Vec<Vec<S>>,
    ) -> &mut Self {
        let tiers = tiers
            .into_iter()
            .map(|t| t.into_iter().map(Into::into).collect())
            .collect();
        let school = school.into();
        self.priorities.retain(|(s, _)| *s != school);
        self.priorities.push((school, tiers));
        self
    }

    pub fn distance(
        &mut self,
        student: impl Into<String>,
        school: impl Into<String>,
        distance: f64,
    ) -> &mut Self {
        self.distances.push((student.into(), school.into(), distance));
        self
    }

    /// Checks the accumulated data and returns every violation found
    /// (empty means the data is valid).
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut student_idx: BTreeMap<&str, usize> = BTreeMap::new();
        for (k, id) in self.students.iter().enumerate() {
            if student_idx.insert(id, k).is_some() {
                out.push(Violation::DuplicateStudent { id: id.clone() });
            }
        }
        let mut school_idx: BTreeMap<&str, usize> = BTreeMap::new();
        for (k, (id, cap)) in self.schools.iter().enumerate() {
            if school_idx.insert(id, k).is_some() {
                out.push(Violation::DuplicateSchool { id: id.clone() });
            }
            if *cap == 0 {
                out.push(Violation::NonpositiveCapacity { school: id.clone() });
            }
        }

        for (student, tiers) in &self.preferences {
            let context = format!("preferences of {student:?}");
            if !student_idx.contains_key(student.as_str()) {
                out.push(Violation::UnknownStudent { context: context.clone(), id: student.clone() });
            }
            let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
            for tier in tiers {
                if tier.is_empty() {
                    out.push(Violation::EmptyTier { context: context.clone() });
                }
                for school in tier {
                    if !school_idx.contains_key(school.as_str()) {
                        out.push(Violation::UnknownSchool {
                            context: context.clone(),
                            id: school.clone(),
                        });
                    }
                    if seen.insert(school, ()).is_some() {
                        out.push(Violation::DuplicateRanking {
                            student: student.clone(),
                            school: school.clone(),
                        });
                    }
                }
            }
        }

        for (school, tiers) in &self.priorities {
            let context = format!("priorities of {school:?}");
            if !school_idx.contains_key(school.as_str()) {
                out.push(Violation::UnknownSchool { context: context.clone(), id: school.clone() });
            }
            let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
            for tier in tiers {
                if tier.is_empty() {
                    out.push(Violation::EmptyTier { context: context.clone() });
                }
                for student in tier {
                    if !student_idx.contains_key(student.as_str()) {
                        out.push(Violation::UnknownStudent {
                            context: context.clone(),
                            id: student.clone(),
                        });
                    }
                    if seen.insert(student, ()).is_some() {
                        out.push(Violation::DuplicatePriority {
                            school: school.clone(),
                            student: student.clone(),
                        });
                    }
                }
            }
        }

        for (student, school, d) in &self.distances {
            if !student_idx.contains_key(student.as_str()) {
                out.push(Violation::UnknownStudent {
                    context: "distances".into(),
                    id: student.clone(),
                });
            }
            if !school_idx.contains_key(school.as_str()) {
                out.push(Violation::UnknownSchool {
                    context: "distances".into(),
                    id: school.clone(),
                });
            }
            if !d.is_finite() || *d < 0.0 {
                out.push(Violation::BadDistance { student: student.clone(), school: school.clone() });
            }
        }
        out
    }

    pub fn build(self) -> Result<Instance, InvalidInstance> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(InvalidInstance(violations));
        }
        let student_idx: BTreeMap<String, usize> = self
            .students
            .iter()
            .enumerate()
            .map(|(k, id)| (id.clone(), k))
            .collect();
        let school_idx: BTreeMap<String, usize> = self
            .schools
            .iter()
            .enumerate()
            .map(|(k, (id, _))| (id.clone(), k))
            .collect();
        let n = self.students.len();
        let m = self.schools.len();

        let mut pref_tiers = vec![Vec::new(); n];
        for (student, tiers) in &self.preferences {
            pref_tiers[student_idx[student]] = tiers
                .iter()
                .map(|t| t.iter().map(|s| School(school_idx[s])).collect())
                .collect();
        }
        let mut prio_tiers = vec![Vec::new(); m];
        for (school, tiers) in &self.priorities {
            prio_tiers[school_idx[school]] = tiers
                .iter()
                .map(|t| t.iter().map(|s| Student(student_idx[s])).collect())
                .collect();
        }
        let mut distances = vec![vec![None; m]; n];
        for (student, school, d) in &self.distances {
            distances[student_idx[student]][school_idx[school]] = Some(*d);
        }

        let capacities = self.schools.iter().map(|(_, c)| *c).collect();
        let school_ids = self.schools.into_iter().map(|(id, _)| id).collect();
        Ok(Instance::from_parts(
            self.students,
            capacities,
            school_ids,
            pref_tiers,
            prio_tiers,
            distances,
        ))
    }
}

/// A validated school-choice instance.
#[derive(Debug, Clone)]
pub struct Instance {
    students: Vec<String>,
    schools: Vec<String>,
    capacities: Vec<u32>,
    /// Per student: preference tiers of school indices (tier 1 first).
    pref_tiers: Vec<Vec<Vec<School>>>,
    /// Per school: priority tiers of student indices.
    prio_tiers: Vec<Vec<Vec<Student>>>,
    /// Derived lookup: 1-based tier index of school in student's preferences.
    pref_rank: Vec<Vec<Option<u32>>>,
    /// Derived lookup: 1-based tier index of student in school's priorities.
    prio_rank: Vec<Vec<Option<u32>>>,
    distances: Vec<Vec<Option<f64>>>,
}

impl Instance {
    pub fn builder() -> InstanceBuilder {
        InstanceBuilder::new()
    }

    fn from_parts(
        students: Vec<String>,
        capacities: Vec<u32>,
        schools: Vec<String>,
        pref_tiers: Vec<Vec<Vec<School>>>,
        prio_tiers: Vec<Vec<Vec<Student>>>,
        distances: Vec<Vec<Option<f64>>>,
    ) -> Self {
        let n = students.len();
        let m = schools.len();
        let mut pref_rank = vec![vec![None; m]; n];
        for (i, tiers) in pref_tiers.iter().enumerate() {
            for (t, tier) in tiers.iter().enumerate() {
                for &School(s) in tier {
                    pref_rank[i][s] = Some(t as u32 + 1);
                }
            }
        }
        let mut prio_rank = vec![vec![None; n]; m];
        for (s, tiers) in prio_tiers.iter().enumerate() {
            for (t, tier) in tiers.iter().enumerate() {
                for &Student(i) in tier {
                    prio_rank[s][i] = Some(t as u32 + 1);
                }
            }
        }
        Instance {
            students,
            schools,
            capacities,
            pref_tiers,
            prio_tiers,
            pref_rank,
            prio_rank,
            distances,
        }
    }

    /// Same students/schools/priorities/distances with replacement preference
    /// tiers. Caller guarantees the tiers are valid (used by the completion
    /// operations, which only extend already-validated lists).
    pub(crate) fn with_preference_tiers(&self, pref_tiers: Vec<Vec<Vec<School>>>) -> Instance {
        debug_assert_eq!(pref_tiers.len(), self.students.len());
        Instance::from_parts(
            self.students.clone(),
            self.capacities.clone(),
            self.schools.clone(),
            pref_tiers,
            self.prio_tiers.clone(),
            self.distances.clone(),
        )
    }

    /// Same instance with replacement preference and priority tiers (used by
    /// the lottery tie-break).
    pub(crate) fn with_tiers(
        &self,
        pref_tiers: Vec<Vec<Vec<School>>>,
        prio_tiers: Vec<Vec<Vec<Student>>>,
    ) -> Instance {
        Instance::from_parts(
            self.students.clone(),
            self.capacities.clone(),
            self.schools.clone(),
            pref_tiers,
            prio_tiers,
            self.distances.clone(),
        )
    }

    pub fn n_students(&self) -> usize {
        self.students.len()
    }

    pub fn n_schools(&self) -> usize {
        self.schools.len()
    }

    pub fn students(&self) -> impl Iterator<Item = Student> {
        (0..self.students.len()).map(Student)
    }

    pub fn schools(&self) -> impl Iterator<Item = School> {
        (0..self.schools.len()).map(School)
    }

    pub fn student_id(&self, Student(i): Student) -> &str {
        &self.students[i]
    }

    pub fn school_id(&self, School(s): School) -> &str {
        &self.schools[s]
    }

    pub fn find_student(&self, id: &str) -> Option<Student> {
        self.students.iter().position(|x| x == id).map(Student)
    }

    pub fn find_school(&self, id: &str) -> Option<School> {
        self.schools.iter().position(|x| x == id).map(School)
    }

    pub fn capacity(&self, School(s): School) -> u32 {
        self.capacities[s]
    }

    pub fn total_seats(&self) -> u64 {
        self.capacities.iter().map(|&c| c as u64).sum()
    }

    /// 1-based tier index of `school` in `student`'s preference list, or
    /// `None` if the student did not rank the school.
    pub fn rank_of(&self, Student(i): Student, School(s): School) -> Option<u32> {
        self.pref_rank[i][s]
    }

    /// 1-based tier index of `student` in `school`'s priority list.
    pub fn priority_rank(&self, School(s): School, Student(i): Student) -> Option<u32> {
        self.prio_rank[s][i]
    }

    pub fn preference_tiers(&self, Student(i): Student) -> &[Vec<School>] {
        &self.pref_tiers[i]
    }

    pub fn priority_tiers(&self, School(s): School) -> &[Vec<Student>] {
        &self.prio_tiers[s]
    }

    /// Number of schools the student ranked (across all tiers).
    pub fn ranked_count(&self, Student(i): Student) -> usize {
        self.pref_tiers[i].iter().map(Vec::len).sum()
    }

    pub fn distance(&self, Student(i): Student, School(s): School) -> Option<f64> {
        self.distances[i][s]
    }

    /// True when every student ranks every school.
    pub fn complete_preferences(&self) -> bool {
        self.pref_rank.iter().all(|row| row.iter().all(Option::is_some))
    }

    /// True when every school prioritizes every student.
    pub fn complete_priorities(&self) -> bool {
        self.prio_rank.iter().all(|row| row.iter().all(Option::is_some))
    }

    /// True when all preference and priority tiers are singletons.
    pub fn is_strict(&self) -> bool {
        self.pref_tiers
            .iter()
            .chain(self.prio_tiers.iter())
            .flat_map(|tiers| tiers.iter())
            .all(|tier| tier.len() == 1)
    }

    /// Strict preference of `student` for `school` over an assignment state.
    /// A ranked school beats both the unassigned state and any school the
    /// student did not rank; between two ranked schools the tier decides.
    pub fn prefers(&self, student: Student, school: School, over: Option<School>) -> bool {
        let Some(ra) = self.rank_of(student, school) else {
            return false;
        };
        match over {
            None => true,
            Some(b) => match self.rank_of(student, b) {
                None => true,
                Some(rb) => ra < rb,
            },
        }
    }

    /// Strict priority of `i` over `j` at `school`. A prioritized student
    /// outranks any student the school did not list.
    pub fn prioritizes(&self, school: School, i: Student, j: Student) -> bool {
        let Some(ri) = self.priority_rank(school, i) else {
            return false;
        };
        match self.priority_rank(school, j) {
            None => true,
            Some(rj) => ri < rj,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("matching covers {got} students, instance has {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("matching references school index {0} out of range")]
    UnknownSchool(usize),
    #[error("school {school:?} assigned {assigned} students, capacity {capacity}")]
    CapacityExceeded { school: String, assigned: usize, capacity: u32 },
}

/// A total map from students to at most one school each; capacity-checked
/// against a specific instance at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matching {
    assigned: Vec<Option<School>>,
}

impl Matching {
    pub fn new(instance: &Instance, assigned: Vec<Option<School>>) -> Result<Self, MatchingError> {
        if assigned.len() != instance.n_students() {
            return Err(MatchingError::WrongLength {
                expected: instance.n_students(),
                got: assigned.len(),
            });
        }
        let mut load = vec![0usize; instance.n_schools()];
        for slot in assigned.iter().flatten() {
            let School(s) = *slot;
            if s >= instance.n_schools() {
                return Err(MatchingError::UnknownSchool(s));
            }
            load[s] += 1;
        }
        for (s, &count) in load.iter().enumerate() {
            if count > instance.capacities[s] as usize {
                return Err(MatchingError::CapacityExceeded {
                    school: instance.schools[s].clone(),
                    assigned: count,
                    capacity: instance.capacities[s],
                });
            }
        }
        Ok(Matching { assigned })
    }

    /// Everyone unassigned.
    pub fn empty(instance: &Instance) -> Self {
        Matching { assigned: vec![None; instance.n_students()] }
    }

    pub fn school_of(&self, Student(i): Student) -> Option<School> {
        self.assigned[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Student, Option<School>)> + '_ {
        self.assigned.iter().enumerate().map(|(i, s)| (Student(i), *s))
    }

    /// Students assigned to `school`, in dense index order.
    pub fn roster(&self, school: School) -> Vec<Student> {
        self.assigned
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Some(school))
            .map(|(i, _)| Student(i))
            .collect()
    }

    pub fn unassigned_count(&self) -> usize {
        self.assigned.iter().filter(|s| s.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.assigned.iter().all(Option::is_some)
    }

    pub fn len(&self) -> usize {
        self.assigned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assigned.is_empty()
    }

    /// Deterministic comparison key: assigned school index per student, with
    /// unassigned ordered after every school.
    pub(crate) fn lex_key(&self) -> Vec<usize> {
        self.assigned
            .iter()
            .map(|s| s.map_or(usize::MAX, |School(k)| k))
            .collect()
    }
}
