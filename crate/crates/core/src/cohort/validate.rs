use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{
    is_opaque_id, DatasetSnapshot, SourceLines, HEIGHT_BOUNDS_CM, MAX_AGE_MONTHS, WEIGHT_BOUNDS_KG,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    OpaqueId,
    DuplicateMother,
    MotherWithoutChildren,
    DuplicateChildLink,
    ChildLinkMismatch,
    DuplicateChild,
    UnknownMother,
    UnknownChild,
    DuplicateMeasurement,
    AgeOutOfBounds,
    HeightOutOfBounds,
    WeightOutOfBounds,
    ReferenceTooShort,
    ReferenceNotIncreasing,
    ReferenceOutOfBounds,
}

impl Rule {
    pub fn describe(self) -> &'static str {
        match self {
            Rule::OpaqueId => "identifier is not an opaque ID",
            Rule::DuplicateMother => "duplicate mother_id",
            Rule::MotherWithoutChildren => "mother has no children",
            Rule::DuplicateChildLink => "child listed twice for the same mother",
            Rule::ChildLinkMismatch => "mother's child list disagrees with #CHILDREN",
            Rule::DuplicateChild => "duplicate child_id",
            Rule::UnknownMother => "child references an unknown mother",
            Rule::UnknownChild => "measurement references an unknown child",
            Rule::DuplicateMeasurement => "duplicate measurement for (child_id, age_months)",
            Rule::AgeOutOfBounds => "age_months outside 0..=240",
            Rule::HeightOutOfBounds => "height_cm outside 20.0..=220.0",
            Rule::WeightOutOfBounds => "weight_kg outside 0.5..=150.0",
            Rule::ReferenceTooShort => "reference curve needs at least 2 knots",
            Rule::ReferenceNotIncreasing => "reference knot ages not strictly increasing",
            Rule::ReferenceOutOfBounds => "reference knot outside sanity bounds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Locator {
    Mother(usize),
    Child(usize),
    Measurement(usize),
    Knot(usize),
    Reference,
}

impl Locator {
    /// Source line of the located record, when the snapshot came from a file.
    pub fn line(&self, lines: &SourceLines) -> Option<usize> {
        match *self {
            Locator::Mother(i) => lines.mothers.get(i).copied(),
            Locator::Child(i) => lines.children.get(i).copied(),
            Locator::Measurement(i) => lines.measurements.get(i).copied(),
            Locator::Knot(i) => lines.reference.get(i).copied(),
            Locator::Reference => None,
        }
    }
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locator::Mother(i) => write!(f, "MOTHERS[{i}]"),
            Locator::Child(i) => write!(f, "CHILDREN[{i}]"),
            Locator::Measurement(i) => write!(f, "MEASUREMENTS[{i}]"),
            Locator::Knot(i) => write!(f, "REFERENCE[{i}]"),
            Locator::Reference => f.write_str("REFERENCE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub locator: Locator,
    /// The offending key (an ID, `child@age`, or knot age).
    pub key: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.locator, self.key, self.rule.describe())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.errors.iter().filter(|v| v.rule == rule).count()
    }
}

/// Checks every data-model invariant. Violations are collected, never raised.
pub fn validate_snapshot(s: &DatasetSnapshot) -> ValidationReport {
    let mut errors = Vec::new();
    let mut push = |locator, key: &str, rule| {
        errors.push(Violation { locator, key: key.to_string(), rule });
    };

    let mut mother_ids = HashSet::new();
    for (i, m) in s.mothers.iter().enumerate() {
        if !is_opaque_id(&m.mother_id) {
            push(Locator::Mother(i), &m.mother_id, Rule::OpaqueId);
        }
        if !mother_ids.insert(m.mother_id.as_str()) {
            push(Locator::Mother(i), &m.mother_id, Rule::DuplicateMother);
        }
        if m.child_ids.is_empty() {
            push(Locator::Mother(i), &m.mother_id, Rule::MotherWithoutChildren);
        }
        let distinct: HashSet<&str> = m.child_ids.iter().map(String::as_str).collect();
        if distinct.len() != m.child_ids.len() {
            push(Locator::Mother(i), &m.mother_id, Rule::DuplicateChildLink);
        }
        let listed: Vec<&str> = s
            .children
            .iter()
            .filter(|c| c.mother_id == m.mother_id)
            .map(|c| c.child_id.as_str())
            .collect();
        let linked: Vec<&str> = m.child_ids.iter().map(String::as_str).collect();
        if listed != linked && !m.child_ids.is_empty() {
            push(Locator::Mother(i), &m.mother_id, Rule::ChildLinkMismatch);
        }
    }

    let mut child_ids = HashSet::new();
    for (i, c) in s.children.iter().enumerate() {
        if !is_opaque_id(&c.child_id) {
            push(Locator::Child(i), &c.child_id, Rule::OpaqueId);
        }
        if !child_ids.insert(c.child_id.as_str()) {
            push(Locator::Child(i), &c.child_id, Rule::DuplicateChild);
        }
        if !mother_ids.contains(c.mother_id.as_str()) {
            push(Locator::Child(i), &c.child_id, Rule::UnknownMother);
        }
    }

    let mut seen_points: HashMap<(&str, u32), usize> = HashMap::new();
    for (i, m) in s.measurements.iter().enumerate() {
        let key = format!("{}@{}", m.child_id, m.age_months);
        if !child_ids.contains(m.child_id.as_str()) {
            push(Locator::Measurement(i), &key, Rule::UnknownChild);
        }
        if seen_points.insert((m.child_id.as_str(), m.age_months), i).is_some() {
            push(Locator::Measurement(i), &key, Rule::DuplicateMeasurement);
        }
        if m.age_months > MAX_AGE_MONTHS {
            push(Locator::Measurement(i), &key, Rule::AgeOutOfBounds);
        }
        if !within(m.height_cm, HEIGHT_BOUNDS_CM) {
            push(Locator::Measurement(i), &key, Rule::HeightOutOfBounds);
        }
        if !within(m.weight_kg, WEIGHT_BOUNDS_KG) {
            push(Locator::Measurement(i), &key, Rule::WeightOutOfBounds);
        }
    }

    let knots = &s.reference.knots;
    if knots.len() < 2 {
        push(Locator::Reference, "height", Rule::ReferenceTooShort);
    }
    for (i, k) in knots.iter().enumerate() {
        let key = k.age_months.to_string();
        if i > 0 && knots[i - 1].age_months >= k.age_months {
            push(Locator::Knot(i), &key, Rule::ReferenceNotIncreasing);
        }
        if k.age_months > MAX_AGE_MONTHS || !within(k.height_cm, HEIGHT_BOUNDS_CM) {
            push(Locator::Knot(i), &key, Rule::ReferenceOutOfBounds);
        }
    }

    ValidationReport { errors }
}

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}
