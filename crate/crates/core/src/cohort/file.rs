//! The sectioned cohort file.
//!
//! ```text
//! ; comment
//! #UPDATE
//! 2015-08-01T00:00:00Z
//! #MOTHERS
//! M001
//! #CHILDREN
//! C001,M001
//! #MEASUREMENTS
//! C001,12,76.0,10.2
//! #REFERENCE
//! 0,50.0
//! 12,76.0
//! ```
//!
//! Every section header must appear exactly once; order is free. Blank lines
//! and lines starting with `;` are ignored.

use std::fmt::Write as _;

use super::{ChildRecord, DatasetSnapshot, Knot, Measurement, Metric, MotherRecord, ReferenceCurve};
use crate::error::CohortError;
use crate::timestamp::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Update,
    Mothers,
    Children,
    Measurements,
    Reference,
}

impl Section {
    const ALL: [Section; 5] = [
        Section::Update,
        Section::Mothers,
        Section::Children,
        Section::Measurements,
        Section::Reference,
    ];

    fn header(self) -> &'static str {
        match self {
            Section::Update => "#UPDATE",
            Section::Mothers => "#MOTHERS",
            Section::Children => "#CHILDREN",
            Section::Measurements => "#MEASUREMENTS",
            Section::Reference => "#REFERENCE",
        }
    }

    fn from_header(line: &str) -> Option<Section> {
        Section::ALL.into_iter().find(|s| s.header() == line)
    }
}

/// 1-based source line of every record, indexed like the snapshot's vectors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceLines {
    pub update: usize,
    pub mothers: Vec<usize>,
    pub children: Vec<usize>,
    pub measurements: Vec<usize>,
    pub reference: Vec<usize>,
}

pub fn parse_cohort_file(text: &str) -> Result<DatasetSnapshot, CohortError> {
    parse_cohort_file_with_lines(text).map(|(snapshot, _)| snapshot)
}

pub fn parse_cohort_file_with_lines(
    text: &str,
) -> Result<(DatasetSnapshot, SourceLines), CohortError> {
    let mut seen: Vec<Section> = Vec::new();
    let mut current: Option<Section> = None;
    let mut update: Option<Timestamp> = None;
    let mut mothers: Vec<String> = Vec::new();
    let mut children = Vec::new();
    let mut measurements = Vec::new();
    let mut knots = Vec::new();
    let mut lines = SourceLines::default();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if line.starts_with('#') {
            let section = Section::from_header(line)
                .ok_or_else(|| syntax(line_no, format!("unknown section header {line:?}")))?;
            if seen.contains(&section) {
                return Err(syntax(line_no, format!("duplicate section {}", section.header())));
            }
            seen.push(section);
            current = Some(section);
            if section == Section::Update {
                lines.update = line_no;
            }
            continue;
        }
        let section =
            current.ok_or_else(|| syntax(line_no, "record before any section header"))?;
        match section {
            Section::Update => {
                if update.is_some() {
                    return Err(syntax(line_no, "#UPDATE holds exactly one timestamp"));
                }
                update = Some(line.parse().map_err(|e| syntax(line_no, format!("{e}")))?);
                lines.update = line_no;
            }
            Section::Mothers => {
                let [id] = fields::<1>(line, line_no)?;
                mothers.push(id.to_string());
                lines.mothers.push(line_no);
            }
            Section::Children => {
                let [child_id, mother_id] = fields::<2>(line, line_no)?;
                children.push(ChildRecord {
                    child_id: child_id.to_string(),
                    mother_id: mother_id.to_string(),
                });
                lines.children.push(line_no);
            }
            Section::Measurements => {
                let [child_id, age, height, weight] = fields::<4>(line, line_no)?;
                measurements.push(Measurement {
                    child_id: child_id.to_string(),
                    age_months: age_field(age, line_no)?,
                    height_cm: decimal_field(height, "height_cm", line_no)?,
                    weight_kg: decimal_field(weight, "weight_kg", line_no)?,
                });
                lines.measurements.push(line_no);
            }
            Section::Reference => {
                let [age, height] = fields::<2>(line, line_no)?;
                knots.push(Knot {
                    age_months: age_field(age, line_no)?,
                    height_cm: decimal_field(height, "height_cm", line_no)?,
                });
                lines.reference.push(line_no);
            }
        }
    }

    if let Some(missing) = Section::ALL.into_iter().find(|s| !seen.contains(s)) {
        return Err(syntax(last_line + 1, format!("missing section {}", missing.header())));
    }
    let update_date =
        update.ok_or_else(|| syntax(lines.update, "#UPDATE section has no timestamp"))?;

    let mothers = mothers
        .into_iter()
        .map(|mother_id| {
            let child_ids = children
                .iter()
                .filter(|c| c.mother_id == mother_id)
                .map(|c| c.child_id.clone())
                .collect();
            MotherRecord { mother_id, child_ids }
        })
        .collect();

    let snapshot = DatasetSnapshot {
        update_date,
        mothers,
        children,
        measurements,
        reference: ReferenceCurve { metric: Metric::Height, knots },
    };
    Ok((snapshot, lines))
}

/// Canonical serialization; `parse_cohort_file` inverts it on any snapshot
/// whose `child_ids` agree with the `#CHILDREN` listing.
pub fn write_cohort_file(s: &DatasetSnapshot) -> String {
    let mut out = String::new();
    // `fmt::Write` on a String never fails.
    let _ = writeln!(out, "#UPDATE\n{}", s.update_date);
    out.push_str("#MOTHERS\n");
    for m in &s.mothers {
        let _ = writeln!(out, "{}", m.mother_id);
    }
    out.push_str("#CHILDREN\n");
    for c in &s.children {
        let _ = writeln!(out, "{},{}", c.child_id, c.mother_id);
    }
    out.push_str("#MEASUREMENTS\n");
    for m in &s.measurements {
        let _ = writeln!(
            out,
            "{},{},{:?},{:?}",
            m.child_id, m.age_months, m.height_cm, m.weight_kg
        );
    }
    out.push_str("#REFERENCE\n");
    for k in &s.reference.knots {
        let _ = writeln!(out, "{},{:?}", k.age_months, k.height_cm);
    }
    out
}

fn syntax(line: usize, reason: impl Into<String>) -> CohortError {
    CohortError::Syntax { line, reason: reason.into() }
}

fn fields<const N: usize>(line: &str, line_no: usize) -> Result<[&str; N], CohortError> {
    let parts: Vec<&str> = line.split(',').map(str::trim).collect();
    let arr: [&str; N] = parts
        .try_into()
        .map_err(|p: Vec<&str>| syntax(line_no, format!("expected {N} fields, found {}", p.len())))?;
    if let Some(pos) = arr.iter().position(|f| f.is_empty()) {
        return Err(syntax(line_no, format!("field {} is empty", pos + 1)));
    }
    Ok(arr)
}

fn age_field(text: &str, line_no: usize) -> Result<u32, CohortError> {
    text.parse()
        .map_err(|_| syntax(line_no, format!("age_months {text:?} is not a non-negative integer")))
}

fn decimal_field(text: &str, name: &str, line_no: usize) -> Result<f64, CohortError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(syntax(line_no, format!("{name} {text:?} is not a decimal number"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = "; delivered 2015-08\n#UPDATE\n2015-08-01T00:00:00Z\n#MOTHERS\nM001\n\
        #CHILDREN\nC001,M001\n#MEASUREMENTS\nC001,12,76.0,10.2\n#REFERENCE\n0,50.0\n12,76.0\n";

    fn syntax_line(text: &str) -> usize {
        match parse_cohort_file(text) {
            Err(CohortError::Syntax { line, .. }) => line,
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parses_single_family() {
        let s = parse_cohort_file(ONE).unwrap();
        assert_eq!(s.counts(), (1, 1, 1));
        assert_eq!(s.update_date.to_string(), "2015-08-01T00:00:00Z");
        assert_eq!(s.mothers[0].child_ids, ["C001"]);
        assert_eq!(
            s.measurements[0],
            Measurement { child_id: "C001".into(), age_months: 12, height_cm: 76.0, weight_kg: 10.2 }
        );
        assert_eq!(s.reference.knots.len(), 2);
    }

    #[test]
    fn source_lines_point_at_records() {
        let (_, lines) = parse_cohort_file_with_lines(ONE).unwrap();
        assert_eq!(lines.update, 3);
        assert_eq!(lines.mothers, [5]);
        assert_eq!(lines.children, [7]);
        assert_eq!(lines.measurements, [9]);
        assert_eq!(lines.reference, [11, 12]);
    }

    #[test]
    fn bad_height_reports_its_line() {
        let text = ONE.replace("C001,12,76.0,10.2", "C001,12,abc,10.2");
        assert_eq!(syntax_line(&text), 9);
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(syntax_line(&ONE.replace("2015-08-01T00:00:00Z", "yesterday")), 3);
        assert_eq!(syntax_line(&ONE.replace("C001,M001", "C001")), 7);
        assert_eq!(syntax_line(&ONE.replace("C001,M001", "C001,M001,x")), 7);
        assert_eq!(syntax_line(&ONE.replace("C001,12,", "C001,-3,")), 9);
        assert_eq!(syntax_line(&ONE.replace("76.0,10.2", "NaN,10.2")), 9);
        assert_eq!(syntax_line(&ONE.replace("C001,M001", ",M001")), 7);
        assert_eq!(syntax_line(&ONE.replace("#MOTHERS", "#NAMES")), 4);
        assert_eq!(syntax_line(&format!("M000\n{ONE}")), 1);
        assert_eq!(syntax_line(&format!("{ONE}#MOTHERS\n")), 13);
        assert_eq!(syntax_line(&ONE.replace("2015-08-01T00:00:00Z\n", "2015-08-01T00:00:00Z\n2015-08-02T00:00:00Z\n")), 4);
    }

    #[test]
    fn missing_header_is_syntax_error() {
        let text = ONE.replace("#REFERENCE\n0,50.0\n12,76.0\n", "");
        assert!(matches!(parse_cohort_file(&text), Err(CohortError::Syntax { .. })));
        let empty_update = ONE.replace("2015-08-01T00:00:00Z\n", "");
        assert_eq!(syntax_line(&empty_update), 2);
    }

    #[test]
    fn tolerates_crlf_and_padding() {
        let text = ONE.replace('\n', "\r\n").replace("C001,M001", " C001 , M001 ");
        assert_eq!(parse_cohort_file(&text).unwrap(), parse_cohort_file(ONE).unwrap());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let s = parse_cohort_file(ONE).unwrap();
        assert_eq!(parse_cohort_file(&write_cohort_file(&s)).unwrap(), s);
    }

    #[test]
    fn format_has_no_name_column() {
        let written = write_cohort_file(&parse_cohort_file(ONE).unwrap());
        for line in written.lines().filter(|l| !l.starts_with('#')) {
            assert!(line.split(',').count() <= 4);
        }
        assert!(!written.to_lowercase().contains("name"));
    }
}
