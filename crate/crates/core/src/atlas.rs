//! The variety atlas: a line-oriented text format for smooth toric Fano
//! 4-folds, its parser and validator, and the shipped dataset.
//!
//! ```text
//! variety H1
//! rays 8
//! 1 0 0 0
//! ...
//! collections 6
//! 1 2
//! ...
//! end
//! ```
//!
//! `#` starts a comment. Omitting the `collections` section asks for the
//! collections to be derived from the face fan of the rays.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use itertools::Itertools;
use num_traits::Signed;
use thiserror::Error;

use crate::exactlin::{Int, LatticePoint, Rat, Vec4};
use crate::fan::{
    self, build_fan, build_fan_from_rays, minimal_nonfaces, validate_fan, Cone, Fan, FanError,
    PrimitiveCollection,
};

/// The shipped atlas, in canonical rendered form.
pub const SHIPPED_ATLAS: &str = include_str!("../data/atlas.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {}{message}", .record.as_ref().map(|r| format!("variety {r}: ")).unwrap_or_default())]
pub struct ParseError {
    pub line: usize,
    pub record: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    PaperTable,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarietyRecord {
    pub name: String,
    pub rays: Vec<LatticePoint>,
    pub collections: Vec<PrimitiveCollection>,
    /// Collections were computed from the rays rather than declared.
    pub derived: bool,
    pub source: Source,
}

impl VarietyRecord {
    /// The fan the record describes: from the declared collections, or the
    /// face fan when they are derived.
    pub fn build_fan(&self) -> Result<Fan, FanError> {
        if self.derived {
            build_fan_from_rays(self.rays.clone())
        } else {
            build_fan(self.rays.clone(), &self.collections)
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "variety {}", self.name).unwrap();
        writeln!(s, "rays {}", self.rays.len()).unwrap();
        for r in &self.rays {
            writeln!(s, "{r}").unwrap();
        }
        if !self.derived {
            writeln!(s, "collections {}", self.collections.len()).unwrap();
            for c in &self.collections {
                writeln!(s, "{}", c.indices().iter().join(" ")).unwrap();
            }
        }
        s.push_str("end\n");
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AtlasDatabase {
    pub records: Vec<VarietyRecord>,
}

impl AtlasDatabase {
    pub fn lookup(&self, name: &str) -> Option<&VarietyRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records separated by blank lines.
    pub fn render(&self) -> String {
        self.records.iter().map(VarietyRecord::render).join("\n")
    }
}

pub fn parse(text: &str) -> Result<AtlasDatabase, ParseError> {
    parse_with_source(text, Source::User)
}

enum State {
    Between,
    Header {
        name: String,
    },
    Rays {
        name: String,
        expected: usize,
        rays: Vec<LatticePoint>,
    },
    AfterRays {
        name: String,
        rays: Vec<LatticePoint>,
    },
    Collections {
        name: String,
        rays: Vec<LatticePoint>,
        expected: usize,
        collections: Vec<PrimitiveCollection>,
    },
    AfterCollections {
        name: String,
        rays: Vec<LatticePoint>,
        collections: Vec<PrimitiveCollection>,
    },
}

fn derive_collections(rays: &[LatticePoint]) -> Vec<PrimitiveCollection> {
    build_fan_from_rays(rays.to_vec())
        .map(|f| minimal_nonfaces(&f))
        .unwrap_or_default()
}

pub fn parse_with_source(text: &str, source: Source) -> Result<AtlasDatabase, ParseError> {
    let mut db = AtlasDatabase::default();
    let mut names = HashSet::new();
    let mut state = State::Between;
    let mut last_line = 0;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let err = |record: Option<&str>, message: String| ParseError {
            line: line_no,
            record: record.map(str::to_string),
            message,
        };
        let count = |name: &str, keyword: &str| -> Result<usize, ParseError> {
            if tokens.len() != 2 || tokens[0] != keyword {
                return Err(err(Some(name), format!("expected `{keyword} <count>`")));
            }
            tokens[1].parse::<usize>().map_err(|_| {
                err(
                    Some(name),
                    format!("invalid {keyword} count `{}`", tokens[1]),
                )
            })
        };

        state = match state {
            State::Between => {
                if tokens[0] != "variety" || tokens.len() != 2 {
                    return Err(err(None, "expected `variety <name>`".into()));
                }
                let name = tokens[1].to_string();
                if !names.insert(name.clone()) {
                    return Err(err(Some(&name), "duplicate variety name".into()));
                }
                State::Header { name }
            }
            State::Header { name } => {
                let expected = count(&name, "rays")?;
                if expected == 0 {
                    return Err(err(Some(&name), "a variety needs at least one ray".into()));
                }
                State::Rays {
                    name,
                    expected,
                    rays: Vec::new(),
                }
            }
            State::Rays {
                name,
                expected,
                mut rays,
            } => {
                let coords: Vec<Int> = tokens.iter().filter_map(|t| t.parse().ok()).collect();
                if tokens.len() != 4 || coords.len() != 4 {
                    return Err(err(
                        Some(&name),
                        format!(
                            "expected {expected} ray rows of four integers, found {} before `{}`",
                            rays.len(),
                            content.trim()
                        ),
                    ));
                }
                let [a, b, c, d]: [Int; 4] = coords.try_into().expect("four coordinates");
                rays.push(Vec4([a, b, c, d]));
                if rays.len() == expected {
                    State::AfterRays { name, rays }
                } else {
                    State::Rays {
                        name,
                        expected,
                        rays,
                    }
                }
            }
            State::AfterRays { name, rays } => match tokens[0] {
                "end" if tokens.len() == 1 => {
                    let collections = derive_collections(&rays);
                    db.records.push(VarietyRecord {
                        name,
                        rays,
                        collections,
                        derived: true,
                        source,
                    });
                    State::Between
                }
                "collections" => {
                    let expected = count(&name, "collections")?;
                    if expected == 0 {
                        State::AfterCollections {
                            name,
                            rays,
                            collections: Vec::new(),
                        }
                    } else {
                        State::Collections {
                            name,
                            rays,
                            expected,
                            collections: Vec::new(),
                        }
                    }
                }
                _ => {
                    return Err(err(
                        Some(&name),
                        format!(
                            "expected `collections <count>` or `end`, found `{}`",
                            content.trim()
                        ),
                    ))
                }
            },
            State::Collections {
                name,
                rays,
                expected,
                mut collections,
            } => {
                let indices: Result<Vec<usize>, _> =
                    tokens.iter().map(|t| t.parse::<usize>()).collect();
                let Ok(indices) = indices else {
                    return Err(err(
                        Some(&name),
                        format!(
                            "expected {expected} collection rows of ray indices, found {} before `{}`",
                            collections.len(),
                            content.trim()
                        ),
                    ));
                };
                if !indices.windows(2).all(|w| w[0] < w[1]) {
                    return Err(err(
                        Some(&name),
                        "collection indices must be strictly ascending".into(),
                    ));
                }
                if let Some(bad) = indices.iter().find(|&&i| i == 0 || i > rays.len()) {
                    return Err(err(
                        Some(&name),
                        format!("collection index {bad} out of range 1..={}", rays.len()),
                    ));
                }
                let c = PrimitiveCollection::new(indices)
                    .map_err(|e| err(Some(&name), e.to_string()))?;
                collections.push(c);
                if collections.len() == expected {
                    State::AfterCollections {
                        name,
                        rays,
                        collections,
                    }
                } else {
                    State::Collections {
                        name,
                        rays,
                        expected,
                        collections,
                    }
                }
            }
            State::AfterCollections {
                name,
                rays,
                collections,
            } => {
                if tokens != ["end"] {
                    return Err(err(
                        Some(&name),
                        format!("expected `end`, found `{}`", content.trim()),
                    ));
                }
                db.records.push(VarietyRecord {
                    name,
                    rays,
                    collections,
                    derived: false,
                    source,
                });
                State::Between
            }
        };
    }

    match state {
        State::Between => Ok(db),
        State::Header { name }
        | State::Rays { name, .. }
        | State::AfterRays { name, .. }
        | State::Collections { name, .. }
        | State::AfterCollections { name, .. } => Err(ParseError {
            line: last_line,
            record: Some(name),
            message: "unexpected end of input (missing `end`?)".into(),
        }),
    }
}

/// Outcome of [`validate_record`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordReport {
    pub name: String,
    pub smooth: bool,
    pub complete: bool,
    pub round_trip: bool,
    pub fano: bool,
    pub failures: Vec<String>,
}

impl RecordReport {
    pub fn passed(&self) -> bool {
        self.smooth && self.complete && self.round_trip && self.fano && self.failures.is_empty()
    }
}

fn sorted_collections(c: &[PrimitiveCollection]) -> Vec<PrimitiveCollection> {
    let mut v = c.to_vec();
    v.sort_by(|a, b| (a.len(), a.indices()).cmp(&(b.len(), b.indices())));
    v
}

/// Builds the fan and checks smoothness, completeness, that the declared
/// collections are exactly the minimal non-faces, and the Fano condition.
pub fn validate_record(rec: &VarietyRecord) -> RecordReport {
    let mut report = RecordReport {
        name: rec.name.clone(),
        smooth: false,
        complete: false,
        round_trip: false,
        fano: false,
        failures: Vec::new(),
    };
    for (i, r) in rec.rays.iter().enumerate() {
        if !r.is_primitive() {
            report
                .failures
                .push(format!("ray v{} = ({r}) is not primitive", i + 1));
        }
    }
    for (i, j) in (0..rec.rays.len()).tuple_combinations() {
        if rec.rays[i] == rec.rays[j] {
            report
                .failures
                .push(format!("rays v{} and v{} coincide", i + 1, j + 1));
        }
    }
    let fan = match rec.build_fan() {
        Ok(f) => f,
        Err(e) => {
            report
                .failures
                .push(format!("fan construction failed: {e}"));
            return report;
        }
    };
    let fan_report = validate_fan(&fan);
    report.smooth = fan_report.smooth;
    report.complete = fan_report.complete;
    report.failures.extend(fan_report.issues);

    let found = minimal_nonfaces(&fan);
    report.round_trip = found == sorted_collections(&rec.collections);
    if !report.round_trip {
        report.failures.push(format!(
            "minimal non-faces {} differ from declared collections {}",
            found.iter().join(" "),
            rec.collections.iter().join(" ")
        ));
    }

    if report.smooth && report.complete {
        match fan::primitive_relations(&fan) {
            Ok(relations) => {
                report.fano = true;
                for r in relations.iter().filter(|r| !r.degree.is_positive()) {
                    report.fano = false;
                    report
                        .failures
                        .push(format!("relation {r} has degree {}", r.degree));
                }
            }
            Err(e) => report.failures.push(format!("primitive relations: {e}")),
        }
    }
    report
}

/// P4 followed by every row of the published results table.
pub fn shipped_database() -> AtlasDatabase {
    parse_with_source(SHIPPED_ATLAS, Source::PaperTable).expect("shipped atlas parses")
}

/// One row of the published results table: a variety, an invariant surface
/// `V(v_i, v_j)` and the value of `ch2(T_X)` on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub variety: &'static str,
    pub surface: (usize, usize),
    /// numerator, denominator
    pub value: (i64, i64),
}

impl TableRow {
    pub fn cone(&self) -> Cone {
        Cone::new([self.surface.0, self.surface.1])
    }

    pub fn expected(&self) -> Rat {
        Rat::new(self.value.0.into(), self.value.1.into())
    }
}

impl fmt::Display for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.variety, self.cone(), self.expected())
    }
}

pub const PAPER_TABLE: &[TableRow] = &[
    TableRow {
        variety: "E1",
        surface: (2, 3),
        value: (-2, 1),
    },
    TableRow {
        variety: "E2",
        surface: (2, 3),
        value: (-3, 2),
    },
    TableRow {
        variety: "E3",
        surface: (2, 3),
        value: (-1, 1),
    },
    TableRow {
        variety: "G1",
        surface: (1, 5),
        value: (-1, 2),
    },
    TableRow {
        variety: "G2",
        surface: (1, 5),
        value: (-2, 1),
    },
    TableRow {
        variety: "G3",
        surface: (1, 5),
        value: (-1, 1),
    },
    TableRow {
        variety: "G4",
        surface: (1, 5),
        value: (-1, 2),
    },
    TableRow {
        variety: "G5",
        surface: (2, 5),
        value: (-2, 1),
    },
    TableRow {
        variety: "G6",
        surface: (2, 5),
        value: (-3, 2),
    },
    TableRow {
        variety: "H1",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "H2",
        surface: (3, 4),
        value: (-1, 1),
    },
    TableRow {
        variety: "H3",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "H4",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "H5",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "H6",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "H7",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "H9",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "H10",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I1",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I2",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I3",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I4",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I5",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I6",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I8",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I9",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I10",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I12",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I14",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "I15",
        surface: (1, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "J1",
        surface: (1, 3),
        value: (-1, 1),
    },
    TableRow {
        variety: "J2",
        surface: (1, 3),
        value: (-1, 2),
    },
    TableRow {
        variety: "K1",
        surface: (3, 4),
        value: (-3, 1),
    },
    TableRow {
        variety: "K2",
        surface: (3, 4),
        value: (-3, 1),
    },
    TableRow {
        variety: "K3",
        surface: (3, 4),
        value: (-3, 1),
    },
    TableRow {
        variety: "M1",
        surface: (2, 4),
        value: (-5, 2),
    },
    TableRow {
        variety: "M2",
        surface: (2, 4),
        value: (-5, 2),
    },
    TableRow {
        variety: "M3",
        surface: (2, 4),
        value: (-5, 2),
    },
    TableRow {
        variety: "M4",
        surface: (2, 4),
        value: (-5, 2),
    },
    TableRow {
        variety: "M5",
        surface: (2, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q1",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q2",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q3",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q4",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q5",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q7",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q9",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q12",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q13",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q14",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q16",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "Q17",
        surface: (3, 4),
        value: (-3, 2),
    },
    TableRow {
        variety: "R1",
        surface: (1, 3),
        value: (-4, 1),
    },
    TableRow {
        variety: "R2",
        surface: (1, 3),
        value: (-4, 1),
    },
    TableRow {
        variety: "R3",
        surface: (1, 3),
        value: (-4, 1),
    },
    TableRow {
        variety: "108",
        surface: (4, 9),
        value: (-1, 1),
    },
    TableRow {
        variety: "U1",
        surface: (3, 7),
        value: (-1, 2),
    },
    TableRow {
        variety: "U2",
        surface: (3, 7),
        value: (-1, 2),
    },
    TableRow {
        variety: "U3",
        surface: (3, 9),
        value: (-1, 2),
    },
    TableRow {
        variety: "U7",
        surface: (3, 9),
        value: (-1, 2),
    },
    TableRow {
        variety: "U8",
        surface: (3, 9),
        value: (-1, 2),
    },
    TableRow {
        variety: "Z1",
        surface: (1, 3),
        value: (-5, 2),
    },
    TableRow {
        variety: "Z2",
        surface: (1, 3),
        value: (-2, 1),
    },
    TableRow {
        variety: "117",
        surface: (1, 4),
        value: (-5, 1),
    },
    TableRow {
        variety: "118",
        surface: (1, 4),
        value: (-5, 2),
    },
    TableRow {
        variety: "124",
        surface: (1, 7),
        value: (-4, 1),
    },
];
