//! Plain-text exchange format for correspondence sets.
//!
//! The format is line-oriented and canonical: fields appear in one fixed
//! order, numbers use shortest round-trip decimal notation, and
//! [`CorrespondenceFile::to_text`] of a parsed file reproduces the input byte
//! for byte.
//!
//! ```text
//! viewmatch-correspondences v1
//! reference advil/0001
//! query scene-042
//! dims 1280 720
//! epipoles -312.4 85.0 1 1450.2 -60.5 1 ground_truth
//! pairs 4
//! 100.5 200.25 310.0 190.75
//! 150.0 210.0 360.5 201.5 0.93
//! 180.25 260.5 390.0 250.0
//! 120.0 300.75 330.25 289.5
//! ```
//!
//! `dims` and `epipoles` are optional; a pair row may carry a fifth
//! confidence column. Identifiers are single whitespace-free tokens.

use crate::geometry::HomogeneousPoint2;
use crate::matching::{CorrespondenceSet, MatchError};
use thiserror::Error;

const MAGIC: &str = "viewmatch-correspondences v1";

/// Parse failure with the 1-based line where it happened.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Epipole metadata embedded in a correspondence file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileEpipoles {
    /// Homogeneous epipole in the reference image.
    pub e1: [f64; 3],
    /// Homogeneous epipole in the query image.
    pub e2: [f64; 3],
    /// Provenance token, e.g. `ground_truth` or `estimated`.
    pub source: String,
}

/// One correspondence row: reference pixel, query pixel, optional confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilePair {
    pub x_ref: f64,
    pub y_ref: f64,
    pub x_query: f64,
    pub y_query: f64,
    pub confidence: Option<f64>,
}

/// In-memory form of one correspondence file.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceFile {
    pub reference_id: String,
    pub query_id: String,
    pub dims: Option<(u32, u32)>,
    pub epipoles: Option<FileEpipoles>,
    pub pairs: Vec<FilePair>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_whitespace)
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| ParseError::new(line, format!("invalid {what} `{tok}`")))?;
    if !v.is_finite() {
        return Err(ParseError::new(line, format!("{what} must be finite")));
    }
    Ok(v)
}

impl CorrespondenceFile {
    /// Parses the canonical text form, reporting the offending line on error.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |expect: &str| -> Result<(usize, String), ParseError> {
            lines
                .next()
                .map(|(n, l)| (n, l.to_owned()))
                .ok_or_else(|| ParseError::new(text.lines().count() + 1, format!("missing {expect}")))
        };

        let (n, magic) = next("header")?;
        if magic != MAGIC {
            return Err(ParseError::new(n, format!("expected header `{MAGIC}`")));
        }

        let parse_id = |line: (usize, String), key: &str| -> Result<String, ParseError> {
            let (n, l) = line;
            let mut it = l.split_ascii_whitespace();
            if it.next() != Some(key) {
                return Err(ParseError::new(n, format!("expected `{key} <id>`")));
            }
            let id = it
                .next()
                .ok_or_else(|| ParseError::new(n, format!("`{key}` needs an identifier")))?;
            if it.next().is_some() || !valid_id(id) {
                return Err(ParseError::new(
                    n,
                    format!("`{key}` takes exactly one whitespace-free identifier"),
                ));
            }
            Ok(id.to_owned())
        };

        let reference_id = parse_id(next("`reference` line")?, "reference")?;
        let query_id = parse_id(next("`query` line")?, "query")?;

        let mut dims = None;
        let mut epipoles = None;
        let (mut n, mut line) = next("`pairs` line")?;

        if line.starts_with("dims ") {
            let toks: Vec<_> = line.split_ascii_whitespace().collect();
            if toks.len() != 3 {
                return Err(ParseError::new(n, "`dims` takes width and height"));
            }
            let w: u32 = toks[1]
                .parse()
                .map_err(|_| ParseError::new(n, "invalid width"))?;
            let h: u32 = toks[2]
                .parse()
                .map_err(|_| ParseError::new(n, "invalid height"))?;
            if w == 0 || h == 0 {
                return Err(ParseError::new(n, "dims must be positive"));
            }
            dims = Some((w, h));
            (n, line) = next("`pairs` line")?;
        }

        if line.starts_with("epipoles ") {
            let toks: Vec<_> = line.split_ascii_whitespace().collect();
            if toks.len() != 8 {
                return Err(ParseError::new(
                    n,
                    "`epipoles` takes six coordinates and a source token",
                ));
            }
            let mut vals = [0.0f64; 6];
            for (i, t) in toks[1..7].iter().enumerate() {
                vals[i] = parse_f64(t, n, "epipole coordinate")?;
            }
            if !valid_id(toks[7]) {
                return Err(ParseError::new(n, "epipole source must be a single token"));
            }
            for half in [&vals[0..3], &vals[3..6]] {
                if half.iter().all(|v| *v == 0.0) {
                    return Err(ParseError::new(n, "epipole must be a non-zero 3-vector"));
                }
            }
            epipoles = Some(FileEpipoles {
                e1: [vals[0], vals[1], vals[2]],
                e2: [vals[3], vals[4], vals[5]],
                source: toks[7].to_owned(),
            });
            (n, line) = next("`pairs` line")?;
        }

        let toks: Vec<_> = line.split_ascii_whitespace().collect();
        if toks.len() != 2 || toks[0] != "pairs" {
            return Err(ParseError::new(n, "expected `pairs <count>`"));
        }
        let count: usize = toks[1]
            .parse()
            .map_err(|_| ParseError::new(n, "invalid pair count"))?;
        if count < 4 {
            return Err(ParseError::new(n, "at least 4 pairs are required"));
        }

        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = next("pair row")?;
            let toks: Vec<_> = l.split_ascii_whitespace().collect();
            if toks.len() != 4 && toks.len() != 5 {
                return Err(ParseError::new(
                    n,
                    "pair row needs 4 coordinates and an optional confidence",
                ));
            }
            let x_ref = parse_f64(toks[0], n, "coordinate")?;
            let y_ref = parse_f64(toks[1], n, "coordinate")?;
            let x_query = parse_f64(toks[2], n, "coordinate")?;
            let y_query = parse_f64(toks[3], n, "coordinate")?;
            let confidence = match toks.get(4) {
                Some(t) => Some(parse_f64(t, n, "confidence")?),
                None => None,
            };
            pairs.push(FilePair {
                x_ref,
                y_ref,
                x_query,
                y_query,
                confidence,
            });
        }

        if let Some((n, l)) = lines.next() {
            if !l.trim().is_empty() || lines.next().is_some() {
                return Err(ParseError::new(n, "unexpected content after pair rows"));
            }
        }

        Ok(Self {
            reference_id,
            query_id,
            dims,
            epipoles,
            pairs,
        })
    }

    /// Canonical text form; parsing it back yields an equal value, and
    /// re-serializing a parsed file reproduces its bytes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("reference {}\n", self.reference_id));
        out.push_str(&format!("query {}\n", self.query_id));
        if let Some((w, h)) = self.dims {
            out.push_str(&format!("dims {w} {h}\n"));
        }
        if let Some(e) = &self.epipoles {
            out.push_str(&format!(
                "epipoles {} {} {} {} {} {} {}\n",
                e.e1[0], e.e1[1], e.e1[2], e.e2[0], e.e2[1], e.e2[2], e.source
            ));
        }
        out.push_str(&format!("pairs {}\n", self.pairs.len()));
        for p in &self.pairs {
            match p.confidence {
                Some(c) => out.push_str(&format!(
                    "{} {} {} {} {}\n",
                    p.x_ref, p.y_ref, p.x_query, p.y_query, c
                )),
                None => out.push_str(&format!(
                    "{} {} {} {}\n",
                    p.x_ref, p.y_ref, p.x_query, p.y_query
                )),
            }
        }
        out
    }

    /// Converts to a scoring-ready correspondence set plus any embedded
    /// epipole pair.
    #[allow(clippy::type_complexity)]
    pub fn to_correspondence_set(
        &self,
    ) -> Result<
        (
            CorrespondenceSet,
            Option<(HomogeneousPoint2, HomogeneousPoint2)>,
        ),
        MatchError,
    > {
        let pairs: Vec<_> = self
            .pairs
            .iter()
            .map(|p| ((p.x_ref, p.y_ref), (p.x_query, p.y_query)))
            .collect();
        let set = CorrespondenceSet::new(&self.reference_id, &self.query_id, &pairs, self.dims)?;
        let eps = match &self.epipoles {
            Some(e) => Some((
                HomogeneousPoint2::new(e.e1[0], e.e1[1], e.e1[2])?,
                HomogeneousPoint2::new(e.e2[0], e.e2[1], e.e2[2])?,
            )),
            None => None,
        };
        Ok((set, eps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CorrespondenceFile {
        CorrespondenceFile {
            reference_id: "advil/0001".into(),
            query_id: "scene-042".into(),
            dims: Some((1280, 720)),
            epipoles: Some(FileEpipoles {
                e1: [-312.4, 85.0, 1.0],
                e2: [1450.2, -60.5, 1.0],
                source: "ground_truth".into(),
            }),
            pairs: vec![
                FilePair {
                    x_ref: 100.5,
                    y_ref: 200.25,
                    x_query: 310.0,
                    y_query: 190.75,
                    confidence: None,
                },
                FilePair {
                    x_ref: 150.0,
                    y_ref: 210.0,
                    x_query: 360.5,
                    y_query: 201.5,
                    confidence: Some(0.93),
                },
                FilePair {
                    x_ref: 180.25,
                    y_ref: 260.5,
                    x_query: 390.0,
                    y_query: 250.0,
                    confidence: None,
                },
                FilePair {
                    x_ref: 120.0,
                    y_ref: 300.75,
                    x_query: 330.25,
                    y_query: 289.5,
                    confidence: None,
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = sample().to_text();
        let parsed = CorrespondenceFile::parse(&text).unwrap();
        assert_eq!(parsed, sample());
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn minimal_file_round_trips_too() {
        let minimal = CorrespondenceFile {
            dims: None,
            epipoles: None,
            ..sample()
        };
        let text = minimal.to_text();
        let parsed = CorrespondenceFile::parse(&text).unwrap();
        assert_eq!(parsed, minimal);
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn awkward_floats_survive_the_round_trip() {
        let mut f = sample();
        f.pairs[0].x_ref = 0.1 + 0.2; // 0.30000000000000004
        f.pairs[1].y_query = 1e-17;
        f.pairs[2].x_query = -123456789.123456;
        let text = f.to_text();
        let parsed = CorrespondenceFile::parse(&text).unwrap();
        assert_eq!(parsed, f);
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases: Vec<(String, usize)> = vec![
            ("not-a-header\n".into(), 1),
            (format!("{MAGIC}\nreference a b\n"), 2),
            (format!("{MAGIC}\nreference a\nquery q\npairs 3\n"), 4),
            (
                format!("{MAGIC}\nreference a\nquery q\npairs 4\n1 2 3 4\n1 2 3\n"),
                6,
            ),
            (
                format!("{MAGIC}\nreference a\nquery q\npairs 4\n1 2 3 4\n1 2 3 nan\n"),
                6,
            ),
            (
                format!(
                    "{MAGIC}\nreference a\nquery q\npairs 4\n1 2 3 4\n5 6 7 8\n9 10 11 12\n13 14 15 16\nextra\n"
                ),
                9,
            ),
        ];
        for (text, want_line) in cases {
            match CorrespondenceFile::parse(&text) {
                Err(e) => assert_eq!(e.line, want_line, "for input {text:?}: {e}"),
                Ok(_) => panic!("expected parse failure for {text:?}"),
            }
        }
    }

    #[test]
    fn truncated_pair_block_is_reported() {
        let text = format!("{MAGIC}\nreference a\nquery q\npairs 5\n1 2 3 4\n5 6 7 8\n");
        let err = CorrespondenceFile::parse(&text).unwrap_err();
        assert!(err.message.contains("missing pair row"), "{err}");
    }

    #[test]
    fn conversion_carries_epipoles() {
        let (set, eps) = sample().to_correspondence_set().unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.reference_id(), "advil/0001");
        assert_eq!(set.dims(), Some((1280, 720)));
        let (e1, _e2) = eps.unwrap();
        let expect = HomogeneousPoint2::new(-312.4, 85.0, 1.0).unwrap();
        assert!(e1.projectively_equal(&expect, 1e-12));
    }

    #[test]
    fn infinite_epipoles_are_representable() {
        let mut f = sample();
        f.epipoles = Some(FileEpipoles {
            e1: [1.0, 0.02, 0.0],
            e2: [-1.0, 0.01, 0.0],
            source: "ground_truth".into(),
        });
        let text = f.to_text();
        let parsed = CorrespondenceFile::parse(&text).unwrap();
        let (_set, eps) = parsed.to_correspondence_set().unwrap();
        assert!(eps.unwrap().0.is_at_infinity());
    }
}
