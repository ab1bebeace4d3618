//! Element catalogs: CVSS v3.1 base vectors, control hierarchies and
//! custom lists.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ElementId;

pub const CATALOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("missing metric {0}")]
    MissingMetric(&'static str),
    #[error("duplicate metric {0}")]
    DuplicateMetric(String),
    #[error("illegal value {value:?} for metric {metric}")]
    IllegalValue { metric: String, value: String },
    #[error("vector has no impact (C, I and A are all N)")]
    NoImpact,
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("catalog is empty")]
    Empty,
    #[error("expected {expected} subcategories, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("unsupported catalog format version {0}")]
    FormatVersion(u32),
    #[error("malformed catalog: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Metric keys with their legal values, in canonical order.
pub const CVSS_METRICS: [(&str, &[&str]); 8] = [
    ("AV", &["N", "A", "L", "P"]),
    ("AC", &["L", "H"]),
    ("PR", &["N", "L", "H"]),
    ("UI", &["N", "R"]),
    ("S", &["U", "C"]),
    ("C", &["H", "L", "N"]),
    ("I", &["H", "L", "N"]),
    ("A", &["H", "L", "N"]),
];

const CVSS_PREFIX: &str = "CVSS:3.1/";

/// A CVSS v3.1 base vector. Entry `i` indexes the legal values of metric `i`
/// in [`CVSS_METRICS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CvssVector([u8; 8]);

impl CvssVector {
    pub fn value(&self, metric: &str) -> Option<&'static str> {
        let i = CVSS_METRICS.iter().position(|(k, _)| *k == metric)?;
        Some(CVSS_METRICS[i].1[self.0[i] as usize])
    }

    /// (metric, value) pairs in canonical order.
    pub fn values(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        CVSS_METRICS
            .iter()
            .zip(self.0)
            .map(|((k, vals), v)| (*k, vals[v as usize]))
    }

    fn has_impact(&self) -> bool {
        // index 2 is N for C, I and A
        self.0[5..].iter().any(|&v| v != 2)
    }

    /// Every legal base vector, in canonical metric-value order. Vectors
    /// without any C/I/A impact are not legal.
    pub fn enumerate() -> Vec<CvssVector> {
        let sizes: Vec<usize> = CVSS_METRICS.iter().map(|(_, v)| v.len()).collect();
        let total: usize = sizes.iter().product();
        let mut out = Vec::with_capacity(total);
        for mut code in 0..total {
            let mut digits = [0u8; 8];
            for i in (0..8).rev() {
                digits[i] = (code % sizes[i]) as u8;
                code /= sizes[i];
            }
            let v = CvssVector(digits);
            if v.has_impact() {
                out.push(v);
            }
        }
        out
    }

    pub fn element_id(&self) -> ElementId {
        ElementId::from(self.to_string().as_str())
    }
}

impl fmt::Display for CvssVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.values().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{k}:{v}")?;
        }
        Ok(())
    }
}

impl FromStr for CvssVector {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_cvss_vector(s)
    }
}

pub fn parse_cvss_vector(s: &str) -> Result<CvssVector, CatalogError> {
    let body = s.trim();
    let body = body.strip_prefix(CVSS_PREFIX).unwrap_or(body);
    let mut seen: [Option<u8>; 8] = [None; 8];
    for part in body.split('/') {
        let (key, value) = part
            .split_once(':')
            .ok_or_else(|| CatalogError::UnknownMetric(part.to_string()))?;
        let i = CVSS_METRICS
            .iter()
            .position(|(k, _)| *k == key)
            .ok_or_else(|| CatalogError::UnknownMetric(key.to_string()))?;
        if seen[i].is_some() {
            return Err(CatalogError::DuplicateMetric(key.to_string()));
        }
        let v = CVSS_METRICS[i]
            .1
            .iter()
            .position(|x| *x == value)
            .ok_or_else(|| CatalogError::IllegalValue {
                metric: key.to_string(),
                value: value.to_string(),
            })?;
        seen[i] = Some(v as u8);
    }
    let mut digits = [0u8; 8];
    for (i, s) in seen.iter().enumerate() {
        digits[i] = s.ok_or(CatalogError::MissingMetric(CVSS_METRICS[i].0))?;
    }
    let v = CvssVector(digits);
    if !v.has_impact() {
        return Err(CatalogError::NoImpact);
    }
    Ok(v)
}

/// How one metric should be shown when two vectors are compared side by side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricHint {
    pub metric: &'static str,
    pub left: &'static str,
    pub right: &'static str,
    /// Both sides agree; otherwise each value is shown on its own side.
    pub shared: bool,
}

pub fn render_hints(left: &CvssVector, right: &CvssVector) -> Vec<MetricHint> {
    left.values()
        .zip(right.values())
        .map(|((metric, l), (_, r))| MetricHint {
            metric,
            left: l,
            right: r,
            shared: l == r,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedVector {
    pub vector: CvssVector,
    pub count: u64,
    /// Share of all counted vulnerabilities covered by this and every
    /// higher-ranked vector.
    pub cumulative: f64,
}

impl Serialize for CvssVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CvssVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_cvss_vector(&s).map_err(serde::de::Error::custom)
    }
}

/// Vectors ranked by count, most frequent first; equal counts fall back to
/// canonical string order. Rows of the same vector are summed.
pub fn frequency_ranked(csv_text: &str) -> Result<Vec<RankedVector>, CatalogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut counts: std::collections::BTreeMap<String, (CvssVector, u64)> = Default::default();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| CatalogError::MalformedRow { line, reason: e.to_string() })?;
        if rec.len() != 2 {
            return Err(CatalogError::MalformedRow {
                line,
                reason: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        if line == 1 && rec[0].eq_ignore_ascii_case("vector") {
            continue;
        }
        let vector = parse_cvss_vector(&rec[0])
            .map_err(|e| CatalogError::MalformedRow { line, reason: e.to_string() })?;
        let count: u64 = rec[1]
            .parse()
            .map_err(|_| CatalogError::MalformedRow { line, reason: format!("bad count {:?}", &rec[1]) })?;
        counts.entry(vector.to_string()).or_insert((vector, 0)).1 += count;
    }
    let mut rows: Vec<(String, CvssVector, u64)> =
        counts.into_iter().map(|(k, (v, c))| (k, v, c)).collect();
    rows.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    let total: u64 = rows.iter().map(|r| r.2).sum();
    let mut acc = 0u64;
    Ok(rows
        .into_iter()
        .map(|(_, vector, count)| {
            acc += count;
            RankedVector {
                vector,
                count,
                cumulative: if total == 0 { 0.0 } else { acc as f64 / total as f64 },
            }
        })
        .collect())
}

pub fn load_frequency_ranked(path: &Path) -> Result<Vec<RankedVector>, CatalogError> {
    frequency_ranked(&std::fs::read_to_string(path)?)
}

/// Shortest prefix of a ranking whose cumulative share reaches `coverage`.
pub fn top_covering(ranked: &[RankedVector], coverage: f64) -> &[RankedVector] {
    let k = ranked
        .iter()
        .position(|r| r.cumulative + 1e-12 >= coverage)
        .map_or(ranked.len(), |i| i + 1);
    &ranked[..k]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Function,
    Category,
    Subcategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlEntry {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub level: Level,
}

fn validate_controls(
    entries: Vec<ControlEntry>,
    expected_subcategories: Option<usize>,
) -> Result<Vec<ControlEntry>, CatalogError> {
    if entries.is_empty() {
        return Err(CatalogError::Empty);
    }
    let mut seen = BTreeSet::new();
    for e in &entries {
        if e.id.is_empty() {
            return Err(CatalogError::Malformed("empty id".into()));
        }
        if !seen.insert(e.id.as_str()) {
            return Err(CatalogError::DuplicateId(e.id.clone()));
        }
    }
    if let Some(expected) = expected_subcategories {
        let found = entries.iter().filter(|e| e.level == Level::Subcategory).count();
        if found != expected {
            return Err(CatalogError::CountMismatch { expected, found });
        }
    }
    Ok(entries)
}

/// Parses a JSON array of entries, a catalog JSON document of kind
/// `controls`, or CSV with an `id,title,description,level` header.
pub fn parse_control_catalog(
    text: &str,
    expected_subcategories: Option<usize>,
) -> Result<Vec<ControlEntry>, CatalogError> {
    let trimmed = text.trim_start();
    let entries = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| CatalogError::Malformed(e.to_string()))?
    } else if trimmed.starts_with('{') {
        let cat = Catalog::from_json(trimmed)?;
        cat.elements
            .into_iter()
            .map(|e| ControlEntry {
                id: e.id,
                title: e.title,
                description: e.description,
                level: e.level.unwrap_or(Level::Subcategory),
            })
            .collect()
    } else {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut out = Vec::new();
        for (i, rec) in rdr.deserialize().enumerate() {
            out.push(rec.map_err(|e: csv::Error| CatalogError::MalformedRow {
                line: i + 2,
                reason: e.to_string(),
            })?);
        }
        out
    };
    validate_controls(entries, expected_subcategories)
}

pub fn load_control_catalog(
    path: &Path,
    expected_subcategories: Option<usize>,
) -> Result<Vec<ControlEntry>, CatalogError> {
    parse_control_catalog(&std::fs::read_to_string(path)?, expected_subcategories)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatalogKind {
    Cvss,
    Controls,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogElement {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub title: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
}

impl CatalogElement {
    pub fn new(id: impl Into<String>) -> Self {
        CatalogElement {
            id: id.into(),
            title: String::new(),
            description: String::new(),
            level: None,
        }
    }
}

// Elements may be written as bare id strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawElement {
    Id(String),
    Full(CatalogElement),
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawCatalog {
    format_version: u32,
    kind: CatalogKind,
    elements: Vec<RawElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Catalog {
    pub format_version: u32,
    pub kind: CatalogKind,
    pub elements: Vec<CatalogElement>,
}

impl Catalog {
    pub fn new(kind: CatalogKind, elements: Vec<CatalogElement>) -> Result<Self, CatalogError> {
        let cat = Catalog {
            format_version: CATALOG_FORMAT_VERSION,
            kind,
            elements,
        };
        cat.validate()?;
        Ok(cat)
    }

    pub fn cvss(vectors: &[CvssVector]) -> Result<Self, CatalogError> {
        Catalog::new(
            CatalogKind::Cvss,
            vectors.iter().map(|v| CatalogElement::new(v.to_string())).collect(),
        )
    }

    pub fn controls(entries: &[ControlEntry]) -> Result<Self, CatalogError> {
        Catalog::new(
            CatalogKind::Controls,
            entries
                .iter()
                .map(|e| CatalogElement {
                    id: e.id.clone(),
                    title: e.title.clone(),
                    description: e.description.clone(),
                    level: Some(e.level),
                })
                .collect(),
        )
    }

    fn validate(&self) -> Result<(), CatalogError> {
        if self.elements.is_empty() {
            return Err(CatalogError::Empty);
        }
        let mut seen = BTreeSet::new();
        for e in &self.elements {
            if e.id.is_empty() {
                return Err(CatalogError::Malformed("empty id".into()));
            }
            if self.kind == CatalogKind::Cvss {
                let v = parse_cvss_vector(&e.id)?;
                if v.to_string() != e.id {
                    return Err(CatalogError::Malformed(format!("{} is not canonical", e.id)));
                }
            }
            if !seen.insert(e.id.as_str()) {
                return Err(CatalogError::DuplicateId(e.id.clone()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let raw: RawCatalog =
            serde_json::from_str(text).map_err(|e| CatalogError::Malformed(e.to_string()))?;
        if raw.format_version != CATALOG_FORMAT_VERSION {
            return Err(CatalogError::FormatVersion(raw.format_version));
        }
        let elements = raw
            .elements
            .into_iter()
            .map(|e| match e {
                RawElement::Id(id) => CatalogElement::new(id),
                RawElement::Full(full) => full,
            })
            .collect();
        let cat = Catalog {
            format_version: raw.format_version,
            kind: raw.kind,
            elements,
        };
        cat.validate()?;
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        Catalog::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("catalog serializes");
        s.push('\n');
        s
    }

    /// Ids of the elements that take part in comparisons. For control
    /// catalogs that is the subcategory level, when levels are given.
    pub fn element_ids(&self) -> Vec<ElementId> {
        let has_levels = self.elements.iter().any(|e| e.level.is_some());
        self.elements
            .iter()
            .filter(|e| !(has_levels && self.kind == CatalogKind::Controls)
                || e.level == Some(Level::Subcategory))
            .map(|e| ElementId::from(e.id.as_str()))
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<&CatalogElement> {
        self.elements.iter().find(|e| e.id == id)
    }
}

/// How an element is shown next to another in a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RenderedPair {
    Cvss { hints: Vec<MetricHint> },
    Text { left: CatalogElement, right: CatalogElement },
}

pub fn render_pair(catalog: &Catalog, left: &str, right: &str) -> Option<RenderedPair> {
    if catalog.kind == CatalogKind::Cvss {
        let (l, r) = (parse_cvss_vector(left).ok()?, parse_cvss_vector(right).ok()?);
        return Some(RenderedPair::Cvss { hints: render_hints(&l, &r) });
    }
    Some(RenderedPair::Text {
        left: catalog.get(left)?.clone(),
        right: catalog.get(right)?.clone(),
    })
}
