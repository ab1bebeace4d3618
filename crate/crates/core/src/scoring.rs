//! Rational score generation over a constraint graph.
//!
//! Every strict edge `u -> v` of degree `d` demands
//! `score(v) - score(u) >= dist(d)`. A forward pass in topological order
//! gives each set its lowest feasible score, a backward pass its highest,
//! and the generated score is the midpoint of the two, rounded onto the
//! decimal grid and repaired upward where rounding broke an edge. Pegged
//! sets are fixed in both passes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConstraintGraph, Degree, ElementId, GraphError};

/// Absolute tolerance for floating-point constraint checks.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoringConfig {
    #[serde(rename = "min")]
    pub min_score: f64,
    #[serde(rename = "max")]
    pub max_score: f64,
    pub dist1: f64,
    pub dist2: f64,
    pub decimals: u32,
    #[serde(default)]
    pub pegs: BTreeMap<ElementId, f64>,
}

impl ScoringConfig {
    pub fn new(min_score: f64, max_score: f64, dist1: f64, dist2: f64, decimals: u32) -> Self {
        Self {
            min_score,
            max_score,
            dist1,
            dist2,
            decimals,
            pegs: BTreeMap::new(),
        }
    }

    pub fn with_peg(mut self, id: impl Into<ElementId>, value: f64) -> Self {
        self.pegs.insert(id.into(), value);
        self
    }

    pub fn dist(&self, degree: Degree) -> f64 {
        match degree {
            Degree::Equal => 0.0,
            Degree::Greater => self.dist1,
            Degree::MuchGreater => self.dist2,
        }
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let finite = [self.min_score, self.max_score, self.dist1, self.dist2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ScoringError::InvalidConfig("values must be finite".into()));
        }
        if self.min_score >= self.max_score {
            return Err(ScoringError::InvalidConfig("min must be below max".into()));
        }
        if !(self.dist1 > 0.0 && self.dist1 <= self.dist2) {
            return Err(ScoringError::InvalidConfig(
                "distances must satisfy 0 < dist1 <= dist2".into(),
            ));
        }
        if self.decimals > 9 {
            return Err(ScoringError::InvalidConfig("at most 9 decimals".into()));
        }
        for (id, &v) in &self.pegs {
            if !v.is_finite() || v < self.min_score - EPS || v > self.max_score + EPS {
                return Err(ScoringError::PegOutOfRange {
                    element: id.clone(),
                    value: v,
                    min: self.min_score,
                    max: self.max_score,
                });
            }
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        10f64.powi(self.decimals as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SetScore {
    pub representative: ElementId,
    pub members: Vec<ElementId>,
    pub min: f64,
    pub max: f64,
    pub chosen: f64,
    pub pegged: bool,
}

/// Scores per equivalency set, least significant set first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreAssignment {
    pub per_set: Vec<SetScore>,
}

impl ScoreAssignment {
    /// Chosen score of any element (members share their set's score).
    pub fn chosen(&self, id: &ElementId) -> Option<f64> {
        self.per_set
            .iter()
            .find(|s| s.members.contains(id))
            .map(|s| s.chosen)
    }

    /// Chosen score for every element.
    pub fn element_scores(&self) -> BTreeMap<ElementId, f64> {
        self.per_set
            .iter()
            .flat_map(|s| s.members.iter().map(move |m| (m.clone(), s.chosen)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("assignment serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurveSample {
    pub d1: f64,
    pub d2min: f64,
    pub d2max: f64,
}

/// Valid (degree-1, degree-2) minimum-distance choices, sampled in d1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCurve {
    pub samples: Vec<CurveSample>,
}

impl FeasibilityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d1,d2min,d2max\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{}", s.d1, s.d2min, s.d2max);
        }
        out
    }

    /// The sample nearest to `d1`.
    pub fn at(&self, d1: f64) -> Option<&CurveSample> {
        self.samples
            .iter()
            .min_by(|a, b| (a.d1 - d1).abs().total_cmp(&(b.d1 - d1).abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Violation {
    #[serde(rename_all = "camelCase")]
    Edge {
        from: ElementId,
        to: ElementId,
        degree: Degree,
        required: f64,
        actual: f64,
    },
    #[serde(rename_all = "camelCase")]
    OutOfRange { element: ElementId, score: f64 },
    #[serde(rename_all = "camelCase")]
    Missing { element: ElementId },
    /// A member's score differs from its representative's.
    #[serde(rename_all = "camelCase")]
    UnequalMember {
        element: ElementId,
        representative: ElementId,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("invalid scoring config: {0}")]
    InvalidConfig(String),
    #[error("peg {value} for `{element}` is outside its valid interval [{min}, {max}]")]
    PegOutOfRange {
        element: ElementId,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("elements of the set of `{representative}` are pegged to different values")]
    ConflictingPegs { representative: ElementId },
    #[error("peg on `{element}` violates edge `{from}` -> `{to}` (needs a gap of {required})")]
    InfeasiblePeg {
        element: ElementId,
        from: ElementId,
        to: ElementId,
        required: f64,
    },
    #[error("no rational scores exist: `{element}` needs at least {needed}, above the bound {bound}")]
    Infeasible {
        element: ElementId,
        needed: f64,
        bound: f64,
    },
    #[error("no score on the {decimals}-decimal grid fits `{element}` in [{min}, {max}]")]
    NoGridSolution {
        element: ElementId,
        decimals: u32,
        min: f64,
        max: f64,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Pegs resolved to representative indices.
fn resolve_pegs(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
) -> Result<Vec<Option<f64>>, ScoringError> {
    let ix = g.index();
    let mut pegs: Vec<Option<f64>> = vec![None; ix.ids.len()];
    for (id, &v) in &cfg.pegs {
        let r = ix.rep_of[ix.position(id)?];
        match pegs[r] {
            Some(prev) if (prev - v).abs() > EPS => {
                return Err(ScoringError::ConflictingPegs {
                    representative: ix.ids[r].clone(),
                });
            }
            _ => pegs[r] = Some(v),
        }
    }
    Ok(pegs)
}

fn lower_bounds(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
    pegs: &[Option<f64>],
) -> Result<Vec<f64>, ScoringError> {
    let ix = g.index();
    let mut low = vec![f64::NAN; ix.ids.len()];
    for &u in &ix.topo {
        let mut bound = cfg.min_score;
        let mut binding = None;
        for &(p, d) in &ix.pred[u] {
            let cand = low[p] + cfg.dist(d);
            if cand > bound {
                bound = cand;
                binding = Some((p, d));
            }
        }
        low[u] = match pegs[u] {
            Some(peg) => {
                if peg < bound - EPS {
                    let (p, d) = binding.expect("bound above min implies a parent");
                    return Err(ScoringError::InfeasiblePeg {
                        element: ix.ids[u].clone(),
                        from: ix.ids[p].clone(),
                        to: ix.ids[u].clone(),
                        required: cfg.dist(d),
                    });
                }
                peg
            }
            None => {
                if bound > cfg.max_score + EPS {
                    return Err(ScoringError::Infeasible {
                        element: ix.ids[u].clone(),
                        needed: bound,
                        bound: cfg.max_score,
                    });
                }
                bound
            }
        };
    }
    Ok(low)
}

fn upper_bounds(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
    pegs: &[Option<f64>],
) -> Result<Vec<f64>, ScoringError> {
    let ix = g.index();
    let mut up = vec![f64::NAN; ix.ids.len()];
    for &u in ix.topo.iter().rev() {
        let mut bound = cfg.max_score;
        let mut binding = None;
        for &(c, d) in &ix.succ[u] {
            let cand = up[c] - cfg.dist(d);
            if cand < bound {
                bound = cand;
                binding = Some((c, d));
            }
        }
        up[u] = match pegs[u] {
            Some(peg) => {
                if peg > bound + EPS {
                    let (c, d) = binding.expect("bound below max implies a child");
                    return Err(ScoringError::InfeasiblePeg {
                        element: ix.ids[u].clone(),
                        from: ix.ids[u].clone(),
                        to: ix.ids[c].clone(),
                        required: cfg.dist(d),
                    });
                }
                peg
            }
            None => {
                if bound < cfg.min_score - EPS {
                    return Err(ScoringError::Infeasible {
                        element: ix.ids[u].clone(),
                        needed: cfg.min_score,
                        bound,
                    });
                }
                bound
            }
        };
    }
    Ok(up)
}

fn to_map(g: &ConstraintGraph, values: &[f64]) -> BTreeMap<ElementId, f64> {
    let ix = g.index();
    ix.reps.iter().map(|&r| (ix.ids[r].clone(), values[r])).collect()
}

/// Lowest rational score of every representative.
pub fn assign_min_scores(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
) -> Result<BTreeMap<ElementId, f64>, ScoringError> {
    cfg.validate()?;
    let pegs = resolve_pegs(g, cfg)?;
    Ok(to_map(g, &lower_bounds(g, cfg, &pegs)?))
}

/// Highest rational score of every representative.
pub fn assign_max_scores(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
) -> Result<BTreeMap<ElementId, f64>, ScoringError> {
    cfg.validate()?;
    let pegs = resolve_pegs(g, cfg)?;
    // The forward pass is the complete feasibility check.
    lower_bounds(g, cfg, &pegs)?;
    Ok(to_map(g, &upper_bounds(g, cfg, &pegs)?))
}

/// Per-representative `(min, max, pegged)` bounds.
type Bounds = (Vec<f64>, Vec<f64>, Vec<Option<f64>>);

fn bounds(g: &ConstraintGraph, cfg: &ScoringConfig) -> Result<Bounds, ScoringError> {
    cfg.validate()?;
    let pegs = resolve_pegs(g, cfg)?;
    let low = lower_bounds(g, cfg, &pegs)?;
    let up = upper_bounds(g, cfg, &pegs)?;
    Ok((low, up, pegs))
}

/// Midpoint of the two bound passes, before any rounding.
pub fn midpoint_scores(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
) -> Result<BTreeMap<ElementId, f64>, ScoringError> {
    let (low, up, _) = bounds(g, cfg)?;
    let mid: Vec<f64> = low.iter().zip(&up).map(|(l, u)| (l + u) / 2.0).collect();
    Ok(to_map(g, &mid))
}

fn round_half_away(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

fn ceil_grid(x: f64, scale: f64) -> f64 {
    (x * scale - 1e-6).ceil() / scale
}

fn floor_grid(x: f64, scale: f64) -> f64 {
    (x * scale + 1e-6).floor() / scale
}

/// Generates one rational scoring system.
pub fn generate_scores(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
) -> Result<ScoreAssignment, ScoringError> {
    let (low, up, pegs) = bounds(g, cfg)?;
    let ix = g.index();
    let scale = cfg.scale();
    let mut chosen = vec![f64::NAN; ix.ids.len()];
    for &u in &ix.topo {
        if let Some(peg) = pegs[u] {
            chosen[u] = peg;
            continue;
        }
        let required = ix.pred[u]
            .iter()
            .map(|&(p, d)| chosen[p] + cfg.dist(d))
            .fold(low[u], f64::max);
        let mut c = round_half_away((low[u] + up[u]) / 2.0, scale);
        if c < required - EPS {
            c = ceil_grid(required, scale);
        }
        if c > up[u] + EPS {
            c = floor_grid(up[u], scale);
        }
        if c < required - EPS {
            return Err(ScoringError::NoGridSolution {
                element: ix.ids[u].clone(),
                decimals: cfg.decimals,
                min: required,
                max: up[u],
            });
        }
        chosen[u] = c;
    }

    let mut members: BTreeMap<usize, Vec<ElementId>> = BTreeMap::new();
    for (i, &r) in ix.rep_of.iter().enumerate() {
        members.entry(r).or_default().push(ix.ids[i].clone());
    }
    let per_set = ix
        .topo
        .iter()
        .map(|&r| SetScore {
            representative: ix.ids[r].clone(),
            members: members.remove(&r).unwrap_or_default(),
            min: low[r],
            max: up[r],
            chosen: chosen[r],
            pegged: pegs[r].is_some(),
        })
        .collect();
    Ok(ScoreAssignment { per_set })
}

/// Checks a score map (keyed by any element) against every strict edge and
/// the configured range. Empty means rational.
pub fn validate_rational(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
    scores: &BTreeMap<ElementId, f64>,
) -> Vec<Violation> {
    let ix = g.index();
    let mut out = Vec::new();
    let mut rep_score: Vec<Option<f64>> = vec![None; ix.ids.len()];
    for &r in &ix.reps {
        rep_score[r] = scores.get(&ix.ids[r]).copied();
        if rep_score[r].is_none() {
            out.push(Violation::Missing {
                element: ix.ids[r].clone(),
            });
        }
    }
    for (i, &r) in ix.rep_of.iter().enumerate() {
        if i == r {
            continue;
        }
        if let (Some(s), Some(rs)) = (scores.get(&ix.ids[i]), rep_score[r]) {
            if (s - rs).abs() > EPS {
                out.push(Violation::UnequalMember {
                    element: ix.ids[i].clone(),
                    representative: ix.ids[r].clone(),
                });
            }
        }
    }
    for &r in &ix.reps {
        if let Some(s) = rep_score[r] {
            if s < cfg.min_score - EPS || s > cfg.max_score + EPS {
                out.push(Violation::OutOfRange {
                    element: ix.ids[r].clone(),
                    score: s,
                });
            }
        }
    }
    for &u in &ix.reps {
        for &(v, d) in &ix.succ[u] {
            if let (Some(su), Some(sv)) = (rep_score[u], rep_score[v]) {
                let required = cfg.dist(d);
                if sv - su < required - EPS {
                    out.push(Violation::Edge {
                        from: ix.ids[u].clone(),
                        to: ix.ids[v].clone(),
                        degree: d,
                        required,
                        actual: sv - su,
                    });
                }
            }
        }
    }
    out
}

/// Pegs more elements and regenerates. Each new peg must lie inside the
/// element's interval computed without its own previous peg.
pub fn peg_and_regenerate(
    g: &ConstraintGraph,
    cfg: &ScoringConfig,
    pegs: &BTreeMap<ElementId, f64>,
) -> Result<(ScoringConfig, ScoreAssignment), ScoringError> {
    let mut free = cfg.clone();
    for id in pegs.keys() {
        let rep = g.representative(id)?.clone();
        free.pegs
            .retain(|k, _| g.representative(k).map(|r| r != &rep).unwrap_or(true));
    }
    let (low, up, _) = bounds(g, &free)?;
    let ix = g.index();
    for (id, &v) in pegs {
        let r = ix.rep_of[ix.position(id)?];
        if !v.is_finite() || v < low[r] - EPS || v > up[r] + EPS {
            return Err(ScoringError::PegOutOfRange {
                element: id.clone(),
                value: v,
                min: low[r],
                max: up[r],
            });
        }
    }
    let mut next = free;
    next.pegs.extend(pegs.iter().map(|(k, &v)| (k.clone(), v)));
    let assignment = generate_scores(g, &next)?;
    Ok((next, assignment))
}

/// Pareto frontier of `(degree-1 count, degree-2 count)` over all strict
/// paths. Any rational system needs `a * d1 + b * d2 <= max - min` for
/// every listed pair.
pub fn path_degree_profiles(g: &ConstraintGraph) -> Vec<(usize, usize)> {
    let ix = g.index();
    let mut frontier: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ix.ids.len()];
    let mut all = vec![(0, 0)];
    for &u in &ix.topo {
        let mut cands = vec![(0, 0)];
        for &(p, d) in &ix.pred[u] {
            for &(a, b) in &frontier[p] {
                cands.push(if d == Degree::MuchGreater { (a, b + 1) } else { (a + 1, b) });
            }
        }
        frontier[u] = pareto(cands);
        all.extend(frontier[u].iter().copied());
    }
    pareto(all)
}

/// Keeps pairs not dominated component-wise, sorted by `b`.
fn pareto(mut pairs: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    // Descending b, then descending a: a pair survives iff its a beats every
    // a seen with a larger-or-equal b.
    pairs.sort_by(|x, y| y.1.cmp(&x.1).then(y.0.cmp(&x.0)));
    pairs.dedup();
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut best_a: Option<usize> = None;
    for (a, b) in pairs {
        if best_a.is_none_or(|m| a > m) {
            out.push((a, b));
            best_a = Some(a);
        }
    }
    out.reverse();
    out
}

/// Largest degree-2 distance compatible with `d1`, or `None` when no
/// rational system exists for that `d1`.
pub fn max_degree2_distance(profiles: &[(usize, usize)], range: f64, d1: f64) -> Option<f64> {
    let mut d2max = range;
    for &(a, b) in profiles {
        if b == 0 {
            if a as f64 * d1 > range + EPS {
                return None;
            }
        } else {
            d2max = d2max.min((range - a as f64 * d1) / b as f64);
        }
    }
    (d2max >= d1 - EPS).then_some(d2max)
}

/// Samples valid minimum-distance choices at `d1 = step, 2*step, ...`
/// up to the score range.
pub fn feasible_distances(
    g: &ConstraintGraph,
    min_score: f64,
    max_score: f64,
    d1_step: f64,
) -> FeasibilityCurve {
    let range = max_score - min_score;
    let mut samples = Vec::new();
    // also rejects NaN
    if d1_step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || range.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
    {
        return FeasibilityCurve { samples };
    }
    let profiles = path_degree_profiles(g);
    let steps = ((range / d1_step) + 1e-9).floor() as usize;
    for k in 1..=steps {
        let d1 = k as f64 * d1_step;
        if let Some(d2max) = max_degree2_distance(&profiles, range, d1) {
            samples.push(CurveSample {
                d1,
                d2min: d1,
                d2max,
            });
        }
    }
    FeasibilityCurve { samples }
}
