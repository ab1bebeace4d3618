//! Oracle-driven binary insertion sort that records every comparison as a
//! constraint-graph edge.
//!
//! Each new element is first compared against a uniformly random
//! representative of the already-sorted sets; later probes follow plain
//! binary search (lower midpoint) on the side the answer points to. An
//! `Equal` answer ends the insertion and makes the element a member of the
//! probe's set. The full state is a pure function of the options and the
//! answer log, so a session can always be rebuilt with [`Session::replay`].

use std::collections::{HashMap, HashSet};

use chrono::{DateTime, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConstraintGraph, Degree, Edge, ElementId, GraphError};

pub const SESSION_LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionOptions {
    pub allow_equal: bool,
    pub allow_degree2: bool,
    /// Elements in the order they are inserted. The first one is placed
    /// without any question.
    pub insertion_order: Vec<ElementId>,
    pub rng_seed: u64,
}

/// An expert's judgment of the new element relative to the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    MuchLess,
    Less,
    Equal,
    Greater,
    MuchGreater,
}

impl Answer {
    pub const ALL: [Answer; 5] = [
        Answer::MuchLess,
        Answer::Less,
        Answer::Equal,
        Answer::Greater,
        Answer::MuchGreater,
    ];

    pub fn is_permitted(self, options: &SessionOptions) -> bool {
        match self {
            Answer::Equal => options.allow_equal,
            Answer::MuchLess | Answer::MuchGreater => options.allow_degree2,
            Answer::Less | Answer::Greater => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    /// Element being inserted.
    pub a: ElementId,
    /// Representative it was compared against.
    pub b: ElementId,
    pub answer: Answer,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Question {
    pub new_element: ElementId,
    pub probe: ElementId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    AwaitingAnswer,
    Done,
}

/// Serialized form of a session: everything needed to rebuild it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionLog {
    pub format_version: u32,
    pub catalog_ref: String,
    pub options: SessionOptions,
    pub answers: Vec<AnswerRecord>,
}

impl SessionLog {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("session log serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EncodingError> {
        let log: SessionLog =
            serde_json::from_str(text).map_err(|e| EncodingError::Malformed(e.to_string()))?;
        if log.format_version != SESSION_LOG_FORMAT_VERSION {
            return Err(EncodingError::FormatVersion(log.format_version));
        }
        Ok(log)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("no elements to encode")]
    EmptyElements,
    #[error("element `{0}` is not in the catalog")]
    NotInCatalog(ElementId),
    #[error("element `{0}` appears twice in the insertion order")]
    DuplicateElement(ElementId),
    #[error("answer {0:?} is not permitted by the session options")]
    DisallowedAnswer(Answer),
    #[error("session is already done")]
    SessionDone,
    #[error("stale answer: expected answer index {expected}, got {got}")]
    Stale { expected: usize, got: usize },
    #[error("answer log entry {index} does not match the session (expected {expected_a} vs {expected_b})")]
    LogMismatch {
        index: usize,
        expected_a: ElementId,
        expected_b: ElementId,
    },
    #[error("unsupported session log version {0}")]
    FormatVersion(u32),
    #[error("malformed session log: {0}")]
    Malformed(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Upper bound on questions for `n` inserted elements: `n * (ceil(log2 n) + 1)`.
pub fn question_bound(n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    let ceil_log2 = (usize::BITS - (n - 1).leading_zeros()) as usize;
    n * (ceil_log2 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pending {
    /// Position of the element in the insertion order.
    element: usize,
    /// Candidate window `[lo, hi)` over `sorted_reps`.
    lo: usize,
    hi: usize,
    probe: usize,
}

/// One expert's in-progress elicitation.
#[derive(Debug, Clone)]
pub struct Session {
    catalog_ref: String,
    options: SessionOptions,
    sorted_reps: Vec<ElementId>,
    placed: Vec<ElementId>,
    edges: Vec<Edge>,
    pending: Option<Pending>,
    answers: Vec<AnswerRecord>,
}

impl Session {
    pub fn start(
        catalog_ref: impl Into<String>,
        catalog: &[ElementId],
        options: SessionOptions,
    ) -> Result<Self, EncodingError> {
        let order = &options.insertion_order;
        if order.is_empty() {
            return Err(EncodingError::EmptyElements);
        }
        let known: HashSet<&ElementId> = catalog.iter().collect();
        let mut seen = HashSet::new();
        for id in order {
            if !known.contains(id) {
                return Err(EncodingError::NotInCatalog(id.clone()));
            }
            if !seen.insert(id) {
                return Err(EncodingError::DuplicateElement(id.clone()));
            }
        }
        let first = order[0].clone();
        let mut session = Self {
            catalog_ref: catalog_ref.into(),
            options,
            sorted_reps: vec![first.clone()],
            placed: vec![first],
            edges: Vec::new(),
            pending: None,
            answers: Vec::new(),
        };
        session.begin_insertion(1);
        Ok(session)
    }

    /// Rebuilds a session from its log; the result is indistinguishable from
    /// the live session that produced the log.
    pub fn replay(log: &SessionLog, catalog: &[ElementId]) -> Result<Self, EncodingError> {
        let mut session = Self::start(log.catalog_ref.clone(), catalog, log.options.clone())?;
        for (index, record) in log.answers.iter().enumerate() {
            let q = match session.next_question() {
                Ok(q) => q,
                Err(_) => {
                    return Err(EncodingError::LogMismatch {
                        index,
                        expected_a: record.a.clone(),
                        expected_b: record.b.clone(),
                    })
                }
            };
            if q.new_element != record.a || q.probe != record.b {
                return Err(EncodingError::LogMismatch {
                    index,
                    expected_a: q.new_element,
                    expected_b: q.probe,
                });
            }
            session.submit_answer_at(record.answer, record.at)?;
        }
        Ok(session)
    }

    fn begin_insertion(&mut self, element: usize) {
        if element >= self.options.insertion_order.len() {
            self.pending = None;
            return;
        }
        let len = self.sorted_reps.len();
        // One independent stream per insertion keeps each random first probe
        // a function of (seed, insertion position) alone.
        let mut rng = ChaCha8Rng::seed_from_u64(self.options.rng_seed);
        rng.set_stream(element as u64);
        let probe = rng.gen_range(0..len);
        self.pending = Some(Pending {
            element,
            lo: 0,
            hi: len,
            probe,
        });
    }

    pub fn catalog_ref(&self) -> &str {
        &self.catalog_ref
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    pub fn state(&self) -> SessionState {
        if self.pending.is_some() {
            SessionState::AwaitingAnswer
        } else {
            SessionState::Done
        }
    }

    pub fn is_done(&self) -> bool {
        self.pending.is_none()
    }

    /// Number of answers recorded so far; also the index the next answer
    /// must carry when submitted through [`Session::submit_indexed`].
    pub fn answer_count(&self) -> usize {
        self.answers.len()
    }

    pub fn answers(&self) -> &[AnswerRecord] {
        &self.answers
    }

    /// Representatives placed so far, least significant first.
    pub fn sorted_representatives(&self) -> &[ElementId] {
        &self.sorted_reps
    }

    /// `question_bound` for this session's element count.
    pub fn expected_questions(&self) -> usize {
        question_bound(self.options.insertion_order.len())
    }

    pub fn next_question(&self) -> Result<Question, EncodingError> {
        let p = self.pending.as_ref().ok_or(EncodingError::SessionDone)?;
        Ok(Question {
            new_element: self.options.insertion_order[p.element].clone(),
            probe: self.sorted_reps[p.probe].clone(),
        })
    }

    /// Window `[lo, hi)` and probe index of the pending insertion.
    pub fn search_window(&self) -> Option<(usize, usize, usize)> {
        self.pending.as_ref().map(|p| (p.lo, p.hi, p.probe))
    }

    pub fn submit_answer(&mut self, answer: Answer) -> Result<SessionState, EncodingError> {
        self.submit_answer_at(answer, Utc::now())
    }

    /// Like [`Session::submit_answer`] but rejects the answer unless `index`
    /// equals the current answer count.
    pub fn submit_indexed(
        &mut self,
        index: usize,
        answer: Answer,
    ) -> Result<SessionState, EncodingError> {
        if index != self.answers.len() {
            return Err(EncodingError::Stale {
                expected: self.answers.len(),
                got: index,
            });
        }
        self.submit_answer(answer)
    }

    pub fn submit_answer_at(
        &mut self,
        answer: Answer,
        at: DateTime<Utc>,
    ) -> Result<SessionState, EncodingError> {
        let mut p = self.pending.clone().ok_or(EncodingError::SessionDone)?;
        if !answer.is_permitted(&self.options) {
            return Err(EncodingError::DisallowedAnswer(answer));
        }
        let new = self.options.insertion_order[p.element].clone();
        let probe = self.sorted_reps[p.probe].clone();
        self.answers.push(AnswerRecord {
            a: new.clone(),
            b: probe.clone(),
            answer,
            at,
        });
        let edge = match answer {
            Answer::MuchLess => Edge::new(new.clone(), probe, Degree::MuchGreater),
            Answer::Less => Edge::new(new.clone(), probe, Degree::Greater),
            Answer::Equal => Edge::new(probe, new.clone(), Degree::Equal),
            Answer::Greater => Edge::new(probe, new.clone(), Degree::Greater),
            Answer::MuchGreater => Edge::new(probe, new.clone(), Degree::MuchGreater),
        };
        self.edges.push(edge);

        match answer {
            Answer::Equal => {
                self.placed.push(new);
                self.begin_insertion(p.element + 1);
                return Ok(self.state());
            }
            Answer::Less | Answer::MuchLess => p.hi = p.probe,
            Answer::Greater | Answer::MuchGreater => p.lo = p.probe + 1,
        }
        if p.lo == p.hi {
            self.sorted_reps.insert(p.lo, new.clone());
            self.placed.push(new);
            self.begin_insertion(p.element + 1);
        } else {
            p.probe = p.lo + (p.hi - p.lo - 1) / 2;
            self.pending = Some(p);
        }
        Ok(self.state())
    }

    /// The graph recorded so far. Includes the pending element once it has
    /// been compared at least once.
    pub fn graph(&self) -> Result<ConstraintGraph, EncodingError> {
        let mut nodes = self.placed.clone();
        if let Some(p) = &self.pending {
            let new = &self.options.insertion_order[p.element];
            if self.edges.iter().any(|e| &e.from == new || &e.to == new) {
                nodes.push(new.clone());
            }
        }
        Ok(ConstraintGraph::new(
            self.catalog_ref.clone(),
            nodes,
            self.edges.clone(),
            format!("encoding session; seed {}", self.options.rng_seed),
        )?)
    }

    pub fn log(&self) -> SessionLog {
        SessionLog {
            format_version: SESSION_LOG_FORMAT_VERSION,
            catalog_ref: self.catalog_ref.clone(),
            options: self.options.clone(),
            answers: self.answers.clone(),
        }
    }
}

/// Something that can answer "how does `new` compare to `probe`?".
pub trait Oracle {
    fn compare(&mut self, new: &ElementId, probe: &ElementId, options: &SessionOptions) -> Answer;
}

impl<F> Oracle for F
where
    F: FnMut(&ElementId, &ElementId, &SessionOptions) -> Answer,
{
    fn compare(&mut self, new: &ElementId, probe: &ElementId, options: &SessionOptions) -> Answer {
        self(new, probe, options)
    }
}

/// Drives a session to completion. Timestamps are taken from `clock`.
pub fn run_to_completion<O: Oracle>(
    session: &mut Session,
    oracle: &mut O,
    mut clock: impl FnMut() -> DateTime<Utc>,
) -> Result<(), EncodingError> {
    while let Ok(q) = session.next_question() {
        let answer = oracle.compare(&q.new_element, &q.probe, session.options());
        session.submit_answer_at(answer, clock())?;
    }
    Ok(())
}

/// Scripted oracle answering from a hidden weak order.
///
/// Levels are listed least significant first; elements on one level are
/// tied. When a session forbids `Equal`, ties are broken by id. A level gap
/// of at least `much_gap` yields a `Much*` answer when the session allows it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeakOrderOracle {
    pub levels: Vec<Vec<ElementId>>,
    #[serde(default)]
    pub much_gap: Option<usize>,
    #[serde(skip)]
    level_of: HashMap<ElementId, usize>,
}

impl WeakOrderOracle {
    pub fn new(levels: Vec<Vec<ElementId>>, much_gap: Option<usize>) -> Self {
        let mut oracle = Self {
            levels,
            much_gap,
            level_of: HashMap::new(),
        };
        oracle.reindex();
        oracle
    }

    pub fn from_json(text: &str) -> Result<Self, EncodingError> {
        let mut oracle: WeakOrderOracle =
            serde_json::from_str(text).map_err(|e| EncodingError::Malformed(e.to_string()))?;
        oracle.reindex();
        Ok(oracle)
    }

    fn reindex(&mut self) {
        self.level_of = self
            .levels
            .iter()
            .enumerate()
            .flat_map(|(i, level)| level.iter().map(move |id| (id.clone(), i)))
            .collect();
    }

    pub fn level(&self, id: &ElementId) -> Option<usize> {
        self.level_of.get(id).copied()
    }

    pub fn elements(&self) -> Vec<ElementId> {
        self.levels.iter().flatten().cloned().collect()
    }

    pub fn answer(&self, new: &ElementId, probe: &ElementId, options: &SessionOptions) -> Answer {
        let ln = self.level(new).expect("oracle knows the new element");
        let lp = self.level(probe).expect("oracle knows the probe");
        let much = |gap: usize| {
            options.allow_degree2 && self.much_gap.is_some_and(|g| gap >= g)
        };
        if ln > lp {
            if much(ln - lp) {
                Answer::MuchGreater
            } else {
                Answer::Greater
            }
        } else if ln < lp {
            if much(lp - ln) {
                Answer::MuchLess
            } else {
                Answer::Less
            }
        } else if options.allow_equal {
            Answer::Equal
        } else if new > probe {
            Answer::Greater
        } else {
            Answer::Less
        }
    }
}

impl Oracle for WeakOrderOracle {
    fn compare(&mut self, new: &ElementId, probe: &ElementId, options: &SessionOptions) -> Answer {
        self.answer(new, probe, options)
    }
}
