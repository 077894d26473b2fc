//! Scenario files: a JSON document describing one history family plus named
//! histories and queries.
//!
//! Parsing is strict: unknown keys are rejected, every name must resolve,
//! and every matrix must pass the engine's validation. Errors carry a path
//! into the document.

use std::collections::BTreeMap;
use std::fmt;

use histories::dynamics::DynamicsSpec;
use histories::{
    Complex64, ComplexMatrix, DensityState, DynamicsSchedule, Error as EngineError, History,
    HistoryFamily, Projector, Resolution, SpectralLabel, TimeGrid,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dimension: usize,
    pub times: Vec<f64>,
    pub present_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsDoc>,
    pub resolutions: BTreeMap<String, ResolutionDoc>,
    /// Resolution name for each time slot.
    pub slots: Vec<String>,
    pub state: StateDoc,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub histories: BTreeMap<String, HistoryDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub queries: BTreeMap<String, QueryDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsDoc {
    Hamiltonian(MatrixDoc),
    Steps(Vec<MatrixDoc>),
}

/// Either explicit projectors or blocks of computational basis indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projectors: Option<Vec<MatrixDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateDoc {
    Matrix(MatrixDoc),
    /// Ket, normalised on load.
    Pure(Vec<[f64; 2]>),
    MaximallyMixed,
}

/// Slot key (relative index such as `"-1"`, or `"@<time>"`) to label names.
pub type HistoryDoc = BTreeMap<String, Vec<String>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QueryDoc {
    Probability {
        history: String,
    },
    Dfunc {},
    Conditional {
        future: String,
        given: String,
    },
    Retrodict {
        past: String,
        present: String,
    },
    RetrodictNormalized {
        past: String,
        present: String,
    },
    Check {
        mode: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        states: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scope: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<String>,
    },
    Oracle {
        history: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        trace: bool,
    },
}

/// One located problem in a scenario document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioError {
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    Validation {
        path: String,
        message: String,
    },
    UnresolvedReference {
        path: String,
        name: String,
    },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Syntax {
                line,
                column,
                message,
            } => {
                write!(f, "syntax error at line {line}, column {column}: {message}")
            }
            ScenarioError::Validation { path, message } => write!(f, "{path}: {message}"),
            ScenarioError::UnresolvedReference { path, name } => {
                write!(f, "{path}: unresolved reference `{name}`")
            }
        }
    }
}

/// All problems found in one document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioErrors(pub Vec<ScenarioError>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioErrors {}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    doc: ScenarioDoc,
    family: HistoryFamily,
    slot_resolutions: Vec<String>,
    histories: BTreeMap<String, History>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

impl Scenario {
    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn family(&self) -> &HistoryFamily {
        &self.family
    }

    pub fn tolerance(&self) -> f64 {
        self.doc.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    /// Name of the resolution assigned to `slot`.
    pub fn slot_resolution(&self, slot: usize) -> &str {
        &self.slot_resolutions[slot]
    }

    pub fn history(&self, name: &str) -> Option<&History> {
        self.histories.get(name)
    }

    pub fn histories(&self) -> &BTreeMap<String, History> {
        &self.histories
    }

    pub fn query(&self, name: &str) -> Option<&QueryDoc> {
        self.doc.queries.get(name)
    }

    /// Canonical JSON text; parsing it again yields an equal scenario.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("scenario documents serialise")
    }

    /// Human-readable history, e.g. `-1:0 0:{+|-}`.
    pub fn describe(&self, h: &History) -> String {
        describe_history(&self.family, h)
    }

    /// Resolves a slot key: a relative index (`"-1"`, `"0"`, `"2"`) or `"@<time>"`.
    pub fn slot_for_key(&self, key: &str) -> Option<usize> {
        slot_for_key(self.family.schedule().grid(), key)
    }

    /// Label index for a label name at `slot`.
    pub fn label_index(&self, slot: usize, name: &str) -> Option<usize> {
        self.family.resolution(slot).label_by_name(name)
    }
}

/// Slot-by-slot text for a history: relative slot, then the label or a
/// `{a|b}` set of labels.
pub fn describe_history(f: &HistoryFamily, h: &History) -> String {
    let grid = f.schedule().grid();
    h.span()
        .zip(h.outcomes())
        .map(|(slot, o)| {
            let res = f.resolution(slot);
            let names: Vec<String> = o
                .labels()
                .iter()
                .map(|&l| res.label(l).map(|x| x.to_string()).unwrap_or_default())
                .collect();
            let body = if names.len() == 1 {
                names[0].clone()
            } else {
                format!("{{{}}}", names.join("|"))
            };
            format!("{}:{}", grid.relative(slot), body)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn slot_for_key(grid: &TimeGrid, key: &str) -> Option<usize> {
    match key.strip_prefix('@') {
        Some(t) => grid.slot_at_time(t.trim().parse().ok()?),
        None => grid.slot_at_relative(key.trim().parse().ok()?),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let doc = parse_document(text)?;
    build(doc)
}

pub fn parse_document(text: &str) -> Result<ScenarioDoc, ScenarioErrors> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let e = if inner.is_syntax() || inner.is_eof() {
            ScenarioError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        } else {
            ScenarioError::Validation {
                path,
                message: inner.to_string(),
            }
        };
        ScenarioErrors(vec![e])
    })
}

struct Collector(Vec<ScenarioError>);

impl Collector {
    fn invalid(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.0.push(ScenarioError::Validation {
            path: path.into(),
            message: message.to_string(),
        });
    }

    fn unresolved(&mut self, path: impl Into<String>, name: &str) {
        self.0.push(ScenarioError::UnresolvedReference {
            path: path.into(),
            name: name.to_string(),
        });
    }

    fn finish<T>(self, value: Option<T>) -> Result<T, ScenarioErrors> {
        match value {
            Some(v) if self.0.is_empty() => Ok(v),
            _ => Err(ScenarioErrors(self.0)),
        }
    }
}

fn matrix(doc: &MatrixDoc, dim: usize) -> Result<ComplexMatrix, String> {
    if doc.len() != dim || doc.iter().any(|row| row.len() != dim) {
        return Err(format!("expected a {dim}x{dim} matrix"));
    }
    let rows: Vec<Vec<(f64, f64)>> = doc
        .iter()
        .map(|row| row.iter().map(|&[re, im]| (re, im)).collect())
        .collect();
    ComplexMatrix::from_pairs(&rows).map_err(|e| e.to_string())
}

fn build(doc: ScenarioDoc) -> Result<Scenario, ScenarioErrors> {
    let mut errs = Collector(Vec::new());
    if doc.schema_version != SCHEMA_VERSION {
        errs.invalid(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                doc.schema_version
            ),
        );
    }
    let dim = doc.dimension;
    if dim == 0 {
        errs.invalid("dimension", "must be positive");
        return Err(ScenarioErrors(errs.0));
    }
    let tol = doc.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tol.is_finite() && tol > 0.0) {
        errs.invalid("tolerance", "must be a positive number");
    }

    let grid = TimeGrid::new(doc.times.clone(), doc.present_index)
        .map_err(|e| {
            errs.invalid(
                if matches!(e, EngineError::SlotOutOfRange { .. }) {
                    "present_index"
                } else {
                    "times"
                },
                e,
            )
        })
        .ok();

    let spec = match &doc.dynamics {
        None => Some(DynamicsSpec::trivial(dim)),
        Some(DynamicsDoc::Hamiltonian(h)) => matrix(h, dim)
            .map(DynamicsSpec::Hamiltonian)
            .map_err(|e| errs.invalid("dynamics.hamiltonian", e))
            .ok(),
        Some(DynamicsDoc::Steps(steps)) => {
            let mut out = Vec::new();
            for (i, s) in steps.iter().enumerate() {
                match matrix(s, dim) {
                    Ok(m) => out.push(m),
                    Err(e) => errs.invalid(format!("dynamics.steps[{i}]"), e),
                }
            }
            (out.len() == steps.len()).then_some(DynamicsSpec::Steps(out))
        }
    };

    let reference = doc.reference_index.unwrap_or(0);
    let schedule = match (grid, spec) {
        (Some(grid), Some(spec)) => DynamicsSchedule::new(grid, &spec, reference, tol)
            .map_err(|e| {
                let path = match e {
                    EngineError::SlotOutOfRange { .. } => "reference_index",
                    _ => "dynamics",
                };
                errs.invalid(path, e)
            })
            .ok(),
        _ => None,
    };

    let mut resolutions: BTreeMap<&str, Resolution> = BTreeMap::new();
    for (name, r) in &doc.resolutions {
        let path = format!("resolutions.{name}");
        if let Some(res) = build_resolution(r, dim, tol, &path, &mut errs) {
            resolutions.insert(name, res);
        }
    }

    if let Some(s) = &schedule {
        if doc.slots.len() != s.slots() {
            errs.invalid(
                "slots",
                format!(
                    "expected {} entries (one per time), found {}",
                    s.slots(),
                    doc.slots.len()
                ),
            );
        }
    }
    let mut slot_res = Vec::new();
    for (i, name) in doc.slots.iter().enumerate() {
        match resolutions.get(name.as_str()) {
            Some(r) => slot_res.push(r.clone()),
            None if doc.resolutions.contains_key(name) => {}
            None => errs.unresolved(format!("slots[{i}]"), name),
        }
    }

    let state = build_state(&doc.state, dim, tol)
        .map_err(|e| errs.invalid("state", e))
        .ok();

    let family = match (schedule, state) {
        (Some(schedule), Some(state)) if slot_res.len() == doc.slots.len() && errs.0.is_empty() => {
            HistoryFamily::with_tolerance(schedule, slot_res, state, tol)
                .map_err(|e| errs.invalid("slots", e))
                .ok()
        }
        _ => None,
    };
    let Some(family) = family else {
        return errs.finish(None);
    };

    let mut histories = BTreeMap::new();
    for (name, h) in &doc.histories {
        if let Some(history) = build_history(&family, h, &format!("histories.{name}"), &mut errs) {
            histories.insert(name.clone(), history);
        }
    }
    for (name, q) in &doc.queries {
        check_query(q, &histories, &format!("queries.{name}"), &mut errs);
    }

    let slot_resolutions = doc.slots.clone();
    errs.finish(Some(Scenario {
        doc,
        family,
        slot_resolutions,
        histories,
    }))
}

fn build_resolution(
    r: &ResolutionDoc,
    dim: usize,
    tol: f64,
    path: &str,
    errs: &mut Collector,
) -> Option<Resolution> {
    let projectors: Vec<Projector> = match (&r.projectors, &r.basis) {
        (Some(_), Some(_)) | (None, None) => {
            errs.invalid(path, "give exactly one of `projectors` or `basis`");
            return None;
        }
        (Some(ps), None) => {
            let mut out = Vec::new();
            for (i, p) in ps.iter().enumerate() {
                match matrix(p, dim).and_then(|m| Projector::new(m, tol).map_err(|e| e.to_string()))
                {
                    Ok(p) => out.push(p),
                    Err(e) => errs.invalid(format!("{path}.projectors[{i}]"), e),
                }
            }
            if out.len() != ps.len() {
                return None;
            }
            out
        }
        (None, Some(blocks)) => {
            let mut out = Vec::new();
            for (i, b) in blocks.iter().enumerate() {
                if b.is_empty() {
                    errs.invalid(format!("{path}.basis[{i}]"), "block is empty");
                    continue;
                }
                match Projector::basis(dim, b) {
                    Ok(p) => out.push(p),
                    Err(_) => errs.invalid(
                        format!("{path}.basis[{i}]"),
                        format!("basis index out of range for dimension {dim}"),
                    ),
                }
            }
            if out.len() != blocks.len() {
                return None;
            }
            out
        }
    };
    let labels: Vec<String> = match &r.labels {
        Some(ls) if ls.len() != projectors.len() => {
            errs.invalid(
                format!("{path}.labels"),
                format!("expected {} labels, found {}", projectors.len(), ls.len()),
            );
            return None;
        }
        Some(ls) => ls.clone(),
        None => (0..projectors.len()).map(|i| i.to_string()).collect(),
    };
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            errs.invalid(
                format!("{path}.labels[{i}]"),
                format!("duplicate label `{l}`"),
            );
            return None;
        }
    }
    let entries = labels
        .into_iter()
        .enumerate()
        .zip(projectors)
        .map(|((i, l), p)| (SpectralLabel::named(i, l), p))
        .collect();
    Resolution::new(entries, tol)
        .map_err(|e| errs.invalid(path, e))
        .ok()
}

fn build_state(s: &StateDoc, dim: usize, tol: f64) -> Result<DensityState, String> {
    match s {
        StateDoc::Matrix(m) => DensityState::new(matrix(m, dim)?, tol).map_err(|e| e.to_string()),
        StateDoc::Pure(ket) => {
            if ket.len() != dim {
                return Err(format!(
                    "expected a ket of length {dim}, found {}",
                    ket.len()
                ));
            }
            let ket: Vec<Complex64> = ket.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            DensityState::pure(&ket).map_err(|_| "ket must be non-zero and finite".to_string())
        }
        StateDoc::MaximallyMixed => Ok(DensityState::maximally_mixed(dim)),
    }
}

fn build_history(
    f: &HistoryFamily,
    doc: &HistoryDoc,
    path: &str,
    errs: &mut Collector,
) -> Option<History> {
    if doc.is_empty() {
        errs.invalid(path, "a history needs at least one slot");
        return None;
    }
    let grid = f.schedule().grid();
    let mut assigned: BTreeMap<usize, _> = BTreeMap::new();
    let before = errs.0.len();
    for (key, labels) in doc {
        let kpath = format!("{path}.{key}");
        let Some(slot) = slot_for_key(grid, key) else {
            errs.unresolved(kpath, key);
            continue;
        };
        if labels.is_empty() {
            errs.invalid(kpath, "outcome needs at least one label");
            continue;
        }
        let res = f.resolution(slot);
        let mut idx = Vec::new();
        for l in labels {
            match res.label_by_name(l) {
                Some(i) => idx.push(i),
                None => errs.unresolved(kpath.clone(), l),
            }
        }
        if assigned.contains_key(&slot) {
            errs.invalid(kpath, "slot given twice");
            continue;
        }
        if let Ok(o) = res.outcome(idx) {
            assigned.insert(slot, o);
        }
    }
    if errs.0.len() != before {
        return None;
    }
    let start = *assigned.keys().next()?;
    let end = *assigned.keys().next_back()? + 1;
    let outcomes = (start..end)
        .map(|k| {
            assigned
                .remove(&k)
                .unwrap_or_else(|| f.resolution(k).full_outcome())
        })
        .collect();
    f.history(start, outcomes)
        .map_err(|e| errs.invalid(path, e))
        .ok()
}

fn check_query(
    q: &QueryDoc,
    histories: &BTreeMap<String, History>,
    path: &str,
    errs: &mut Collector,
) {
    let mut need = |field: &str, name: &str| {
        if !histories.contains_key(name) {
            errs.unresolved(format!("{path}.{field}"), name);
        }
    };
    match q {
        QueryDoc::Probability { history } | QueryDoc::Oracle { history, .. } => {
            need("history", history)
        }
        QueryDoc::Dfunc {} => {}
        QueryDoc::Conditional { future, given } => {
            need("future", future);
            need("given", given);
        }
        QueryDoc::Retrodict { past, present } | QueryDoc::RetrodictNormalized { past, present } => {
            need("past", past);
            need("present", present);
        }
        QueryDoc::Check {
            mode, scope, inner, ..
        } => {
            if !["weak", "medium", "additivity", "robust"].contains(&mode.as_str()) {
                errs.invalid(format!("{path}.mode"), format!("unknown mode `{mode}`"));
            }
            if let Some(s) = scope
                .as_deref()
                .filter(|s| !["pairs", "partitions"].contains(s))
            {
                errs.invalid(format!("{path}.scope"), format!("unknown scope `{s}`"));
            }
            if let Some(s) = inner
                .as_deref()
                .filter(|s| !["weak", "medium", "additivity"].contains(s))
            {
                errs.invalid(
                    format!("{path}.inner"),
                    format!("unknown inner check `{s}`"),
                );
            }
        }
    }
}
