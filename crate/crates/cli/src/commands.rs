//! Verb implementations. Each returns a [`Report`] plus whether a
//! consistency check failed.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use histories::consistency::{
    check_additivity, check_medium_decoherence, check_state_robustness, check_weak_consistency,
    AdditivityOptions, AdditivityScope, InnerCheck, StateSet, Witness, DEFAULT_CHECK_TOL,
    DEFAULT_ROBUST_STATES,
};
use histories::history::DEFAULT_HISTORY_CAP;
use histories::oracle::sequential_probability;
use histories::random::DEFAULT_SEED;
use histories::{ConsistencyReport, Error as EngineError, History, Partition};
use serde_json::Value;

use crate::report::{complex_json, Cell, Report};
use crate::scenario::{describe_history, QueryDoc, Scenario, ScenarioErrors};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Scenario(ScenarioErrors),
    Engine(EngineError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Scenario(e) => write!(f, "invalid scenario:\n{e}"),
            CliError::Engine(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Engine(e)
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

/// Result of one verb: the report and whether a check failed.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub check_failed: bool,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self {
            report,
            check_failed: false,
        }
    }
}

type CmdResult = Result<Outcome, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Weak,
    Medium,
    Additivity,
    Robust,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ScopeArg {
    Pairs,
    Partitions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum InnerArg {
    Weak,
    Medium,
    Additivity,
}

fn parse_value<V: clap::ValueEnum>(s: &str, what: &str) -> Result<V, CliError> {
    V::from_str(s, false).map_err(|_| usage(format!("unknown {what} `{s}`")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckArgs {
    pub mode: ModeArg,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub states: Option<usize>,
    pub scope: Option<ScopeArg>,
    pub inner: Option<InnerArg>,
}

fn base(s: &Scenario, command: &str) -> Report {
    let f = s.family();
    Report::new(command)
        .meta("dimension", f.dim())
        .meta("slots", f.slots())
        .meta("present_index", f.present())
        .meta("reference_index", f.schedule().reference())
}

/// A named history, or an inline one such as `-1=0;0=+|-`.
pub fn resolve_history(s: &Scenario, text: &str) -> Result<History, CliError> {
    if let Some(h) = s.history(text) {
        return Ok(h.clone());
    }
    if !text.contains('=') {
        return Err(usage(format!("no history named `{text}`")));
    }
    let mut assigned = BTreeMap::new();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, labels) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("expected KEY=LABELS, got `{part}`")))?;
        let slot = s
            .slot_for_key(key)
            .ok_or_else(|| usage(format!("no slot `{key}`")))?;
        let res = s.family().resolution(slot);
        let idx = labels
            .split('|')
            .map(|l| {
                res.label_by_name(l.trim())
                    .ok_or_else(|| usage(format!("no label `{l}` at slot `{key}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if assigned.insert(slot, res.outcome(idx)?).is_some() {
            return Err(usage(format!("slot `{key}` given twice")));
        }
    }
    let (&start, _) = assigned
        .first_key_value()
        .ok_or_else(|| usage("empty history"))?;
    let end = *assigned.keys().next_back().expect("non-empty") + 1;
    let outcomes = (start..end)
        .map(|k| {
            assigned
                .remove(&k)
                .unwrap_or_else(|| s.family().resolution(k).full_outcome())
        })
        .collect();
    Ok(s.family().history(start, outcomes)?)
}

pub fn validate(s: &Scenario) -> CmdResult {
    let f = s.family();
    let grid = f.schedule().grid();
    let mut r = base(s, "validate")
        .meta("histories", s.histories().len())
        .meta("queries", s.doc().queries.len())
        .meta("tolerance", s.tolerance())
        .columns(&["slot", "relative", "time", "resolution", "labels"]);
    for k in 0..f.slots() {
        let res = f.resolution(k);
        let labels: Vec<String> = res.entries().iter().map(|(l, _)| l.to_string()).collect();
        r.row(vec![
            k.into(),
            grid.relative(k).into(),
            grid.time(k).into(),
            s.slot_resolution(k).into(),
            labels.join(" ").into(),
        ]);
    }
    Ok(r.summary("valid", true).into())
}

pub fn probs(s: &Scenario, names: &[String]) -> CmdResult {
    let f = s.family();
    if names.is_empty() {
        let fine = f.all_fine_histories(DEFAULT_HISTORY_CAP)?;
        let mut r = base(s, "probs").columns(&["index", "history", "probability"]);
        let mut sum = 0.0;
        for (i, h) in fine.iter().enumerate() {
            let p = f.history_probability(h)?;
            sum += p;
            r.row(vec![i.into(), s.describe(h).into(), p.into()]);
        }
        return Ok(r.summary("sum", sum).into());
    }
    let mut r = base(s, "probs").columns(&["name", "history", "probability"]);
    for name in names {
        let h = resolve_history(s, name)?;
        r.row(vec![
            name.as_str().into(),
            s.describe(&h).into(),
            f.history_probability(&h)?.into(),
        ]);
    }
    Ok(r.into())
}

pub fn dfunc(s: &Scenario) -> CmdResult {
    let d = s.family().decoherence_functional()?;
    let m = d.matrix();
    let deviation = m.hermitian_deviation()?;
    if deviation > s.tolerance() {
        return Err(usage(format!(
            "decoherence functional is not Hermitian (deviation {deviation:e})"
        )));
    }
    let eig = m.hermitian_eigenvalues()?;
    let trace = m.trace()?;
    let hs = d.histories();
    let mut r = base(s, "dfunc")
        .meta("histories", hs.len())
        .meta("hermitian_deviation", deviation)
        .meta("min_eigenvalue", eig.first().copied())
        .meta("trace_re", trace.re)
        .meta("trace_im", trace.im)
        .columns(&["a", "b", "history_a", "history_b", "re", "im"]);
    let mut matrix = Vec::with_capacity(hs.len());
    for a in 0..hs.len() {
        let mut row = Vec::with_capacity(hs.len());
        for b in 0..hs.len() {
            let z = d.entry(a, b);
            r.row(vec![
                a.into(),
                b.into(),
                s.describe(&hs[a]).into(),
                s.describe(&hs[b]).into(),
                z.re.into(),
                z.im.into(),
            ]);
            row.push(complex_json(z.re, z.im));
        }
        matrix.push(Value::Array(row));
    }
    r.extra.push(("matrix".into(), Value::Array(matrix)));
    Ok(r.into())
}

pub fn condition(s: &Scenario, given: &str, future: Option<&str>) -> CmdResult {
    let f = s.family();
    let given = resolve_history(s, given)?;
    let r = base(s, "condition").meta("given", s.describe(&given));
    if let Some(name) = future {
        let h = resolve_history(s, name)?;
        let mut r = r.columns(&["future", "probability"]);
        r.row(vec![
            s.describe(&h).into(),
            f.predictive_conditional(&h, &given)?.into(),
        ]);
        return Ok(r.into());
    }
    let range = f.present() + 1..f.slots();
    if range.is_empty() {
        return Err(usage(
            "the present is the last slot; there is no future to enumerate",
        ));
    }
    let mut r = r.columns(&["index", "future", "probability"]);
    let mut sum = 0.0;
    for (i, h) in f
        .fine_histories(range, DEFAULT_HISTORY_CAP)?
        .iter()
        .enumerate()
    {
        let p = f.predictive_conditional(h, &given)?;
        sum += p;
        r.row(vec![i.into(), s.describe(h).into(), p.into()]);
    }
    Ok(r.summary("sum", sum).into())
}

pub fn retrodict(s: &Scenario, present: &str, past: Option<&str>, normalized: bool) -> CmdResult {
    let f = s.family();
    let now = resolve_history(s, present)?;
    if now.span() != (f.present()..f.present() + 1) {
        return Err(usage(
            "the present outcome must cover exactly the present slot",
        ));
    }
    let outcome = &now.outcomes()[0];
    let eval = |h: &History| {
        if normalized {
            f.retrodictive_normalized(h, outcome)
        } else {
            f.retrodictive_conditional(h, outcome)
        }
    };
    let r = base(s, "retrodict")
        .meta("present", s.describe(&now))
        .meta("normalized", normalized);
    if let Some(name) = past {
        let h = resolve_history(s, name)?;
        let mut r = r.columns(&["past", "probability"]);
        r.row(vec![s.describe(&h).into(), eval(&h)?.into()]);
        return Ok(r.into());
    }
    if f.present() == 0 {
        return Err(usage(
            "the present is the first slot; there is no past to enumerate",
        ));
    }
    let mut r = r.columns(&["index", "past", "probability"]);
    let mut sum = 0.0;
    for (i, h) in f
        .fine_histories(0..f.present(), DEFAULT_HISTORY_CAP)?
        .iter()
        .enumerate()
    {
        let p = eval(h)?;
        sum += p;
        r.row(vec![i.into(), s.describe(h).into(), p.into()]);
    }
    Ok(r.summary("sum", sum).into())
}

/// `blocks` lists label names, `,` within a block and `;` between blocks.
pub fn coarse_grain(s: &Scenario, slot_key: &str, blocks: &str) -> CmdResult {
    let f = s.family();
    let slot = s
        .slot_for_key(slot_key)
        .ok_or_else(|| usage(format!("no slot `{slot_key}`")))?;
    let res = f.resolution(slot);
    let parsed = blocks
        .split(';')
        .map(|b| {
            b.split(',')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| {
                    res.label_by_name(l)
                        .ok_or_else(|| usage(format!("no label `{l}` at slot `{slot_key}`")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let partition = Partition::from_blocks(&parsed)?;
    let coarse = f.coarsened(slot, &partition)?;

    let fine = f.all_fine_histories(DEFAULT_HISTORY_CAP)?;
    let mut sums: HashMap<History, f64> = HashMap::new();
    for h in &fine {
        let mut outcomes = h.outcomes().to_vec();
        let label = *outcomes[slot].labels().iter().next().expect("fine outcome");
        let block = partition.block_of(label).expect("total partition");
        outcomes[slot] = coarse.resolution(slot).singleton(block)?;
        let key = coarse.history(h.start(), outcomes)?;
        *sums.entry(key).or_default() += f.history_probability_raw(h)?;
    }

    let mut r = base(s, "coarse-grain")
        .meta("slot", f.schedule().grid().relative(slot))
        .columns(&["index", "history", "coarse", "fine_sum", "difference"]);
    let mut worst = 0.0f64;
    for (i, h) in coarse
        .all_fine_histories(DEFAULT_HISTORY_CAP)?
        .iter()
        .enumerate()
    {
        let p = coarse.history_probability_raw(h)?;
        let sum = sums.get(h).copied().unwrap_or(0.0);
        worst = worst.max((p - sum).abs());
        r.row(vec![
            i.into(),
            describe_history(&coarse, h).into(),
            p.into(),
            sum.into(),
            (p - sum).into(),
        ]);
    }
    Ok(r.summary("max_difference", worst).into())
}

fn witness_text(s: &Scenario, fine: &[History], w: &Witness) -> String {
    match w {
        Witness::None => "-".into(),
        Witness::Pair { a, b } => format!("{} / {}", s.describe(&fine[*a]), s.describe(&fine[*b])),
        Witness::Coarse { slot, history } => match slot {
            Some(k) => format!(
                "slot {}: {}",
                s.family().schedule().grid().relative(*k),
                s.describe(history)
            ),
            None => format!("merged: {}", s.describe(history)),
        },
        Witness::State { index, inner } => {
            format!("state {index}: {}", witness_text(s, fine, inner))
        }
    }
}

fn witness_pair(w: &Witness) -> Option<(usize, usize)> {
    match w {
        Witness::Pair { a, b } => Some((*a, *b)),
        Witness::State { inner, .. } => witness_pair(inner),
        _ => None,
    }
}

pub fn check(s: &Scenario, args: &CheckArgs) -> CmdResult {
    let f = s.family();
    let tol = args.tol.unwrap_or(DEFAULT_CHECK_TOL);
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(usage("tolerance must be a non-negative number"));
    }
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let options = AdditivityOptions {
        scope: match args.scope.unwrap_or(ScopeArg::Partitions) {
            ScopeArg::Pairs => AdditivityScope::Pairs,
            ScopeArg::Partitions => AdditivityScope::Partitions,
        },
        seed,
        cap: DEFAULT_HISTORY_CAP,
    };
    let report: ConsistencyReport = match args.mode {
        ModeArg::Weak => check_weak_consistency(&f.decoherence_functional()?, tol),
        ModeArg::Medium => check_medium_decoherence(&f.decoherence_functional()?, tol),
        ModeArg::Additivity => check_additivity(f, tol, options)?,
        ModeArg::Robust => {
            let inner = match args.inner.unwrap_or(InnerArg::Weak) {
                InnerArg::Weak => InnerCheck::Weak,
                InnerArg::Medium => InnerCheck::Medium,
                InnerArg::Additivity => InnerCheck::Additivity(options),
            };
            let count = args.states.unwrap_or(DEFAULT_ROBUST_STATES);
            check_state_robustness(f, &StateSet::Random { count, seed }, inner, tol)?
        }
    };
    let fine = f.all_fine_histories(DEFAULT_HISTORY_CAP)?;
    let pair = witness_pair(&report.witness);
    let mut r = base(s, "check").meta("seed", report.seed).columns(&[
        "mode",
        "passed",
        "worst_violation",
        "tol",
        "witness_a",
        "witness_b",
        "witness",
        "checked",
    ]);
    r.row(vec![
        report.mode.to_string().into(),
        report.passed.into(),
        report.worst_violation.into(),
        report.tolerance.into(),
        pair.map(|p| p.0).into(),
        pair.map(|p| p.1).into(),
        witness_text(s, &fine, &report.witness).into(),
        report.checked.into(),
    ]);
    Ok(Outcome {
        report: r,
        check_failed: !report.passed,
    })
}

pub fn oracle(s: &Scenario, history: &str, trace: bool) -> CmdResult {
    let f = s.family();
    let h = resolve_history(s, history)?;
    let (p, run) = sequential_probability(f, &h)?;
    let r = base(s, "oracle").meta("history", s.describe(&h));
    if !trace {
        let engine = f.history_probability(&h)?;
        let mut r = r.columns(&["oracle", "engine", "difference"]);
        r.row(vec![p.into(), engine.into(), (p - engine).into()]);
        return Ok(r.into());
    }
    let grid = f.schedule().grid();
    let mut r = r.columns(&["slot", "outcome", "step_probability", "cumulative"]);
    let mut cumulative = 1.0;
    for step in &run.steps {
        cumulative *= step.probability;
        let single = f.history(step.slot, vec![step.outcome.clone()])?;
        let text = s.describe(&single);
        let label = text
            .split_once(':')
            .map_or(text.as_str(), |(_, l)| l)
            .to_string();
        r.row(vec![
            grid.relative(step.slot).into(),
            label.into(),
            step.probability.into(),
            cumulative.into(),
        ]);
    }
    let truncated = run.truncated_at.map(|k| grid.relative(k));
    Ok(r.summary("probability", p)
        .summary("truncated_at", truncated)
        .into())
}

pub fn query(s: &Scenario, name: &str) -> CmdResult {
    let q = s
        .query(name)
        .ok_or_else(|| usage(format!("no query named `{name}`")))?;
    let mut out = match q {
        QueryDoc::Probability { history } => probs(s, std::slice::from_ref(history)),
        QueryDoc::Dfunc {} => dfunc(s),
        QueryDoc::Conditional { future, given } => condition(s, given, Some(future)),
        QueryDoc::Retrodict { past, present } => retrodict(s, present, Some(past), false),
        QueryDoc::RetrodictNormalized { past, present } => retrodict(s, present, Some(past), true),
        QueryDoc::Check {
            mode,
            tol,
            seed,
            states,
            scope,
            inner,
        } => {
            let args = CheckArgs {
                mode: parse_value(mode, "mode")?,
                tol: *tol,
                seed: *seed,
                states: *states,
                scope: scope
                    .as_deref()
                    .map(|x| parse_value(x, "scope"))
                    .transpose()?,
                inner: inner
                    .as_deref()
                    .map(|x| parse_value(x, "inner check"))
                    .transpose()?,
            };
            check(s, &args)
        }
        QueryDoc::Oracle { history, trace } => oracle(s, history, *trace),
    }?;
    out.report
        .meta
        .insert(0, ("query".into(), Cell::Text(name.to_string())));
    Ok(out)
}
