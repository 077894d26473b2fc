//! Tabular command output rendered as an aligned table, CSV or JSON.
//!
//! Floats are shown with 12 significant digits and `-0` is printed as `0`,
//! so output is byte-stable across runs and platforms.

use std::fmt::Write as _;

use serde_json::{Map, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Null,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<isize> for Cell {
    fn from(x: isize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl<C: Into<Cell>> From<Option<C>> for Cell {
    fn from(x: Option<C>) -> Self {
        x.map_or(Cell::Null, Into::into)
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] and maps `-0` to `0`.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest decimal text for `round_sig(x)`.
pub fn format_num(x: f64) -> String {
    let r = round_sig(x);
    if !r.is_finite() {
        return r.to_string();
    }
    let plain = format!("{r}");
    let exp = format!("{r:e}");
    if plain.len() <= exp.len() + 2 {
        plain
    } else {
        exp
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => "-".to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => {
                serde_json::Number::from_f64(round_sig(*x)).map_or(Value::Null, Value::Number)
            }
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Null => Value::Null,
        }
    }
}

/// Output of one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub command: String,
    pub meta: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
    /// Extra JSON-only payload (e.g. a full matrix).
    pub extra: Vec<(String, Value)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn meta(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn columns(mut self, cols: &[&str]) -> Self {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn summary(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.summary.push((key.to_string(), value.into()));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn table(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {}", v.text());
        }
        if !self.columns.is_empty() {
            let cells: Vec<Vec<String>> = self
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::text).collect())
                .collect();
            let widths: Vec<usize> = self
                .columns
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    cells
                        .iter()
                        .map(|r| r[i].chars().count())
                        .chain([c.chars().count()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |items: &[String]| {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            let _ = writeln!(out, "{}", line(&self.columns));
            for r in &cells {
                let _ = writeln!(out, "{}", line(r));
            }
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k}: {}", v.text());
        }
        out
    }

    fn csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .from_writer(Vec::new());
        for (k, v) in &self.meta {
            w.write_record([format!("# {k}"), v.text()])
                .expect("in-memory write");
        }
        if !self.columns.is_empty() {
            w.write_record(&self.columns).expect("in-memory write");
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::text))
                    .expect("in-memory write");
            }
        }
        for (k, v) in &self.summary {
            w.write_record([format!("# {k}"), v.text()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    fn json(&self) -> String {
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.clone()));
        let pairs = |items: &[(String, Cell)]| {
            Value::Object(items.iter().map(|(k, v)| (k.clone(), v.json())).collect())
        };
        root.insert("meta".into(), pairs(&self.meta));
        if !self.columns.is_empty() {
            let rows = self
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(r.iter().map(Cell::json))
                            .collect(),
                    )
                })
                .collect();
            root.insert("rows".into(), Value::Array(rows));
        }
        if !self.summary.is_empty() {
            root.insert("summary".into(), pairs(&self.summary));
        }
        for (k, v) in &self.extra {
            root.insert(k.clone(), v.clone());
        }
        let mut s =
            serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values serialise");
        s.push('\n');
        s
    }
}

/// `[re, im]` pair with rounding applied.
pub fn complex_json(re: f64, im: f64) -> Value {
    Value::Array(vec![Cell::Num(re).json(), Cell::Num(im).json()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_and_negative_zero() {
        assert_eq!(format_num(-0.0), "0");
        assert_eq!(format_num(-1e-300 * 1e-300), "0");
        assert_eq!(format_num(0.1 + 0.2), "0.3");
        assert_eq!(format_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_num(2.5e-17), "2.5e-17");
        assert_eq!(format_num(0.25), "0.25");
    }

    fn sample() -> Report {
        let mut r = Report::new("probs")
            .meta("reference_index", 0usize)
            .columns(&["history", "p"]);
        r.row(vec!["-1:0 0:+".into(), 0.25.into()]);
        r.row(vec!["-1:1 0:+".into(), (-0.0).into()]);
        r.summary("sum", 0.25)
    }

    #[test]
    fn table_is_aligned() {
        let t = sample().render(Format::Table);
        assert_eq!(
            t,
            "# reference_index: 0\nhistory   p\n-1:0 0:+  0.25\n-1:1 0:+  0\nsum: 0.25\n"
        );
    }

    #[test]
    fn csv_has_header_and_meta() {
        let t = sample().render(Format::Csv);
        assert_eq!(
            t,
            "# reference_index,0\nhistory,p\n-1:0 0:+,0.25\n-1:1 0:+,0\n# sum,0.25\n"
        );
    }

    #[test]
    fn json_rows_are_objects() {
        let v: Value = serde_json::from_str(&sample().render(Format::Json)).unwrap();
        assert_eq!(v["rows"][1]["p"], Value::from(0.0));
        assert_eq!(v["meta"]["reference_index"], Value::from(0));
        assert_eq!(v["summary"]["sum"], Value::from(0.25));
    }
}
