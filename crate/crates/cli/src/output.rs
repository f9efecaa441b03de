//! Fixed-format CSV and JSON-lines emission.

use std::io::{self, Write};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// Scientific notation with 17 significant digits and a signed two-digit
/// exponent, e.g. `1.9178646691106467e+00`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Metadata followed by one or more tables. The first table is the main
/// result; later ones (fits, checks) follow it as trailing blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub metadata: Vec<(String, Cell)>,
    pub tables: Vec<Table>,
}

impl Document {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Real(x) => fmt_real(*x),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
        Cell::Text(s) => {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
    }
}

fn json_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Real(x) if x.is_finite() => fmt_real(*x),
        Cell::Real(_) | Cell::Empty => "null".into(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => serde_json::Value::String(s.clone()).to_string(),
    }
}

fn json_object<'a>(pairs: impl Iterator<Item = (&'a String, &'a Cell)>) -> String {
    let body: Vec<String> = pairs
        .map(|(k, v)| format!("{}:{}", serde_json::Value::String(k.clone()), json_cell(v)))
        .collect();
    format!("{{{}}}", body.join(","))
}

/// CSV: `# key = value` metadata lines, then each table as a header row and
/// data rows. Trailing tables are introduced by a `# <name>` line.
pub fn write_csv(doc: &Document, w: &mut impl Write) -> io::Result<()> {
    for (k, v) in &doc.metadata {
        writeln!(w, "# {k} = {}", csv_cell(v))?;
    }
    for (i, t) in doc.tables.iter().enumerate() {
        if i > 0 {
            writeln!(w, "# {}", t.name)?;
        }
        writeln!(w, "{}", t.header.join(","))?;
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

/// JSON lines: a `{"metadata": {...}}` line, then one object per row keyed
/// by its table's header.
pub fn write_jsonl(doc: &Document, w: &mut impl Write) -> io::Result<()> {
    let meta = json_object(doc.metadata.iter().map(|(k, v)| (k, v)));
    writeln!(w, "{{\"metadata\":{meta}}}")?;
    for t in &doc.tables {
        for row in &t.rows {
            writeln!(w, "{}", json_object(t.header.iter().zip(row)))?;
        }
    }
    Ok(())
}

pub fn write_document(doc: &Document, format: Format, w: &mut impl Write) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(doc, w),
        Format::Jsonl => write_jsonl(doc, w),
    }
}
