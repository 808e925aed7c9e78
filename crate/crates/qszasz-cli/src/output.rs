//! Report serialization. CSV is the default surface: comma-separated
//! numeric cells, line-feed terminators, floats rendered with 17
//! significant digits so every finite value round-trips bit-exactly.
//! JSON mirrors the same rows as an array of objects whose keys are the
//! CSV headers; non-finite floats become JSON null.

use std::io::Write;

#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

#[derive(Clone, Debug)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Table { headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(',');
                }
                first = false;
                match cell {
                    Cell::Int(v) => out.push_str(&v.to_string()),
                    Cell::Float(v) => out.push_str(&fmt_float(*v)),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut arr = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut obj = serde_json::Map::new();
            for (h, cell) in self.headers.iter().zip(row) {
                let v = match cell {
                    Cell::Int(v) => serde_json::Value::from(*v),
                    Cell::Float(v) => serde_json::Value::from(*v), // null when non-finite
                };
                obj.insert((*h).to_string(), v);
            }
            arr.push(serde_json::Value::Object(obj));
        }
        let mut s = serde_json::to_string_pretty(&arr).expect("json serialization");
        s.push('\n');
        s
    }

    pub fn write(&self, json: bool, output: Option<&std::path::Path>) -> std::io::Result<()> {
        let body = if json { self.to_json() } else { self.to_csv() };
        match output {
            Some(path) => std::fs::write(path, body),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(body.as_bytes())
            }
        }
    }
}

/// 17 significant digits; parse(format(v)) == v for every finite f64.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}
