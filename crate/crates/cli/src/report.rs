//! Structured check results with three emitters: a human-readable table,
//! CSV, and JSON. Every numeric value goes through one 12-significant-digit
//! formatter, so the CSV and JSON emissions of a report carry identical
//! numeric strings.

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub check: String,
    pub items: Vec<ReportItem>,
}

#[derive(Debug, Clone)]
pub enum ReportItem {
    Scalar {
        name: String,
        value: f64,
    },
    Verdict {
        condition: String,
        applicable: bool,
        satisfied: bool,
        residual: f64,
        witness: Option<String>,
    },
    Table(Table),
    Note {
        text: String,
    },
}

#[derive(Debug, Clone)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub label: String,
    pub values: Vec<f64>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            items: Vec::new(),
        }
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.items.push(ReportItem::Scalar {
            name: name.into(),
            value,
        });
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.items.push(ReportItem::Note { text: text.into() });
        self
    }

    pub fn table(&mut self, table: Table) -> &mut Self {
        self.items.push(ReportItem::Table(table));
        self
    }

    /// All scalar and table values in emission order, for comparisons.
    pub fn numeric_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for item in &self.items {
            match item {
                ReportItem::Scalar { value, .. } => out.push(*value),
                ReportItem::Verdict { residual, .. } => out.push(*residual),
                ReportItem::Table(t) => {
                    for row in &t.rows {
                        out.extend_from_slice(&row.values);
                    }
                }
                ReportItem::Note { .. } => {}
            }
        }
        out
    }
}

impl Report {
    pub fn numeric_values(&self) -> Vec<f64> {
        self.checks
            .iter()
            .flat_map(|c| c.numeric_values())
            .collect()
    }
}

/// Fixed 12-significant-digit scientific formatting, locale independent.
pub fn format_significant(x: f64) -> String {
    debug_assert!(x.is_finite(), "reports must not contain non-finite values");
    if !x.is_finite() {
        return "0.00000000000e0".to_string();
    }
    let x = if x == 0.0 { 0.0 } else { x }; // normalize -0.0
    format!("{x:.11e}")
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

impl Report {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("check,item,label,column,value\n");
        for check in &self.checks {
            let c = csv_quote(&check.check);
            for item in &check.items {
                match item {
                    ReportItem::Scalar { name, value } => {
                        out.push_str(&format!(
                            "{c},{},,value,{}\n",
                            csv_quote(name),
                            format_significant(*value)
                        ));
                    }
                    ReportItem::Verdict {
                        condition,
                        applicable,
                        satisfied,
                        residual,
                        witness,
                    } => {
                        let cond = csv_quote(condition);
                        out.push_str(&format!(
                            "{c},{cond},,applicable,{}\n",
                            bool_str(*applicable)
                        ));
                        out.push_str(&format!("{c},{cond},,satisfied,{}\n", bool_str(*satisfied)));
                        out.push_str(&format!(
                            "{c},{cond},,residual,{}\n",
                            format_significant(*residual)
                        ));
                        if let Some(w) = witness {
                            out.push_str(&format!("{c},{cond},,witness,{}\n", csv_quote(w)));
                        }
                    }
                    ReportItem::Table(t) => {
                        for row in &t.rows {
                            for (col, v) in t.columns.iter().zip(&row.values) {
                                out.push_str(&format!(
                                    "{c},{},{},{},{}\n",
                                    csv_quote(&t.title),
                                    csv_quote(&row.label),
                                    csv_quote(col),
                                    format_significant(*v)
                                ));
                            }
                        }
                    }
                    ReportItem::Note { text } => {
                        out.push_str(&format!("{c},note,,text,{}\n", csv_quote(text)));
                    }
                }
            }
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{{\n  \"scenario\": \"{}\",\n  \"checks\": [",
            json_escape(&self.scenario)
        ));
        for (ci, check) in self.checks.iter().enumerate() {
            if ci > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "\n    {{\n      \"check\": \"{}\",\n      \"items\": [",
                json_escape(&check.check)
            ));
            for (ii, item) in check.items.iter().enumerate() {
                if ii > 0 {
                    out.push(',');
                }
                out.push_str("\n        ");
                match item {
                    ReportItem::Scalar { name, value } => {
                        out.push_str(&format!(
                            "{{\"type\": \"scalar\", \"name\": \"{}\", \"value\": {}}}",
                            json_escape(name),
                            format_significant(*value)
                        ));
                    }
                    ReportItem::Verdict {
                        condition,
                        applicable,
                        satisfied,
                        residual,
                        witness,
                    } => {
                        out.push_str(&format!(
                            "{{\"type\": \"verdict\", \"condition\": \"{}\", \"applicable\": {}, \"satisfied\": {}, \"residual\": {}",
                            json_escape(condition),
                            bool_str(*applicable),
                            bool_str(*satisfied),
                            format_significant(*residual)
                        ));
                        if let Some(w) = witness {
                            out.push_str(&format!(", \"witness\": \"{}\"", json_escape(w)));
                        }
                        out.push('}');
                    }
                    ReportItem::Table(t) => {
                        out.push_str(&format!(
                            "{{\"type\": \"table\", \"title\": \"{}\", \"columns\": [{}], \"rows\": [",
                            json_escape(&t.title),
                            t.columns
                                .iter()
                                .map(|col| format!("\"{}\"", json_escape(col)))
                                .collect::<Vec<_>>()
                                .join(", ")
                        ));
                        for (ri, row) in t.rows.iter().enumerate() {
                            if ri > 0 {
                                out.push_str(", ");
                            }
                            out.push_str(&format!(
                                "{{\"label\": \"{}\", \"values\": [{}]}}",
                                json_escape(&row.label),
                                row.values
                                    .iter()
                                    .map(|v| format_significant(*v))
                                    .collect::<Vec<_>>()
                                    .join(", ")
                            ));
                        }
                        out.push_str("]}");
                    }
                    ReportItem::Note { text } => {
                        out.push_str(&format!(
                            "{{\"type\": \"note\", \"text\": \"{}\"}}",
                            json_escape(text)
                        ));
                    }
                }
            }
            out.push_str("\n      ]\n    }");
        }
        out.push_str("\n  ]\n}\n");
        out
    }

    pub fn to_table_string(&self) -> String {
        let mut out = format!("scenario: {}\n", self.scenario);
        for check in &self.checks {
            out.push_str(&format!("\n== {} ==\n", check.check));
            for item in &check.items {
                match item {
                    ReportItem::Scalar { name, value } => {
                        out.push_str(&format!("  {name:<32} {}\n", format_significant(*value)));
                    }
                    ReportItem::Verdict {
                        condition,
                        applicable,
                        satisfied,
                        residual,
                        witness,
                    } => {
                        let status = if !applicable {
                            "n/a      "
                        } else if *satisfied {
                            "satisfied"
                        } else {
                            "violated "
                        };
                        out.push_str(&format!(
                            "  {condition:<6} {status} residual {}\n",
                            format_significant(*residual)
                        ));
                        if let Some(w) = witness {
                            out.push_str(&format!("         {w}\n"));
                        }
                    }
                    ReportItem::Table(t) => {
                        out.push_str(&format!("  [{}]\n", t.title));
                        let header: Vec<String> = std::iter::once("outcome".to_string())
                            .chain(t.columns.iter().cloned())
                            .collect();
                        out.push_str(&format!(
                            "    {}\n",
                            header
                                .iter()
                                .map(|h| format!("{h:<20}"))
                                .collect::<String>()
                        ));
                        for row in &t.rows {
                            out.push_str(&format!("    {:<20}", row.label));
                            for v in &row.values {
                                out.push_str(&format!("{:<20}", format_significant(*v)));
                            }
                            out.push('\n');
                        }
                    }
                    ReportItem::Note { text } => {
                        out.push_str(&format!("  note: {text}\n"));
                    }
                }
            }
        }
        out
    }
}
