//! Command output: aligned text for people, canonical JSON records for
//! machines. A report that found a problem lists it under `failures`.

use dppkit_core::costmodel::{cents, CostReport};
use dppkit_core::dpp::{ComponentNode, DppView};
use dppkit_core::identity::to_canonical;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub kind: String,
    pub lines: Vec<String>,
    pub record: Value,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(kind: &str, record: impl Serialize) -> Self {
        Self {
            kind: kind.to_owned(),
            lines: Vec::new(),
            record: serde_json::to_value(record).expect("records serialize"),
            failures: Vec::new(),
        }
    }

    pub fn line(mut self, line: impl Into<String>) -> Self {
        self.lines.push(line.into());
        self
    }

    pub fn lines(mut self, lines: impl IntoIterator<Item = String>) -> Self {
        self.lines.extend(lines);
        self
    }

    pub fn failures(mut self, failures: impl IntoIterator<Item = String>) -> Self {
        self.failures.extend(failures);
        self
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// `{"kind", "record", "failures"}` in canonical form, one line.
    pub fn to_record(&self) -> Vec<u8> {
        to_canonical(&json!({ "kind": self.kind, "record": self.record, "failures": self.failures }))
            .expect("records hold no floats")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Record => String::from_utf8(self.to_record()).expect("canonical JSON is UTF-8") + "\n",
            Format::Text => {
                let mut out = String::new();
                for l in &self.lines {
                    out.push_str(l);
                    out.push('\n');
                }
                for f in &self.failures {
                    out.push_str("FAIL ");
                    out.push_str(f);
                    out.push('\n');
                }
                out
            }
        }
    }
}

/// Left-aligns the first column and right-aligns the rest.
pub fn table(rows: &[Vec<String>]) -> Vec<String> {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    rows.iter()
        .map(|r| {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
                .collect();
            cells.join("  ").trim_end().to_owned()
        })
        .collect()
}

pub fn cost_rows(reports: &[&CostReport]) -> Vec<String> {
    let mut rows = vec![[
        "design", "payer", "units", "fixed tokens", "per-unit tokens", "total tokens", "total", "per unit",
    ]
    .map(str::to_owned)
    .to_vec()];
    for r in reports {
        rows.push(vec![
            r.proposal.to_string(),
            serde_json::to_value(r.payer).expect("payer serializes").as_str().unwrap_or_default().to_owned(),
            r.product_count.to_string(),
            r.fixed_tokens.normalize().to_string(),
            r.per_product_tokens.normalize().to_string(),
            r.total_tokens.normalize().to_string(),
            format!("{} EUR", cents(r.total_eur)),
            cents(r.per_product_eur),
        ]);
    }
    table(&rows)
}

/// The view as an indented tree; nodes not expanded get a `+` marker.
pub fn view_lines(view: &DppView) -> Vec<String> {
    let mut out = Vec::new();
    view_into(view, 0, &mut out);
    out
}

fn view_into(view: &DppView, depth: usize, out: &mut Vec<String>) {
    let pad = "  ".repeat(depth);
    out.push(format!(
        "{pad}{} [{}] {} passport, {} storage, by {}",
        view.product, view.product_ref, view.granularity, mode_name(view), view.manufacturer
    ));
    for (component, attrs) in &view.components {
        for (key, claim) in attrs {
            let value = match &claim.value {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push(format!("{pad}  {component}.{key} = {value}  ({}, {})", claim.category, claim.source));
        }
    }
    for u in &view.updates {
        out.push(format!("{pad}  update {} {} at t={}", u.id, u.category, u.issued_at.0));
    }
    for d in &view.diagnostics {
        out.push(format!("{pad}  ! {d}"));
    }
    for child in &view.children {
        match child {
            ComponentNode::Resolved { view } => view_into(view, depth + 1, out),
            ComponentNode::Truncated { product } => {
                out.push(format!("{pad}  + {product} (not expanded; resolve it directly or raise --depth)"))
            }
            ComponentNode::Broken { product, reason } => out.push(format!("{pad}  x {product} broken: {reason}")),
            ComponentNode::Cycle { product } => out.push(format!("{pad}  ~ {product} (cycle)")),
        }
    }
}

fn mode_name(view: &DppView) -> String {
    serde_json::to_value(view.mode).expect("modes serialize").as_str().unwrap_or_default().to_owned()
}

/// Nodes left unexpanded because of the depth limit, anywhere in the tree.
pub fn truncated(view: &DppView) -> usize {
    view.children
        .iter()
        .map(|c| match c {
            ComponentNode::Resolved { view } => truncated(view),
            ComponentNode::Truncated { .. } => 1,
            _ => 0,
        })
        .sum()
}
