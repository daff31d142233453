//! Batch access checks over CSV request files.
//!
//! Input has the header `user,resource,action`; `*` in a column matches
//! everything. A fully specified row yields one decision row. A wildcard
//! row expands to every permitted triple matching it, or one deny row
//! echoing the pattern when nothing matches. Unknown ids and actions are
//! reported as denials with a diagnostic so the rest of the file is still
//! processed.

use serde::Serialize;
use thiserror::Error;

use crate::csvout::push_row;
use crate::eval::{evaluate, query, EvalError};
use crate::loggen::Label;
use crate::policy::Policy;

pub const WILDCARD: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchRequest {
    /// 1-based line in the input file.
    pub line: usize,
    pub user: Option<String>,
    pub resource: Option<String>,
    pub action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BatchError {
    #[error("request file must start with the header `user,resource,action`")]
    BadHeader,
    #[error("line {line}: expected 3 columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: empty cell (use `*` for all)")]
    EmptyCell { line: usize },
    #[error("malformed CSV: {0}")]
    Csv(String),
}

fn field(s: &str) -> Option<String> {
    (s != WILDCARD).then(|| s.to_string())
}

pub fn parse_requests(text: &str) -> Result<Vec<BatchRequest>, BatchError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| BatchError::Csv(e.to_string()))?,
        None => return Err(BatchError::BadHeader),
    };
    if header.iter().collect::<Vec<_>>() != ["user", "resource", "action"] {
        return Err(BatchError::BadHeader);
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| BatchError::Csv(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err(BatchError::Columns { line, found: rec.len() });
        }
        if rec.iter().any(str::is_empty) {
            return Err(BatchError::EmptyCell { line });
        }
        out.push(BatchRequest {
            line,
            user: field(&rec[0]),
            resource: field(&rec[1]),
            action: field(&rec[2]),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckRow {
    pub user: String,
    pub resource: String,
    pub action: String,
    pub decision: Label,
    pub matching_rules: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

fn show(v: &Option<String>) -> String {
    v.clone().unwrap_or_else(|| WILDCARD.to_string())
}

fn denied(req: &BatchRequest, diagnostic: Option<String>) -> CheckRow {
    CheckRow {
        user: show(&req.user),
        resource: show(&req.resource),
        action: show(&req.action),
        decision: Label::Deny,
        matching_rules: Vec::new(),
        diagnostic,
    }
}

pub fn check_requests(p: &Policy, requests: &[BatchRequest]) -> Vec<CheckRow> {
    let mut out = Vec::new();
    for req in requests {
        if let (Some(u), Some(r), Some(a)) = (&req.user, &req.resource, &req.action) {
            match evaluate(p, u, r, a) {
                Ok(d) => out.push(CheckRow {
                    user: u.clone(),
                    resource: r.clone(),
                    action: a.clone(),
                    decision: if d.permitted { Label::Permit } else { Label::Deny },
                    matching_rules: d.matching_rules,
                    diagnostic: d.diagnostic,
                }),
                Err(e) => out.push(denied(req, Some(e.to_string()))),
            }
            continue;
        }
        match query(p, req.user.as_deref(), req.resource.as_deref(), req.action.as_deref()) {
            Ok(perms) if perms.is_empty() => {
                let diag = req
                    .action
                    .as_ref()
                    .filter(|a| !p.actions().contains(*a))
                    .map(|a| format!("action `{a}` does not appear in any rule"));
                out.push(denied(req, diag));
            }
            Ok(perms) => {
                for perm in perms {
                    let matching = evaluate(p, &perm.user, &perm.resource, &perm.action)
                        .map(|d| d.matching_rules)
                        .unwrap_or_default();
                    out.push(CheckRow {
                        user: perm.user,
                        resource: perm.resource,
                        action: perm.action,
                        decision: Label::Permit,
                        matching_rules: matching,
                        diagnostic: None,
                    });
                }
            }
            Err(e @ (EvalError::UnknownUser(_) | EvalError::UnknownResource(_))) => {
                out.push(denied(req, Some(e.to_string())))
            }
        }
    }
    out
}

/// `user,resource,action,decision,matching_rules`, rule indices joined by `|`.
pub fn check_rows_to_csv(rows: &[CheckRow]) -> String {
    let mut out = String::new();
    push_row(&mut out, &["user", "resource", "action", "decision", "matching_rules"]);
    for row in rows {
        let rules = row
            .matching_rules
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("|");
        push_row(
            &mut out,
            &[&row.user, &row.resource, &row.action, row.decision.as_str(), &rules],
        );
    }
    out
}
