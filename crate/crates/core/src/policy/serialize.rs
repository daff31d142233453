use std::fmt::Write;

use super::{Conjunct, ConjunctOp, Constraint, Entity, EntityKind, Policy, Rule};

/// Canonical `.abac` text: users, then resources, then rules. Attributes
/// come out sorted by name and set elements sorted; lines end with LF.
pub fn serialize_policy(p: &Policy) -> String {
    let mut out = String::new();
    for e in p.users().iter().chain(p.resources()) {
        write_entity(&mut out, e);
    }
    if !p.rules().is_empty() && !(p.users().is_empty() && p.resources().is_empty()) {
        out.push('\n');
    }
    out.push_str(&serialize_rules(p.rules()));
    out
}

/// One `rule(...)` line per rule.
pub fn serialize_rules(rules: &[Rule]) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&serialize_rule(r));
        out.push('\n');
    }
    out
}

fn write_entity(out: &mut String, e: &Entity) {
    out.push_str(match e.kind {
        EntityKind::User => "userAttrib(",
        EntityKind::Resource => "resourceAttrib(",
    });
    out.push_str(&e.id);
    for (name, value) in &e.attrs {
        let _ = write!(out, ", {name}={value}");
    }
    out.push_str(")\n");
}

fn write_set<'a>(out: &mut String, items: impl IntoIterator<Item = &'a String>) {
    out.push('{');
    for (i, v) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(v);
    }
    out.push('}');
}

fn write_conjuncts(out: &mut String, conds: &[Conjunct]) {
    for (i, c) in conds.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&c.attr);
        out.push(' ');
        out.push_str(match c.op {
            ConjunctOp::In => "in",
            ConjunctOp::Supseteq => "supseteq",
            ConjunctOp::Subseteq => "subseteq",
        });
        out.push(' ');
        write_set(out, &c.consts);
    }
}

fn write_constraints(out: &mut String, cons: &[Constraint]) {
    for (i, c) in cons.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {} {}", c.user_attr, c.op.keyword(), c.res_attr);
    }
}

/// A single rule statement without trailing newline.
pub fn serialize_rule(r: &Rule) -> String {
    let mut out = String::from("rule(");
    write_conjuncts(&mut out, &r.sub_cond);
    out.push_str("; ");
    write_conjuncts(&mut out, &r.res_cond);
    out.push_str("; ");
    write_set(&mut out, &r.actions);
    out.push_str("; ");
    write_constraints(&mut out, &r.constraints);
    out.push(')');
    out
}
