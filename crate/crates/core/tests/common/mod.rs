//! Brute-force reference semantics and random policy strategies shared by
//! the integration tests. Nothing here calls the engine's own matching
//! code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use abaclab::policy::{AttrValue, ConjunctOp, ConstraintOp, Entity, Policy, Rule};
use proptest::prelude::*;

pub type Triple = (String, String, String);

fn atomic<'a>(e: &'a Entity, a: &str) -> Option<&'a String> {
    match e.attrs.get(a) {
        Some(AttrValue::Atomic(v)) => Some(v),
        _ => None,
    }
}

fn set<'a>(e: &'a Entity, a: &str) -> Option<&'a BTreeSet<String>> {
    match e.attrs.get(a) {
        Some(AttrValue::Set(v)) => Some(v),
        _ => None,
    }
}

fn subset(a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    a.iter().all(|x| b.contains(x))
}

pub fn rule_matches(rule: &Rule, u: &Entity, r: &Entity, action: &str) -> bool {
    if !rule.actions.iter().any(|a| a == action) {
        return false;
    }
    let conj = |e: &Entity, attr: &str, op: ConjunctOp, consts: &BTreeSet<String>| match op {
        ConjunctOp::In => atomic(e, attr).is_some_and(|v| consts.contains(v)),
        ConjunctOp::Supseteq => set(e, attr).is_some_and(|v| subset(consts, v)),
        ConjunctOp::Subseteq => set(e, attr).is_some_and(|v| subset(v, consts)),
    };
    for c in &rule.sub_cond {
        if !conj(u, &c.attr, c.op, &c.consts) {
            return false;
        }
    }
    for c in &rule.res_cond {
        if !conj(r, &c.attr, c.op, &c.consts) {
            return false;
        }
    }
    for c in &rule.constraints {
        let (ua, ra) = (c.user_attr.as_str(), c.res_attr.as_str());
        let ok = match c.op {
            ConstraintOp::Equal => matches!((atomic(u, ua), atomic(r, ra)), (Some(x), Some(y)) if x == y),
            ConstraintOp::In => matches!((atomic(u, ua), set(r, ra)), (Some(x), Some(ys)) if ys.contains(x)),
            ConstraintOp::Contains => matches!((set(u, ua), atomic(r, ra)), (Some(xs), Some(y)) if xs.contains(y)),
            ConstraintOp::Supseteq => matches!((set(u, ua), set(r, ra)), (Some(xs), Some(ys)) if subset(ys, xs)),
            ConstraintOp::Subseteq => matches!((set(u, ua), set(r, ra)), (Some(xs), Some(ys)) if subset(xs, ys)),
        };
        if !ok {
            return false;
        }
    }
    true
}

pub fn action_universe(p: &Policy) -> BTreeSet<String> {
    p.rules().iter().flat_map(|r| r.actions.iter().cloned()).collect()
}

/// Every (user, resource, action) triple some rule permits.
pub fn naive_permissions(p: &Policy) -> BTreeSet<Triple> {
    let actions = action_universe(p);
    let mut out = BTreeSet::new();
    for u in p.users() {
        for r in p.resources() {
            for a in &actions {
                if p.rules().iter().any(|rule| rule_matches(rule, u, r, a)) {
                    out.insert((u.id.clone(), r.id.clone(), a.clone()));
                }
            }
        }
    }
    out
}

pub fn naive_matching(p: &Policy, u: &str, r: &str, a: &str) -> Vec<usize> {
    let (Some(u), Some(r)) = (p.user(u), p.resource(r)) else {
        return Vec::new();
    };
    p.rules()
        .iter()
        .filter(|rule| rule_matches(rule, u, r, a))
        .map(|rule| rule.index)
        .collect()
}

pub fn triples(perms: impl IntoIterator<Item = abaclab::Permission>) -> BTreeSet<Triple> {
    perms.into_iter().map(|p| (p.user, p.resource, p.action)).collect()
}

// ---- random small policies ----------------------------------------------

const VALUES: [&str; 4] = ["v0", "v1", "v2", "v3"];
const ACTIONS: [&str; 4] = ["read", "write", "audit", "share"];

/// Attribute names and whether they are set-valued, per side.
const USER_ATTRS: [(&str, bool); 4] = [("dept", false), ("level", false), ("tags", true), ("groups", true)];
const RES_ATTRS: [(&str, bool); 4] = [("dept", false), ("owner", false), ("tags", true), ("labels", true)];

fn value_set() -> impl Strategy<Value = BTreeSet<String>> {
    proptest::collection::btree_set(proptest::sample::select(&VALUES[..]).prop_map(String::from), 0..=3)
}

fn nonempty_set() -> impl Strategy<Value = BTreeSet<String>> {
    proptest::collection::btree_set(proptest::sample::select(&VALUES[..]).prop_map(String::from), 1..=3)
}

fn entity_attrs(schema: &'static [(&'static str, bool)]) -> impl Strategy<Value = BTreeMap<String, String>> {
    let per_attr: Vec<_> = schema
        .iter()
        .map(|&(name, is_set)| {
            let value = if is_set {
                value_set()
                    .prop_map(|s| format!("{{{}}}", s.into_iter().collect::<Vec<_>>().join(" ")))
                    .boxed()
            } else {
                proptest::sample::select(&VALUES[..]).prop_map(String::from).boxed()
            };
            proptest::option::weighted(0.8, value).prop_map(move |v| (name, v))
        })
        .collect();
    per_attr.prop_map(|pairs| {
        pairs
            .into_iter()
            .filter_map(|(n, v)| v.map(|v| (n.to_string(), v)))
            .collect()
    })
}

fn set_braces(s: &BTreeSet<String>) -> String {
    format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(" "))
}

fn conjunct(schema: &'static [(&'static str, bool)]) -> impl Strategy<Value = String> {
    (proptest::sample::select(schema), nonempty_set(), any::<bool>()).prop_map(|((name, is_set), consts, flip)| {
        let op = match (is_set, flip) {
            (false, _) => "in",
            (true, false) => "supseteq",
            (true, true) => "subseteq",
        };
        format!("{name} {op} {}", set_braces(&consts))
    })
}

fn constraint() -> impl Strategy<Value = String> {
    (proptest::sample::select(&USER_ATTRS[..]), proptest::sample::select(&RES_ATTRS[..]), any::<bool>())
        .prop_map(|((ua, us), (ra, rs), flip)| {
            let op = match (us, rs, flip) {
                (false, false, _) => "=",
                (false, true, _) => "in",
                (true, false, _) => "contains",
                (true, true, false) => "supseteq",
                (true, true, true) => "subseteq",
            };
            format!("{ua} {op} {ra}")
        })
}

fn rule_text() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec(conjunct(&USER_ATTRS), 0..=2),
        proptest::collection::vec(conjunct(&RES_ATTRS), 0..=2),
        proptest::collection::btree_set(proptest::sample::select(&ACTIONS[..]), 1..=2),
        proptest::collection::vec(constraint(), 0..=2),
    )
        .prop_map(|(s, r, a, c)| {
            format!(
                "rule({}; {}; {{{}}}; {})",
                s.join(", "),
                r.join(", "),
                a.into_iter().collect::<Vec<_>>().join(" "),
                c.join(", ")
            )
        })
}

fn entity_text(kind: &str, prefix: &str, i: usize, attrs: &BTreeMap<String, String>) -> String {
    let mut s = format!("{kind}({prefix}{i}");
    for (k, v) in attrs {
        s.push_str(&format!(", {k}={v}"));
    }
    s.push(')');
    s
}

/// `.abac` text for a policy with at most 15 users, 15 resources and 6
/// rules over a shared four-value domain. Every attribute has a fixed
/// arity, so the text always parses.
pub fn small_policy_text() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec(entity_attrs(&USER_ATTRS), 0..=15),
        proptest::collection::vec(entity_attrs(&RES_ATTRS), 0..=15),
        proptest::collection::vec(rule_text(), 0..=6),
    )
        .prop_map(|(users, resources, rules)| {
            let mut lines = Vec::new();
            for (i, a) in users.iter().enumerate() {
                lines.push(entity_text("userAttrib", "u", i, a));
            }
            for (i, a) in resources.iter().enumerate() {
                lines.push(entity_text("resourceAttrib", "r", i, a));
            }
            lines.extend(rules);
            lines.join("\n")
        })
}

pub fn small_policy() -> impl Strategy<Value = Policy> {
    small_policy_text().prop_map(|t| abaclab::parse_policy(&t, "random").expect("generated text parses"))
}
