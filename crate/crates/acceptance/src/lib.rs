//! Reference checks used by the `acceptance` test target.
//!
//! [`json_permissions`] enumerates permissions straight from a canonical
//! JSON export without touching the engine's data model.
//! [`random_policy_text`] produces small `.abac` policies for oracle runs.

use std::collections::{BTreeMap, BTreeSet};

use abaclab::rng::SplitMix64;
use serde_json::Value;

pub type Triple = (String, String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Val {
    One(String),
    Many(BTreeSet<String>),
}

fn strings(v: &Value) -> BTreeSet<String> {
    v.as_array()
        .map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect())
        .unwrap_or_default()
}

fn entities(doc: &Value, key: &str) -> Vec<(String, BTreeMap<String, Val>)> {
    doc[key]
        .as_array()
        .into_iter()
        .flatten()
        .map(|e| {
            let id = e["id"].as_str().unwrap_or_default().to_string();
            let attrs = e["attrs"]
                .as_object()
                .into_iter()
                .flatten()
                .map(|(k, v)| {
                    let val = match v {
                        Value::String(s) => Val::One(s.clone()),
                        other => Val::Many(strings(other)),
                    };
                    (k.clone(), val)
                })
                .collect();
            (id, attrs)
        })
        .collect()
}

fn conjunct_holds(attrs: &BTreeMap<String, Val>, c: &Value) -> bool {
    let values = strings(&c["values"]);
    let attr = c["attr"].as_str().unwrap_or_default();
    match (c["op"].as_str(), attrs.get(attr)) {
        (Some("in"), Some(Val::One(v))) => values.contains(v),
        (Some("supseteq"), Some(Val::Many(vs))) => values.is_subset(vs),
        (Some("subseteq"), Some(Val::Many(vs))) => vs.is_subset(&values),
        _ => false,
    }
}

fn constraint_holds(u: &BTreeMap<String, Val>, r: &BTreeMap<String, Val>, c: &Value) -> bool {
    let ua = u.get(c["userAttr"].as_str().unwrap_or_default());
    let ra = r.get(c["resourceAttr"].as_str().unwrap_or_default());
    match (c["op"].as_str(), ua, ra) {
        (Some("equal"), Some(Val::One(a)), Some(Val::One(b))) => a == b,
        (Some("in"), Some(Val::One(a)), Some(Val::Many(bs))) => bs.contains(a),
        (Some("contains"), Some(Val::Many(a)), Some(Val::One(b))) => a.contains(b),
        (Some("supseteq"), Some(Val::Many(a)), Some(Val::Many(b))) => b.is_subset(a),
        (Some("subseteq"), Some(Val::Many(a)), Some(Val::Many(b))) => a.is_subset(b),
        _ => false,
    }
}

/// All permitted triples of a canonical policy document, by exhaustive
/// enumeration of users × resources × actions.
pub fn json_permissions(doc: &Value) -> BTreeSet<Triple> {
    let users = entities(doc, "users");
    let resources = entities(doc, "resources");
    let rules: Vec<&Value> = doc["rules"].as_array().into_iter().flatten().collect();
    let actions: BTreeSet<String> = rules.iter().flat_map(|r| strings(&r["actions"])).collect();
    let mut out = BTreeSet::new();
    for (uid, ua) in &users {
        for (rid, ra) in &resources {
            for a in &actions {
                let permitted = rules.iter().any(|rule| {
                    strings(&rule["actions"]).contains(a)
                        && rule["subject"].as_array().into_iter().flatten().all(|c| conjunct_holds(ua, c))
                        && rule["resource"].as_array().into_iter().flatten().all(|c| conjunct_holds(ra, c))
                        && rule["constraints"]
                            .as_array()
                            .into_iter()
                            .flatten()
                            .all(|c| constraint_holds(ua, ra, c))
                });
                if permitted {
                    out.insert((uid.clone(), rid.clone(), a.clone()));
                }
            }
        }
    }
    out
}

const DOMAIN: [&str; 5] = ["red", "green", "blue", "gold", "gray"];
const ACTIONS: [&str; 5] = ["read", "write", "approve", "delete", "share"];
const USER: [(&str, bool); 4] = [("unit", false), ("rank", false), ("skills", true), ("areas", true)];
const RESOURCE: [(&str, bool); 4] = [("unit", false), ("kind", false), ("needs", true), ("areas", true)];

fn pick_values(rng: &mut SplitMix64, lo: usize) -> Vec<&'static str> {
    let k = rng.range_inclusive(lo as u64, 3) as usize;
    let mut v: Vec<&str> = rng.sample_indices(DOMAIN.len(), k).into_iter().map(|i| DOMAIN[i]).collect();
    v.sort();
    v
}

fn entity_line(rng: &mut SplitMix64, kind: &str, id: String, schema: &[(&str, bool)]) -> String {
    let mut line = format!("{kind}({id}");
    for &(name, is_set) in schema {
        if !rng.chance(0.8) {
            continue;
        }
        if is_set {
            line.push_str(&format!(", {name}={{{}}}", pick_values(rng, 0).join(" ")));
        } else {
            line.push_str(&format!(", {name}={}", DOMAIN[rng.index(DOMAIN.len())]));
        }
    }
    line.push(')');
    line
}

fn conjuncts(rng: &mut SplitMix64, schema: &[(&str, bool)]) -> String {
    let n = rng.index(3);
    (0..n)
        .map(|_| {
            let (name, is_set) = schema[rng.index(schema.len())];
            let op = match (is_set, rng.chance(0.5)) {
                (false, _) => "in",
                (true, true) => "supseteq",
                (true, false) => "subseteq",
            };
            format!("{name} {op} {{{}}}", pick_values(rng, 1).join(" "))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn constraints(rng: &mut SplitMix64) -> String {
    let n = rng.index(3);
    (0..n)
        .map(|_| {
            let (ua, us) = USER[rng.index(USER.len())];
            let (ra, rs) = RESOURCE[rng.index(RESOURCE.len())];
            let op = match (us, rs) {
                (false, false) => "=",
                (false, true) => "in",
                (true, false) => "contains",
                (true, true) if rng.chance(0.5) => "supseteq",
                (true, true) => "subseteq",
            };
            format!("{ua} {op} {ra}")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// A random policy of at most 15 users, 15 resources and 6 rules.
pub fn random_policy_text(seed: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    let mut lines = Vec::new();
    for i in 0..rng.range_inclusive(1, 15) {
        lines.push(entity_line(&mut rng, "userAttrib", format!("u{i}"), &USER));
    }
    for i in 0..rng.range_inclusive(1, 15) {
        lines.push(entity_line(&mut rng, "resourceAttrib", format!("r{i}"), &RESOURCE));
    }
    for _ in 0..rng.range_inclusive(1, 6) {
        let k = rng.range_inclusive(1, 2) as usize;
        let acts: Vec<&str> = rng.sample_indices(ACTIONS.len(), k).into_iter().map(|i| ACTIONS[i]).collect();
        lines.push(format!(
            "rule({}; {}; {{{}}}; {})",
            conjuncts(&mut rng, &USER),
            conjuncts(&mut rng, &RESOURCE),
            acts.join(" "),
            constraints(&mut rng)
        ));
    }
    lines.join("\n")
}

/// `round(n · num/den)` with halves rounded up, in exact integers.
pub fn round_half_up(n: u64, num: u64, den: u64) -> u64 {
    (2 * n * num + den) / (2 * den)
}
