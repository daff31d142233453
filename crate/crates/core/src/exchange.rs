//! Policy export: per-kind CSV tables plus a rules file, and a versioned
//! JSON interchange document that round-trips losslessly.
//!
//! The JSON layout is described in `docs/canonical-format.md`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvout::push_row;
use crate::policy::{
    serialize_rules, AttrValue, Conjunct, ConjunctOp, Constraint, ConstraintOp, Entity,
    EntityKind, ModelError, Policy, Rule,
};

pub const CANONICAL_VERSION: &str = "abaclab-policy/1";
const MAGIC: &str = "abaclab-policy/";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvExport {
    pub users: String,
    pub resources: String,
    pub rules: String,
}

fn entity_table(entities: &[Entity]) -> String {
    let names: BTreeSet<&str> = entities
        .iter()
        .flat_map(|e| e.attrs.keys().map(String::as_str))
        .collect();
    let mut out = String::new();
    let header: Vec<&str> = std::iter::once("id").chain(names.iter().copied()).collect();
    push_row(&mut out, &header);
    for e in entities {
        let mut row = vec![e.id.clone()];
        row.extend(
            names
                .iter()
                .map(|n| e.get(n).map(AttrValue::to_string).unwrap_or_default()),
        );
        push_row(&mut out, &row);
    }
    out
}

/// Users and resources as CSV tables with one column per attribute, and
/// the rules in `.abac` syntax.
pub fn to_csv(p: &Policy) -> CsvExport {
    CsvExport {
        users: entity_table(p.users()),
        resources: entity_table(p.resources()),
        rules: serialize_rules(p.rules()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: String,
    name: String,
    users: Vec<EntityDoc>,
    resources: Vec<EntityDoc>,
    rules: Vec<RuleDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityDoc {
    id: String,
    attrs: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConjunctDoc {
    attr: String,
    op: ConjunctOp,
    values: BTreeSet<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ConstraintDoc {
    user_attr: String,
    op: ConstraintOp,
    resource_attr: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    subject: Vec<ConjunctDoc>,
    resource: Vec<ConjunctDoc>,
    actions: BTreeSet<String>,
    constraints: Vec<ConstraintDoc>,
}

fn conjunct_doc(c: &Conjunct) -> ConjunctDoc {
    ConjunctDoc {
        attr: c.attr.clone(),
        op: c.op,
        values: c.consts.clone(),
    }
}

fn entity_doc(e: &Entity) -> EntityDoc {
    EntityDoc {
        id: e.id.clone(),
        attrs: e.attrs.clone(),
    }
}

/// Pretty-printed JSON with a trailing newline. Deterministic: entity and
/// rule order follow the policy, attribute keys and value sets are sorted.
pub fn export_canonical(p: &Policy) -> Vec<u8> {
    let doc = Document {
        version: CANONICAL_VERSION.to_string(),
        name: p.name().to_string(),
        users: p.users().iter().map(entity_doc).collect(),
        resources: p.resources().iter().map(entity_doc).collect(),
        rules: p
            .rules()
            .iter()
            .map(|r| RuleDoc {
                subject: r.sub_cond.iter().map(conjunct_doc).collect(),
                resource: r.res_cond.iter().map(conjunct_doc).collect(),
                actions: r.actions.clone(),
                constraints: r
                    .constraints
                    .iter()
                    .map(|c| ConstraintDoc {
                        user_attr: c.user_attr.clone(),
                        op: c.op,
                        resource_attr: c.res_attr.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("serializable");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImportError {
    #[error("corrupt input: {0}")]
    Corrupt(String),
    #[error("unsupported format version `{found}` (expected `{CANONICAL_VERSION}`)")]
    VersionMismatch { found: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid policy: {0}")]
    Model(#[from] ModelError),
}

pub fn import_canonical(bytes: &[u8]) -> Result<Policy, ImportError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ImportError::Corrupt(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ImportError::Corrupt("missing format version".into()))?;
    if !version.starts_with(MAGIC) {
        return Err(ImportError::Corrupt(format!("not a policy document (version `{version}`)")));
    }
    if version != CANONICAL_VERSION {
        return Err(ImportError::VersionMismatch {
            found: version.to_string(),
        });
    }
    let doc: Document =
        serde_json::from_value(value).map_err(|e| ImportError::Schema(e.to_string()))?;

    let mut b = Policy::builder(doc.name);
    for (kind, list) in [(EntityKind::User, doc.users), (EntityKind::Resource, doc.resources)] {
        for e in list {
            let mut entity = Entity::new(kind, e.id);
            entity.attrs = e.attrs;
            b.add_entity(entity)?;
        }
    }
    for r in doc.rules {
        let mut rule = Rule::new(r.actions);
        for c in r.subject {
            rule = rule.subject(Conjunct::new(c.attr, c.op, c.values));
        }
        for c in r.resource {
            rule = rule.resource(Conjunct::new(c.attr, c.op, c.values));
        }
        for c in r.constraints {
            rule = rule.constraint(Constraint::new(c.user_attr, c.op, c.resource_attr));
        }
        b.add_rule(rule)?;
    }
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse_policy;

    fn sample() -> Policy {
        parse_policy(
            "userAttrib(u1, dept=cs, crs={c1 c2})\nuserAttrib(u2, dept=ee)\n\
             resourceAttrib(r1, crs=c1, tags={x})\n\
             rule(dept in {cs ee}; tags supseteq {x}; {read}; crs contains crs)",
            "sample",
        )
        .unwrap()
    }

    #[test]
    fn csv_tables() {
        let out = to_csv(&sample());
        assert_eq!(out.users, "id,crs,dept\r\nu1,\"{c1 c2}\",cs\r\nu2,,ee\r\n");
        assert_eq!(out.resources, "id,crs,tags\r\nr1,c1,\"{x}\"\r\n");
        assert_eq!(out.rules, "rule(dept in {cs ee}; tags supseteq {x}; {read}; crs contains crs)\n");
    }

    #[test]
    fn canonical_round_trip() {
        let p = sample();
        let bytes = export_canonical(&p);
        assert_eq!(import_canonical(&bytes).unwrap(), p);
        assert_eq!(export_canonical(&p), bytes);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("\"version\": \"abaclab-policy/1\""));
        assert!(text.contains("\"crs\": [\n"));
    }

    #[test]
    fn import_errors() {
        let bytes = export_canonical(&sample());
        assert!(matches!(
            import_canonical(&bytes[..bytes.len() / 2]),
            Err(ImportError::Corrupt(_))
        ));
        let text = String::from_utf8(bytes).unwrap();
        let bumped = text.replace("abaclab-policy/1", "abaclab-policy/2");
        assert_eq!(
            import_canonical(bumped.as_bytes()),
            Err(ImportError::VersionMismatch { found: "abaclab-policy/2".into() })
        );
        let extra = text.replacen("\"name\"", "\"extra\": 1, \"name\"", 1);
        assert!(matches!(import_canonical(extra.as_bytes()), Err(ImportError::Schema(_))));
        let op = text.replace("\"supseteq\"", "\"near\"");
        assert!(matches!(import_canonical(op.as_bytes()), Err(ImportError::Schema(_))));
        let arity = text.replace("\"dept\": \"ee\"", "\"dept\": [\"ee\"]");
        assert!(matches!(
            import_canonical(arity.as_bytes()),
            Err(ImportError::Model(ModelError::MixedArity { .. }))
        ));
        assert!(matches!(import_canonical(b"{}"), Err(ImportError::Corrupt(_))));
        assert!(matches!(import_canonical(b"\xff\x00"), Err(ImportError::Corrupt(_))));
    }
}
