use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{EntityKind, Policy};
use crate::analytics::rule_coverage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    /// A rule references an attribute no entity of that kind declares.
    UndeclaredAttribute,
    /// Some entities lack an attribute that rules reference.
    MissingAttribute,
    /// A rule grants no permission over the object model.
    ZeroPermissionRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub rule: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(r) => write!(f, "warning: rule {r}: {}", self.message),
            None => write!(f, "warning: {}", self.message),
        }
    }
}

/// Warnings about a policy; never fails. `deep` enables the
/// zero-permission check, which evaluates every rule.
pub fn validate_policy(p: &Policy, deep: bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut referenced: [BTreeSet<&str>; 2] = Default::default();
    for rule in p.rules() {
        for (slot, kind) in [(0, EntityKind::User), (1, EntityKind::Resource)] {
            for attr in rule.mentioned_attrs(kind) {
                referenced[slot].insert(attr);
                if p.schema().arity(kind, attr).is_none() {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::UndeclaredAttribute,
                        rule: Some(rule.index),
                        message: format!("{kind} attribute `{attr}` is not declared by any {kind}"),
                    });
                }
            }
        }
    }
    for (slot, kind, entities) in [
        (0, EntityKind::User, p.users()),
        (1, EntityKind::Resource, p.resources()),
    ] {
        for &attr in &referenced[slot] {
            if p.schema().arity(kind, attr).is_none() {
                continue;
            }
            let lacking: Vec<&str> = entities
                .iter()
                .filter(|e| !e.attrs.contains_key(attr))
                .map(|e| e.id.as_str())
                .collect();
            if !lacking.is_empty() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::MissingAttribute,
                    rule: None,
                    message: format!(
                        "{} {kind}(s) lack attribute `{attr}`: {}",
                        lacking.len(),
                        lacking.join(" ")
                    ),
                });
            }
        }
    }
    if deep {
        for cov in rule_coverage(p) {
            if cov.granted_count == 0 {
                out.push(Diagnostic {
                    kind: DiagnosticKind::ZeroPermissionRule,
                    rule: Some(cov.rule_index),
                    message: "rule grants no permissions".to_string(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse_policy;

    fn kinds(d: &[Diagnostic], k: DiagnosticKind) -> usize {
        d.iter().filter(|d| d.kind == k).count()
    }

    #[test]
    fn undeclared_attribute() {
        let p = parse_policy(
            "userAttrib(u1, dept=cs)\nresourceAttrib(r1, dept=cs)\nrule(; ; {read}; dept2 = dept)",
            "t",
        )
        .unwrap();
        let d = validate_policy(&p, false);
        assert_eq!(kinds(&d, DiagnosticKind::UndeclaredAttribute), 1);
        assert_eq!(d[0].rule, Some(1));
    }

    #[test]
    fn missing_attribute_and_zero_permission() {
        let p = parse_policy(
            "userAttrib(u1, pos=a)\nuserAttrib(u2)\nresourceAttrib(r1, t=x)\n\
             rule(pos in {a}; t in {x}; {read}; )\nrule(pos in {zzz}; ; {read}; )",
            "t",
        )
        .unwrap();
        let shallow = validate_policy(&p, false);
        assert_eq!(kinds(&shallow, DiagnosticKind::MissingAttribute), 1);
        assert_eq!(kinds(&shallow, DiagnosticKind::ZeroPermissionRule), 0);
        let deep = validate_policy(&p, true);
        let zero: Vec<_> = deep
            .iter()
            .filter(|d| d.kind == DiagnosticKind::ZeroPermissionRule)
            .collect();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].rule, Some(2));
    }
}
