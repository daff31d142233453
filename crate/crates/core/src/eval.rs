//! Access decisions and permission enumeration.
//!
//! Rules are permit-only and requests not matched by any rule are denied.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{Entity, Policy, Rule};

/// A granted `(user, resource, action)` triple. Orders lexicographically by
/// user, then resource, then action.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permission {
    pub user: String,
    pub resource: String,
    pub action: String,
}

impl Permission {
    pub fn new(user: impl Into<String>, resource: impl Into<String>, action: impl Into<String>) -> Self {
        Permission {
            user: user.into(),
            resource: resource.into(),
            action: action.into(),
        }
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.user, self.resource, self.action)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Decision {
    pub permitted: bool,
    /// Indices of every satisfied rule, ascending. Empty iff denied.
    pub matching_rules: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("unknown resource `{0}`")]
    UnknownResource(String),
}

/// True iff `rule` grants `action` on `resource` to `user`.
pub fn satisfies(rule: &Rule, user: &Entity, resource: &Entity, action: &str) -> bool {
    rule.actions.contains(action)
        && rule.sub_cond.iter().all(|c| c.holds(user))
        && rule.res_cond.iter().all(|c| c.holds(resource))
        && rule.constraints.iter().all(|c| c.holds(user, resource))
}

fn lookup<'p>(p: &'p Policy, user: &str, resource: &str) -> Result<(&'p Entity, &'p Entity), EvalError> {
    let u = p
        .user(user)
        .ok_or_else(|| EvalError::UnknownUser(user.to_string()))?;
    let r = p
        .resource(resource)
        .ok_or_else(|| EvalError::UnknownResource(resource.to_string()))?;
    Ok((u, r))
}

pub fn evaluate(p: &Policy, user: &str, resource: &str, action: &str) -> Result<Decision, EvalError> {
    let (u, r) = lookup(p, user, resource)?;
    let matching_rules: Vec<usize> = p
        .rules()
        .iter()
        .filter(|rule| satisfies(rule, u, r, action))
        .map(|rule| rule.index)
        .collect();
    let diagnostic = (!p.actions().contains(action))
        .then(|| format!("action `{action}` does not appear in any rule"));
    Ok(Decision {
        permitted: !matching_rules.is_empty(),
        matching_rules,
        diagnostic,
    })
}

/// Permissions granted by a single rule over the policy's object model,
/// sorted.
pub fn rule_grants(p: &Policy, rule: &Rule) -> Vec<Permission> {
    let mut out = Vec::new();
    collect_grants(p, rule, None, None, None, &mut |perm| out.push(perm));
    out.sort();
    out
}

fn candidates<'a>(fixed: Option<&'a Entity>, all: &'a [Entity]) -> Box<dyn Iterator<Item = &'a Entity> + 'a> {
    match fixed {
        Some(e) => Box::new(std::iter::once(e)),
        None => Box::new(all.iter()),
    }
}

fn collect_grants(
    p: &Policy,
    rule: &Rule,
    user: Option<&Entity>,
    resource: Option<&Entity>,
    action: Option<&str>,
    emit: &mut dyn FnMut(Permission),
) {
    let actions: Vec<&String> = match action {
        Some(a) => rule.actions.iter().filter(|x| x.as_str() == a).collect(),
        None => rule.actions.iter().collect(),
    };
    if actions.is_empty() {
        return;
    }
    let users: Vec<&Entity> = candidates(user, p.users())
        .filter(|u| rule.sub_cond.iter().all(|c| c.holds(u)))
        .collect();
    if users.is_empty() {
        return;
    }
    let resources: Vec<&Entity> = candidates(resource, p.resources())
        .filter(|r| rule.res_cond.iter().all(|c| c.holds(r)))
        .collect();
    for u in &users {
        for r in &resources {
            if rule.constraints.iter().all(|c| c.holds(u, r)) {
                for a in &actions {
                    emit(Permission::new(&u.id, &r.id, a.as_str()));
                }
            }
        }
    }
}

/// All permitted triples matching the given fields, sorted. Omitted fields
/// range over the whole universe.
pub fn query(
    p: &Policy,
    user: Option<&str>,
    resource: Option<&str>,
    action: Option<&str>,
) -> Result<Vec<Permission>, EvalError> {
    let u = match user {
        Some(id) => Some(p.user(id).ok_or_else(|| EvalError::UnknownUser(id.to_string()))?),
        None => None,
    };
    let r = match resource {
        Some(id) => Some(
            p.resource(id)
                .ok_or_else(|| EvalError::UnknownResource(id.to_string()))?,
        ),
        None => None,
    };
    let mut out = BTreeSet::new();
    for rule in p.rules() {
        collect_grants(p, rule, u, r, action, &mut |perm| {
            out.insert(perm);
        });
    }
    Ok(out.into_iter().collect())
}

/// The permission relation of the policy.
pub fn all_permissions(p: &Policy) -> BTreeSet<Permission> {
    let mut out = BTreeSet::new();
    for rule in p.rules() {
        collect_grants(p, rule, None, None, None, &mut |perm| {
            out.insert(perm);
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse_policy;

    const UNI: &str = "\
userAttrib(stu, position=student, crsTaken={cs101})
userAttrib(bare, position=student)
resourceAttrib(gb, type=gradebook, crs=cs101)
rule(position in {student}; type in {gradebook}; {readMyScores}; crsTaken contains crs)
";

    fn uni() -> Policy {
        parse_policy(UNI, "t").unwrap()
    }

    #[test]
    fn satisfies_examples() {
        let p = uni();
        let rule = &p.rules()[0];
        let stu = p.user("stu").unwrap();
        let gb = p.resource("gb").unwrap();
        assert!(satisfies(rule, stu, gb, "readMyScores"));
        assert!(!satisfies(rule, stu, gb, "addScore"));
        assert!(!satisfies(rule, p.user("bare").unwrap(), gb, "readMyScores"));
    }

    #[test]
    fn evaluate_permit_and_deny() {
        let p = uni();
        let d = evaluate(&p, "stu", "gb", "readMyScores").unwrap();
        assert!(d.permitted);
        assert_eq!(d.matching_rules, vec![1]);
        assert!(d.diagnostic.is_none());

        let d = evaluate(&p, "stu", "gb", "fly").unwrap();
        assert!(!d.permitted && d.matching_rules.is_empty());
        assert!(d.diagnostic.is_some());

        assert_eq!(
            evaluate(&p, "ghost", "gb", "readMyScores").unwrap_err(),
            EvalError::UnknownUser("ghost".into())
        );
        assert_eq!(
            evaluate(&p, "stu", "ghost", "readMyScores").unwrap_err(),
            EvalError::UnknownResource("ghost".into())
        );
    }

    #[test]
    fn deny_by_default() {
        let p = parse_policy("userAttrib(u)\nresourceAttrib(r)", "t").unwrap();
        let d = evaluate(&p, "u", "r", "read").unwrap();
        assert!(!d.permitted);
        assert!(query(&p, None, None, None).unwrap().is_empty());
    }

    #[test]
    fn query_with_all_fields_matches_evaluate() {
        let p = uni();
        assert_eq!(
            query(&p, Some("stu"), Some("gb"), Some("readMyScores")).unwrap(),
            vec![Permission::new("stu", "gb", "readMyScores")]
        );
        assert!(query(&p, Some("bare"), Some("gb"), Some("readMyScores"))
            .unwrap()
            .is_empty());
        assert!(query(&p, None, None, Some("nope")).unwrap().is_empty());
        assert!(query(&p, Some("ghost"), None, None).is_err());
    }
}
