//! Policy statistics, per-rule coverage, attribute usage and resource
//! exposure. Everything here produces plain data; rendering is left to
//! callers.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::eval::{all_permissions, rule_grants, Permission};
use crate::policy::{parse_rules, EntityKind, ParseError, Policy, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PolicyStats {
    #[serde(rename = "sub")]
    pub n_sub: usize,
    #[serde(rename = "res")]
    pub n_res: usize,
    #[serde(rename = "uAttr")]
    pub n_uattr: usize,
    #[serde(rename = "rAttr")]
    pub n_rattr: usize,
    #[serde(rename = "rule")]
    pub n_rule: usize,
    #[serde(rename = "perm")]
    pub n_perm: usize,
}

impl PolicyStats {
    pub fn as_tuple(&self) -> (usize, usize, usize, usize, usize, usize) {
        (self.n_sub, self.n_res, self.n_uattr, self.n_rattr, self.n_rule, self.n_perm)
    }
}

pub fn statistics(p: &Policy) -> PolicyStats {
    PolicyStats {
        n_sub: p.users().len(),
        n_res: p.resources().len(),
        n_uattr: p.declared_attrs(EntityKind::User).count(),
        n_rattr: p.declared_attrs(EntityKind::Resource).count(),
        n_rule: p.rules().len(),
        n_perm: all_permissions(p).len(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleCoverage {
    pub rule_index: usize,
    pub granted_count: usize,
    pub granted: Vec<Permission>,
}

fn coverage_of(p: &Policy, rules: &[Rule]) -> Vec<RuleCoverage> {
    rules
        .iter()
        .map(|r| {
            let granted = rule_grants(p, r);
            RuleCoverage {
                rule_index: r.index,
                granted_count: granted.len(),
                granted,
            }
        })
        .collect()
}

/// Coverage of each of the policy's own rules, in file order.
pub fn rule_coverage(p: &Policy) -> Vec<RuleCoverage> {
    coverage_of(p, p.rules())
}

/// Coverage of an external rules-only text over `p`'s object model. The
/// policy's own rules play no part.
pub fn external_rule_coverage(p: &Policy, rules_text: &str) -> Result<Vec<RuleCoverage>, ParseError> {
    let rules = parse_rules(rules_text, p.schema())?;
    Ok(coverage_of(p, &rules))
}

/// Size of the union of the coverage sets.
pub fn total_covered(coverage: &[RuleCoverage]) -> usize {
    coverage
        .iter()
        .flat_map(|c| c.granted.iter())
        .collect::<BTreeSet<_>>()
        .len()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AttrColumn {
    pub kind: EntityKind,
    pub name: String,
}

impl AttrColumn {
    /// Header label: `user.<name>` or `resource.<name>`.
    pub fn label(&self) -> String {
        format!("{}.{}", self.kind, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttrUsageMatrix {
    pub rows: Vec<usize>,
    pub cols: Vec<AttrColumn>,
    pub cells: Vec<Vec<usize>>,
}

impl AttrUsageMatrix {
    pub fn cell(&self, rule_index: usize, kind: EntityKind, name: &str) -> Option<usize> {
        let r = self.rows.iter().position(|&i| i == rule_index)?;
        let c = self
            .cols
            .iter()
            .position(|c| c.kind == kind && c.name == name)?;
        Some(self.cells[r][c])
    }
}

/// Rule × attribute heatmap. A cell holds the rule's granted count when the
/// rule mentions the attribute (conjunct or constraint), 0 otherwise.
pub fn attribute_usage(p: &Policy) -> AttrUsageMatrix {
    let mut cols = Vec::new();
    for kind in [EntityKind::User, EntityKind::Resource] {
        let mut names: BTreeSet<&str> = p.declared_attrs(kind).collect();
        for r in p.rules() {
            names.extend(r.mentioned_attrs(kind));
        }
        cols.extend(names.into_iter().map(|n| AttrColumn {
            kind,
            name: n.to_string(),
        }));
    }
    let coverage = rule_coverage(p);
    let mut cells = Vec::with_capacity(p.rules().len());
    for (rule, cov) in p.rules().iter().zip(&coverage) {
        let users = rule.mentioned_attrs(EntityKind::User);
        let resources = rule.mentioned_attrs(EntityKind::Resource);
        let row = cols
            .iter()
            .map(|c| {
                let hit = match c.kind {
                    EntityKind::User => users.contains(c.name.as_str()),
                    EntityKind::Resource => resources.contains(c.name.as_str()),
                };
                if hit {
                    cov.granted_count
                } else {
                    0
                }
            })
            .collect();
        cells.push(row);
    }
    AttrUsageMatrix {
        rows: p.rules().iter().map(|r| r.index).collect(),
        cols,
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceAccessProfile {
    pub resource_id: String,
    pub distinct_users: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceAccess {
    pub top: Vec<ResourceAccessProfile>,
    pub bottom: Vec<ResourceAccessProfile>,
}

/// Distinct users per resource, every resource included.
pub fn resource_profiles(p: &Policy) -> Vec<ResourceAccessProfile> {
    let mut users: BTreeMap<&str, BTreeSet<String>> =
        p.resources().iter().map(|r| (r.id.as_str(), BTreeSet::new())).collect();
    for perm in all_permissions(p) {
        if let Some(set) = users.get_mut(perm.resource.as_str()) {
            set.insert(perm.user);
        }
    }
    users
        .into_iter()
        .map(|(id, us)| ResourceAccessProfile {
            resource_id: id.to_string(),
            distinct_users: us.len(),
        })
        .collect()
}

pub const RESOURCE_ACCESS_LIMIT: usize = 10;

/// The ten most and ten least accessible resources. Ties break on resource
/// id ascending in both lists.
pub fn resource_access(p: &Policy) -> ResourceAccess {
    let profiles = resource_profiles(p);
    let mut top = profiles.clone();
    top.sort_by(|a, b| {
        b.distinct_users
            .cmp(&a.distinct_users)
            .then_with(|| a.resource_id.cmp(&b.resource_id))
    });
    top.truncate(RESOURCE_ACCESS_LIMIT);
    let mut bottom = profiles;
    bottom.sort_by(|a, b| {
        a.distinct_users
            .cmp(&b.distinct_users)
            .then_with(|| a.resource_id.cmp(&b.resource_id))
    });
    bottom.truncate(RESOURCE_ACCESS_LIMIT);
    ResourceAccess { top, bottom }
}
