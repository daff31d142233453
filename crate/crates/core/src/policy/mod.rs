//! Policy data model and the `.abac` text format.
//!
//! A [`Policy`] is an object model (users and resources with attribute
//! values) plus an ordered list of permit rules. Policies are validated on
//! construction and immutable afterwards.

mod lexer;
mod parser;
mod serialize;
mod validate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::{parse_policy, parse_rules, ParseError, ParseErrorKind};
pub use serialize::{serialize_policy, serialize_rule, serialize_rules};
pub use validate::{validate_policy, Diagnostic, DiagnosticKind};

/// Returns true if `s` may be used as an atomic value or entity id.
///
/// Atoms are non-empty and contain no whitespace, `,`, `;`, `{`, `}`, `(`,
/// `)`, `=` or `#`.
pub fn is_valid_atom(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | ';' | '{' | '}' | '(' | ')' | '=' | '#'))
}

/// Returns true if `s` is a valid attribute name.
pub fn is_valid_attr_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Atomic(String),
    Set(BTreeSet<String>),
}

impl AttrValue {
    pub fn atomic(s: impl Into<String>) -> Result<Self, ModelError> {
        let s = s.into();
        if !is_valid_atom(&s) {
            return Err(ModelError::InvalidAtom(s));
        }
        Ok(AttrValue::Atomic(s))
    }

    pub fn set<I, S>(values: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = BTreeSet::new();
        for v in values {
            let v = v.into();
            if !is_valid_atom(&v) {
                return Err(ModelError::InvalidAtom(v));
            }
            out.insert(v);
        }
        Ok(AttrValue::Set(out))
    }

    pub fn as_atomic(&self) -> Option<&str> {
        match self {
            AttrValue::Atomic(s) => Some(s),
            AttrValue::Set(_) => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<String>> {
        match self {
            AttrValue::Set(s) => Some(s),
            AttrValue::Atomic(_) => None,
        }
    }

    pub fn arity(&self) -> Arity {
        match self {
            AttrValue::Atomic(_) => Arity::Single,
            AttrValue::Set(_) => Arity::Set,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Atomic(s) => f.write_str(s),
            AttrValue::Set(values) => {
                f.write_str("{")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    f.write_str(v)?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Whether an attribute holds one value or a set of values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arity {
    Single,
    Set,
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Single => f.write_str("single-valued"),
            Arity::Set => f.write_str("set-valued"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    User,
    Resource,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityKind::User => f.write_str("user"),
            EntityKind::Resource => f.write_str("resource"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    pub attrs: BTreeMap<String, AttrValue>,
}

impl Entity {
    pub fn new(kind: EntityKind, id: impl Into<String>) -> Self {
        Entity {
            id: id.into(),
            kind,
            attrs: BTreeMap::new(),
        }
    }

    pub fn user(id: impl Into<String>) -> Self {
        Self::new(EntityKind::User, id)
    }

    pub fn resource(id: impl Into<String>) -> Self {
        Self::new(EntityKind::Resource, id)
    }

    /// Builder-style attribute insertion. Replaces any previous value.
    pub fn with(mut self, attr: impl Into<String>, value: AttrValue) -> Self {
        self.attrs.insert(attr.into(), value);
        self
    }

    pub fn get(&self, attr: &str) -> Option<&AttrValue> {
        self.attrs.get(attr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjunctOp {
    In,
    Supseteq,
    Subseteq,
}

impl ConjunctOp {
    /// Arity the constrained attribute must have.
    pub fn operand_arity(self) -> Arity {
        match self {
            ConjunctOp::In => Arity::Single,
            ConjunctOp::Supseteq | ConjunctOp::Subseteq => Arity::Set,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ConjunctOp::In => "in",
            ConjunctOp::Supseteq => "supseteq",
            ConjunctOp::Subseteq => "subseteq",
        }
    }
}

/// A condition on one attribute of a single entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conjunct {
    pub attr: String,
    pub op: ConjunctOp,
    pub consts: BTreeSet<String>,
}

impl Conjunct {
    pub fn new<I, S>(attr: impl Into<String>, op: ConjunctOp, consts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Conjunct {
            attr: attr.into(),
            op,
            consts: consts.into_iter().map(Into::into).collect(),
        }
    }

    pub fn holds(&self, entity: &Entity) -> bool {
        match (self.op, entity.get(&self.attr)) {
            (ConjunctOp::In, Some(AttrValue::Atomic(v))) => self.consts.contains(v),
            (ConjunctOp::Supseteq, Some(AttrValue::Set(vs))) => vs.is_superset(&self.consts),
            (ConjunctOp::Subseteq, Some(AttrValue::Set(vs))) => vs.is_subset(&self.consts),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintOp {
    Equal,
    In,
    Contains,
    Supseteq,
    Subseteq,
}

impl ConstraintOp {
    /// Required arities of the (user, resource) operands.
    pub fn operand_arities(self) -> (Arity, Arity) {
        match self {
            ConstraintOp::Equal => (Arity::Single, Arity::Single),
            ConstraintOp::In => (Arity::Single, Arity::Set),
            ConstraintOp::Contains => (Arity::Set, Arity::Single),
            ConstraintOp::Supseteq | ConstraintOp::Subseteq => (Arity::Set, Arity::Set),
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ConstraintOp::Equal => "=",
            ConstraintOp::In => "in",
            ConstraintOp::Contains => "contains",
            ConstraintOp::Supseteq => "supseteq",
            ConstraintOp::Subseteq => "subseteq",
        }
    }
}

/// A relation between a user attribute and a resource attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub user_attr: String,
    pub op: ConstraintOp,
    pub res_attr: String,
}

impl Constraint {
    pub fn new(user_attr: impl Into<String>, op: ConstraintOp, res_attr: impl Into<String>) -> Self {
        Constraint {
            user_attr: user_attr.into(),
            op,
            res_attr: res_attr.into(),
        }
    }

    pub fn holds(&self, user: &Entity, resource: &Entity) -> bool {
        use AttrValue::{Atomic, Set};
        let (Some(u), Some(r)) = (user.get(&self.user_attr), resource.get(&self.res_attr)) else {
            return false;
        };
        match (self.op, u, r) {
            (ConstraintOp::Equal, Atomic(a), Atomic(b)) => a == b,
            (ConstraintOp::In, Atomic(a), Set(bs)) => bs.contains(a),
            (ConstraintOp::Contains, Set(as_), Atomic(b)) => as_.contains(b),
            (ConstraintOp::Supseteq, Set(as_), Set(bs)) => as_.is_superset(bs),
            (ConstraintOp::Subseteq, Set(as_), Set(bs)) => as_.is_subset(bs),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// 1-based position in the rule list.
    pub index: usize,
    pub sub_cond: Vec<Conjunct>,
    pub res_cond: Vec<Conjunct>,
    pub actions: BTreeSet<String>,
    pub constraints: Vec<Constraint>,
}

impl Rule {
    pub fn new<I, S>(actions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Rule {
            index: 0,
            sub_cond: Vec::new(),
            res_cond: Vec::new(),
            actions: actions.into_iter().map(Into::into).collect(),
            constraints: Vec::new(),
        }
    }

    pub fn subject(mut self, c: Conjunct) -> Self {
        self.sub_cond.push(c);
        self
    }

    pub fn resource(mut self, c: Conjunct) -> Self {
        self.res_cond.push(c);
        self
    }

    pub fn constraint(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    /// Attribute names this rule mentions on the given side, conjuncts
    /// and constraints both.
    pub fn mentioned_attrs(&self, kind: EntityKind) -> BTreeSet<&str> {
        let (conds, pick): (&[Conjunct], fn(&Constraint) -> &str) = match kind {
            EntityKind::User => (&self.sub_cond, |c| c.user_attr.as_str()),
            EntityKind::Resource => (&self.res_cond, |c| c.res_attr.as_str()),
        };
        conds
            .iter()
            .map(|c| c.attr.as_str())
            .chain(self.constraints.iter().map(pick))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid atomic value `{0}`")]
    InvalidAtom(String),
    #[error("invalid attribute name `{0}`")]
    InvalidAttrName(String),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateEntity { kind: EntityKind, id: String },
    #[error("attribute `{attr}` declared twice on {kind} `{id}`")]
    DuplicateAttribute {
        kind: EntityKind,
        id: String,
        attr: String,
    },
    #[error("{kind} attribute `{attr}` is {expected} elsewhere but {found} on `{id}`")]
    MixedArity {
        kind: EntityKind,
        attr: String,
        id: String,
        expected: Arity,
        found: Arity,
    },
    #[error("rule {rule}: operator `{op}` needs {expected} {kind} attribute `{attr}`, which is {found}")]
    OperatorArity {
        rule: usize,
        kind: EntityKind,
        attr: String,
        op: &'static str,
        expected: Arity,
        found: Arity,
    },
    #[error("rule {0}: action set is empty")]
    EmptyActions(usize),
    #[error("rule {rule}: conjunct on `{attr}` has an empty constant set")]
    EmptyConstants { rule: usize, attr: String },
}

/// Per-kind attribute arity table, inferred from declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    user: BTreeMap<String, Arity>,
    resource: BTreeMap<String, Arity>,
}

impl Schema {
    pub fn side(&self, kind: EntityKind) -> &BTreeMap<String, Arity> {
        match kind {
            EntityKind::User => &self.user,
            EntityKind::Resource => &self.resource,
        }
    }

    fn side_mut(&mut self, kind: EntityKind) -> &mut BTreeMap<String, Arity> {
        match kind {
            EntityKind::User => &mut self.user,
            EntityKind::Resource => &mut self.resource,
        }
    }

    pub fn arity(&self, kind: EntityKind, attr: &str) -> Option<Arity> {
        self.side(kind).get(attr).copied()
    }

    fn observe(&mut self, entity: &Entity) -> Result<(), ModelError> {
        let side = self.side_mut(entity.kind);
        for (name, value) in &entity.attrs {
            let found = value.arity();
            match side.get(name) {
                Some(&expected) if expected != found => {
                    return Err(ModelError::MixedArity {
                        kind: entity.kind,
                        attr: name.clone(),
                        id: entity.id.clone(),
                        expected,
                        found,
                    })
                }
                Some(_) => {}
                None => {
                    side.insert(name.clone(), found);
                }
            }
        }
        Ok(())
    }

    /// Checks operator arities against declared attributes. Undeclared
    /// attributes pass; they surface as validation warnings instead.
    pub fn check_rule(&self, rule: &Rule) -> Result<(), ModelError> {
        if rule.actions.is_empty() {
            return Err(ModelError::EmptyActions(rule.index));
        }
        for a in &rule.actions {
            if !is_valid_atom(a) {
                return Err(ModelError::InvalidAtom(a.clone()));
            }
        }
        let sides = [
            (EntityKind::User, &rule.sub_cond),
            (EntityKind::Resource, &rule.res_cond),
        ];
        for (kind, conds) in sides {
            for c in conds.iter() {
                check_name(&c.attr)?;
                if c.consts.is_empty() {
                    return Err(ModelError::EmptyConstants {
                        rule: rule.index,
                        attr: c.attr.clone(),
                    });
                }
                for v in &c.consts {
                    if !is_valid_atom(v) {
                        return Err(ModelError::InvalidAtom(v.clone()));
                    }
                }
                self.check_operand(rule.index, kind, &c.attr, c.op.keyword(), c.op.operand_arity())?;
            }
        }
        for c in &rule.constraints {
            check_name(&c.user_attr)?;
            check_name(&c.res_attr)?;
            let (ua, ra) = c.op.operand_arities();
            self.check_operand(rule.index, EntityKind::User, &c.user_attr, c.op.keyword(), ua)?;
            self.check_operand(rule.index, EntityKind::Resource, &c.res_attr, c.op.keyword(), ra)?;
        }
        Ok(())
    }

    fn check_operand(
        &self,
        rule: usize,
        kind: EntityKind,
        attr: &str,
        op: &'static str,
        expected: Arity,
    ) -> Result<(), ModelError> {
        match self.arity(kind, attr) {
            Some(found) if found != expected => Err(ModelError::OperatorArity {
                rule,
                kind,
                attr: attr.to_string(),
                op,
                expected,
                found,
            }),
            _ => Ok(()),
        }
    }
}

fn check_name(name: &str) -> Result<(), ModelError> {
    if is_valid_attr_name(name) {
        Ok(())
    } else {
        Err(ModelError::InvalidAttrName(name.to_string()))
    }
}

/// Incremental, validating policy constructor.
#[derive(Debug, Default)]
pub struct PolicyBuilder {
    name: String,
    users: Vec<Entity>,
    resources: Vec<Entity>,
    rules: Vec<Rule>,
    user_ids: HashMap<String, usize>,
    resource_ids: HashMap<String, usize>,
    schema: Schema,
}

impl PolicyBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        PolicyBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn add_entity(&mut self, entity: Entity) -> Result<(), ModelError> {
        if !is_valid_atom(&entity.id) {
            return Err(ModelError::InvalidAtom(entity.id));
        }
        for (name, value) in &entity.attrs {
            check_name(name)?;
            match value {
                AttrValue::Atomic(s) if !is_valid_atom(s) => {
                    return Err(ModelError::InvalidAtom(s.clone()))
                }
                AttrValue::Set(vs) => {
                    if let Some(bad) = vs.iter().find(|v| !is_valid_atom(v)) {
                        return Err(ModelError::InvalidAtom(bad.clone()));
                    }
                }
                _ => {}
            }
        }
        let (ids, list) = match entity.kind {
            EntityKind::User => (&mut self.user_ids, &mut self.users),
            EntityKind::Resource => (&mut self.resource_ids, &mut self.resources),
        };
        if ids.contains_key(&entity.id) {
            return Err(ModelError::DuplicateEntity {
                kind: entity.kind,
                id: entity.id,
            });
        }
        self.schema.observe(&entity)?;
        ids.insert(entity.id.clone(), list.len());
        list.push(entity);
        Ok(())
    }

    /// Appends a rule, renumbering it to its position in the list.
    pub fn add_rule(&mut self, mut rule: Rule) -> Result<(), ModelError> {
        rule.index = self.rules.len() + 1;
        self.schema.check_rule(&rule)?;
        self.rules.push(rule);
        Ok(())
    }

    pub fn build(self) -> Result<Policy, ModelError> {
        // Entities may be declared after rules; re-check every rule against
        // the final schema.
        for rule in &self.rules {
            self.schema.check_rule(rule)?;
        }
        let actions = self
            .rules
            .iter()
            .flat_map(|r| r.actions.iter().cloned())
            .collect();
        Ok(Policy {
            name: self.name,
            users: self.users,
            resources: self.resources,
            rules: self.rules,
            user_ids: self.user_ids,
            resource_ids: self.resource_ids,
            schema: self.schema,
            actions,
        })
    }
}

/// A validated, immutable ABAC policy.
#[derive(Debug, Clone)]
pub struct Policy {
    name: String,
    users: Vec<Entity>,
    resources: Vec<Entity>,
    rules: Vec<Rule>,
    user_ids: HashMap<String, usize>,
    resource_ids: HashMap<String, usize>,
    schema: Schema,
    actions: BTreeSet<String>,
}

impl PartialEq for Policy {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.users == other.users
            && self.resources == other.resources
            && self.rules == other.rules
    }
}

impl Eq for Policy {}

impl Policy {
    pub fn builder(name: impl Into<String>) -> PolicyBuilder {
        PolicyBuilder::new(name)
    }

    pub fn new(
        name: impl Into<String>,
        users: Vec<Entity>,
        resources: Vec<Entity>,
        rules: Vec<Rule>,
    ) -> Result<Self, ModelError> {
        let mut b = PolicyBuilder::new(name);
        for e in users.into_iter().chain(resources) {
            b.add_entity(e)?;
        }
        for r in rules {
            b.add_rule(r)?;
        }
        b.build()
    }

    pub fn empty(name: impl Into<String>) -> Self {
        PolicyBuilder::new(name)
            .build()
            .expect("empty policy is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn users(&self) -> &[Entity] {
        &self.users
    }

    pub fn resources(&self) -> &[Entity] {
        &self.resources
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Union of all rules' action sets.
    pub fn actions(&self) -> &BTreeSet<String> {
        &self.actions
    }

    pub fn user(&self, id: &str) -> Option<&Entity> {
        self.user_ids.get(id).map(|&i| &self.users[i])
    }

    pub fn resource(&self, id: &str) -> Option<&Entity> {
        self.resource_ids.get(id).map(|&i| &self.resources[i])
    }

    /// Distinct attribute names declared by entities of `kind`.
    pub fn declared_attrs(&self, kind: EntityKind) -> impl Iterator<Item = &str> {
        self.schema.side(kind).keys().map(String::as_str)
    }

    /// Same object model with a different rule list.
    pub fn with_rules(&self, rules: Vec<Rule>) -> Result<Policy, ModelError> {
        let mut b = PolicyBuilder::new(self.name.clone());
        b.users = self.users.clone();
        b.resources = self.resources.clone();
        b.user_ids = self.user_ids.clone();
        b.resource_ids = self.resource_ids.clone();
        b.schema = self.schema.clone();
        for r in rules {
            b.add_rule(r)?;
        }
        b.build()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Policy {
        self.name = name.into();
        self
    }
}
