//! Recursive-descent parser for `.abac` text.
//!
//! ```text
//! userAttrib(<id>, <attr>=<value>, ...)
//! resourceAttrib(<id>, <attr>=<value>, ...)
//! rule(<conjuncts>; <conjuncts>; {<action> ...}; <constraints>)
//! ```
//!
//! A value is an atom or a brace-delimited, space-separated set. Conjuncts
//! are `attr in {..}`, `attr supseteq {..}`, `attr subseteq {..}`,
//! `attr = v` and `attr contains v`. Constraints are `ua = ra`,
//! `ua in ra`, `ua contains ra`, `ua supseteq ra` and `ua subseteq ra`.
//! The symbolic tokens `[`, `]`, `>` and `<` are accepted for `in`,
//! `contains`, `supseteq` and `subseteq`.

use std::collections::BTreeSet;

use thiserror::Error;

use super::lexer::{tokenize, Tok, Token};
use super::{
    AttrValue, Conjunct, ConjunctOp, Constraint, ConstraintOp, Entity, EntityKind, ModelError,
    Policy, PolicyBuilder, Rule, Schema,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unexpected end of input, expected {0}")]
    Eof(String),
    #[error("unknown statement `{0}`")]
    UnknownStatement(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("malformed value set: {0}")]
    MalformedSet(String),
    #[error("entity declarations are not allowed in a rules-only text")]
    EntityInRules,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parses a complete policy. Rule indices are assigned 1..n in file order.
pub fn parse_policy(text: &str, name: &str) -> Result<Policy, ParseError> {
    let toks = tokenize(text);
    let mut p = Parser::new(&toks);
    let mut builder = PolicyBuilder::new(name);
    let mut rule_lines = Vec::new();
    while let Some(stmt) = p.statement()? {
        match stmt {
            Statement::Entity(line, entity) => builder
                .add_entity(entity)
                .map_err(|e| ParseError::model(line, e))?,
            Statement::Rule(line, rule) => {
                builder
                    .add_rule(rule)
                    .map_err(|e| ParseError::model(line, e))?;
                rule_lines.push(line);
            }
        }
    }
    // entities declared after a rule can still make that rule ill-typed
    builder.build().map_err(|e| {
        let line = match &e {
            ModelError::OperatorArity { rule, .. } => rule_lines[rule - 1],
            _ => 0,
        };
        ParseError::model(line, e)
    })
}

/// Parses rule statements only, checking operator arities against `schema`.
pub fn parse_rules(text: &str, schema: &Schema) -> Result<Vec<Rule>, ParseError> {
    let toks = tokenize(text);
    let mut p = Parser::new(&toks);
    let mut rules = Vec::new();
    while let Some(stmt) = p.statement()? {
        match stmt {
            Statement::Entity(line, _) => {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::EntityInRules,
                })
            }
            Statement::Rule(line, mut rule) => {
                rule.index = rules.len() + 1;
                schema
                    .check_rule(&rule)
                    .map_err(|e| ParseError::model(line, e))?;
                rules.push(rule);
            }
        }
    }
    Ok(rules)
}

impl ParseError {
    fn model(line: usize, e: ModelError) -> Self {
        ParseError {
            line,
            kind: ParseErrorKind::Model(e),
        }
    }
}

enum Statement {
    Entity(usize, Entity),
    Rule(usize, Rule),
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Token]) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn next(&mut self, expected: &str) -> Result<&'a Token, ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(ParseError {
                line: self.line(),
                kind: ParseErrorKind::Eof(expected.to_string()),
            }),
        }
    }

    fn unexpected(&self, t: &Token, expected: &str) -> ParseError {
        ParseError {
            line: t.line,
            kind: ParseErrorKind::Unexpected {
                expected: expected.to_string(),
                found: t.tok.describe(),
            },
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        let what = tok.describe();
        let t = self.next(&what)?;
        if t.tok == tok {
            Ok(())
        } else {
            Err(self.unexpected(t, &what))
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ParseError> {
        let t = self.next(what)?;
        match &t.tok {
            Tok::Word(w) => Ok(w),
            _ => Err(self.unexpected(t, what)),
        }
    }

    fn statement(&mut self) -> Result<Option<Statement>, ParseError> {
        let Some(t) = self.toks.get(self.pos) else {
            return Ok(None);
        };
        let line = t.line;
        let keyword = self.word("a statement")?;
        let kind = match keyword {
            "userAttrib" => Some(EntityKind::User),
            "resourceAttrib" => Some(EntityKind::Resource),
            "rule" => None,
            other => {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::UnknownStatement(other.to_string()),
                })
            }
        };
        self.expect(Tok::LParen)?;
        Ok(Some(match kind {
            Some(kind) => Statement::Entity(line, self.entity(kind)?),
            None => Statement::Rule(line, self.rule()?),
        }))
    }

    fn entity(&mut self, kind: EntityKind) -> Result<Entity, ParseError> {
        let id = self.word("an entity id")?;
        let mut entity = Entity::new(kind, id);
        loop {
            let t = self.next("`,` or `)`")?;
            match t.tok {
                Tok::RParen => return Ok(entity),
                Tok::Comma => {}
                _ => return Err(self.unexpected(t, "`,` or `)`")),
            }
            let line = self.line();
            let attr = self.word("an attribute name")?;
            self.expect(Tok::Eq)?;
            let value = self.value()?;
            if entity.attrs.insert(attr.to_string(), value).is_some() {
                return Err(ParseError::model(
                    line,
                    ModelError::DuplicateAttribute {
                        kind,
                        id: entity.id.clone(),
                        attr: attr.to_string(),
                    },
                ));
            }
        }
    }

    fn value(&mut self) -> Result<AttrValue, ParseError> {
        let t = self.next("a value")?;
        match &t.tok {
            Tok::Word(w) => Ok(AttrValue::Atomic(w.clone())),
            Tok::LBrace => Ok(AttrValue::Set(self.set_body()?)),
            _ => Err(self.unexpected(t, "a value")),
        }
    }

    /// Words up to the closing brace; the opening brace is consumed.
    fn set_body(&mut self) -> Result<BTreeSet<String>, ParseError> {
        let mut out = BTreeSet::new();
        loop {
            let t = self.next("`}`")?;
            match &t.tok {
                Tok::Word(w) => {
                    out.insert(w.clone());
                }
                Tok::RBrace => return Ok(out),
                other => {
                    return Err(ParseError {
                        line: t.line,
                        kind: ParseErrorKind::MalformedSet(format!(
                            "{} inside braces (elements are separated by spaces)",
                            other.describe()
                        )),
                    })
                }
            }
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let sub_cond = self.conjuncts()?;
        self.expect(Tok::Semi)?;
        let res_cond = self.conjuncts()?;
        self.expect(Tok::Semi)?;
        let line = self.line();
        self.expect(Tok::LBrace)?;
        let actions = self.set_body()?;
        if actions.is_empty() {
            return Err(ParseError::model(line, ModelError::EmptyActions(0)));
        }
        let mut constraints = Vec::new();
        let t = self.next("`;` or `)`")?;
        match t.tok {
            Tok::RParen => {}
            Tok::Semi => {
                if self.peek() != Some(&Tok::RParen) {
                    loop {
                        constraints.push(self.constraint()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
            }
            _ => return Err(self.unexpected(t, "`;` or `)`")),
        }
        Ok(Rule {
            index: 0,
            sub_cond,
            res_cond,
            actions,
            constraints,
        })
    }

    fn conjuncts(&mut self) -> Result<Vec<Conjunct>, ParseError> {
        let mut out = Vec::new();
        if self.peek() == Some(&Tok::Semi) {
            return Ok(out);
        }
        loop {
            out.push(self.conjunct()?);
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn conjunct(&mut self) -> Result<Conjunct, ParseError> {
        let attr = self.word("an attribute name")?.to_string();
        let t = self.next("an operator")?;
        let (op, single_only) = match &t.tok {
            Tok::Eq => (ConjunctOp::In, true),
            Tok::Word(w) => match w.as_str() {
                "in" | "[" => (ConjunctOp::In, false),
                "supseteq" | ">" => (ConjunctOp::Supseteq, false),
                "subseteq" | "<" => (ConjunctOp::Subseteq, false),
                "contains" | "]" => (ConjunctOp::Supseteq, true),
                other => {
                    return Err(ParseError {
                        line: t.line,
                        kind: ParseErrorKind::UnknownOperator(other.to_string()),
                    })
                }
            },
            _ => return Err(self.unexpected(t, "an operator")),
        };
        let t = self.next("a constant")?;
        let consts = match &t.tok {
            Tok::Word(w) => BTreeSet::from([w.clone()]),
            Tok::LBrace if !single_only => self.set_body()?,
            _ => return Err(self.unexpected(t, "a constant")),
        };
        if consts.is_empty() {
            return Err(ParseError::model(
                t.line,
                ModelError::EmptyConstants { rule: 0, attr },
            ));
        }
        Ok(Conjunct { attr, op, consts })
    }

    fn constraint(&mut self) -> Result<Constraint, ParseError> {
        let user_attr = self.word("a user attribute name")?.to_string();
        let t = self.next("an operator")?;
        let op = match &t.tok {
            Tok::Eq => ConstraintOp::Equal,
            Tok::Word(w) => match w.as_str() {
                "in" | "[" => ConstraintOp::In,
                "contains" | "]" => ConstraintOp::Contains,
                "supseteq" | ">" => ConstraintOp::Supseteq,
                "subseteq" | "<" => ConstraintOp::Subseteq,
                other => {
                    return Err(ParseError {
                        line: t.line,
                        kind: ParseErrorKind::UnknownOperator(other.to_string()),
                    })
                }
            },
            _ => return Err(self.unexpected(t, "an operator")),
        };
        let res_attr = self.word("a resource attribute name")?.to_string();
        Ok(Constraint {
            user_attr,
            op,
            res_attr,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Policy, ParseError> {
        parse_policy(text, "t")
    }

    #[test]
    fn user_declaration_with_set() {
        let p = parse("userAttrib(u1, position=student, crsTaken={cs101 cs601})").unwrap();
        assert_eq!(p.users().len(), 1);
        let u = &p.users()[0];
        assert_eq!(u.id, "u1");
        assert_eq!(u.get("position"), Some(&AttrValue::Atomic("student".into())));
        assert_eq!(u.get("crsTaken").unwrap().as_set().unwrap().len(), 2);
    }

    #[test]
    fn empty_condition_rule() {
        let p = parse("rule(; ; {read}; )").unwrap();
        let r = &p.rules()[0];
        assert_eq!(r.index, 1);
        assert!(r.sub_cond.is_empty() && r.res_cond.is_empty() && r.constraints.is_empty());
        assert_eq!(r.actions, BTreeSet::from(["read".to_string()]));
        // trailing constraint component may be omitted
        assert_eq!(parse("rule(;;{read})").unwrap().rules()[0], *r);
    }

    #[test]
    fn sugar_desugars() {
        let p = parse(
            "userAttrib(u, a=x, s={p})\nresourceAttrib(r, b=y)\n\
             rule(a = x, s contains p; b in {y z}; {go}; s contains b)",
        )
        .unwrap();
        let r = &p.rules()[0];
        assert_eq!(r.sub_cond[0], Conjunct::new("a", ConjunctOp::In, ["x"]));
        assert_eq!(r.sub_cond[1], Conjunct::new("s", ConjunctOp::Supseteq, ["p"]));
        assert_eq!(r.res_cond[0], Conjunct::new("b", ConjunctOp::In, ["y", "z"]));
        assert_eq!(r.constraints[0], Constraint::new("s", ConstraintOp::Contains, "b"));
    }

    #[test]
    fn symbolic_operators_accepted() {
        let keyword = parse(
            "rule(position in {faculty}; type in {gradebook}; {read}; crsTaught contains crs, uid = owner)",
        )
        .unwrap();
        let symbolic = parse(
            "rule(position [ {faculty}; type [ {gradebook}; {read}; crsTaught ] crs, uid = owner)",
        )
        .unwrap();
        assert_eq!(keyword, symbolic);
    }

    #[test]
    fn statements_wrap_lines_and_crlf() {
        let p = parse("# header\r\nuserAttrib(u1,\r\n  a=x,\r\n  b={y z})\r\n\r\nrule(\n a in {x};\n;\n{r};\n)\n")
            .unwrap();
        assert_eq!(p.users()[0].attrs.len(), 2);
        assert_eq!(p.rules().len(), 1);
    }

    #[test]
    fn error_lines() {
        let err = parse("userAttrib(u1, a=x)\n\nuserAttrib(u1, a=y)").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::DuplicateEntity { .. })));

        let err = parse("userAttrib(u1, a=x)\nrule(a like {x}; ; {r}; )").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.kind, ParseErrorKind::UnknownOperator("like".into()));

        let err = parse("userAttrib(u1, s={a, b})").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::MalformedSet(_)));

        let err = parse("userAttrib(u1, a)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Unexpected { .. }));

        let err = parse("userAttrib(u1, a=x").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Eof(_)));

        let err = parse("policy(x)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownStatement("policy".into()));

        let err = parse("rule(; ; {}; )").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::EmptyActions(_))));

        let err = parse("userAttrib(u1, a=x, a=y)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::DuplicateAttribute { .. })));
    }

    #[test]
    fn mixed_arity_is_parse_error() {
        let err = parse("userAttrib(u1, a=x)\nuserAttrib(u2, a={x})").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::MixedArity { .. })));
    }

    #[test]
    fn rule_before_declaration_is_rechecked() {
        let err = parse("rule(a in {x}; ; {r}; )\nuserAttrib(u1, a={x})").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::OperatorArity { .. })));
    }

    #[test]
    fn rules_only_text() {
        let rules = parse_rules("rule(;;{a})\n# c\nrule(;;{b})", &Schema::default()).unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[1].index, 2);
        let err = parse_rules("rule(;;{a})\nuserAttrib(u)", &Schema::default()).unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.kind, ParseErrorKind::EntityInRules);
        assert!(parse_rules("", &Schema::default()).unwrap().is_empty());
    }
}
