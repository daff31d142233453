//! Synthetic access logs with a target permit ratio and optional
//! over-/under-permission noise.
//!
//! With `n` entries and permit ratio `r`, `nP = round(n·r)` entries are
//! logged as permitted and `nD = n − nP` as denied. `round(nP·over)` of the
//! permitted entries are really denied by the policy and `round(nD·under)`
//! of the denied entries are really permitted. Rounding is half-up.
//! All draws and the final shuffle come from one SplitMix64 stream.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvout::push_row;
use crate::eval::{all_permissions, Permission};
use crate::policy::Policy;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LogConfig {
    pub n: usize,
    pub permit_ratio: f64,
    #[serde(default)]
    pub over_rate: f64,
    #[serde(default)]
    pub under_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub unique: bool,
}

impl LogConfig {
    pub fn new(n: usize, permit_ratio: f64) -> Self {
        LogConfig {
            n,
            permit_ratio,
            over_rate: 0.0,
            under_rate: 0.0,
            seed: 0,
            unique: false,
        }
    }

    pub fn noise(mut self, over: f64, under: f64) -> Self {
        self.over_rate = over;
        self.under_rate = under;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn unique(mut self, unique: bool) -> Self {
        self.unique = unique;
        self
    }

    pub fn validate(&self) -> Result<(), LogGenError> {
        if self.n == 0 {
            return Err(LogGenError::InvalidConfig("n must be positive".into()));
        }
        for (name, v) in [
            ("permitRatio", self.permit_ratio),
            ("overRate", self.over_rate),
            ("underRate", self.under_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LogGenError::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn counts(&self) -> LogCounts {
        let permits = round_half_up(self.n, self.permit_ratio);
        let denies = self.n - permits;
        let over = round_half_up(permits, self.over_rate);
        let under = round_half_up(denies, self.under_rate);
        LogCounts {
            true_permit: permits - over,
            over_permit: over,
            true_deny: denies - under,
            under_permit: under,
        }
    }
}

/// `round(count · frac)`, halves rounding up. A small epsilon absorbs the
/// binary representation error of decimal fractions such as 0.05.
pub fn round_half_up(count: usize, frac: f64) -> usize {
    let x = (count as f64 * frac + 0.5 + 1e-9).floor() as usize;
    x.min(count)
}

/// Entry counts per (decision, ground truth) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LogCounts {
    /// decision permit, truth permit
    pub true_permit: usize,
    /// decision permit, truth deny
    pub over_permit: usize,
    /// decision deny, truth deny
    pub true_deny: usize,
    /// decision deny, truth permit
    pub under_permit: usize,
}

impl LogCounts {
    pub fn of(entries: &[LogEntry]) -> Self {
        let mut c = LogCounts::default();
        for e in entries {
            match (e.decision, e.ground_truth) {
                (Label::Permit, Label::Permit) => c.true_permit += 1,
                (Label::Permit, Label::Deny) => c.over_permit += 1,
                (Label::Deny, Label::Deny) => c.true_deny += 1,
                (Label::Deny, Label::Permit) => c.under_permit += 1,
            }
        }
        c
    }

    fn truth_permit(&self) -> usize {
        self.true_permit + self.under_permit
    }

    fn truth_deny(&self) -> usize {
        self.true_deny + self.over_permit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Permit,
    Deny,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Permit => "permit",
            Label::Deny => "deny",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub user: String,
    pub resource: String,
    pub action: String,
    pub decision: Label,
    pub ground_truth: Label,
}

impl LogEntry {
    pub fn is_noisy(&self) -> bool {
        self.decision != self.ground_truth
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogGenError {
    #[error("invalid log configuration: {0}")]
    InvalidConfig(String),
    #[error("policy grants no permissions, but {0} permitted ground-truth entries were requested")]
    NoPermissions(usize),
    #[error("policy denies nothing, but {0} denied ground-truth entries were requested")]
    NoDenials(usize),
    #[error("unique sampling needs {requested} {pool} triples but only {available} exist")]
    PoolExhausted {
        pool: &'static str,
        requested: usize,
        available: usize,
    },
}

/// Complements up to this many triples are materialized up front.
const MATERIALIZE_LIMIT: u128 = 1 << 18;
/// Rejection attempts per draw before falling back to materialization.
const MAX_REJECTIONS: usize = 256;

struct DeniedSampler<'p> {
    policy: &'p Policy,
    actions: Vec<&'p str>,
    granted: HashSet<(usize, usize, usize)>,
    total: u128,
    materialized: Option<Vec<(usize, usize, usize)>>,
}

impl<'p> DeniedSampler<'p> {
    fn new(policy: &'p Policy, perms: &BTreeSet<Permission>) -> Self {
        let actions: Vec<&str> = policy.actions().iter().map(String::as_str).collect();
        let uidx: std::collections::HashMap<&str, usize> =
            policy.users().iter().enumerate().map(|(i, u)| (u.id.as_str(), i)).collect();
        let ridx: std::collections::HashMap<&str, usize> = policy
            .resources()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect();
        let aidx: std::collections::HashMap<&str, usize> =
            actions.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let granted = perms
            .iter()
            .map(|p| (uidx[p.user.as_str()], ridx[p.resource.as_str()], aidx[p.action.as_str()]))
            .collect();
        let total = policy.users().len() as u128 * policy.resources().len() as u128 * actions.len() as u128;
        let mut s = DeniedSampler {
            policy,
            actions,
            granted,
            total,
            materialized: None,
        };
        if s.total <= MATERIALIZE_LIMIT {
            s.materialize();
        }
        s
    }

    fn available(&self) -> u128 {
        self.total - self.granted.len() as u128
    }

    fn materialize(&mut self) {
        if self.materialized.is_some() {
            return;
        }
        let (nu, nr, na) = (self.policy.users().len(), self.policy.resources().len(), self.actions.len());
        let mut v = Vec::new();
        for u in 0..nu {
            for r in 0..nr {
                for a in 0..na {
                    if !self.granted.contains(&(u, r, a)) {
                        v.push((u, r, a));
                    }
                }
            }
        }
        self.materialized = Some(v);
    }

    fn triple(&self, rng: &mut SplitMix64) -> (usize, usize, usize) {
        (
            rng.index(self.policy.users().len()),
            rng.index(self.policy.resources().len()),
            rng.index(self.actions.len()),
        )
    }

    /// Draws `k` denied triples, distinct when `unique`.
    fn draw(&mut self, rng: &mut SplitMix64, k: usize, unique: bool) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(k);
        let mut seen = HashSet::new();
        while out.len() < k {
            if let Some(pool) = &self.materialized {
                if unique {
                    let rest: Vec<_> = pool.iter().filter(|t| !seen.contains(*t)).copied().collect();
                    let need = k - out.len();
                    for i in rng.sample_indices(rest.len(), need) {
                        out.push(rest[i]);
                    }
                } else {
                    while out.len() < k {
                        out.push(pool[rng.index(pool.len())]);
                    }
                }
                break;
            }
            let mut accepted = None;
            for _ in 0..MAX_REJECTIONS {
                let t = self.triple(rng);
                if !self.granted.contains(&t) && !(unique && seen.contains(&t)) {
                    accepted = Some(t);
                    break;
                }
            }
            match accepted {
                Some(t) => {
                    if unique {
                        seen.insert(t);
                    }
                    out.push(t);
                }
                None => self.materialize(),
            }
        }
        out
    }

    fn entry(&self, t: (usize, usize, usize), decision: Label) -> LogEntry {
        LogEntry {
            user: self.policy.users()[t.0].id.clone(),
            resource: self.policy.resources()[t.1].id.clone(),
            action: self.actions[t.2].to_string(),
            decision,
            ground_truth: Label::Deny,
        }
    }
}

pub fn generate_logs(p: &Policy, cfg: &LogConfig) -> Result<Vec<LogEntry>, LogGenError> {
    cfg.validate()?;
    let counts = cfg.counts();
    let perms: BTreeSet<Permission> = all_permissions(p);
    let need_permit = counts.truth_permit();
    let need_deny = counts.truth_deny();
    if need_permit > 0 && perms.is_empty() {
        return Err(LogGenError::NoPermissions(need_permit));
    }
    let mut denied = DeniedSampler::new(p, &perms);
    if need_deny > 0 && denied.available() == 0 {
        return Err(LogGenError::NoDenials(need_deny));
    }
    if cfg.unique {
        if need_permit > perms.len() {
            return Err(LogGenError::PoolExhausted {
                pool: "permitted",
                requested: need_permit,
                available: perms.len(),
            });
        }
        if need_deny as u128 > denied.available() {
            return Err(LogGenError::PoolExhausted {
                pool: "denied",
                requested: need_deny,
                available: denied.available() as usize,
            });
        }
    }

    let mut rng = SplitMix64::new(cfg.seed);
    let perms: Vec<Permission> = perms.into_iter().collect();
    let permit_draws: Vec<usize> = if cfg.unique {
        rng.sample_indices(perms.len(), need_permit)
    } else {
        (0..need_permit).map(|_| rng.index(perms.len())).collect()
    };
    let deny_draws = denied.draw(&mut rng, need_deny, cfg.unique);

    let mut entries = Vec::with_capacity(cfg.n);
    for (i, &idx) in permit_draws.iter().enumerate() {
        let perm = &perms[idx];
        let decision = if i < counts.true_permit {
            Label::Permit
        } else {
            Label::Deny
        };
        entries.push(LogEntry {
            user: perm.user.clone(),
            resource: perm.resource.clone(),
            action: perm.action.clone(),
            decision,
            ground_truth: Label::Permit,
        });
    }
    for (i, &t) in deny_draws.iter().enumerate() {
        let decision = if i < counts.true_deny {
            Label::Deny
        } else {
            Label::Permit
        };
        entries.push(denied.entry(t, decision));
    }
    rng.shuffle(&mut entries);
    Ok(entries)
}

/// Log CSV. With `with_truth` the ground-truth column is included.
pub fn logs_to_csv(entries: &[LogEntry], with_truth: bool) -> String {
    let mut out = String::new();
    if with_truth {
        push_row(&mut out, &["user", "resource", "action", "decision", "ground_truth"]);
    } else {
        push_row(&mut out, &["user", "resource", "action", "decision"]);
    }
    for e in entries {
        if with_truth {
            push_row(
                &mut out,
                &[&e.user, &e.resource, &e.action, e.decision.as_str(), e.ground_truth.as_str()],
            );
        } else {
            push_row(&mut out, &[&e.user, &e.resource, &e.action, e.decision.as_str()]);
        }
    }
    out
}
