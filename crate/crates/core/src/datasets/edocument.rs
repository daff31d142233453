//! Multi-tenant e-document platform: tenant employees, customers and
//! administrators handling invoices, banking notes and paychecks.
//!
//! Tenants are attribute values, not entities. Each tenant gets a region,
//! a department subset and a size weight; employees and documents are
//! assigned to tenants in proportion to that weight.

use serde::Deserialize;

use super::model::{atom, pick, pick_distinct, set_of, Span, Weights};
use super::{assemble, GenConfig};
use crate::policy::{Entity, Policy};
use crate::rng::SplitMix64;

const MODEL: &str = include_str!("../../data/edocument.toml");
const RULES: &str = include_str!("../../data/edocument.rules");

pub const USER_CONTROLS: [&str; 3] = ["nEmployees", "nCustomers", "nAdmins"];
pub const RESOURCE_CONTROLS: [&str; 3] = ["nInvoices", "nBankingNotes", "nPaychecks"];

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Model {
    regions: Vec<String>,
    departments: Vec<String>,
    tenant_size: Span,
    departments_per_tenant: Span,
    tenants_per_customer: Span,
    extra_managed_departments: Span,
    position: Weights,
    segment: Weights,
    admin_scope: Weights,
    channels: Weights,
    delivery: Weights,
    document_status: Weights,
    confidentiality: Weights,
}

pub fn default_config() -> GenConfig {
    super::defaults_from(MODEL)
}

pub fn rules_text() -> &'static str {
    RULES
}

struct Tenant {
    id: String,
    region: String,
    departments: Vec<String>,
    size: u64,
}

struct Employee {
    id: String,
    tenant: usize,
    department: String,
}

struct Customer {
    id: String,
    tenants: Vec<usize>,
    segment: String,
}

pub fn generate_edocument(cfg: &GenConfig) -> Policy {
    let m: Model = super::model_from(MODEL);
    let mut rng = SplitMix64::new(cfg.seed);

    let tenants: Vec<Tenant> = (1..=cfg.control("nTenants"))
        .map(|i| {
            let region = pick(&mut rng, &m.regions).expect("regions listed").clone();
            let k = m.departments_per_tenant.draw(&mut rng);
            let mut departments: Vec<String> =
                pick_distinct(&mut rng, &m.departments, k).into_iter().cloned().collect();
            departments.sort();
            Tenant {
                id: format!("tenant{i}"),
                region,
                departments,
                size: m.tenant_size.draw(&mut rng) as u64,
            }
        })
        .collect();
    let sizes: Vec<u64> = tenants.iter().map(|t| t.size).collect();
    let draw_tenant = |rng: &mut SplitMix64| -> Option<usize> {
        (!tenants.is_empty()).then(|| rng.weighted(&sizes))
    };

    let mut users = Vec::new();
    let mut employees = Vec::new();
    for i in 1..=cfg.control("nEmployees") {
        let id = format!("emp{i}");
        let position = m.position.draw(&mut rng).to_string();
        let mut e = Entity::user(&id)
            .with("role", atom("employee"))
            .with("uid", atom(&id))
            .with("position", atom(&position));
        if let Some(ti) = draw_tenant(&mut rng) {
            let t = &tenants[ti];
            let department = pick(&mut rng, &t.departments).expect("tenant departments").clone();
            e = e
                .with("tenant", atom(&t.id))
                .with("region", atom(&t.region))
                .with("department", atom(&department));
            if position == "manager" {
                let others: Vec<&String> =
                    t.departments.iter().filter(|d| **d != department).collect();
                let k = m.extra_managed_departments.draw(&mut rng);
                let mut managed: Vec<String> = pick_distinct(&mut rng, &others, k)
                    .into_iter()
                    .map(|d| (*d).clone())
                    .collect();
                managed.push(department.clone());
                e = e.with("managedDepartments", set_of(managed));
            }
            employees.push(Employee { id, tenant: ti, department });
        }
        users.push(e);
    }

    let mut customers = Vec::new();
    let tenant_idx: Vec<usize> = (0..tenants.len()).collect();
    for i in 1..=cfg.control("nCustomers") {
        let id = format!("cust{i}");
        let segment = m.segment.draw(&mut rng).to_string();
        let k = m.tenants_per_customer.draw(&mut rng);
        let mut of: Vec<usize> = pick_distinct(&mut rng, &tenant_idx, k).into_iter().copied().collect();
        of.sort();
        let region = pick(&mut rng, &m.regions).expect("regions listed");
        users.push(
            Entity::user(&id)
                .with("role", atom("customer"))
                .with("uid", atom(&id))
                .with("segment", atom(&segment))
                .with("region", atom(region))
                .with("channels", set_of(m.channels.draw_set(&mut rng)))
                .with("customerOf", set_of(of.iter().map(|&t| tenants[t].id.clone()))),
        );
        customers.push(Customer { id, tenants: of, segment });
    }

    for i in 1..=cfg.control("nAdmins") {
        let id = format!("admin{i}");
        let scope = m.admin_scope.draw(&mut rng).to_string();
        let mut e = Entity::user(&id)
            .with("role", atom("admin"))
            .with("uid", atom(&id))
            .with("adminScope", atom(&scope));
        match (scope.as_str(), draw_tenant(&mut rng)) {
            ("tenant", Some(ti)) => {
                e = e
                    .with("tenant", atom(&tenants[ti].id))
                    .with("region", atom(&tenants[ti].region));
            }
            _ => {
                e = e.with("region", atom(pick(&mut rng, &m.regions).expect("regions listed")));
            }
        }
        users.push(e);
    }

    let mut resources = Vec::new();
    let kinds = [
        ("invoice", "inv", cfg.control("nInvoices")),
        ("bankingNote", "note", cfg.control("nBankingNotes")),
    ];
    for (kind, prefix, n) in kinds {
        for i in 1..=n {
            let mut e = document(&mut rng, &m, kind, &format!("{prefix}{i}"));
            if let Some(ti) = draw_tenant(&mut rng) {
                let t = &tenants[ti];
                e = e
                    .with("tenant", atom(&t.id))
                    .with("region", atom(&t.region))
                    .with("department", atom(pick(&mut rng, &t.departments).expect("tenant departments")));
                let mine: Vec<&Customer> =
                    customers.iter().filter(|c| c.tenants.contains(&ti)).collect();
                if let Some(c) = pick(&mut rng, &mine) {
                    e = e
                        .with("recipient", atom(&c.id))
                        .with("segment", atom(&c.segment));
                }
            }
            resources.push(e);
        }
    }

    for i in 1..=cfg.control("nPaychecks") {
        let mut e = document(&mut rng, &m, "paycheck", &format!("pay{i}"));
        let ti = draw_tenant(&mut rng);
        if let Some(ti) = ti {
            let t = &tenants[ti];
            e = e.with("tenant", atom(&t.id)).with("region", atom(&t.region));
            let staff: Vec<&Employee> = employees.iter().filter(|x| x.tenant == ti).collect();
            match pick(&mut rng, &staff) {
                Some(x) => {
                    e = e
                        .with("recipient", atom(&x.id))
                        .with("department", atom(&x.department));
                }
                None => {
                    e = e.with("department", atom(pick(&mut rng, &t.departments).expect("tenant departments")));
                }
            }
        }
        resources.push(e);
    }

    assemble("e-document", users, resources, RULES)
}

fn document(rng: &mut SplitMix64, m: &Model, kind: &str, id: &str) -> Entity {
    Entity::resource(id)
        .with("type", atom(kind))
        .with("status", atom(m.document_status.draw(rng)))
        .with("confidentiality", atom(m.confidentiality.draw(rng)))
        .with("delivery", set_of(m.delivery.draw_set(rng)))
}
