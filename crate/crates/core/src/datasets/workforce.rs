//! Workforce management: managers, technicians and operators working on
//! work orders, tasks and stock refill requests.

use serde::Deserialize;

use super::model::{atom, pick, pick_distinct, set_of, Span, Weights};
use super::{assemble, GenConfig};
use crate::policy::{Entity, Policy};
use crate::rng::SplitMix64;

const MODEL: &str = include_str!("../../data/workforce.toml");
const RULES: &str = include_str!("../../data/workforce.rules");

pub const USER_CONTROLS: [&str; 3] = ["nManagers", "nTechnicians", "nOperators"];
pub const RESOURCE_CONTROLS: [&str; 3] = ["nWorkOrders", "nTasks", "nStockRequests"];

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Model {
    regions: Vec<String>,
    teams_per_region: usize,
    warehouses_per_region: usize,
    customers: usize,
    skills: Vec<String>,
    items: Vec<String>,
    skills_per_technician: Span,
    required_skills_per_task: Span,
    managed_teams_per_manager: Span,
    collaborators_per_work_order: Span,
    on_call_probability: f64,
    confidential_probability: f64,
    cert_level: Weights,
    shift: Weights,
    priority: Weights,
    work_order_status: Weights,
    task_status: Weights,
    stock_request_status: Weights,
}

pub fn default_config() -> GenConfig {
    super::defaults_from(MODEL)
}

fn model() -> Model {
    super::model_from(MODEL)
}

pub fn rules_text() -> &'static str {
    RULES
}

struct Tech {
    id: String,
    region: usize,
    team: String,
}

struct Manager {
    id: String,
    region: usize,
    teams: Vec<String>,
}

struct WorkOrder {
    id: String,
    region: usize,
    team: String,
    priority: String,
}

pub fn generate_workforce(cfg: &GenConfig) -> Policy {
    let m = model();
    let mut rng = SplitMix64::new(cfg.seed);
    let nregions = m.regions.len();
    let team = |r: usize, j: usize| format!("{}Team{}", m.regions[r], j + 1);
    let warehouse = |r: usize, j: usize| format!("{}Wh{}", m.regions[r], j + 1);

    let mut users = Vec::new();
    let mut managers = Vec::new();
    for i in 1..=cfg.control("nManagers") {
        let region = rng.index(nregions);
        let teams: Vec<usize> = (0..m.teams_per_region).collect();
        let k = m.managed_teams_per_manager.draw(&mut rng);
        let mut managed: Vec<String> = pick_distinct(&mut rng, &teams, k)
            .into_iter()
            .map(|&j| team(region, j))
            .collect();
        managed.sort();
        let id = format!("mgr{i}");
        users.push(
            Entity::user(&id)
                .with("role", atom("manager"))
                .with("uid", atom(&id))
                .with("region", atom(&m.regions[region]))
                .with("managedTeams", set_of(managed.iter().cloned()))
                .with("certLevel", atom(m.cert_level.draw(&mut rng))),
        );
        managers.push(Manager { id, region, teams: managed });
    }

    let mut techs = Vec::new();
    for i in 1..=cfg.control("nTechnicians") {
        let region = rng.index(nregions);
        let t = team(region, rng.index(m.teams_per_region));
        let k = m.skills_per_technician.draw(&mut rng);
        let skills = pick_distinct(&mut rng, &m.skills, k);
        let id = format!("tech{i}");
        users.push(
            Entity::user(&id)
                .with("role", atom("technician"))
                .with("uid", atom(&id))
                .with("region", atom(&m.regions[region]))
                .with("team", atom(&t))
                .with("skills", set_of(skills.into_iter().cloned()))
                .with("certLevel", atom(m.cert_level.draw(&mut rng)))
                .with("shift", atom(m.shift.draw(&mut rng)))
                .with("onCall", atom(bool_atom(rng.chance(m.on_call_probability)))),
        );
        techs.push(Tech { id, region, team: t });
    }

    let mut operators: Vec<(String, usize)> = Vec::new();
    for i in 1..=cfg.control("nOperators") {
        let region = rng.index(nregions);
        let id = format!("op{i}");
        users.push(
            Entity::user(&id)
                .with("role", atom("operator"))
                .with("uid", atom(&id))
                .with("region", atom(&m.regions[region]))
                .with("warehouse", atom(warehouse(region, rng.index(m.warehouses_per_region))))
                .with("certLevel", atom(m.cert_level.draw(&mut rng)))
                .with("shift", atom(m.shift.draw(&mut rng))),
        );
        operators.push((id, region));
    }

    let mut resources = Vec::new();
    let mut orders = Vec::new();
    let tech_ids: Vec<&str> = techs.iter().map(|t| t.id.as_str()).collect();
    for i in 1..=cfg.control("nWorkOrders") {
        let region = rng.index(nregions);
        let t = team(region, rng.index(m.teams_per_region));
        let priority = m.priority.draw(&mut rng).to_string();
        let id = format!("wo{i}");
        let mut e = Entity::resource(&id)
            .with("type", atom("workOrder"))
            .with("region", atom(&m.regions[region]))
            .with("team", atom(&t))
            .with("status", atom(m.work_order_status.draw(&mut rng)))
            .with("priority", atom(&priority))
            .with("customer", atom(format!("customer{}", rng.index(m.customers.max(1)) + 1)))
            .with(
                "confidential",
                atom(bool_atom(rng.chance(m.confidential_probability))),
            );
        let local: Vec<&(String, usize)> = operators.iter().filter(|o| o.1 == region).collect();
        let creator = pick(&mut rng, &local)
            .map(|o| o.0.clone())
            .or_else(|| pick(&mut rng, &operators).map(|o| o.0.clone()));
        if let Some(c) = creator {
            e = e.with("creator", atom(c));
        }
        let k = m.collaborators_per_work_order.draw(&mut rng);
        let collaborators = pick_distinct(&mut rng, &tech_ids, k);
        e = e.with("collaborators", set_of(collaborators.into_iter().copied()));
        resources.push(e);
        orders.push(WorkOrder { id, region, team: t, priority });
    }

    for i in 1..=cfg.control("nTasks") {
        let id = format!("task{i}");
        let mut e = Entity::resource(&id).with("type", atom("task"));
        let (region, t, priority) = match pick(&mut rng, &orders) {
            Some(wo) => {
                e = e.with("workOrder", atom(&wo.id));
                (wo.region, wo.team.clone(), wo.priority.clone())
            }
            None => {
                let region = rng.index(nregions);
                let t = team(region, rng.index(m.teams_per_region));
                (region, t, m.priority.draw(&mut rng).to_string())
            }
        };
        let k = m.required_skills_per_task.draw(&mut rng);
        let skills = pick_distinct(&mut rng, &m.skills, k);
        e = e
            .with("region", atom(&m.regions[region]))
            .with("team", atom(&t))
            .with("priority", atom(priority))
            .with("status", atom(m.task_status.draw(&mut rng)))
            .with("requiredSkills", set_of(skills.into_iter().cloned()))
            .with("shift", atom(m.shift.draw(&mut rng)));
        if let Some(a) = pick_local(&mut rng, &techs, |x| x.team == t, |x| x.region == region) {
            e = e.with("assignee", atom(&a.id));
        }
        resources.push(e);
    }

    for i in 1..=cfg.control("nStockRequests") {
        let id = format!("sr{i}");
        let region = rng.index(nregions);
        let mut e = Entity::resource(&id)
            .with("type", atom("stockRequest"))
            .with("region", atom(&m.regions[region]))
            .with("item", atom(pick(&mut rng, &m.items).expect("items listed")))
            .with(
                "warehouse",
                atom(warehouse(region, rng.index(m.warehouses_per_region))),
            )
            .with("status", atom(m.stock_request_status.draw(&mut rng)));
        let creator = pick_local(&mut rng, &techs, |x| x.region == region, |_| true);
        let t = match creator {
            Some(c) => {
                e = e.with("creator", atom(&c.id));
                c.team.clone()
            }
            None => team(region, rng.index(m.teams_per_region)),
        };
        e = e.with("team", atom(&t));
        let approver = pick_local(
            &mut rng,
            &managers,
            |x| x.teams.contains(&t),
            |x| x.region == region,
        );
        if let Some(a) = approver {
            e = e.with("approver", atom(&a.id));
        }
        resources.push(e);
    }

    assemble("workforce", users, resources, RULES)
}

fn bool_atom(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Picks from the entities matching `best`, then `fallback`, then from all.
fn pick_local<'a, T>(
    rng: &mut SplitMix64,
    pool: &'a [T],
    best: impl Fn(&T) -> bool,
    fallback: impl Fn(&T) -> bool,
) -> Option<&'a T> {
    let narrow: Vec<&T> = pool.iter().filter(|x| best(x)).collect();
    if let Some(x) = pick(rng, &narrow) {
        return Some(x);
    }
    let wide: Vec<&T> = pool.iter().filter(|x| fallback(x)).collect();
    if let Some(x) = pick(rng, &wide) {
        return Some(x);
    }
    pick(rng, pool)
}
