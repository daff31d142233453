//! `abaclab`: policy statistics, evaluation, analytics, log and dataset
//! generation, conversion and the HTTP service from the command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for bad input or
//! data.

mod render;

use std::fmt;
use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use abaclab::analytics::{attribute_usage, external_rule_coverage, resource_access, rule_coverage, statistics};
use abaclab::batch::{check_requests, check_rows_to_csv, parse_requests};
use abaclab::datasets::{bundled_source, load_dir, GenConfig, Generator};
use abaclab::exchange::{export_canonical, import_canonical, to_csv};
use abaclab::loggen::{generate_logs, logs_to_csv, LogConfig};
use abaclab::policy::validate_policy;
use abaclab::{evaluate, parse_policy, query, serialize_policy, Policy};
use abaclab_service::{PolicyStore, ServiceConfig};

use render::{rule_list, table};

const DATA_ENV: &str = "ABACLAB_DATA";

#[derive(Debug, Parser)]
#[command(name = "abaclab", version, about = "ABAC policy workbench")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConvertTo {
    Csv,
    Canonical,
    Abac,
}

/// A policy file path, or the name of a bundled dataset.
type PolicyArg = String;

#[derive(Debug, Subcommand)]
enum Command {
    /// Entity, attribute, rule and permission counts.
    Stats { file: PolicyArg },
    /// Decide one request, or list the permissions matching the filters.
    Eval {
        file: PolicyArg,
        #[arg(long)]
        user: Option<String>,
        #[arg(long = "res")]
        resource: Option<String>,
        #[arg(long = "act")]
        action: Option<String>,
        /// Print at most this many permissions.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Check a CSV file of `user,resource,action` requests (`*` matches all).
    Check {
        file: PolicyArg,
        requests: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Permissions granted by each rule.
    Coverage {
        file: PolicyArg,
        /// Evaluate these rules against the policy's entities instead.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Also list the granted permissions.
        #[arg(long)]
        list: bool,
    },
    /// Rule by attribute usage matrix weighted by granted permissions.
    Heatmap { file: PolicyArg },
    /// Most and least accessible resources by distinct users.
    ResourceAccess { file: PolicyArg },
    /// Policy warnings: undeclared or missing attributes, dead rules.
    Validate { file: PolicyArg },
    /// Synthetic access log with a target permit ratio and noise.
    Loggen {
        file: PolicyArg,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long)]
        permit_ratio: f64,
        /// Fraction of permitted entries that the policy actually denies.
        #[arg(long, default_value_t = 0.0)]
        over: f64,
        /// Fraction of denied entries that the policy actually permits.
        #[arg(long, default_value_t = 0.0)]
        under: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample without replacement.
        #[arg(long)]
        unique: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Add a ground_truth column.
        #[arg(long)]
        emit_truth: bool,
    },
    /// Export to CSV tables, canonical JSON or `.abac`.
    Convert {
        file: PolicyArg,
        #[arg(long, value_enum)]
        to: ConvertTo,
        /// Output directory for csv, file otherwise.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a workforce or e-document policy.
    Gen {
        /// workforce or edocument
        generator: String,
        /// TOML file with `seed` and size controls.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the default configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Directory of `.abac` files to load; uploads are saved there.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Request body limit in bytes.
        #[arg(long, default_value_t = 16 * 1024 * 1024)]
        max_upload: usize,
        /// Allowed CORS origin (default: any).
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn data(e: impl fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("abaclab: {f}");
            ExitCode::from(match f {
                Failure::Usage(_) => 1,
                Failure::Data(_) => 2,
            })
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "policy".into())
}

fn load_path(path: &Path) -> Result<Policy> {
    if path.extension().is_some_and(|x| x == "json") {
        let bytes = std::fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        return import_canonical(&bytes).map_err(|e| data(format!("{}: {e}", path.display())));
    }
    let text = read_file(path)?;
    parse_policy(&text, &stem(path)).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// A path, else `$ABACLAB_DATA/<name>.abac`, else a bundled dataset.
fn load_policy(arg: &str) -> Result<Policy> {
    let path = Path::new(arg);
    if path.exists() {
        return load_path(path);
    }
    if let Some(dir) = std::env::var_os(DATA_ENV) {
        let candidate = Path::new(&dir).join(format!("{arg}.abac"));
        if candidate.exists() {
            return load_path(&candidate);
        }
    }
    if let Some(text) = bundled_source(arg) {
        return parse_policy(text, arg).map_err(data);
    }
    Err(data(format!("{arg}: no such file or bundled dataset")))
}

/// Writes via a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: &dyn fmt::Display| data(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn emit(output: Option<&Path>, contents: &str) -> Result<()> {
    match output {
        Some(p) => write_atomic(p, contents.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(data)
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn csv_line(out: &mut String, cells: &[&str]) {
    let quoted: Vec<String> = cells
        .iter()
        .map(|c| {
            if c.contains([',', '"', '\r', '\n', '{', '}']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.to_string()
            }
        })
        .collect();
    out.push_str(&quoted.join(","));
    out.push_str("\r\n");
}

#[derive(Serialize)]
struct PermissionList {
    total: usize,
    truncated: bool,
    permissions: Vec<abaclab::Permission>,
}

fn run(cli: Cli) -> Result<()> {
    let format = cli.format;
    match cli.command {
        Command::Stats { file } => {
            let s = statistics(&load_policy(&file)?);
            let text = match format {
                Format::Json => json(&s),
                Format::Csv => {
                    let mut out = String::new();
                    csv_line(&mut out, &["sub", "res", "uAttr", "rAttr", "rule", "perm"]);
                    let (a, b, c, d, e, f) = s.as_tuple();
                    let cells = [a, b, c, d, e, f].map(|n| n.to_string());
                    csv_line(&mut out, &cells.each_ref().map(String::as_str));
                    out
                }
                Format::Table => table(
                    &["metric", "count"],
                    &[
                        vec!["users".to_string(), s.n_sub.to_string()],
                        vec!["resources".to_string(), s.n_res.to_string()],
                        vec!["user attributes".to_string(), s.n_uattr.to_string()],
                        vec!["resource attributes".to_string(), s.n_rattr.to_string()],
                        vec!["rules".to_string(), s.n_rule.to_string()],
                        vec!["permissions".to_string(), s.n_perm.to_string()],
                    ],
                ),
            };
            emit(None, &text)
        }
        Command::Eval { file, user, resource, action, limit } => {
            let p = load_policy(&file)?;
            if let (Some(u), Some(r), Some(a)) = (&user, &resource, &action) {
                let d = evaluate(&p, u, r, a).map_err(data)?;
                let text = match format {
                    Format::Json => json(&d),
                    Format::Csv => {
                        let mut out = String::new();
                        csv_line(&mut out, &["user", "resource", "action", "decision", "matching_rules"]);
                        let decision = if d.permitted { "permit" } else { "deny" };
                        csv_line(&mut out, &[u, r, a, decision, &rule_list(&d.matching_rules)]);
                        out
                    }
                    Format::Table => {
                        let mut s = if d.permitted {
                            format!("permit (rules {})\n", rule_list(&d.matching_rules).replace('|', ", "))
                        } else {
                            "deny\n".to_string()
                        };
                        if let Some(diag) = &d.diagnostic {
                            s.push_str(&format!("note: {diag}\n"));
                        }
                        s
                    }
                };
                return emit(None, &text);
            }
            let mut perms = query(&p, user.as_deref(), resource.as_deref(), action.as_deref()).map_err(data)?;
            let total = perms.len();
            if let Some(l) = limit {
                perms.truncate(l);
            }
            let text = match format {
                Format::Json => json(&PermissionList {
                    total,
                    truncated: total > perms.len(),
                    permissions: perms,
                }),
                Format::Csv => {
                    let mut out = String::new();
                    csv_line(&mut out, &["user", "resource", "action"]);
                    for x in &perms {
                        csv_line(&mut out, &[&x.user, &x.resource, &x.action]);
                    }
                    out
                }
                Format::Table => {
                    let rows: Vec<Vec<&str>> = perms
                        .iter()
                        .map(|x| vec![x.user.as_str(), x.resource.as_str(), x.action.as_str()])
                        .collect();
                    let mut s = table(&["user", "resource", "action"], &rows);
                    s.push_str(&format!("{} of {total} permissions\n", perms.len()));
                    s
                }
            };
            emit(None, &text)
        }
        Command::Check { file, requests, output } => {
            let p = load_policy(&file)?;
            let reqs = parse_requests(&read_file(&requests)?)
                .map_err(|e| data(format!("{}: {e}", requests.display())))?;
            let rows = check_requests(&p, &reqs);
            let text = match format {
                Format::Json => json(&rows),
                Format::Csv => check_rows_to_csv(&rows),
                Format::Table if output.is_some() => check_rows_to_csv(&rows),
                Format::Table => {
                    let cells: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.user.clone(),
                                r.resource.clone(),
                                r.action.clone(),
                                r.decision.as_str().to_string(),
                                rule_list(&r.matching_rules),
                                r.diagnostic.clone().unwrap_or_default(),
                            ]
                        })
                        .collect();
                    table(&["user", "resource", "action", "decision", "rules", "note"], &cells)
                }
            };
            emit(output.as_deref(), &text)
        }
        Command::Coverage { file, rules, list } => {
            let p = load_policy(&file)?;
            let cov = match &rules {
                Some(path) => external_rule_coverage(&p, &read_file(path)?)
                    .map_err(|e| data(format!("{}: {e}", path.display())))?,
                None => rule_coverage(&p),
            };
            let text = match format {
                Format::Json => json(&cov),
                Format::Csv => {
                    let mut out = String::new();
                    if list {
                        csv_line(&mut out, &["rule", "user", "resource", "action"]);
                        for c in &cov {
                            let idx = c.rule_index.to_string();
                            for g in &c.granted {
                                csv_line(&mut out, &[&idx, &g.user, &g.resource, &g.action]);
                            }
                        }
                    } else {
                        csv_line(&mut out, &["rule", "granted"]);
                        for c in &cov {
                            csv_line(&mut out, &[&c.rule_index.to_string(), &c.granted_count.to_string()]);
                        }
                    }
                    out
                }
                Format::Table => {
                    let rows: Vec<Vec<String>> = cov
                        .iter()
                        .map(|c| vec![c.rule_index.to_string(), c.granted_count.to_string()])
                        .collect();
                    let mut s = table(&["rule", "granted"], &rows);
                    if list {
                        for c in &cov {
                            s.push_str(&format!("\nrule {}:\n", c.rule_index));
                            for g in &c.granted {
                                s.push_str(&format!("  {g}\n"));
                            }
                        }
                    }
                    s
                }
            };
            emit(None, &text)
        }
        Command::Heatmap { file } => {
            let m = attribute_usage(&load_policy(&file)?);
            let labels: Vec<String> = m.cols.iter().map(|c| c.label()).collect();
            let mut headers = vec!["rule"];
            headers.extend(labels.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = m
                .rows
                .iter()
                .zip(&m.cells)
                .map(|(r, cells)| {
                    std::iter::once(r.to_string())
                        .chain(cells.iter().map(usize::to_string))
                        .collect()
                })
                .collect();
            let text = match format {
                Format::Json => json(&m),
                Format::Csv => {
                    let mut out = String::new();
                    csv_line(&mut out, &headers);
                    for row in &rows {
                        csv_line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
                    }
                    out
                }
                Format::Table => table(&headers, &rows),
            };
            emit(None, &text)
        }
        Command::ResourceAccess { file } => {
            let ra = resource_access(&load_policy(&file)?);
            let text = match format {
                Format::Json => json(&ra),
                Format::Csv => {
                    let mut out = String::new();
                    csv_line(&mut out, &["list", "resource", "distinct_users"]);
                    for (name, list) in [("top", &ra.top), ("bottom", &ra.bottom)] {
                        for x in list {
                            csv_line(&mut out, &[name, &x.resource_id, &x.distinct_users.to_string()]);
                        }
                    }
                    out
                }
                Format::Table => {
                    let mut s = String::new();
                    for (name, list) in [("most accessible", &ra.top), ("least accessible", &ra.bottom)] {
                        let rows: Vec<Vec<String>> = list
                            .iter()
                            .map(|x| vec![x.resource_id.clone(), x.distinct_users.to_string()])
                            .collect();
                        s.push_str(&format!("{name}\n"));
                        s.push_str(&table(&["resource", "users"], &rows));
                        s.push('\n');
                    }
                    s.pop();
                    s
                }
            };
            emit(None, &text)
        }
        Command::Validate { file } => {
            let diags = validate_policy(&load_policy(&file)?, true);
            let text = match format {
                Format::Json => json(&diags),
                Format::Csv => {
                    let mut out = String::new();
                    csv_line(&mut out, &["kind", "rule", "message"]);
                    for d in &diags {
                        let kind = serde_json::to_value(d.kind).expect("serializable");
                        let rule = d.rule.map(|r| r.to_string()).unwrap_or_default();
                        csv_line(&mut out, &[kind.as_str().unwrap_or(""), &rule, &d.message]);
                    }
                    out
                }
                Format::Table => {
                    let mut s: String = diags.iter().map(|d| format!("{d}\n")).collect();
                    if diags.is_empty() {
                        s.push_str("no warnings\n");
                    }
                    s
                }
            };
            emit(None, &text)
        }
        Command::Loggen {
            file,
            n,
            permit_ratio,
            over,
            under,
            seed,
            unique,
            output,
            emit_truth,
        } => {
            let p = load_policy(&file)?;
            let cfg = LogConfig::new(n, permit_ratio).noise(over, under).seed(seed).unique(unique);
            cfg.validate().map_err(usage)?;
            let entries = generate_logs(&p, &cfg).map_err(data)?;
            let text = match format {
                Format::Json => json(&entries),
                Format::Csv | Format::Table => logs_to_csv(&entries, emit_truth),
            };
            emit(output.as_deref(), &text)
        }
        Command::Convert { file, to, output } => {
            let p = load_policy(&file)?;
            match to {
                ConvertTo::Canonical => write_atomic(&output, &export_canonical(&p)),
                ConvertTo::Abac => write_atomic(&output, serialize_policy(&p).as_bytes()),
                ConvertTo::Csv => {
                    std::fs::create_dir_all(&output)
                        .map_err(|e| data(format!("{}: {e}", output.display())))?;
                    let out = to_csv(&p);
                    write_atomic(&output.join("users.csv"), out.users.as_bytes())?;
                    write_atomic(&output.join("resources.csv"), out.resources.as_bytes())?;
                    write_atomic(&output.join("rules.abac"), out.rules.as_bytes())
                }
            }
        }
        Command::Gen {
            generator,
            config,
            seed,
            output,
            print_config,
        } => {
            let g: Generator = generator.parse().map_err(usage)?;
            let mut cfg: GenConfig = g.default_config();
            if print_config {
                return emit(None, &cfg.to_config_string());
            }
            if let Some(path) = &config {
                cfg.apply_str(&read_file(path)?)
                    .map_err(|e| data(format!("{}: {e}", path.display())))?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let p = g.generate(&cfg);
            let s = statistics(&p);
            eprintln!(
                "{g}: {} users, {} resources, {} rules, {} permissions",
                s.n_sub, s.n_res, s.n_rule, s.n_perm
            );
            emit(output.as_deref(), &serialize_policy(&p))
        }
        Command::Serve {
            port,
            bind,
            data: dir,
            max_upload,
            cors_origin,
        } => {
            let mut store = PolicyStore::with_bundled();
            if let Some(env_dir) = std::env::var_os(DATA_ENV) {
                for (name, p) in load_dir(Path::new(&env_dir)).map_err(data)? {
                    store.insert_bundled(&abaclab_service::slug(&name), p);
                }
            }
            if let Some(dir) = &dir {
                store = store.persist_to(dir).map_err(data)?;
            }
            let config = ServiceConfig {
                max_upload_bytes: max_upload,
                cors_origin,
                ..ServiceConfig::default()
            };
            let rt = tokio::runtime::Runtime::new().map_err(data)?;
            rt.block_on(abaclab_service::serve(
                SocketAddr::new(bind, port),
                Arc::new(store),
                config,
            ))
            .map_err(data)
        }
    }
}
