//! `lll`: command-line access to the lll-core operations. Results are JSON on stdout.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lll_core::events::{self, CuttingPlan, DiscreteEventSystem};
use lll_core::gap::{self, GenericVariant, Q1Rule};
use lll_core::graph::{self, apply_reduction, gap_decision, reduce_to_core, Reduction};
use lll_core::qlll::{self, RankMode, SubspaceInstance};
use lll_core::rational::{fmt_decimal, fmt_exact, parse_rational, parse_rational_list};
use lll_core::shearer;
use lll_core::tree::{self, Root};
use lll_core::{DependencyGraph, InteractionGraph, LllError, Rational, Result};

#[derive(Parser)]
#[command(name = "lll", version, about = "Exact Lovász Local Lemma workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Span,
    Boundary,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyMode {
    Auto,
    Exact,
    Modular,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransferKind {
    Bound,
    Element,
    Path,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    /// P^{l+3} / (25 (1-P)^l (Δ-1)^l)
    #[value(alias = "theorem18")]
    DegreeBound,
    /// P² (P/(1-P))^{⌊(l-1)/2⌋} / 50
    #[value(alias = "corollary19")]
    DegreeFree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Q1 {
    /// p³/2
    Half,
    /// p³
    Cube,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Independence polynomial I(G, r), optionally restricted to a subset of vertices.
    Indpoly {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        r: String,
        /// Comma-separated 1-based vertices.
        #[arg(long)]
        subset: Option<String>,
    },
    /// Membership in Shearer's bound with a minimal witness.
    Shearer {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        r: String,
    },
    /// Symmetric threshold: largest p with (p,…,p) in the closed bound.
    Threshold {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "1e-12")]
        tol: String,
    },
    /// Scale λ putting λ·r on the boundary.
    Scale {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        r: String,
        #[arg(long, default_value = "1e-12")]
        tol: String,
    },
    /// Rational tree recursion; exits 1 when the vector is not inside the bound.
    TreeBound {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        r: String,
    },
    /// Integer tree recursion with the qudit dimensions of the tree file.
    TreeDim {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        r: String,
    },
    /// Threshold of the (t, k)-regular tree, optionally with a truncated tree.
    RegularTree {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Explicit subspace instance attaining Shearer's bound.
    Construct {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        r: String,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = qlll::DEFAULT_MAX_TOTAL_DIM)]
        max_total_dim: u64,
    },
    /// Rank of the span of an instance's Hamiltonians.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        mode: VerifyMode,
    },
    /// Block-diagonal padding of qudit dimensions.
    Pad {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        dims: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = qlll::DEFAULT_MAX_TOTAL_DIM)]
        max_total_dim: u64,
    },
    /// τ(d, l, p, q).
    Tau {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Probability transfer: layered bound, single edge, or along a shortest path.
    Transfer {
        #[arg(long, value_enum)]
        kind: TransferKind,
        /// Symmetric p for `bound`; probability vector otherwise.
        #[arg(long)]
        p: String,
        #[arg(long)]
        q1: Option<String>,
        #[arg(long)]
        layers: Option<String>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        q: Option<String>,
    },
    /// Closed-form gap lower bounds for maximum degree Δ.
    GapFormula {
        #[arg(long, value_enum)]
        variant: Variant,
        #[arg(long, default_value_t = 2)]
        delta: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        p: String,
    },
    /// Gap lower bounds for four lattices.
    LatticeTable {
        #[arg(long, value_enum, default_value = "half")]
        q1_rule: Q1,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Applies one reduction rule, or all gap-preserving reductions with --core.
    Reduce {
        #[arg(long)]
        graph: PathBuf,
        /// Rule name, e.g. delete_r_leaf or inverse_delete_edge.
        #[arg(long, required_unless_present = "core")]
        op: Option<String>,
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        /// Comma-separated 1-based vertices (subset or neighbourhood).
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        core: bool,
    },
    /// Structural gap classification.
    GapDecision {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Extremal distribution of Shearer's bound and its event realisation.
    Extremal {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        p: String,
    },
    /// Standardness, lopsidependency and cutting checks on an event system.
    EventsCheck {
        #[arg(long)]
        system: PathBuf,
        /// Cuts as k:i pairs, comma-separated, 1-based.
        #[arg(long)]
        plan: Option<String>,
    },
}

/// Result of a command: JSON payload and whether the outcome is a domain failure.
struct Output {
    value: Value,
    failed: bool,
}

impl From<Value> for Output {
    fn from(value: Value) -> Self {
        Output { value, failed: false }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| LllError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| LllError::Parse(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("serialisable");
    std::fs::write(path, text + "\n").map_err(|e| LllError::Invalid(format!("{}: {e}", path.display())))
}

/// Interaction graph file (`{m, n, edges}`).
fn load_interaction(path: &Path) -> Result<InteractionGraph> {
    InteractionGraph::from_json(&read_json(path)?)
}

/// Dependency graph: the base graph of an interaction file, or `{m, edges}` over events.
fn load_dependency(path: &Path) -> Result<DependencyGraph> {
    let v = read_json(path)?;
    if v.get("n").is_some() {
        return InteractionGraph::from_json(&v)?.base_graph();
    }
    let m = v["m"].as_u64().ok_or_else(|| LllError::Parse("graph needs an integer m".into()))? as usize;
    let mut edges = Vec::new();
    for e in v["edges"].as_array().ok_or_else(|| LllError::Parse("graph needs an edges array".into()))? {
        let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(|| LllError::Parse("edges are pairs".into()))?;
        let a = pair[0].as_u64().filter(|&x| x > 0);
        let b = pair[1].as_u64().filter(|&x| x > 0);
        match (a, b) {
            (Some(a), Some(b)) => edges.push((a as usize - 1, b as usize - 1)),
            _ => return Err(LllError::Parse("edges are 1-indexed pairs".into())),
        }
    }
    DependencyGraph::new(m, &edges)
}

fn one_based(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v - 1),
            _ => Err(LllError::Parse(format!("expected a positive index, got {s:?}"))),
        })
        .collect()
}

fn index(v: Option<usize>, name: &str) -> Result<usize> {
    match v {
        Some(x) if x > 0 => Ok(x - 1),
        Some(_) => Err(LllError::Invalid(format!("--{name} is 1-based"))),
        None => Err(LllError::Invalid(format!("--{name} is required"))),
    }
}

fn need<'a>(v: &'a Option<String>, name: &str) -> Result<&'a str> {
    v.as_deref().ok_or_else(|| LllError::Invalid(format!("--{name} is required")))
}

fn exact(r: &Rational) -> Value {
    json!(fmt_exact(r))
}

fn exact_vec(v: &[Rational]) -> Value {
    json!(v.iter().map(fmt_exact).collect::<Vec<_>>())
}

fn with_decimal(key: &str, r: &Rational) -> Value {
    json!({ key: fmt_exact(r), format!("{key}_decimal"): fmt_decimal(r, 12) })
}

/// Tree file: `{"graph": {...}, "root": j, "root_left": i, "dims": {"j": d}}`, all 1-based.
fn load_tree(path: &Path) -> Result<(tree::RootedTree, Vec<u64>)> {
    let v = read_json(path)?;
    let g = InteractionGraph::from_json(v.get("graph").unwrap_or(&v))?;
    let root = match (v.get("root").and_then(Value::as_u64), v.get("root_left").and_then(Value::as_u64)) {
        (Some(j), None) if j > 0 => Some(Root::Right(j as usize - 1)),
        (None, Some(i)) if i > 0 => Some(Root::Left(i as usize - 1)),
        (None, None) => None,
        _ => return Err(LllError::Parse("give one of root (right vertex) or root_left, 1-based".into())),
    };
    let t = tree::rooted(&g, root)?;
    let mut dims = vec![1u64; t.graph().n()];
    if let Some(d) = v.get("dims") {
        let obj = d.as_object().ok_or_else(|| LllError::Parse("dims maps right vertices to dimensions".into()))?;
        for (k, val) in obj {
            let j: usize = k.parse().ok().filter(|&j: &usize| j > 0 && j <= g.n()).ok_or_else(|| LllError::Parse(format!("bad qudit {k:?}")))?;
            dims[j - 1] = val.as_u64().filter(|&x| x > 0).ok_or_else(|| LllError::Parse(format!("bad dimension for qudit {k}")))?;
        }
    }
    Ok((t, dims))
}

fn parse_reduction(op: &str, i: Option<usize>, j: Option<usize>, set: &Option<String>) -> Result<Reduction> {
    let set = || -> Result<Vec<usize>> { one_based(need(set, "set")?) };
    let attach = |v: Option<usize>| -> Result<Option<usize>> { v.map(|x| index(Some(x), "attach")).transpose() };
    Ok(match op {
        "delete_r_leaf" => Reduction::DeleteRLeaf { j: index(j, "j")? },
        "duplicate_l_vertex" => Reduction::DuplicateLVertex { i: index(i, "i")? },
        "duplicate_r_vertex" => Reduction::DuplicateRVertex { j: index(j, "j")?, subset: set()? },
        "delete_edge" => Reduction::DeleteEdge { i: index(i, "i")?, j: index(j, "j")? },
        "delete_l_vertex" => Reduction::DeleteLVertex { i: index(i, "i")? },
        "delete_l_leaf" => Reduction::DeleteLLeaf { i: index(i, "i")? },
        "inverse_delete_r_leaf" => Reduction::InsertRLeaf { attach: attach(i)? },
        "inverse_duplicate_l_vertex" => Reduction::RemoveLDuplicate { i: index(i, "i")? },
        "inverse_duplicate_r_vertex" => Reduction::RemoveRDuplicate { j: index(j, "j")? },
        "inverse_delete_edge" => Reduction::AddEdge { i: index(i, "i")?, j: index(j, "j")? },
        "inverse_delete_l_vertex" => Reduction::InsertLVertex { neighbors: set()? },
        "inverse_delete_l_leaf" => Reduction::InsertLLeaf { attach: attach(j)? },
        other => return Err(LllError::Invalid(format!("unknown reduction {other:?}"))),
    })
}

fn relabel_json(r: &graph::Relabel) -> Value {
    let map = |v: &[Option<usize>]| v.iter().map(|x| x.map(|y| y + 1)).collect::<Vec<_>>();
    json!({"left": map(&r.left), "right": map(&r.right)})
}

fn parse_plan(s: &str) -> Result<CuttingPlan> {
    let mut cuts = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, i) = part.split_once(':').ok_or_else(|| LllError::Parse(format!("cut {part:?} is not k:i")))?;
        let idx = one_based(&format!("{k},{i}"))?;
        cuts.push((idx[0], idx[1]));
    }
    Ok(CuttingPlan { cuts })
}

fn run(cmd: Command) -> Result<Output> {
    match cmd {
        Command::Indpoly { graph, r, subset } => {
            let g = load_dependency(&graph)?;
            let r = parse_rational_list(&r)?;
            let subset = subset.as_deref().map(one_based).transpose()?;
            Ok(exact(&shearer::ind_poly(&g, &r, subset.as_deref())?).into())
        }
        Command::Shearer { graph, r } => {
            let g = load_dependency(&graph)?;
            Ok(shearer::shearer_check(&g, &parse_rational_list(&r)?)?.to_json().into())
        }
        Command::Threshold { graph, tol } => {
            let g = load_dependency(&graph)?;
            Ok(with_decimal("threshold", &shearer::symmetric_threshold(&g, &parse_rational(&tol)?)?).into())
        }
        Command::Scale { graph, r, tol } => {
            let g = load_dependency(&graph)?;
            let lambda = shearer::boundary_scale(&g, &parse_rational_list(&r)?, &parse_rational(&tol)?)?;
            Ok(with_decimal("scale", &lambda).into())
        }
        Command::TreeBound { tree, r } => {
            let (t, _) = load_tree(&tree)?;
            let sol = tree::tree_fixed_point(&t, &parse_rational_list(&r)?)?;
            Ok(Output { failed: !sol.feasible, value: sol.to_json() })
        }
        Command::TreeDim { tree, r } => {
            let (t, dims) = load_tree(&tree)?;
            let sol = tree::tree_dim_recursion(&t, &parse_rational_list(&r)?, &dims)?;
            Ok(Output { failed: !sol.feasible, value: sol.to_json() })
        }
        Command::RegularTree { t, k, depth } => {
            let th = tree::regular_tree_threshold(t, k)?;
            let mut v = with_decimal("threshold", &th);
            if let Some(depth) = depth {
                v["graph"] = tree::regular_tree(t as usize, k as usize, depth)?.to_json();
            }
            Ok(v.into())
        }
        Command::Construct { graph, r, mode, seed, out, max_total_dim } => {
            let g = load_interaction(&graph)?;
            let r = parse_rational_list(&r)?;
            let c = match mode {
                Mode::Span => qlll::construct_spanning_instance(&g, &r, seed, max_total_dim)?,
                Mode::Boundary => qlll::construct_boundary_instance(&g, &r, seed, max_total_dim)?,
            };
            let mut v = json!({"dims": c.instance.dims, "seed": c.instance.seed, "report": c.report.to_json()});
            match out {
                Some(path) => {
                    write_json(&path, &c.instance.to_json())?;
                    v["instance_file"] = json!(path.display().to_string());
                }
                None => v["instance"] = c.instance.to_json(),
            }
            Ok(v.into())
        }
        Command::Verify { instance, mode } => {
            let inst = SubspaceInstance::from_json(&read_json(&instance)?)?;
            let mode = match mode {
                VerifyMode::Auto => RankMode::Auto,
                VerifyMode::Exact => RankMode::Exact,
                VerifyMode::Modular => RankMode::Modular,
            };
            let mut v = qlll::verify_span(&inst, mode)?.to_json();
            v["relative_dims"] = exact_vec(&inst.relative_dims());
            Ok(v.into())
        }
        Command::Pad { instance, dims, out, max_total_dim } => {
            let inst = SubspaceInstance::from_json(&read_json(&instance)?)?;
            let dims: Vec<u64> = dims
                .split(',')
                .map(|s| s.trim().parse::<u64>().map_err(|_| LllError::Parse(format!("bad dimension {s:?}"))))
                .collect::<Result<_>>()?;
            let padded = qlll::pad_dims(&inst, &dims, max_total_dim)?;
            match out {
                Some(path) => {
                    write_json(&path, &padded.to_json())?;
                    Ok(json!({"dims": padded.dims, "instance_file": path.display().to_string()}).into())
                }
                None => Ok(padded.to_json().into()),
            }
        }
        Command::Tau { d, l, p, q } => Ok(exact(&gap::tau(d, l, &parse_rational(&p)?, &parse_rational(&q)?)?).into()),
        Command::Transfer { kind, p, q1, layers, graph, i, j, q } => match kind {
            TransferKind::Bound => {
                let p = parse_rational(&p)?;
                let q1 = parse_rational(need(&q1, "q1")?)?;
                let layers: Vec<usize> = need(&layers, "layers")?
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse::<usize>().map_err(|_| LllError::Parse(format!("bad layer size {s:?}"))))
                    .collect::<Result<_>>()?;
                Ok(exact(&gap::transfer_bound(&p, &q1, &layers)?).into())
            }
            TransferKind::Element | TransferKind::Path => {
                let path = graph.ok_or_else(|| LllError::Invalid("--graph is required".into()))?;
                let g = load_dependency(&path)?;
                let p = parse_rational_list(&p)?;
                let (i, j) = (index(i, "i")?, index(j, "j")?);
                let q = parse_rational(need(&q, "q")?)?;
                let out = if matches!(kind, TransferKind::Element) {
                    gap::element_transfer(&g, &p, i, j, &q)?
                } else {
                    gap::path_transfer(&g, &p, i, j, &q)?
                };
                let mut v = json!({"p_prime": exact_vec(&out)});
                if g.m() <= shearer::enumeration_cap() {
                    v["beyond_before"] = json!(!shearer::in_bound(&g, &p)?);
                    v["beyond_after"] = json!(!shearer::in_bound(&g, &out)?);
                }
                Ok(v.into())
            }
        },
        Command::GapFormula { variant, delta, l, p } => {
            let variant = match variant {
                Variant::DegreeBound => GenericVariant::DegreeBound,
                Variant::DegreeFree => GenericVariant::DegreeFree,
            };
            Ok(exact(&gap::generic_gap_bound(delta, l, &parse_rational(&p)?, variant)?).into())
        }
        Command::LatticeTable { q1_rule, format } => {
            let rule = match q1_rule {
                Q1::Half => Q1Rule::HalfPCubed,
                Q1::Cube => Q1Rule::PCubed,
            };
            let rows = gap::lattice_gap_table(rule);
            match format {
                Format::Json => Ok(json!(rows.iter().map(|r| r.to_json()).collect::<Vec<_>>()).into()),
                Format::Text => {
                    let mut text = format!("{:<14}{:<16}{:<18}{}\n", "lattice", "P_A", "layers", "gap lower bound");
                    for r in &rows {
                        let layers: Vec<String> = r.layers.iter().map(|x| x.to_string()).collect();
                        text += &format!(
                            "{:<14}{:<16}{:<18}{}\n",
                            r.lattice,
                            fmt_decimal(&r.p_a, 11),
                            layers.join(","),
                            fmt_decimal(&r.lower_bound, 4)
                        );
                    }
                    Ok(Value::String(text).into())
                }
            }
        }
        Command::Reduce { graph, op, i, j, set, core } => {
            let g = load_interaction(&graph)?;
            if core {
                let (reduced, steps) = reduce_to_core(&g);
                let names: Vec<&str> = steps.iter().map(|s| s.name()).collect();
                return Ok(json!({"graph": reduced.to_json(), "steps": names}).into());
            }
            let op = parse_reduction(need(&op, "op")?, i, j, &set)?;
            let (reduced, relabel) = apply_reduction(&g, &op)?;
            Ok(json!({"graph": reduced.to_json(), "op": op.name(), "relabel": relabel_json(&relabel)}).into())
        }
        Command::GapDecision { graph } => {
            let d = gap_decision(&load_interaction(&graph)?)?;
            Ok(serde_json::to_value(d).expect("serialisable").into())
        }
        Command::Extremal { graph, p } => {
            let g = load_dependency(&graph)?;
            let p = parse_rational_list(&p)?;
            let dist = shearer::extremal_distribution(&g, &p)?;
            let sys = events::extremal_system(&g, &p)?;
            let masses: Vec<Value> = dist
                .iter()
                .map(|(s, m)| json!({"set": s.iter().map(|v| v + 1).collect::<Vec<_>>(), "mass": fmt_exact(m)}))
                .collect();
            let avoid = events::avoidance_probability(&sys);
            let value = shearer::ind_poly(&g, &p, None)?;
            Ok(json!({
                "masses": masses,
                "avoidance": fmt_exact(&avoid),
                "ind_poly": fmt_exact(&value),
                "realisation_matches": avoid == value,
            })
            .into())
        }
        Command::EventsCheck { system, plan } => {
            let sys = DiscreteEventSystem::from_json(&read_json(&system)?)?;
            let base = sys.interaction_graph()?.base_graph()?;
            let standard = events::check_standard(&sys);
            let mut v = json!({
                "events": sys.m(),
                "variables": sys.n(),
                "standard": standard.is_ok(),
                "standard_violation": standard.as_ref().err().map(|e| e.to_string()),
                "lopsidependency": events::lopsidependency_check(&sys, &base)?.to_json(),
            });
            let mut failed = false;
            if let Some(plan) = plan {
                let plan = parse_plan(&plan)?;
                let report = events::verify_cutting_properties(&sys, &plan)?;
                failed = !report.passed();
                v["cut_system"] = events::cut_events(&sys, &plan)?.to_json();
                v["cutting"] = report.to_json();
            }
            Ok(Output { value: v, failed })
        }
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            match &out.value {
                Value::String(s) if s.ends_with('\n') => emit(s),
                v => emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("serialisable"))),
            }
            ExitCode::from(if out.failed { 1 } else { 0 })
        }
        Err(e) => {
            let v = json!({"error": {"code": e.code(), "message": e.to_string()}});
            emit(&format!("{}\n", serde_json::to_string_pretty(&v).expect("serialisable")));
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
