//! Command-line front end: analysis of single functions, exhaustive
//! inequality sweeps, optimal-tree search, critical-probability solving,
//! defect computation, and hybrid traces. Human tables by default,
//! machine JSON with `--json`.
//!
//! Exit codes: 0 all checks pass, 1 an inequality check failed, 2 usage
//! or parse error.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use treeinf::families::{build, FamilySpec};
use treeinf::measures::{influence_vector, variation};
use treeinf::model::{
    parse_function_with_cap, MetricKind, OutputSpace, PointIndex, ProductSpace,
    TabulatedFunction, DEFAULT_ENUMERATION_CAP,
};
use treeinf::optimal::{enumerate_all_ddts, optimal_depth, optimal_expected_cost};
use treeinf::thresholds::{
    critical_probability, is_monotone, lower_bound_pipeline, TransitivityEvidence,
    CRITICAL_DEFAULT_TOL,
};
use treeinf::tree::{parse_tree, DecisionTree, RandomizedTree};
use treeinf::value::Value;
use treeinf::verify::{
    check_efron_stein, check_main, check_os_inequality, check_real_corollary,
    check_semimetric, check_separated_equality, defect_with_cap, hybrid_trace, Defect,
    VerificationReport,
};

#[derive(Parser)]
#[command(
    name = "treeinf",
    about = "Exact influence, variation, and decision-tree cost analysis on finite product spaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Require rational-mode (exact) arithmetic end to end.
    #[arg(long, global = true)]
    exact: bool,
    /// Emit machine-readable JSON instead of human tables.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for sweeps (default: all cores). Results are
    /// byte-identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Enumeration cap on the number of points.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

#[derive(Args)]
struct FunctionSource {
    /// Path to a function file.
    #[arg(long, conflicts_with = "family")]
    function: Option<String>,
    /// Family descriptor, e.g. and:2, maj:3, tribes:2,2, fk:1,
    /// graph:connectivity,4, figure1.
    #[arg(long)]
    family: Option<String>,
    /// Bias for family cubes ("1/2", "0.3", ...). Defaults to 1/2.
    #[arg(long)]
    p: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Measures, tree cost metrics, and the applicable inequality checks
    /// for one function.
    Analyze {
        #[command(flatten)]
        source: FunctionSource,
        /// Tree file path, or "canonical" for the family's tree.
        #[arg(long)]
        tree: Option<String>,
        /// Reinterpret the outputs under a built-in distance.
        #[arg(long, value_parser = ["boolean", "discrete", "rho1", "rho2"])]
        metric: Option<String>,
        /// Also compute the optimal expected cost and depth.
        #[arg(long)]
        optimal: bool,
    },
    /// Exhaustive or sampled inequality sweeps over all boolean functions.
    Sweep {
        /// Number of variables (exhaustive for n <= 3, sampled for 4..5).
        #[arg(long)]
        n: usize,
        /// Bias (default 1/2).
        #[arg(long)]
        p: Option<String>,
        #[arg(long, value_parser = ["main", "efron-stein", "os", "two-function"])]
        inequality: String,
        /// Sample count, required for n in 4..5.
        #[arg(long)]
        sample: Option<u64>,
    },
    /// Minimum expected cost (and optionally depth) with a witness tree.
    Optimal {
        #[command(flatten)]
        source: FunctionSource,
        /// Also compute the minimum depth.
        #[arg(long)]
        depth: bool,
    },
    /// Critical probability of a monotone function, optionally with the
    /// full lower-bound pipeline.
    Critical {
        #[command(flatten)]
        source: FunctionSource,
        /// Residual tolerance.
        #[arg(long, default_value_t = CRITICAL_DEFAULT_TOL)]
        tol: f64,
        /// Run the transitive lower-bound pipeline as well.
        #[arg(long)]
        pipeline: bool,
    },
    /// k-defect of a distance table over the given labels.
    Defect {
        /// Comma-separated output labels, e.g. 0,1,2.
        #[arg(long)]
        outputs: String,
        /// Built-in distance over the labels.
        #[arg(long, value_parser = ["boolean", "discrete", "rho1", "rho2"])]
        metric: String,
        #[arg(long)]
        k: usize,
    },
    /// Hybrid decomposition of one input pair under a tree.
    Trace {
        #[command(flatten)]
        source: FunctionSource,
        #[arg(long)]
        tree: String,
        /// Point index of the first input.
        #[arg(long)]
        x: u64,
        /// Point index of the second input.
        #[arg(long)]
        y: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(all_hold) => {
            if all_hold {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, String> {
    match &cli.command {
        Command::Analyze {
            source,
            tree,
            metric,
            optimal,
        } => cmd_analyze(cli, source, tree.as_deref(), metric.as_deref(), *optimal),
        Command::Sweep {
            n,
            p,
            inequality,
            sample,
        } => cmd_sweep(cli, *n, p.as_deref(), inequality, *sample),
        Command::Optimal { source, depth } => cmd_optimal(cli, source, *depth),
        Command::Critical {
            source,
            tol,
            pipeline,
        } => cmd_critical(cli, source, *tol, *pipeline),
        Command::Defect { outputs, metric, k } => cmd_defect(cli, outputs, metric, *k),
        Command::Trace { source, tree, x, y } => cmd_trace(cli, source, tree, *x, *y),
    }
}

fn parse_bias(p: Option<&str>) -> Result<Value, String> {
    match p {
        None => Ok(Value::ratio(1, 2)),
        Some(s) => Value::parse(s).map_err(|e| e.to_string()),
    }
}

/// Loads the function and, when available, its canonical tree.
fn load_function(
    cli: &Cli,
    source: &FunctionSource,
) -> Result<(TabulatedFunction, Option<DecisionTree>, String), String> {
    let (f, canonical, name) = match (&source.function, &source.family) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {path}: {e}"))?;
            let f = parse_function_with_cap(&text, cli.cap).map_err(|e| e.to_string())?;
            (f, None, path.clone())
        }
        (None, Some(desc)) => {
            let spec = FamilySpec::parse(desc).map_err(|e| e.to_string())?;
            let p = parse_bias(source.p.as_deref())?;
            let (f, tree) = build(&spec, &p).map_err(|e| e.to_string())?;
            (f, tree, spec.descriptor())
        }
        _ => return Err("exactly one of --function or --family is required".into()),
    };
    if f.space().point_count() > cli.cap {
        return Err(format!(
            "function has {} points, above the cap {}",
            f.space().point_count(),
            cli.cap
        ));
    }
    if cli.exact && !f.is_exact() {
        return Err("--exact requested but the inputs are not all rational".into());
    }
    Ok((f, canonical, name))
}

fn resolve_tree(
    f: &TabulatedFunction,
    canonical: Option<DecisionTree>,
    arg: &str,
    family_name: &str,
) -> Result<DecisionTree, String> {
    if arg == "canonical" {
        return canonical
            .ok_or_else(|| format!("{family_name} does not define a canonical tree"));
    }
    let text =
        std::fs::read_to_string(arg).map_err(|e| format!("cannot read {arg}: {e}"))?;
    parse_tree(&text, f.space().clone(), f.outputs().clone()).map_err(|e| e.to_string())
}

/// Ten significant digits, annotated with the exact fraction when the
/// value is rational.
fn human_value(v: &Value) -> String {
    let x = v.to_f64();
    let decimal = if x == 0.0 {
        "0".to_string()
    } else if !x.is_finite() {
        format!("{x}")
    } else {
        let magnitude = x.abs().log10().floor() as i32;
        let decimals = (9 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    };
    match v {
        Value::Exact(_) if decimal.contains('.') => format!("{decimal} ({v})"),
        Value::Exact(_) => decimal,
        Value::Float(_) => decimal,
    }
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct InfluenceSummary {
    metric: String,
    values: Vec<Value>,
    total: Value,
    max: Value,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct TreeSummary {
    grammar: String,
    delta: Vec<Value>,
    expected_cost: Value,
    depth: usize,
    leaves: u64,
    read_once: bool,
    separated: bool,
    /// `sum_i delta_i(T) Inf_i(f)` under the active distance, before any
    /// defect correction.
    weighted_influence_sum: Value,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct OptimalSummary {
    expected_cost: Value,
    witness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth_witness: Option<String>,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct AnalysisReport {
    function: String,
    n: usize,
    point_count: u64,
    metric: String,
    metric_kind: String,
    mode: String,
    variation: Value,
    influences: InfluenceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    tree: Option<TreeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal: Option<OptimalSummary>,
    checks: Vec<VerificationReport>,
}

fn cmd_analyze(
    cli: &Cli,
    source: &FunctionSource,
    tree_arg: Option<&str>,
    metric: Option<&str>,
    want_optimal: bool,
) -> Result<bool, String> {
    let (mut f, mut canonical, name) = load_function(cli, source)?;
    if let Some(metric) = metric {
        let outputs = OutputSpace::builtin(metric, f.outputs().labels().to_vec())
            .map_err(|e| e.to_string())?;
        f = f.with_outputs(outputs.clone()).map_err(|e| e.to_string())?;
        // Rebind the canonical tree over the new output space.
        canonical = match canonical {
            Some(t) => Some(
                parse_tree(&t.to_grammar(), f.space().clone(), outputs)
                    .map_err(|e| e.to_string())?,
            ),
            None => None,
        };
    }
    let tree = match tree_arg {
        Some(arg) => Some(resolve_tree(&f, canonical, arg, &name)?),
        None => None,
    };

    let var = variation(&f);
    let inf = influence_vector(&f).map_err(|e| e.to_string())?;
    let mut checks = Vec::new();

    let tree_summary = match &tree {
        Some(t) => {
            if !t.computes(&f).map_err(|e| e.to_string())? {
                return Err("the tree does not compute the function".into());
            }
            let separated = t.is_separated();
            match f.outputs().kind() {
                MetricKind::Metric => {
                    checks.push(check_main(t, &f).map_err(|e| e.to_string())?);
                }
                MetricKind::Semimetric => {
                    let rt = RandomizedTree::single(t.clone());
                    checks.push(check_semimetric(&rt, &f, &f).map_err(|e| e.to_string())?);
                    if f.outputs().numeric().is_some() {
                        let rep = check_real_corollary(&rt, &f).map_err(|e| e.to_string())?;
                        checks.push(rep.bound);
                        checks.push(rep.influential_coordinate);
                    }
                }
            }
            if separated {
                checks.push(check_separated_equality(t, &f).map_err(|e| e.to_string())?);
            }
            let delta = t.delta();
            let weighted: Value = delta.iter().zip(inf.values()).map(|(d, i)| d * i).sum();
            Some(TreeSummary {
                grammar: t.to_grammar(),
                delta,
                expected_cost: t.expected_cost(),
                depth: t.depth(),
                leaves: t.leaf_count(),
                read_once: t.is_read_once(),
                separated,
                weighted_influence_sum: weighted,
            })
        }
        None => None,
    };

    if f.outputs().kind() == MetricKind::Metric || f.outputs().metric_name() == "rho2" {
        checks.push(check_efron_stein(&f).map_err(|e| e.to_string())?);
    }

    let optimal = if want_optimal {
        let (cost, witness) = optimal_expected_cost(&f).map_err(|e| e.to_string())?;
        let (d, dw) = optimal_depth(&f).map_err(|e| e.to_string())?;
        Some(OptimalSummary {
            expected_cost: cost,
            witness: witness.to_grammar(),
            depth: Some(d),
            depth_witness: Some(dw.to_grammar()),
        })
    } else {
        None
    };

    let mode = if f.is_exact() { "rational" } else { "float" };
    if cli.exact && mode != "rational" {
        return Err("--exact requested but the computation left rational mode".into());
    }
    let report = AnalysisReport {
        function: name,
        n: f.space().n(),
        point_count: f.space().point_count(),
        metric: f.outputs().metric_name().to_string(),
        metric_kind: f.outputs().kind().to_string(),
        mode: mode.to_string(),
        variation: var,
        influences: InfluenceSummary {
            metric: inf.metric_tag().to_string(),
            values: inf.values().to_vec(),
            total: inf.total().clone(),
            max: inf.max().clone(),
        },
        tree: tree_summary,
        optimal,
        checks,
    };

    let all_hold = report.checks.iter().all(|c| c.holds);
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        print_analysis(&report);
    }
    Ok(all_hold)
}

fn print_analysis(r: &AnalysisReport) {
    println!("function      {}", r.function);
    println!(
        "space         n = {}, {} points, mode {}",
        r.n, r.point_count, r.mode
    );
    println!("metric        {} ({})", r.metric, r.metric_kind);
    println!("variation     {}", human_value(&r.variation));
    let vals: Vec<String> = r.influences.values.iter().map(human_value).collect();
    println!("influences    [{}]", vals.join(", "));
    println!(
        "              total {}, max {}",
        human_value(&r.influences.total),
        human_value(&r.influences.max)
    );
    if let Some(t) = &r.tree {
        let delta: Vec<String> = t.delta.iter().map(human_value).collect();
        println!("tree          {}", t.grammar);
        println!("  delta       [{}]", delta.join(", "));
        println!(
            "  cost        {} expected, depth {}, {} leaves",
            human_value(&t.expected_cost),
            t.depth,
            t.leaves
        );
        println!(
            "  structure   read-once: {}, separated: {}",
            t.read_once, t.separated
        );
        println!(
            "  sum d*Inf   {}",
            human_value(&t.weighted_influence_sum)
        );
    }
    if let Some(o) = &r.optimal {
        println!(
            "optimal       expected cost {} with witness {}",
            human_value(&o.expected_cost),
            o.witness
        );
        if let (Some(d), Some(w)) = (&o.depth, &o.depth_witness) {
            println!("              depth {d} with witness {w}");
        }
    }
    for c in &r.checks {
        println!(
            "check         {:<20} lhs {} rhs {} slack {}  {}{}",
            c.inequality,
            human_value(&c.lhs),
            human_value(&c.rhs),
            human_value(&c.slack),
            if c.holds { "HOLDS" } else { "VIOLATED" },
            if c.equality { " (equality)" } else { "" }
        );
        if let Some(w) = &c.witness {
            println!("              note: {w}");
        }
    }
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    inequality: String,
    n: usize,
    p: String,
    functions: u64,
    checked: u64,
    failures: u64,
    skipped: u64,
    mode: String,
}

fn cmd_sweep(
    cli: &Cli,
    n: usize,
    p: Option<&str>,
    inequality: &str,
    sample: Option<u64>,
) -> Result<bool, String> {
    let p = parse_bias(p)?;
    if cli.exact && !p.is_exact() {
        return Err("--exact requested but the bias is not rational".into());
    }
    let table_bits = 1u64 << n;
    let codes: Vec<u64> = if n <= 3 {
        (0..(1u64 << table_bits)).collect()
    } else if n <= 5 {
        let count = sample.ok_or("n in 4..5 needs --sample K")?;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
        let mask = if table_bits == 64 {
            u64::MAX
        } else {
            (1u64 << table_bits) - 1
        };
        (0..count).map(|_| rng.gen::<u64>() & mask).collect()
    } else {
        return Err("sweeps support n <= 5".into());
    };

    let space = ProductSpace::biased_cube(n, &p).map_err(|e| e.to_string())?;
    let outputs = OutputSpace::boolean(vec!["-1".into(), "1".into()]).map_err(|e| e.to_string())?;
    let build_fn = |code: u64| -> TabulatedFunction {
        let table: Vec<u32> = (0..table_bits).map(|i| (code >> i & 1) as u32).collect();
        TabulatedFunction::new(space.clone(), outputs.clone(), table)
            .expect("table matches the space")
    };

    // (checked, failures, skipped) per function; aggregation is a sum, so
    // the result does not depend on the thread count.
    let per_fn = |code: u64| -> Result<(u64, u64, u64), String> {
        let f = build_fn(code);
        match inequality {
            "main" => {
                let trees = if n <= treeinf::optimal::ENUMERATION_MAX_VARS {
                    enumerate_all_ddts(&f).map_err(|e| e.to_string())?
                } else {
                    vec![optimal_expected_cost(&f).map_err(|e| e.to_string())?.1]
                };
                let mut failures = 0;
                let checked = trees.len() as u64;
                for t in trees {
                    let r = check_main(&t, &f).map_err(|e| e.to_string())?;
                    if !r.holds {
                        failures += 1;
                    }
                }
                Ok((checked, failures, 0))
            }
            "efron-stein" => {
                let r = check_efron_stein(&f).map_err(|e| e.to_string())?;
                Ok((1, (!r.holds) as u64, 0))
            }
            "os" => {
                if !is_monotone(&f).map_err(|e| e.to_string())? {
                    return Ok((0, 0, 1));
                }
                let r = check_os_inequality(&f).map_err(|e| e.to_string())?;
                Ok((1, (!r.holds) as u64, 0))
            }
            "two-function" => {
                // Pair f with its bitwise complement and with a shifted
                // variant; the tree is f's optimal witness.
                let (_, witness) = optimal_expected_cost(&f).map_err(|e| e.to_string())?;
                let rt = RandomizedTree::single(witness);
                let mask = if table_bits == 64 {
                    u64::MAX
                } else {
                    (1u64 << table_bits) - 1
                };
                let partners = [!code & mask, code.rotate_left(1) & mask];
                let mut failures = 0;
                for partner in partners {
                    let g = build_fn(partner);
                    let r = treeinf::verify::check_two_function(&rt, &f, &g)
                        .map_err(|e| e.to_string())?;
                    if !r.holds {
                        failures += 1;
                    }
                }
                Ok((2, failures, 0))
            }
            _ => Err(format!("unknown inequality {inequality}")),
        }
    };

    let results: Vec<Result<(u64, u64, u64), String>> = match cli.threads {
        Some(1) => codes.iter().map(|&c| per_fn(c)).collect(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| e.to_string())?
            .install(|| codes.par_iter().map(|&c| per_fn(c)).collect()),
        None => codes.par_iter().map(|&c| per_fn(c)).collect(),
    };
    let mut checked = 0;
    let mut failures = 0;
    let mut skipped = 0;
    for r in results {
        let (c, f, s) = r?;
        checked += c;
        failures += f;
        skipped += s;
    }

    let summary = SweepSummary {
        inequality: inequality.to_string(),
        n,
        p: p.to_string(),
        functions: codes.len() as u64,
        checked,
        failures,
        skipped,
        mode: if p.is_exact() { "rational" } else { "float" }.to_string(),
    };
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    } else {
        println!(
            "sweep {} at n={}, p={}: {} functions, {} checks, {} failures{}",
            summary.inequality,
            summary.n,
            summary.p,
            summary.functions,
            summary.checked,
            summary.failures,
            if summary.skipped > 0 {
                format!(", {} skipped (not monotone)", summary.skipped)
            } else {
                String::new()
            }
        );
    }
    Ok(failures == 0)
}

fn cmd_optimal(cli: &Cli, source: &FunctionSource, want_depth: bool) -> Result<bool, String> {
    let (f, _, name) = load_function(cli, source)?;
    let (cost, witness) = optimal_expected_cost(&f).map_err(|e| e.to_string())?;
    let depth = if want_depth {
        Some(optimal_depth(&f).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let summary = OptimalSummary {
        expected_cost: cost,
        witness: witness.to_grammar(),
        depth: depth.as_ref().map(|(d, _)| *d),
        depth_witness: depth.as_ref().map(|(_, w)| w.to_grammar()),
    };
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "function": name,
                "optimal": summary,
            }))
            .unwrap()
        );
    } else {
        println!("function      {name}");
        println!(
            "optimal cost  {} with witness {}",
            human_value(&summary.expected_cost),
            summary.witness
        );
        if let (Some(d), Some(w)) = (&summary.depth, &summary.depth_witness) {
            println!("optimal depth {d} with witness {w}");
        }
    }
    Ok(true)
}

fn cmd_critical(
    cli: &Cli,
    source: &FunctionSource,
    tol: f64,
    pipeline: bool,
) -> Result<bool, String> {
    let (f, _, name) = load_function(cli, source)?;
    let cp = critical_probability(&f, tol).map_err(|e| e.to_string())?;
    let mut all_hold = true;
    let pipeline_report = if pipeline {
        let report = lower_bound_pipeline(&f, tol, TransitivityEvidence::Asserted)
            .map_err(|e| e.to_string())?;
        all_hold = report.all_hold();
        Some(report)
    } else {
        None
    };
    if cli.json {
        let mut obj = serde_json::json!({
            "function": name,
            "p_star": cp.p_star,
            "bracket": [cp.bracket.0, cp.bracket.1],
            "residual": cp.residual,
        });
        if let Some(r) = &pipeline_report {
            obj["pipeline"] = serde_json::json!({
                "variance_at_critical": r.variance_at_critical,
                "total_influence": r.total_influence,
                "optimal_cost": r.optimal_cost,
                "chain_product": r.chain_product,
                "chain_power": r.chain_power,
                "formula_bound": r.formula_bound,
                "influence_spread": r.influence_spread,
                "influences_equal": r.influences_equal,
            });
        }
        println!("{}", serde_json::to_string_pretty(&obj).unwrap());
    } else {
        println!("function      {name}");
        println!(
            "critical p*   {:.10}  (residual {:.3e}, bracket [{:.10}, {:.10}])",
            cp.p_star, cp.residual, cp.bracket.0, cp.bracket.1
        );
        if let Some(r) = &pipeline_report {
            println!(
                "at p*         Var {}  Inf {}  optimal cost {}",
                human_value(&r.variance_at_critical),
                human_value(&r.total_influence),
                human_value(&r.optimal_cost)
            );
            for c in [&r.chain_product, &r.chain_power, &r.formula_bound] {
                println!(
                    "check         {:<14} lhs {} rhs {}  {}",
                    c.inequality,
                    human_value(&c.lhs),
                    human_value(&c.rhs),
                    if c.holds { "HOLDS" } else { "VIOLATED" }
                );
            }
            println!(
                "influences    spread {:.3e} -> {}",
                r.influence_spread,
                if r.influences_equal {
                    "equal (transitive)"
                } else {
                    "NOT equal"
                }
            );
        }
    }
    Ok(all_hold)
}

fn cmd_defect(cli: &Cli, outputs: &str, metric: &str, k: usize) -> Result<bool, String> {
    let labels: Vec<String> = outputs.split(',').map(|s| s.trim().to_string()).collect();
    let os = OutputSpace::builtin(metric, labels).map_err(|e| e.to_string())?;
    let d = defect_with_cap(&os, k, cli.cap).map_err(|e| e.to_string())?;
    if cli.json {
        let value = match &d {
            Defect::Finite(v) => serde_json::to_value(v).unwrap(),
            Defect::Unbounded => serde_json::Value::String("unbounded".into()),
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "outputs": outputs,
                "metric": metric,
                "k": k,
                "defect": value,
            }))
            .unwrap()
        );
    } else {
        match &d {
            Defect::Finite(v) => println!("Def_{k} = {}", human_value(v)),
            Defect::Unbounded => println!("Def_{k} is unbounded"),
        }
    }
    Ok(true)
}

fn cmd_trace(
    cli: &Cli,
    source: &FunctionSource,
    tree_arg: &str,
    x: u64,
    y: u64,
) -> Result<bool, String> {
    let (f, canonical, name) = load_function(cli, source)?;
    let tree = resolve_tree(&f, canonical, tree_arg, &name)?;
    let trace =
        hybrid_trace(&tree, &f, PointIndex(x), PointIndex(y)).map_err(|e| e.to_string())?;
    if cli.json {
        let hybrids: Vec<serde_json::Value> = trace
            .hybrids
            .iter()
            .map(|&u| {
                serde_json::json!({
                    "index": u.0,
                    "labels": f.space().point_labels(u),
                })
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "function": name,
                "x": x,
                "y": y,
                "query_sequence": trace.query_sequence.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "hybrids": hybrids,
                "step_distances": trace.step_distances,
                "total_step_distance": trace.total_step_distance(),
            }))
            .unwrap()
        );
    } else {
        let fmt_point = |u: PointIndex| format!("({})", f.space().point_labels(u).join(","));
        println!("function      {name}");
        println!("x = {} {}   y = {} {}", x, fmt_point(PointIndex(x)), y, fmt_point(PointIndex(y)));
        let seq: Vec<String> = trace.query_sequence.iter().map(|i| format!("x{}", i + 1)).collect();
        println!("queries on x  [{}]", seq.join(", "));
        for (t, u) in trace.hybrids.iter().enumerate() {
            let mut line = format!("  u[{t}] = {} {}", u.0, fmt_point(*u));
            if t > 0 {
                write!(line, "   step distance {}", human_value(&trace.step_distances[t - 1]))
                    .unwrap();
            }
            println!("{line}");
        }
        println!(
            "total step distance {}",
            human_value(&trace.total_step_distance())
        );
    }
    Ok(true)
}
