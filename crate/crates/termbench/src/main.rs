//! Benchmark and verification harness for the termdag toolkit.
//!
//! Subcommands: `gen` prints node counts for a shape, `run` executes one
//! evaluator variant and emits a CSV row, `sweep` runs variants across sizes
//! and classifies their scaling, `verify` executes the randomized
//! equivalence suites. Visit counts and values in the CSV are bit-stable
//! across runs; `wall_nanos` is informational only.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use termdag::term::DepthLimitExceeded;
use termdag::{
    distinct_nodes, mk_add, run_variant, tower, tree_nodes, twin_disjoint, twin_shared,
    EvalOutcome, TermRef, VariantId, DEFAULT_DEPTH_LIMIT,
};

const CSV_HEADER: &str = "shape,n,variant,value_mod64,visits,wall_nanos,budget_exhausted";
const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Parser)]
#[command(name = "termbench", version, about = "Term-DAG traversal benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print distinct-node and tree-node counts for a shape.
    Gen {
        #[arg(long)]
        shape: Shape,
        #[arg(long)]
        n: u32,
    },
    /// Run one evaluator variant and print a CSV row.
    Run {
        /// Variant name or index 1-8.
        #[arg(long)]
        variant: String,
        #[arg(long)]
        shape: Shape,
        #[arg(long)]
        n: u32,
        /// Node-visit budget; 0 means unbounded.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 4096)]
        buckets: usize,
    },
    /// Run variants across sizes, write CSV records and classify scaling.
    Sweep {
        /// Comma-separated variant names or indices, or "all".
        #[arg(long, default_value = "all")]
        variants: String,
        #[arg(long)]
        shape: Shape,
        /// Comma-separated sizes; defaults to doubling sizes for variants
        /// expected to stay linear and a short arithmetic ramp otherwise.
        #[arg(long)]
        n_list: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 4096)]
        buckets: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized verification suites.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        iterations: u64,
        /// Test hook: break the identity-equality fast path on purpose to
        /// demonstrate that dual checking catches divergence.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Shape {
    Tower,
    TwinShared,
    TwinDisjoint,
}

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Tower => "tower",
            Shape::TwinShared => "twin-shared",
            Shape::TwinDisjoint => "twin-disjoint",
        }
    }

    fn build(self, n: u32) -> Result<TermRef, DepthLimitExceeded> {
        match self {
            Shape::Tower => tower(n),
            Shape::TwinShared => {
                let (a, b) = twin_shared(n)?;
                Ok(mk_add(a, b))
            }
            Shape::TwinDisjoint => twin_disjoint(n),
        }
    }

    /// Closed forms for the node counts, no unfolding.
    fn counts(self, n: u32) -> (u64, BigUint) {
        let pow = |k: u32| (BigUint::from(1u32) << k) - 1u32;
        match self {
            Shape::Tower => (u64::from(n) + 1, pow(n + 1)),
            Shape::TwinShared => (u64::from(n) + 4, pow(n + 3)),
            Shape::TwinDisjoint => (2 * u64::from(n) + 3, pow(n + 2)),
        }
    }
}

fn fail_usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn check_size(n: u32) -> Result<(), String> {
    if n > DEFAULT_DEPTH_LIMIT {
        return Err(format!("n = {n} exceeds the depth limit {DEFAULT_DEPTH_LIMIT}"));
    }
    Ok(())
}

fn csv_row(shape: Shape, n: u32, variant: VariantId, out: &EvalOutcome) -> String {
    let value = out.value.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{}",
        shape.name(),
        n,
        variant.name(),
        value,
        out.visits,
        out.wall_nanos,
        out.budget_exhausted()
    )
}

fn cmd_gen(shape: Shape, n: u32) -> ExitCode {
    if let Err(msg) = check_size(n) {
        return fail_usage(&msg);
    }
    let (distinct, tree) = shape.counts(n);
    // The closed forms are cross-checked by traversal while the unfolded
    // tree is still small.
    if n <= 20 {
        let t = shape.build(n).expect("size checked above");
        let (got_distinct, got_tree) = (distinct_nodes(&t), tree_nodes(&t));
        if got_distinct != distinct || got_tree != tree {
            eprintln!(
                "error: closed forms disagree with traversal: distinct {distinct} vs {got_distinct}, tree {tree} vs {got_tree}"
            );
            return ExitCode::from(1);
        }
    }
    println!("distinct={distinct} tree={tree}");
    ExitCode::SUCCESS
}

fn cmd_run(variant: &str, shape: Shape, n: u32, budget: u64, buckets: usize) -> ExitCode {
    let variant: VariantId = match variant.parse() {
        Ok(v) => v,
        Err(msg) => return fail_usage(&msg),
    };
    if let Err(msg) = check_size(n) {
        return fail_usage(&msg);
    }
    if buckets == 0 {
        return fail_usage("--buckets must be at least 1");
    }
    let t = shape.build(n).expect("size checked above");
    let budget = (budget > 0).then_some(budget);
    let out = run_variant(variant, &t, budget, buckets);
    println!("{}", csv_row(shape, n, variant, &out));
    ExitCode::SUCCESS
}

fn parse_variants(spec: &str) -> Result<Vec<VariantId>, String> {
    if spec == "all" {
        return Ok(VariantId::ALL.to_vec());
    }
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_n_list(spec: &str) -> Result<Vec<u32>, String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|e| format!("bad size {s:?}: {e}")))
        .collect()
}

/// Sizes used when no explicit list is given: a short arithmetic ramp for
/// variants expected to blow the budget, doubling sizes otherwise.
fn default_sizes(variant: VariantId, shape: Shape) -> Vec<u32> {
    let superlinear_expected = match shape {
        Shape::TwinDisjoint => variant.index() <= 5,
        Shape::Tower | Shape::TwinShared => variant.index() <= 4,
    };
    if superlinear_expected {
        (8..=40).step_by(4).collect()
    } else {
        (3..=12).map(|k| 1u32 << k).collect()
    }
}

struct SweepSample {
    n: u32,
    visits: u64,
    completed: bool,
}

/// Linear iff the median visits(2n)/visits(n) over completed doubling pairs
/// is at most 2.5; runs that exhaust the budget never form pairs.
fn scaling_verdict(samples: &[SweepSample]) -> (&'static str, f64) {
    let mut ratios: Vec<f64> = Vec::new();
    for s in samples.iter().filter(|s| s.completed) {
        if let Some(double) =
            samples.iter().find(|d| d.completed && u64::from(d.n) == 2 * u64::from(s.n))
        {
            ratios.push(double.visits as f64 / s.visits.max(1) as f64);
        }
    }
    if ratios.is_empty() {
        return ("superlinear", f64::INFINITY);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("ratios are finite"));
    let median = ratios[ratios.len() / 2];
    if median <= 2.5 {
        ("linear", median)
    } else {
        ("superlinear", median)
    }
}

fn cmd_sweep(
    variants: &str,
    shape: Shape,
    n_list: Option<&str>,
    budget: u64,
    buckets: usize,
    out: Option<&PathBuf>,
) -> ExitCode {
    let variants = match parse_variants(variants) {
        Ok(v) => v,
        Err(msg) => return fail_usage(&msg),
    };
    let explicit_sizes = match n_list.map(parse_n_list).transpose() {
        Ok(v) => v,
        Err(msg) => return fail_usage(&msg),
    };
    if let Some(sizes) = &explicit_sizes {
        if let Some(bad) = sizes.iter().find(|&&n| check_size(n).is_err()) {
            return fail_usage(&format!("n = {bad} exceeds the depth limit"));
        }
    }
    if buckets == 0 {
        return fail_usage("--buckets must be at least 1");
    }
    let budget = (budget > 0).then_some(budget);

    let mut csv = String::new();
    let _ = writeln!(csv, "{CSV_HEADER}");
    let mut verdicts = String::new();
    for variant in variants {
        let sizes = explicit_sizes.clone().unwrap_or_else(|| default_sizes(variant, shape));
        let mut samples = Vec::new();
        for n in sizes {
            let t = shape.build(n).expect("sizes validated above");
            let outcome = run_variant(variant, &t, budget, buckets);
            let _ = writeln!(csv, "{}", csv_row(shape, n, variant, &outcome));
            samples.push(SweepSample {
                n,
                visits: outcome.visits,
                completed: !outcome.budget_exhausted(),
            });
        }
        let (verdict, ratio) = scaling_verdict(&samples);
        let _ = writeln!(
            verdicts,
            "variant={} verdict={verdict} median_doubling_ratio={ratio:.3}",
            variant.name()
        );
    }

    let written = match out {
        Some(path) => std::fs::write(path, csv.as_bytes()),
        None => std::io::stdout().write_all(csv.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: failed to write CSV: {e}");
        return ExitCode::from(3);
    }
    eprint!("{verdicts}");
    ExitCode::SUCCESS
}

fn cmd_verify(seed: u64, iterations: u64, inject_fault: bool) -> ExitCode {
    if inject_fault {
        termdag::prims::inject_id_eq_fault(true);
    }
    let report = termdag::verify::run_verify(seed, iterations);
    for suite in &report.suites {
        println!("suite={} checks={} failures={}", suite.name, suite.checks, suite.failures.len());
        for failure in &suite.failures {
            println!("FAIL {}: {}", suite.name, failure);
        }
    }
    println!("verify: {} checks, {} failures", report.checks(), report.failure_count());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Gen { shape, n } => cmd_gen(shape, n),
        Command::Run { variant, shape, n, budget, buckets } => {
            cmd_run(&variant, shape, n, budget, buckets)
        }
        Command::Sweep { variants, shape, n_list, budget, buckets, out } => {
            cmd_sweep(&variants, shape, n_list.as_deref(), budget, buckets, out.as_ref())
        }
        Command::Verify { seed, iterations, inject_fault } => {
            cmd_verify(seed, iterations, inject_fault)
        }
    }
}
