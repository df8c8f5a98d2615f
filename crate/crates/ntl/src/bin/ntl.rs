//! Command-line front end for the NTL verification toolkit.
//!
//! Exit codes are part of the contract so test harnesses can assert verdicts
//! without parsing output: 0 holds/sat/valid, 1 violated/unsat/invalid,
//! 2 error or resource limit, 3 inconclusive (eval only), 64 usage error.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use ntl::automata::alphabet::Alphabet;
use ntl::check::{self, CheckResult, SatResult, DEFAULT_STATE_CAP};
use ntl::construct::{build_dpn_automaton, build_exec_tree_automaton, build_formula_npta};
use ntl::dpn::parse_dpn;
use ntl::exec::{
    enumerate_execution_graphs, graph_from_tree, parse_tree_text, unfold_regular, RegularTree,
};
use ntl::formula::{parse_formula, to_pnf, Formula};
use ntl::oracle::{dpn_models_oracle, OracleVerdict};

#[derive(Parser)]
#[command(name = "ntl", about = "Model checking and satisfiability for navigation temporal logic over dynamic pushdown networks", disable_help_subcommand = true)]
struct Cli {
    /// State budget for automata constructions.
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Extra propositions to include in the alphabet (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    props: Vec<String>,
    /// Seed for randomized sampling (reserved for sampling subcommands).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Emit the verdict as a JSON object on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether every execution graph of the DPN satisfies the formula.
    Check {
        dpn: PathBuf,
        formula: PathBuf,
        /// Write the counterexample tree (regular tree text) here on violation.
        #[arg(long)]
        cex: Option<PathBuf>,
        /// Write the counterexample class graph as DOT here on violation.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Decide whether some execution graph satisfies the formula.
    Sat {
        formula: PathBuf,
        /// Write the witness tree (regular tree text) here when satisfiable.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Write a DPN realizing the witness here when satisfiable.
        #[arg(long)]
        dpn: Option<PathBuf>,
    },
    /// Evaluate the formula directly on enumerated finite execution graphs.
    Eval {
        dpn: PathBuf,
        formula: PathBuf,
        /// Node bound per enumerated execution graph.
        #[arg(long, default_value_t = 200)]
        max_nodes: usize,
        /// Bound on the number of enumerated graphs.
        #[arg(long, default_value_t = 500)]
        max_graphs: usize,
    },
    /// Enumerate execution graphs of a DPN and print or export them.
    Simulate {
        dpn: PathBuf,
        /// Node bound per enumerated execution graph.
        #[arg(long, default_value_t = 40)]
        max_nodes: usize,
        /// Bound on the number of enumerated graphs.
        #[arg(long, default_value_t = 10)]
        max_graphs: usize,
        /// Directory receiving one DOT file per enumerated graph.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Validate a tree file: class structure, tree conditions, and (for finite
    /// trees) the execution-graph conditions of the decoded graph.
    Validate { file: PathBuf },
    /// Build the automaton for a DPN or formula file and report its size.
    Automata {
        /// A DPN file or a formula file; tried in that order.
        input: PathBuf,
        /// Print all states and transitions, not just the summary.
        #[arg(long)]
        dump: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            return match e.kind() {
                DisplayHelp | DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(64)
                }
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.cmd {
        Cmd::Check { dpn, formula, cex, dot } => cmd_check(cli, dpn, formula, cex, dot),
        Cmd::Sat { formula, witness, dpn } => cmd_sat(cli, formula, witness, dpn),
        Cmd::Eval { dpn, formula, max_nodes, max_graphs } => {
            cmd_eval(cli, dpn, formula, *max_nodes, *max_graphs)
        }
        Cmd::Simulate { dpn, max_nodes, max_graphs, dot } => {
            cmd_simulate(cli, dpn, *max_nodes, *max_graphs, dot)
        }
        Cmd::Validate { file } => cmd_validate(cli, file),
        Cmd::Automata { input, dump } => cmd_automata(cli, input, *dump),
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_dpn(path: &Path) -> Result<ntl::dpn::Dpn, String> {
    parse_dpn(&read(path)?).map_err(|e| format!("{}: {e:?}", path.display()))
}

fn load_formula(path: &Path) -> Result<Formula, String> {
    parse_formula(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(cli: &Cli, obj: serde_json::Value, plain: &str) {
    if cli.json {
        println!("{obj}");
    } else {
        println!("{plain}");
    }
}

/// DOT rendering of a regular tree's class graph: one node per class, solid
/// edges for direction-0 children, dashed for direction-1 children.
fn regular_tree_dot(t: &RegularTree) -> String {
    let mut s = String::from("digraph tree {\n  rankdir=TB;\n");
    for (i, l) in t.labels.iter().enumerate() {
        let shape = if i == t.root { "doublecircle" } else { "ellipse" };
        s.push_str(&format!("  n{i} [shape={shape}, label=\"{i}: {l}\"];\n"));
        for (d, &c) in t.children[i].iter().enumerate() {
            let style = if d == 0 { "solid" } else { "dashed" };
            s.push_str(&format!("  n{i} -> n{c} [style={style}];\n"));
        }
    }
    s.push_str("}\n");
    s
}

fn cmd_check(
    cli: &Cli,
    dpn: &Path,
    formula: &Path,
    cex: &Option<PathBuf>,
    dot: &Option<PathBuf>,
) -> Result<u8, String> {
    let m = load_dpn(dpn)?;
    let phi = load_formula(formula)?;
    match check::model_check(&m, &phi, cli.state_cap).map_err(|e| format!("{e}"))? {
        CheckResult::Holds => {
            emit(cli, json!({"verdict": "holds"}), "holds");
            Ok(0)
        }
        CheckResult::Violated { counterexample, model } => {
            if let Some(p) = cex {
                write(p, &counterexample.to_text())?;
            }
            if let Some(p) = dot {
                write(p, &regular_tree_dot(&counterexample))?;
            }
            emit(
                cli,
                json!({
                    "verdict": "violated",
                    "counterexample": counterexample.to_text(),
                    "model": model.as_ref().map(|d| d.to_string()),
                }),
                "violated",
            );
            Ok(1)
        }
        CheckResult::ResourceLimit(why) => {
            emit(cli, json!({"verdict": "resourceLimit", "reason": why}), &format!("resource limit: {why}"));
            Ok(2)
        }
    }
}

fn cmd_sat(
    cli: &Cli,
    formula: &Path,
    witness: &Option<PathBuf>,
    dpn_out: &Option<PathBuf>,
) -> Result<u8, String> {
    let phi = load_formula(formula)?;
    match check::satisfiable(&phi, cli.state_cap).map_err(|e| format!("{e}"))? {
        SatResult::Sat { witness: w, model } => {
            if let Some(p) = witness {
                write(p, &w.to_text())?;
            }
            if let Some(p) = dpn_out {
                write(p, &model.to_string())?;
            }
            emit(
                cli,
                json!({"verdict": "sat", "witness": w.to_text(), "model": model.to_string()}),
                "sat",
            );
            Ok(0)
        }
        SatResult::Unsat => {
            emit(cli, json!({"verdict": "unsat"}), "unsat");
            Ok(1)
        }
        SatResult::ResourceLimit(why) => {
            emit(cli, json!({"verdict": "resourceLimit", "reason": why}), &format!("resource limit: {why}"));
            Ok(2)
        }
    }
}

fn cmd_eval(
    cli: &Cli,
    dpn: &Path,
    formula: &Path,
    max_nodes: usize,
    max_graphs: usize,
) -> Result<u8, String> {
    let m = load_dpn(dpn)?;
    let phi = load_formula(formula)?;
    match dpn_models_oracle(&m, &phi, max_nodes, max_graphs).map_err(|e| format!("{e:?}"))? {
        OracleVerdict::Holds => {
            emit(cli, json!({"verdict": "holds"}), "holds");
            Ok(0)
        }
        OracleVerdict::Violated(g) => {
            emit(
                cli,
                json!({"verdict": "violated", "graph_nodes": g.len(), "graph_dot": g.to_dot()}),
                &format!("violated (witness graph with {} nodes)", g.len()),
            );
            Ok(1)
        }
        OracleVerdict::Inconclusive => {
            emit(cli, json!({"verdict": "inconclusive"}), "inconclusive");
            Ok(3)
        }
    }
}

fn cmd_simulate(
    cli: &Cli,
    dpn: &Path,
    max_nodes: usize,
    max_graphs: usize,
    dot: &Option<PathBuf>,
) -> Result<u8, String> {
    let m = load_dpn(dpn)?;
    let graphs = enumerate_execution_graphs(&m, max_nodes, max_graphs);
    if let Some(dir) = dot {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for (i, g) in graphs.iter().enumerate() {
            write(&dir.join(format!("graph_{i:03}.dot")), &g.to_dot())?;
        }
    }
    let complete = graphs.iter().filter(|g| g.complete).count();
    emit(
        cli,
        json!({
            "graphs": graphs.len(),
            "complete": complete,
            "sizes": graphs.iter().map(|g| g.len()).collect::<Vec<_>>(),
        }),
        &format!("{} graphs enumerated ({} complete)", graphs.len(), complete),
    );
    Ok(0)
}

fn cmd_validate(cli: &Cli, file: &Path) -> Result<u8, String> {
    let text = read(file)?;
    let tree = match parse_tree_text(&text) {
        Ok(t) => t,
        Err(e) => {
            emit(cli, json!({"valid": false, "error": format!("{e}")}), &format!("invalid: {e}"));
            return Ok(1);
        }
    };
    if let Err(e) = tree.validate() {
        emit(cli, json!({"valid": false, "error": format!("{e}")}), &format!("invalid: {e}"));
        return Ok(1);
    }
    // For finite trees we can decode back to an execution graph and check the
    // full graph conditions; infinite regular trees only get the class checks.
    match unfold_regular(&tree, 10_000) {
        Ok(finite) => match graph_from_tree(&finite) {
            Ok(g) => match g.validate(true) {
                Ok(()) => {
                    emit(cli, json!({"valid": true, "nodes": g.len()}), "valid");
                    Ok(0)
                }
                Err(vs) => {
                    let msgs: Vec<String> = vs.iter().map(|v| format!("{v}")).collect();
                    emit(
                        cli,
                        json!({"valid": false, "violations": msgs}),
                        &format!("invalid: {}", msgs.join("; ")),
                    );
                    Ok(1)
                }
            },
            Err(e) => {
                emit(cli, json!({"valid": false, "error": format!("{e}")}), &format!("invalid: {e}"));
                Ok(1)
            }
        },
        Err(_) => {
            emit(cli, json!({"valid": true, "finite": false}), "valid (regular, not unfolded)");
            Ok(0)
        }
    }
}

fn cmd_automata(cli: &Cli, input: &Path, dump: bool) -> Result<u8, String> {
    let text = read(input)?;
    let (kind, aut) = if let Ok(m) = parse_dpn(&text) {
        let mut props: BTreeSet<String> = m.propositions();
        props.extend(cli.props.iter().cloned());
        ("dpn", build_dpn_automaton(&m, Alphabet::new(props)))
    } else {
        let phi =
            parse_formula(&text).map_err(|e| format!("{}: not a DPN and not a formula: {e}", input.display()))?;
        let pnf = to_pnf(&phi);
        let mut props = check::proposition_universe(&pnf, None);
        props.extend(cli.props.iter().cloned());
        (
            "formula",
            build_formula_npta(&pnf, Alphabet::new(props), cli.state_cap)
                .map_err(|e| format!("{e}"))?,
        )
    };
    let et = build_exec_tree_automaton(aut.alphabet.clone());
    let product = aut.intersect(&et).map_err(|e| format!("{e:?}"))?;
    let empty = product.is_empty();
    if dump {
        print!("{}", aut.to_text());
    }
    emit(
        cli,
        json!({
            "input": kind,
            "states": aut.len(),
            "letters": aut.alphabet.num_letters(),
            "empty": empty,
        }),
        &format!("{kind} automaton: {} states, {} letters, language {}", aut.len(), aut.alphabet.num_letters(), if empty { "empty" } else { "nonempty" }),
    );
    Ok(0)
}
