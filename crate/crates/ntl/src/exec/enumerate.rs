//! Enumeration of the execution graphs generated by a DPN.

use super::ExecutionGraph;
use crate::dpn::{Configuration, Dpn, StepKind};

/// Enumerate execution graphs of `m` breadth-first over per-node rule choices
/// in canonical order. A graph is complete iff every frontier node's
/// configuration has no steps; graphs cut off at `max_nodes` are emitted
/// flagged as truncated. At most `max_graphs` graphs are returned.
pub fn enumerate_execution_graphs(
    m: &Dpn,
    max_nodes: usize,
    max_graphs: usize,
) -> Vec<ExecutionGraph> {
    let mut out = Vec::new();
    let mut g = ExecutionGraph::new_empty();
    let mut configs: Vec<Configuration> = Vec::new();
    let root_cfg = m.initial_configuration();
    g.push_node(m.label_of(&root_cfg));
    configs.push(root_cfg);
    expand(m, &mut g, &mut configs, 0, max_nodes, max_graphs, &mut out);
    out
}

/// Depth-first search over the rule choice at each node, processing nodes in
/// BFS index order so discovery order is breadth-first.
fn expand(
    m: &Dpn,
    g: &mut ExecutionGraph,
    configs: &mut Vec<Configuration>,
    next: usize,
    max_nodes: usize,
    max_graphs: usize,
    out: &mut Vec<ExecutionGraph>,
) {
    if out.len() >= max_graphs {
        return;
    }
    if next >= g.len() {
        // every node processed and stuck nodes closed: complete graph
        let mut done = g.clone();
        done.nesting = done.derive_nesting();
        done.configs = Some(configs.clone());
        done.complete = true;
        out.push(done);
        return;
    }
    let steps = m.config_steps(&configs[next]);
    if steps.is_empty() {
        expand(m, g, configs, next + 1, max_nodes, max_graphs, out);
        return;
    }
    if g.len() >= max_nodes {
        // cannot grow further: emit the explored prefix as truncated
        let mut cut = g.clone();
        cut.nesting = cut.derive_nesting();
        cut.configs = Some(configs.clone());
        cut.complete = false;
        out.push(cut);
        return;
    }
    for step in steps {
        let saved_len = g.len();
        let target = g.push_node(m.label_of(&step.target));
        configs.push(step.target.clone());
        match step.kind {
            StepKind::Int => g.int_succ[next] = Some(target),
            StepKind::Call => g.call_succ[next] = Some(target),
            StepKind::Ret => g.ret_succ[next] = Some(target),
            StepKind::Spawn => {
                g.int_succ[next] = Some(target);
                let spawned = step.spawned.as_ref().unwrap();
                let sp = g.push_node(m.label_of(spawned));
                configs.push(spawned.clone());
                g.spawn_succ[next] = Some(sp);
            }
        }
        expand(m, g, configs, next + 1, max_nodes, max_graphs, out);
        // undo
        g.int_succ[next] = None;
        g.call_succ[next] = None;
        g.ret_succ[next] = None;
        g.spawn_succ[next] = None;
        g.labels.truncate(saved_len);
        g.int_succ.truncate(saved_len);
        g.call_succ.truncate(saved_len);
        g.ret_succ.truncate(saved_len);
        g.spawn_succ.truncate(saved_len);
        g.nesting.truncate(saved_len);
        configs.truncate(saved_len);
        if out.len() >= max_graphs {
            return;
        }
    }
}
