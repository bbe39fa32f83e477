use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::ir::IrModule;

use super::{build_cdfg, count_fcus, longest_path, GraphError};

pub const CALLGRAPH_SLOT_COUNT: usize = 6;

pub const CALLGRAPH_SLOT_NAMES: [&str; CALLGRAPH_SLOT_COUNT] = [
    "cg_child_count",
    "cg_max_child_fcu",
    "cg_min_child_fcu",
    "cg_max_child_latency",
    "cg_max_child_cp",
    "cg_min_child_cp",
];

/// Pre-synthesis characteristics of a function as seen by its callers.
///
/// `build_callgraph` fills `fcu_count` and a structural latency proxy (the
/// function's longest CFG path); clock-period estimates only come from
/// outside via [`CallGraph::set_summary`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChildSummary {
    pub fcu_count: usize,
    pub est_latency: Option<f64>,
    pub est_cp_min: Option<f64>,
    pub est_cp_max: Option<f64>,
}

impl ChildSummary {
    fn has_estimates(&self) -> bool {
        self.est_latency.is_some() || self.est_cp_min.is_some() || self.est_cp_max.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallNode {
    pub name: String,
    pub is_defined: bool,
    pub summary: ChildSummary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    pub arg_types: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CallGraph {
    pub nodes: Vec<CallNode>,
    pub edges: Vec<CallEdge>,
}

impl CallGraph {
    pub fn node(&self, name: &str) -> Option<&CallNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Adds a node if absent; returns its index.
    pub fn add_function(&mut self, name: &str, is_defined: bool) -> usize {
        if let Some(i) = self.nodes.iter().position(|n| n.name == name) {
            return i;
        }
        self.nodes.push(CallNode {
            name: name.to_string(),
            is_defined,
            summary: ChildSummary::default(),
        });
        self.nodes.len() - 1
    }

    pub fn add_call(&mut self, caller: &str, callee: &str, arg_types: Vec<String>) {
        self.add_function(callee, false);
        self.edges.push(CallEdge {
            caller: caller.to_string(),
            callee: callee.to_string(),
            arg_types,
        });
    }

    /// Replaces a node's summary; returns false when the function is unknown.
    pub fn set_summary(&mut self, name: &str, summary: ChildSummary) -> bool {
        match self.nodes.iter_mut().find(|n| n.name == name) {
            Some(node) => {
                node.summary = summary;
                true
            }
            None => false,
        }
    }

    /// Functions reachable from `from` through one or more calls, in BFS order.
    pub fn reachable_from(&self, from: &str) -> Result<Vec<&str>, GraphError> {
        if self.node(from).is_none() {
            return Err(GraphError::UnknownTop { name: from.to_string() });
        }
        let mut callees: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in &self.edges {
            callees.entry(e.caller.as_str()).or_default().push(e.callee.as_str());
        }
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([from]);
        while let Some(f) = queue.pop_front() {
            for &c in callees.get(f).map(Vec::as_slice).unwrap_or_default() {
                if seen.insert(c) {
                    order.push(c);
                    queue.push_back(c);
                }
            }
        }
        Ok(order)
    }

    pub fn is_reachable(&self, from: &str, to: &str) -> bool {
        self.reachable_from(from).is_ok_and(|r| r.contains(&to))
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph callgraph {\n");
        for n in &self.nodes {
            let shape = if n.is_defined { "box" } else { "ellipse" };
            let _ = writeln!(out, "  \"{}\" [shape={shape}];", n.name);
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                e.caller,
                e.callee,
                e.arg_types.join(", ")
            );
        }
        out.push_str("}\n");
        out
    }
}

/// One node per function and one edge per direct call site.
pub fn build_callgraph(module: &IrModule) -> CallGraph {
    let mut graph = CallGraph::default();
    for f in &module.functions {
        let i = graph.add_function(&f.name, f.is_defined);
        if f.is_defined {
            let structural_latency = build_cdfg(f).map(|g| longest_path(&g) as f64).ok();
            graph.nodes[i].summary = ChildSummary {
                fcu_count: count_fcus(f),
                est_latency: structural_latency,
                est_cp_min: None,
                est_cp_max: None,
            };
        }
    }
    for f in module.defined_functions() {
        for inst in f.instructions() {
            if let Some(callee) = &inst.callee {
                graph.add_call(&f.name, callee, inst.call_arg_types.clone());
            }
        }
    }
    graph
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CallGraphFeatures {
    pub child_count: f64,
    pub max_child_fcu: f64,
    pub min_child_fcu: f64,
    pub max_child_latency: f64,
    pub max_child_cp: f64,
    pub min_child_cp: f64,
}

impl CallGraphFeatures {
    pub fn to_slots(&self) -> [f64; CALLGRAPH_SLOT_COUNT] {
        [
            self.child_count,
            self.max_child_fcu,
            self.min_child_fcu,
            self.max_child_latency,
            self.max_child_cp,
            self.min_child_cp,
        ]
    }
}

/// Aggregates child summaries over everything reachable from `top`.
///
/// Children are defined functions plus declarations that carry external
/// estimates; bare declarations (intrinsics, library calls) are skipped.
pub fn callgraph_features(graph: &CallGraph, top: &str) -> Result<CallGraphFeatures, GraphError> {
    let children: Vec<&ChildSummary> = graph
        .reachable_from(top)?
        .into_iter()
        .filter(|&name| name != top)
        .filter_map(|name| graph.node(name))
        .filter(|n| n.is_defined || n.summary.has_estimates())
        .map(|n| &n.summary)
        .collect();
    if children.is_empty() {
        return Ok(CallGraphFeatures::default());
    }
    let fold = |f: &dyn Fn(&ChildSummary) -> f64, pick: fn(f64, f64) -> f64| {
        children.iter().map(|c| f(c)).reduce(pick).unwrap_or(0.0)
    };
    Ok(CallGraphFeatures {
        child_count: children.len() as f64,
        max_child_fcu: fold(&|c| c.fcu_count as f64, f64::max),
        min_child_fcu: fold(&|c| c.fcu_count as f64, f64::min),
        max_child_latency: fold(&|c| c.est_latency.unwrap_or(0.0), f64::max),
        max_child_cp: fold(&|c| c.est_cp_max.unwrap_or(0.0), f64::max),
        min_child_cp: fold(&|c| c.est_cp_min.unwrap_or(0.0), f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_module;

    const CHAIN: &str = "define void @h() {\n  ret void\n}\n\ndefine void @g() {\n  call void @h()\n  ret void\n}\n\ndefine void @f() {\n  call void @g()\n  call void @g()\n  ret void\n}\n";

    #[test]
    fn edges_per_call_site() {
        let g = build_callgraph(&parse_module(CHAIN).unwrap());
        let fg: Vec<_> = g.edges.iter().filter(|e| e.caller == "f").collect();
        assert_eq!(fg.len(), 2);
        assert!(fg.iter().all(|e| e.callee == "g"));
        assert!(g.is_reachable("f", "h"));
        assert!(!g.is_reachable("h", "f"));
    }

    #[test]
    fn leaf_module_has_no_edges() {
        let g = build_callgraph(&parse_module("define void @f() {\n  ret void\n}\n").unwrap());
        assert!(g.edges.is_empty());
        assert_eq!(callgraph_features(&g, "f").unwrap(), CallGraphFeatures::default());
    }

    #[test]
    fn unknown_top() {
        let g = build_callgraph(&parse_module(CHAIN).unwrap());
        assert_eq!(
            callgraph_features(&g, "main"),
            Err(GraphError::UnknownTop { name: "main".into() })
        );
    }

    fn two_children() -> CallGraph {
        let mut g = CallGraph::default();
        g.add_function("top", true);
        g.add_function("a", true);
        g.add_function("b", true);
        g.add_call("top", "a", vec![]);
        g.add_call("top", "b", vec!["i32".into()]);
        g
    }

    #[test]
    fn fcu_and_cp_min_max() {
        let mut g = two_children();
        g.set_summary(
            "a",
            ChildSummary {
                fcu_count: 2,
                est_latency: Some(10.0),
                est_cp_min: Some(3.1),
                est_cp_max: Some(3.1),
            },
        );
        g.set_summary(
            "b",
            ChildSummary {
                fcu_count: 5,
                est_latency: None,
                est_cp_min: Some(4.7),
                est_cp_max: Some(4.7),
            },
        );
        let f = callgraph_features(&g, "top").unwrap();
        assert_eq!(f.child_count, 2.0);
        assert_eq!((f.max_child_fcu, f.min_child_fcu), (5.0, 2.0));
        assert_eq!((f.max_child_cp, f.min_child_cp), (4.7, 3.1));
        assert_eq!(f.max_child_latency, 10.0);
    }

    #[test]
    fn structural_latency_default() {
        let g = build_callgraph(&parse_module(CHAIN).unwrap());
        let f = callgraph_features(&g, "f").unwrap();
        assert_eq!(f.child_count, 2.0);
        assert_eq!(f.max_child_latency, 1.0);
        assert_eq!((f.max_child_cp, f.min_child_cp), (0.0, 0.0));
    }

    #[test]
    fn bare_declarations_are_not_children() {
        let src = "declare void @llvm.donothing()\ndefine void @f() {\n  call void @llvm.donothing()\n  ret void\n}\n";
        let g = build_callgraph(&parse_module(src).unwrap());
        assert_eq!(g.edges.len(), 1);
        assert_eq!(callgraph_features(&g, "f").unwrap().child_count, 0.0);
    }
}
