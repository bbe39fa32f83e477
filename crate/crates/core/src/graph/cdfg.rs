use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::ir::{Category, IrFunction};

use super::GraphError;

pub const CDFG_SLOT_COUNT: usize = 6;

pub const CDFG_SLOT_NAMES: [&str; CDFG_SLOT_COUNT] = [
    "cdfg_total_nodes",
    "cdfg_longest_path_len",
    "cdfg_fcu_count",
    "cdfg_max_degree",
    "cdfg_avg_degree",
    "cdfg_data_edge_count",
];

/// A value flowing from the block that defines it to a block that uses it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataEdge {
    pub def_block: String,
    pub use_block: String,
    pub value_id: String,
    pub data_type: String,
}

/// Basic blocks as nodes; successor edges plus cross-block def-use edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cdfg {
    pub nodes: Vec<String>,
    pub control_edges: Vec<(String, String)>,
    pub data_edges: Vec<DataEdge>,
}

impl Cdfg {
    /// A control-only graph; the first node is the entry.
    pub fn from_control_edges(nodes: Vec<String>, control_edges: Vec<(String, String)>) -> Self {
        Self {
            nodes,
            control_edges,
            data_edges: Vec::new(),
        }
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
    }

    /// Successor lists by node index, in edge order.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let index = self.index();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (from, to) in &self.control_edges {
            adj[index[from.as_str()]].push(index[to.as_str()]);
        }
        adj
    }

    /// In-degree plus out-degree of each node over control edges.
    pub fn degrees(&self) -> Vec<usize> {
        let index = self.index();
        let mut deg = vec![0; self.nodes.len()];
        for (from, to) in &self.control_edges {
            deg[index[from.as_str()]] += 1;
            deg[index[to.as_str()]] += 1;
        }
        deg
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph \"{name}\" {{\n");
        for n in &self.nodes {
            let _ = writeln!(out, "  \"{n}\";");
        }
        for (a, b) in &self.control_edges {
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
        }
        for e in &self.data_edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [style=dashed, label=\"{} : {}\"];",
                e.def_block, e.use_block, e.value_id, e.data_type
            );
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_cdfg(function: &IrFunction) -> Result<Cdfg, GraphError> {
    if function.blocks.is_empty() {
        return Err(GraphError::EmptyFunction {
            function: function.name.clone(),
        });
    }
    let nodes = function.blocks.iter().map(|b| b.label.clone()).collect();
    let control_edges = function
        .blocks
        .iter()
        .flat_map(|b| b.successor_labels.iter().map(|s| (b.label.clone(), s.clone())))
        .collect();

    let mut defs: HashMap<&str, (&str, &str)> = HashMap::new();
    for block in &function.blocks {
        for inst in &block.instructions {
            if let Some(id) = &inst.result_id {
                defs.insert(id, (&block.label, &inst.result_type));
            }
        }
    }
    let mut seen = HashSet::new();
    let mut data_edges = Vec::new();
    for block in &function.blocks {
        for inst in &block.instructions {
            for op in &inst.operand_ids {
                let Some(&(def_block, ty)) = defs.get(op.as_str()) else {
                    continue;
                };
                if def_block != block.label && seen.insert((def_block, block.label.as_str(), op.as_str())) {
                    data_edges.push(DataEdge {
                        def_block: def_block.to_string(),
                        use_block: block.label.clone(),
                        value_id: op.clone(),
                        data_type: ty.to_string(),
                    });
                }
            }
        }
    }
    Ok(Cdfg {
        nodes,
        control_edges,
        data_edges,
    })
}

/// Number of nodes on the longest path once DFS back edges (from the entry
/// block first, then any unreached blocks in order) are removed.
pub fn longest_path(graph: &Cdfg) -> usize {
    let n = graph.nodes.len();
    if n == 0 {
        return 0;
    }
    let adj = graph.adjacency();
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; n];
    let mut dag: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut postorder = Vec::with_capacity(n);
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let u = top.0;
            if let Some(&v) = adj[u].get(top.1) {
                top.1 += 1;
                match mark[v] {
                    Mark::Active => {} // back edge
                    Mark::Done => dag[u].push(v),
                    Mark::New => {
                        dag[u].push(v);
                        mark[v] = Mark::Active;
                        stack.push((v, 0));
                    }
                }
            } else {
                mark[u] = Mark::Done;
                postorder.push(u);
                stack.pop();
            }
        }
    }
    // postorder visits successors before predecessors
    let mut longest = vec![1usize; n];
    for &u in &postorder {
        if let Some(best) = dag[u].iter().map(|&v| longest[v]).max() {
            longest[u] = best + 1;
        }
    }
    longest.into_iter().max().unwrap_or(0)
}

/// Functional-unit estimate: for each (math opcode, result type) pair, the
/// largest number of occurrences within a single block, summed over pairs.
pub fn count_fcus(function: &IrFunction) -> usize {
    let mut peak: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for block in &function.blocks {
        let mut local: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for inst in &block.instructions {
            if inst.category == Category::Math {
                *local.entry((inst.opcode.as_str(), &inst.result_type)).or_default() += 1;
            }
        }
        for (key, c) in local {
            let p = peak.entry(key).or_default();
            *p = (*p).max(c);
        }
    }
    peak.values().sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdfgFeatures {
    pub total_nodes: f64,
    pub longest_path_len: f64,
    pub fcu_count: f64,
    pub max_degree: f64,
    pub avg_degree: f64,
    pub data_edge_count: f64,
}

impl CdfgFeatures {
    pub fn to_slots(&self) -> [f64; CDFG_SLOT_COUNT] {
        [
            self.total_nodes,
            self.longest_path_len,
            self.fcu_count,
            self.max_degree,
            self.avg_degree,
            self.data_edge_count,
        ]
    }
}

pub fn cdfg_features(graph: &Cdfg, fcu: usize) -> CdfgFeatures {
    let degrees = graph.degrees();
    let nodes = graph.nodes.len();
    CdfgFeatures {
        total_nodes: nodes as f64,
        longest_path_len: longest_path(graph) as f64,
        fcu_count: fcu as f64,
        max_degree: degrees.iter().copied().max().unwrap_or(0) as f64,
        avg_degree: if nodes == 0 {
            0.0
        } else {
            degrees.iter().sum::<usize>() as f64 / nodes as f64
        },
        data_edge_count: graph.data_edges.len() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_module;

    fn function(src: &str) -> IrFunction {
        parse_module(src).unwrap().functions.into_iter().next().unwrap()
    }

    const DIAMOND: &str = "define i32 @f(i1 %c, i32 %a) {
entry:
  %x = add i32 %a, 1
  br i1 %c, label %t, label %e
t:
  br label %merge
e:
  br label %merge
merge:
  %y = mul i32 %x, %x
  ret i32 %y
}
";

    #[test]
    fn single_block_graph() {
        let f = function("define void @f() {\n  ret void\n}\n");
        let g = build_cdfg(&f).unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert!(g.control_edges.is_empty() && g.data_edges.is_empty());
        assert_eq!(longest_path(&g), 1);
        assert_eq!(cdfg_features(&g, 0).to_slots(), [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn diamond() {
        let g = build_cdfg(&function(DIAMOND)).unwrap();
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.control_edges.len(), 4);
        assert_eq!(
            g.data_edges,
            [DataEdge {
                def_block: "entry".into(),
                use_block: "merge".into(),
                value_id: "%x".into(),
                data_type: "i32".into(),
            }]
        );
        let feats = cdfg_features(&g, 2);
        assert_eq!(feats.total_nodes, 4.0);
        assert_eq!(feats.longest_path_len, 3.0);
        assert_eq!(feats.max_degree, 2.0);
        assert_eq!(feats.avg_degree, 2.0);
    }

    #[test]
    fn chain_and_loop() {
        let names: Vec<String> = (0..5).map(|i| format!("b{i}")).collect();
        let edges = names.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        let chain = Cdfg::from_control_edges(names.clone(), edges);
        assert_eq!(longest_path(&chain), 5);

        // b0 -> b1 -> b2 -> b1 (latch) ; b1 -> b3
        let looped = Cdfg::from_control_edges(
            names[..4].to_vec(),
            vec![
                ("b0".into(), "b1".into()),
                ("b1".into(), "b2".into()),
                ("b2".into(), "b1".into()),
                ("b1".into(), "b3".into()),
                ("b2".into(), "b2".into()),
            ],
        );
        assert_eq!(longest_path(&looped), 3);
    }

    #[test]
    fn fcu_rule() {
        let f = function("define i32 @f(i32 %a) {\n  %x = add i32 %a, 1\n  %y = add i32 %x, 2\n  %z = mul i32 %y, 3\n  ret i32 %z\n}\n");
        assert_eq!(count_fcus(&f), 3);
        let f = function("define i32 @f(i32 %a) {\nentry:\n  %x = add i32 %a, 1\n  br label %n\nn:\n  %y = add i32 %x, 2\n  ret i32 %y\n}\n");
        assert_eq!(count_fcus(&f), 1);
        assert_eq!(count_fcus(&function("define void @f() {\n  ret void\n}\n")), 0);
        let f = function("define i32 @f(i32 %a, i64 %b) {\n  %x = add i32 %a, 1\n  %y = add i64 %b, 2\n  ret i32 %x\n}\n");
        assert_eq!(count_fcus(&f), 2);
    }

    #[test]
    fn data_edge_count_on_chain() {
        let f = function("define i32 @f(i32 %a) {\nb0:\n  %x = add i32 %a, 1\n  br label %b1\nb1:\n  %y = add i32 %x, %x\n  br label %b2\nb2:\n  %z = add i32 %y, 1\n  ret i32 %z\n}\n");
        let g = build_cdfg(&f).unwrap();
        assert_eq!(g.data_edges.len(), 2);
        assert_eq!(cdfg_features(&g, 0).data_edge_count, 2.0);
        assert!(g.to_dot("f").contains("\"b0\" -> \"b1\";"));
    }

    #[test]
    fn empty_function() {
        let m = parse_module("declare void @g()\n").unwrap();
        assert!(matches!(build_cdfg(&m.functions[0]), Err(GraphError::EmptyFunction { .. })));
    }
}
