use std::io::Read;

use anyhow::{Context, Result};
use serde_json::Value;
use spd_alloc::graph::StreamingGraph;
use spd_alloc::spd::{expand, parse_tree, SpdTree};

/// A parsed input: always a graph, plus the tree when the input was one.
pub struct Instance {
    tree: Option<SpdTree>,
    pub graph: StreamingGraph,
}

impl Instance {
    pub fn tree(&self) -> Option<&SpdTree> {
        self.tree.as_ref()
    }
}

/// Drops `//` comment lines (instance metadata headers).
pub fn strip_comments(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("//")).collect::<Vec<_>>().join("\n")
}

pub fn read_instance(path: &str) -> Result<Instance> {
    let text = if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?
    };
    parse_instance(&text)
}

/// JSON with a `"nodes"` key is a graph, other JSON is a tree, anything else tree DSL.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let body = strip_comments(text);
    if body.trim_start().starts_with('{') {
        let value: Value = serde_json::from_str(&body).context("invalid JSON input")?;
        if value.get("nodes").is_some() {
            let graph = StreamingGraph::from_json_str(&body)?;
            return Ok(Instance { tree: None, graph });
        }
        let tree = SpdTree::from_json_str(&body)?;
        return Ok(Instance { graph: expand(&tree), tree: Some(tree) });
    }
    let tree = parse_tree(&body)?;
    Ok(Instance { graph: expand(&tree), tree: Some(tree) })
}
