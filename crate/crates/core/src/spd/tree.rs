use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::SpdError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Serial,
    Parallel,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Serial => "s",
            Op::Parallel => "p",
        }
    }
}

/// SPD decomposition tree in concise (k-ary) form.
///
/// Trees are valid by construction: leaf ids are unique identifiers, leaf
/// weights are positive, inner nodes have at least two children and serial
/// edge weights are non-negative. Variants can be matched on but only built
/// through [`SpdTree::leaf`], [`SpdTree::serial`] and [`SpdTree::parallel`].
#[derive(Debug, Clone, PartialEq)]
pub enum SpdTree {
    Leaf(Leaf),
    Inner(Inner),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    id: String,
    weight: f64,
}

impl Leaf {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inner {
    op: Op,
    children: Vec<SpdTree>,
    edge_weight: f64,
}

impl Inner {
    pub fn op(&self) -> Op {
        self.op
    }

    pub fn children(&self) -> &[SpdTree] {
        &self.children
    }

    /// Weight of every edge a serial node creates; always 0 for parallel nodes.
    pub fn edge_weight(&self) -> f64 {
        self.edge_weight
    }
}

pub(crate) fn is_identifier(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SpdTree {
    pub fn leaf(id: impl Into<String>, weight: f64) -> Result<Self, SpdError> {
        let id = id.into();
        if !is_identifier(&id) {
            return Err(SpdError::BadId(id));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(SpdError::LeafWeight(id, weight));
        }
        Ok(SpdTree::Leaf(Leaf { id, weight }))
    }

    pub fn serial(children: Vec<SpdTree>, edge_weight: f64) -> Result<Self, SpdError> {
        if !(edge_weight >= 0.0) || !edge_weight.is_finite() {
            return Err(SpdError::EdgeWeight(edge_weight));
        }
        Self::inner(Op::Serial, children, edge_weight)
    }

    pub fn parallel(children: Vec<SpdTree>) -> Result<Self, SpdError> {
        Self::inner(Op::Parallel, children, 0.0)
    }

    fn inner(op: Op, children: Vec<SpdTree>, edge_weight: f64) -> Result<Self, SpdError> {
        if children.len() < 2 {
            return Err(SpdError::Arity(children.len()));
        }
        let mut seen = HashSet::new();
        for c in &children {
            for leaf in c.leaves() {
                if !seen.insert(leaf.id()) {
                    return Err(SpdError::DuplicateLeafId(leaf.id().to_string()));
                }
            }
        }
        Ok(SpdTree::Inner(Inner { op, children, edge_weight }))
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            SpdTree::Leaf(l) => out.push(l),
            SpdTree::Inner(i) => i.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            SpdTree::Leaf(_) => 1,
            SpdTree::Inner(i) => i.children.iter().map(SpdTree::leaf_count).sum(),
        }
    }

    pub fn weight_sum(&self) -> f64 {
        self.leaves().iter().map(|l| l.weight).sum()
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, SpdTree::Leaf(_))
    }

    /// Copy of the tree with every serial edge weight replaced by `b`.
    pub fn with_edge_weight(&self, b: f64) -> Result<Self, SpdError> {
        match self {
            SpdTree::Leaf(_) => Ok(self.clone()),
            SpdTree::Inner(i) => {
                let children =
                    i.children.iter().map(|c| c.with_edge_weight(b)).collect::<Result<_, _>>()?;
                match i.op {
                    Op::Serial => Self::serial(children, b),
                    Op::Parallel => Self::parallel(children),
                }
            }
        }
    }

    pub fn to_json(&self) -> TreeJson {
        match self {
            SpdTree::Leaf(l) => TreeJson::Leaf { leaf: l.id.clone(), w: l.weight },
            SpdTree::Inner(i) => TreeJson::Inner {
                op: i.op.symbol().to_string(),
                b: (i.op == Op::Serial && i.edge_weight != 0.0).then_some(i.edge_weight),
                children: i.children.iter().map(SpdTree::to_json).collect(),
            },
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, SpdError> {
        let json: TreeJson = serde_json::from_str(text).map_err(|e| SpdError::Json(e.to_string()))?;
        Self::try_from(json)
    }
}

/// Interchange form: `{"leaf": id, "w": x}` or
/// `{"op": "s"|"p", "b": x, "children": [...]}` (`b` optional, serial only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeJson {
    Leaf {
        leaf: String,
        w: f64,
    },
    Inner {
        op: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
        children: Vec<TreeJson>,
    },
}

impl TryFrom<TreeJson> for SpdTree {
    type Error = SpdError;

    fn try_from(json: TreeJson) -> Result<Self, SpdError> {
        match json {
            TreeJson::Leaf { leaf, w } => SpdTree::leaf(leaf, w),
            TreeJson::Inner { op, b, children } => {
                let children = children.into_iter().map(SpdTree::try_from).collect::<Result<_, _>>()?;
                match (op.as_str(), b) {
                    ("s", b) => SpdTree::serial(children, b.unwrap_or(0.0)),
                    ("p", None) => SpdTree::parallel(children),
                    ("p", Some(_)) => Err(SpdError::Json("edge weight is only valid on serial nodes".into())),
                    (other, _) => Err(SpdError::Json(format!("unknown op {other:?}"))),
                }
            }
        }
    }
}
