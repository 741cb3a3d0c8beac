//! The foreign-key graph of a schema and join-path inference over it.
//!
//! Tables are vertices, foreign keys are undirected edges. Parallel edges are
//! kept; each carries the label of its foreign key so that ties between
//! equally short join trees resolve deterministically.

use crate::error::{Error, Result};
use crate::schema::Schema;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    /// Index of the originating foreign key in `Schema::foreign_keys`.
    pub fk: usize,
    pub label: String,
}

impl GraphEdge {
    fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

/// One vertex per table (schema order), one edge per foreign key.
pub fn build_schema_graph(schema: &Schema) -> SchemaGraph {
    let vertices: Vec<String> = schema.tables.iter().map(|t| t.name.clone()).collect();
    let edges = schema
        .foreign_keys
        .iter()
        .enumerate()
        .map(|(fk, key)| GraphEdge {
            // Schema::new guarantees both endpoints resolve.
            a: schema.table_index(&key.from.table).expect("validated schema"),
            b: schema.table_index(&key.to.table).expect("validated schema"),
            fk,
            label: key.label(),
        })
        .collect();
    SchemaGraph { vertices, edges }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinStep {
    pub table: String,
    /// Index into `SchemaGraph::edges` of the edge that reaches this table;
    /// `None` for the first table.
    pub via: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinPath {
    pub steps: Vec<JoinStep>,
}

impl JoinPath {
    pub fn edge_count(&self) -> usize {
        self.steps.iter().filter(|s| s.via.is_some()).count()
    }

    pub fn tables(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.table.as_str())
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

impl SchemaGraph {
    pub fn vertex(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.eq_ignore_ascii_case(name))
    }

    /// Edges sorted by (label, index); self loops dropped.
    fn ordered_edges(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len())
            .filter(|&i| self.edges[i].a != self.edges[i].b)
            .collect();
        order.sort_by(|&x, &y| self.edges[x].label.cmp(&self.edges[y].label).then(x.cmp(&y)));
        order
    }

    fn components(&self) -> DisjointSet {
        let mut dsu = DisjointSet::new(self.vertices.len());
        for e in &self.edges {
            dsu.union(e.a, e.b);
        }
        dsu
    }

    /// Kruskal over the subgraph induced by `members`. Returns the chosen
    /// edges if the induced subgraph is connected.
    fn spanning_tree(&self, members: &[bool], order: &[usize]) -> Option<Vec<usize>> {
        let count = members.iter().filter(|m| **m).count();
        let mut dsu = DisjointSet::new(self.vertices.len());
        let mut chosen = Vec::with_capacity(count.saturating_sub(1));
        for &i in order {
            let e = &self.edges[i];
            if members[e.a] && members[e.b] && dsu.union(e.a, e.b) {
                chosen.push(i);
                if chosen.len() + 1 == count {
                    break;
                }
            }
        }
        (chosen.len() + 1 == count).then_some(chosen)
    }
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Finds a minimum-edge tree connecting every `required` table and linearizes
/// it as a join order starting from the first required table.
///
/// Among trees with the same edge count the one whose sorted edge-label
/// sequence is lexicographically smallest wins. Search is exhaustive over sets
/// of intermediate tables, smallest first.
pub fn join_path(graph: &SchemaGraph, required: &[&str]) -> Result<JoinPath> {
    let no_path = || Error::NoJoinPath {
        tables: required.iter().map(|s| s.to_string()).collect(),
    };
    let mut req: Vec<usize> = Vec::new();
    for name in required {
        let v = graph.vertex(name).ok_or_else(no_path)?;
        if !req.contains(&v) {
            req.push(v);
        }
    }
    let Some(&start) = req.first() else {
        return Err(no_path());
    };

    let mut dsu = graph.components();
    let root = dsu.find(start);
    if req.iter().any(|&v| dsu.find(v) != root) {
        return Err(no_path());
    }

    let order = graph.ordered_edges();
    let optional: Vec<usize> = (0..graph.vertices.len())
        .filter(|v| !req.contains(v) && dsu.find(*v) == root)
        .collect();

    let mut best: Option<Vec<usize>> = None;
    for extra in 0..=optional.len() {
        let mut combo: Vec<usize> = (0..extra).collect();
        loop {
            let mut members = vec![false; graph.vertices.len()];
            for &v in &req {
                members[v] = true;
            }
            for &i in &combo {
                members[optional[i]] = true;
            }
            if let Some(tree) = graph.spanning_tree(&members, &order) {
                let better = match &best {
                    None => true,
                    Some(current) => label_key(graph, &tree) < label_key(graph, current),
                };
                if better {
                    best = Some(tree);
                }
            }
            if extra == 0 || !next_combination(&mut combo, optional.len()) {
                break;
            }
        }
        if best.is_some() {
            break;
        }
    }
    let tree = best.ok_or_else(no_path)?;
    Ok(linearize(graph, start, tree))
}

fn label_key<'g>(graph: &'g SchemaGraph, tree: &[usize]) -> Vec<(&'g str, usize)> {
    // Kruskal emits edges in label order already.
    tree.iter().map(|&i| (graph.edges[i].label.as_str(), i)).collect()
}

fn linearize(graph: &SchemaGraph, start: usize, mut tree: Vec<usize>) -> JoinPath {
    let mut visited = vec![start];
    let mut steps = vec![JoinStep {
        table: graph.vertices[start].clone(),
        via: None,
    }];
    while !tree.is_empty() {
        let pos = tree
            .iter()
            .enumerate()
            .filter(|(_, &e)| {
                let edge = &graph.edges[e];
                visited.iter().any(|&v| edge.touches(v))
            })
            .min_by(|(_, &x), (_, &y)| {
                graph.edges[x].label.cmp(&graph.edges[y].label).then(x.cmp(&y))
            })
            .map(|(p, _)| p)
            .expect("tree is connected");
        let e = tree.remove(pos);
        let edge = &graph.edges[e];
        let next = if visited.contains(&edge.a) {
            edge.other(edge.a)
        } else {
            edge.a
        };
        visited.push(next);
        steps.push(JoinStep {
            table: graph.vertices[next].clone(),
            via: Some(e),
        });
    }
    JoinPath { steps }
}
