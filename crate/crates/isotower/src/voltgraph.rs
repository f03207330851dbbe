//! Directed multigraphs, voltage assignments, derived graphs, coverings and
//! deck transformations.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite group whose elements are the indices `0..order()`.
pub trait FiniteGroup: Send + Sync {
    fn order(&self) -> usize;
    fn identity(&self) -> u32;
    fn mul(&self, a: u32, b: u32) -> u32;
    fn inv(&self, a: u32) -> u32;
    fn label(&self, a: u32) -> String {
        a.to_string()
    }
}

/// `Z/n` with element `i` standing for `i`.
#[derive(Clone, Debug)]
pub struct CyclicGroup(pub u32);

impl FiniteGroup for CyclicGroup {
    fn order(&self) -> usize {
        self.0 as usize
    }
    fn identity(&self) -> u32 {
        0
    }
    fn mul(&self, a: u32, b: u32) -> u32 {
        (a + b) % self.0
    }
    fn inv(&self, a: u32) -> u32 {
        (self.0 - a) % self.0
    }
}

pub const TABLE_GROUP_CAP: usize = 10_000;

/// A group given by its full multiplication table.
#[derive(Clone, Debug)]
pub struct TableGroup {
    n: usize,
    table: Vec<u32>,
    inverses: Vec<u32>,
    identity: u32,
    labels: Vec<String>,
}

impl TableGroup {
    /// Table of `elems` under `mul`; `elems` must already be closed.
    pub fn from_elements<T, F, L>(elems: Vec<T>, mul: F, label: L) -> Result<TableGroup>
    where
        T: Clone + Eq + std::hash::Hash,
        F: Fn(&T, &T) -> T,
        L: Fn(&T) -> String,
    {
        let n = elems.len();
        if n > TABLE_GROUP_CAP {
            return Err(Error::CapExceeded { what: "group table", size: n as u64, cap: TABLE_GROUP_CAP as u64 });
        }
        let index: HashMap<T, u32> = elems.iter().cloned().enumerate().map(|(i, e)| (e, i as u32)).collect();
        let mut table = vec![0u32; n * n];
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                let c = mul(a, b);
                table[i * n + j] = *index
                    .get(&c)
                    .ok_or_else(|| Error::InvalidParams("element set is not closed".into()))?;
            }
        }
        let labels = elems.iter().map(label).collect();
        TableGroup::from_table(n, table, labels)
    }

    pub fn from_table(n: usize, table: Vec<u32>, labels: Vec<String>) -> Result<TableGroup> {
        let identity = (0..n as u32)
            .find(|&e| (0..n as u32).all(|a| table[e as usize * n + a as usize] == a && table[a as usize * n + e as usize] == a))
            .ok_or_else(|| Error::InvalidParams("no identity".into()))?;
        let mut inverses = vec![0u32; n];
        for a in 0..n {
            inverses[a] = (0..n as u32)
                .find(|&b| table[a * n + b as usize] == identity)
                .ok_or_else(|| Error::InvalidParams("missing inverse".into()))?;
        }
        Ok(TableGroup { n, table, inverses, identity, labels })
    }

    /// Group table copied out of any finite group.
    pub fn from_group<G: FiniteGroup + ?Sized>(g: &G) -> Result<TableGroup> {
        let n = g.order();
        if n > TABLE_GROUP_CAP {
            return Err(Error::CapExceeded { what: "group table", size: n as u64, cap: TABLE_GROUP_CAP as u64 });
        }
        let mut table = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = g.mul(a as u32, b as u32);
            }
        }
        let labels = (0..n as u32).map(|a| g.label(a)).collect();
        TableGroup::from_table(n, table, labels)
    }

    pub fn cyclic(n: u32) -> TableGroup {
        TableGroup::from_group(&CyclicGroup(n)).unwrap()
    }

    /// Dihedral group of order `2n`, elements `r^i s^j`.
    pub fn dihedral(n: u32) -> TableGroup {
        let elems: Vec<(u32, u32)> = (0..2).flat_map(|j| (0..n).map(move |i| (i, j))).collect();
        TableGroup::from_elements(
            elems,
            |&(i1, j1), &(i2, j2)| {
                let i = if j1 == 0 { (i1 + i2) % n } else { (i1 + n - i2) % n };
                (i, (j1 + j2) % 2)
            },
            |&(i, j)| format!("r{i}s{j}"),
        )
        .unwrap()
    }

    /// Symmetric group on `k` letters, permutations in lexicographic order.
    pub fn symmetric(k: usize) -> TableGroup {
        let mut perms: Vec<Vec<u8>> = vec![(0..k as u8).collect()];
        let mut cur: Vec<u8> = (0..k as u8).collect();
        while next_permutation(&mut cur) {
            perms.push(cur.clone());
        }
        TableGroup::from_elements(
            perms,
            |a, b| b.iter().map(|&i| a[i as usize]).collect(),
            |p| format!("{p:?}"),
        )
        .unwrap()
    }

    /// The quaternion group `{±1, ±i, ±j, ±k}`.
    pub fn quaternion() -> TableGroup {
        // (sign, unit) with unit in 1,i,j,k = 0..4
        let elems: Vec<(i8, u8)> = [1i8, -1].iter().flat_map(|&s| (0..4u8).map(move |u| (s, u))).collect();
        let unit_mul = |a: u8, b: u8| -> (i8, u8) {
            match (a, b) {
                (0, x) | (x, 0) => (1, x),
                (x, y) if x == y => (-1, 0),
                (1, 2) => (1, 3),
                (2, 3) => (1, 1),
                (3, 1) => (1, 2),
                (2, 1) => (-1, 3),
                (3, 2) => (-1, 1),
                (1, 3) => (-1, 2),
                _ => unreachable!(),
            }
        };
        TableGroup::from_elements(
            elems,
            |&(s1, u1), &(s2, u2)| {
                let (s, u) = unit_mul(u1, u2);
                (s1 * s2 * s, u)
            },
            |&(s, u)| format!("{}{}", if s < 0 { "-" } else { "" }, ["1", "i", "j", "k"][u as usize]),
        )
        .unwrap()
    }

    /// Direct product `A × B` with `(a, b)` at index `a * |B| + b`.
    pub fn product<A: FiniteGroup + ?Sized, B: FiniteGroup + ?Sized>(a: &A, b: &B) -> Result<TableGroup> {
        let (na, nb) = (a.order() as u32, b.order() as u32);
        let elems: Vec<(u32, u32)> = (0..na).flat_map(|x| (0..nb).map(move |y| (x, y))).collect();
        TableGroup::from_elements(
            elems,
            |&(x1, y1), &(x2, y2)| (a.mul(x1, x2), b.mul(y1, y2)),
            |&(x, y)| format!("({},{})", a.label(x), b.label(y)),
        )
    }

    /// Associativity, identity and inverse laws by exhaustive check.
    pub fn verify_axioms(&self) -> bool {
        let n = self.n as u32;
        (0..n).all(|a| {
            self.mul(a, self.inv(a)) == self.identity
                && (0..n).all(|b| (0..n).all(|c| self.mul(self.mul(a, b), c) == self.mul(a, self.mul(b, c))))
        })
    }
}

fn next_permutation(v: &mut [u8]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl FiniteGroup for TableGroup {
    fn order(&self) -> usize {
        self.n
    }
    fn identity(&self) -> u32 {
        self.identity
    }
    fn mul(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize * self.n + b as usize]
    }
    fn inv(&self, a: u32) -> u32 {
        self.inverses[a as usize]
    }
    fn label(&self, a: u32) -> String {
        self.labels[a as usize].clone()
    }
}

/// The subgroup generated by `gens`, as a sorted element list.
pub fn subgroup_closure<G: FiniteGroup + ?Sized>(g: &G, gens: &[u32]) -> Vec<u32> {
    let n = g.order();
    let mut member = vec![false; n];
    let id = g.identity();
    member[id as usize] = true;
    let mut elems = vec![id];
    let mut used: Vec<u32> = Vec::new();
    for &h in gens {
        if member[h as usize] {
            continue;
        }
        used.push(h);
        // re-close with the enlarged generating set
        let mut queue: VecDeque<u32> = elems.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            for &s in &used {
                let y = g.mul(x, s);
                if !member[y as usize] {
                    member[y as usize] = true;
                    elems.push(y);
                    queue.push_back(y);
                }
            }
        }
    }
    elems.sort_unstable();
    elems
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedMultigraph {
    pub num_vertices: usize,
    pub edges: Vec<(u32, u32)>,
    /// Empty or one per vertex.
    #[serde(default)]
    pub vertex_labels: Vec<String>,
    /// Empty or one per edge.
    #[serde(default)]
    pub edge_labels: Vec<String>,
}

/// Out- and in-edge lists in compressed form.
#[derive(Clone, Debug)]
pub struct Adjacency {
    out_start: Vec<u32>,
    out_edges: Vec<u32>,
    in_start: Vec<u32>,
    in_edges: Vec<u32>,
}

impl Adjacency {
    pub fn new(g: &DirectedMultigraph) -> Adjacency {
        let n = g.num_vertices;
        let build = |key: &dyn Fn(&(u32, u32)) -> u32| {
            let mut start = vec![0u32; n + 1];
            for e in &g.edges {
                start[key(e) as usize + 1] += 1;
            }
            for i in 0..n {
                start[i + 1] += start[i];
            }
            let mut fill = start.clone();
            let mut list = vec![0u32; g.edges.len()];
            for (i, e) in g.edges.iter().enumerate() {
                let v = key(e) as usize;
                list[fill[v] as usize] = i as u32;
                fill[v] += 1;
            }
            (start, list)
        };
        let (out_start, out_edges) = build(&|e| e.0);
        let (in_start, in_edges) = build(&|e| e.1);
        Adjacency { out_start, out_edges, in_start, in_edges }
    }

    pub fn out(&self, v: u32) -> &[u32] {
        &self.out_edges[self.out_start[v as usize] as usize..self.out_start[v as usize + 1] as usize]
    }

    pub fn inn(&self, v: u32) -> &[u32] {
        &self.in_edges[self.in_start[v as usize] as usize..self.in_start[v as usize + 1] as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Weak,
    Strong,
}

/// Component label per vertex, numbered in order of each component's smallest vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<u32>,
    pub count: usize,
}

impl Partition {
    fn canonical(raw: &[u32]) -> Partition {
        let mut map: HashMap<u32, u32> = HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = map.len() as u32;
                *map.entry(r).or_insert(next)
            })
            .collect();
        Partition { labels, count: map.len() }
    }

    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.count];
        for (v, &c) in self.labels.iter().enumerate() {
            out[c as usize].push(v as u32);
        }
        out
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

impl DirectedMultigraph {
    pub fn new(num_vertices: usize) -> DirectedMultigraph {
        DirectedMultigraph { num_vertices, ..Default::default() }
    }

    pub fn from_edges(num_vertices: usize, edges: Vec<(u32, u32)>) -> Result<DirectedMultigraph> {
        let g = DirectedMultigraph { num_vertices, edges, ..Default::default() };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vertices as u32;
        if self.edges.iter().any(|&(s, t)| s >= n || t >= n) {
            return Err(Error::InvalidParams("edge endpoint out of range".into()));
        }
        if !self.vertex_labels.is_empty() && self.vertex_labels.len() != self.num_vertices {
            return Err(Error::InvalidParams("vertex label count".into()));
        }
        if !self.edge_labels.is_empty() && self.edge_labels.len() != self.edges.len() {
            return Err(Error::InvalidParams("edge label count".into()));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, s: u32, t: u32) -> u32 {
        self.edges.push((s, t));
        (self.edges.len() - 1) as u32
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_vertices];
        for &(s, _) in &self.edges {
            d[s as usize] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_vertices];
        for &(_, t) in &self.edges {
            d[t as usize] += 1;
        }
        d
    }

    pub fn components(&self, mode: Connectivity) -> Partition {
        match mode {
            Connectivity::Weak => {
                let mut uf = UnionFind::new(self.num_vertices);
                for &(s, t) in &self.edges {
                    uf.union(s, t);
                }
                let raw: Vec<u32> = (0..self.num_vertices as u32).map(|v| uf.find(v)).collect();
                Partition::canonical(&raw)
            }
            Connectivity::Strong => Partition::canonical(&self.tarjan()),
        }
    }

    /// Iterative Tarjan; returns an arbitrary component id per vertex.
    fn tarjan(&self) -> Vec<u32> {
        let n = self.num_vertices;
        let adj = self.adjacency();
        const UNSET: u32 = u32::MAX;
        let mut index = vec![UNSET; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![UNSET; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut next = 0u32;
        let mut ncomp = 0u32;
        for root in 0..n as u32 {
            if index[root as usize] != UNSET {
                continue;
            }
            let mut call: Vec<(u32, usize)> = vec![(root, 0)];
            index[root as usize] = next;
            low[root as usize] = next;
            next += 1;
            stack.push(root);
            on_stack[root as usize] = true;
            while let Some(&mut (v, ref mut i)) = call.last_mut() {
                let outs = adj.out(v);
                if *i < outs.len() {
                    let w = self.edges[outs[*i] as usize].1;
                    *i += 1;
                    if index[w as usize] == UNSET {
                        index[w as usize] = next;
                        low[w as usize] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w as usize] = true;
                        call.push((w, 0));
                    } else if on_stack[w as usize] {
                        low[v as usize] = low[v as usize].min(index[w as usize]);
                    }
                } else {
                    call.pop();
                    if let Some(&(u, _)) = call.last() {
                        low[u as usize] = low[u as usize].min(low[v as usize]);
                    }
                    if low[v as usize] == index[v as usize] {
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w as usize] = false;
                            comp[w as usize] = ncomp;
                            if w == v {
                                break;
                            }
                        }
                        ncomp += 1;
                    }
                }
            }
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.num_vertices == 0 || self.components(Connectivity::Weak).count == 1
    }

    /// True when some ordered vertex pair carries more than one edge.
    pub fn has_multi_edges(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.edges.len());
        self.edges.iter().any(|e| !seen.insert(*e))
    }

    /// The subgraph induced on `keep` (in the given order), with the kept edge indices.
    pub fn induced(&self, keep: &[u32]) -> (DirectedMultigraph, Vec<u32>) {
        let mut pos = vec![u32::MAX; self.num_vertices];
        for (i, &v) in keep.iter().enumerate() {
            pos[v as usize] = i as u32;
        }
        let mut g = DirectedMultigraph::new(keep.len());
        let mut kept = Vec::new();
        for (i, &(s, t)) in self.edges.iter().enumerate() {
            let (ps, pt) = (pos[s as usize], pos[t as usize]);
            if ps != u32::MAX && pt != u32::MAX {
                g.add_edge(ps, pt);
                if !self.edge_labels.is_empty() {
                    g.edge_labels.push(self.edge_labels[i].clone());
                }
                kept.push(i as u32);
            }
        }
        if !self.vertex_labels.is_empty() {
            g.vertex_labels = keep.iter().map(|&v| self.vertex_labels[v as usize].clone()).collect();
        }
        (g, kept)
    }

    /// DOT rendering; `edge_attrs` supplies extra attributes per edge.
    pub fn to_dot(&self, name: &str, vertex_color: Option<&[u32]>, edge_attrs: &dyn Fn(usize) -> String) -> String {
        let palette = ["black", "red", "blue", "darkgreen", "orange", "purple", "brown", "cyan", "magenta", "gray"];
        let mut s = format!("digraph {name} {{\n");
        for v in 0..self.num_vertices {
            let label = self.vertex_labels.get(v).cloned().unwrap_or_else(|| v.to_string());
            let color = vertex_color.map(|c| palette[c[v] as usize % palette.len()]);
            match color {
                Some(c) => writeln!(s, "  {v} [label=\"{}\", color={c}];", label.replace('"', "'")).unwrap(),
                None => writeln!(s, "  {v} [label=\"{}\"];", label.replace('"', "'")).unwrap(),
            }
        }
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            let extra = edge_attrs(i);
            if extra.is_empty() {
                writeln!(s, "  {a} -> {b};").unwrap();
            } else {
                writeln!(s, "  {a} -> {b} [{extra}];").unwrap();
            }
        }
        s.push_str("}\n");
        s
    }

    /// Parses the subset of DOT written by [`DirectedMultigraph::to_dot`]: numeric
    /// vertex ids, `a -> b` edges and optional `color=` attributes.
    pub fn from_dot(text: &str) -> Result<(DirectedMultigraph, Vec<Option<String>>)> {
        let mut n = 0usize;
        let mut edges = Vec::new();
        let mut colors = Vec::new();
        for line in text.lines() {
            let line = line.trim().trim_end_matches(';');
            if line.is_empty() || line.starts_with("digraph") || line.starts_with('}') || line.starts_with("//") {
                continue;
            }
            let (body, attrs) = match line.find('[') {
                Some(i) => (line[..i].trim(), Some(line[i + 1..].trim_end_matches(']'))),
                None => (line, None),
            };
            if let Some((a, b)) = body.split_once("->") {
                let a: usize = a.trim().parse().map_err(|_| Error::Parse(line.into()))?;
                let b: usize = b.trim().parse().map_err(|_| Error::Parse(line.into()))?;
                n = n.max(a + 1).max(b + 1);
                edges.push((a as u32, b as u32));
                let color = attrs.and_then(|a| {
                    a.split(',').find_map(|kv| {
                        let (k, v) = kv.split_once('=')?;
                        (k.trim() == "color").then(|| v.trim().trim_matches('"').to_string())
                    })
                });
                colors.push(color);
            } else {
                let v: usize = body.parse().map_err(|_| Error::Parse(line.into()))?;
                n = n.max(v + 1);
            }
        }
        Ok((DirectedMultigraph::from_edges(n, edges)?, colors))
    }
}

/// A group-valued labeling of the edges of a graph.
#[derive(Clone)]
pub struct VoltageAssignment<G: FiniteGroup> {
    pub graph: DirectedMultigraph,
    pub group: Arc<G>,
    pub values: Vec<u32>,
}

/// A graph morphism that is locally bijective on out- and in-stars.
#[derive(Clone, Debug)]
pub struct CoveringMap {
    pub total: DirectedMultigraph,
    pub base: DirectedMultigraph,
    pub vertex_map: Vec<u32>,
    pub edge_map: Vec<u32>,
}

impl<G: FiniteGroup> VoltageAssignment<G> {
    pub fn new(graph: DirectedMultigraph, group: Arc<G>, values: Vec<u32>) -> Result<Self> {
        if values.len() != graph.num_edges() {
            return Err(Error::InvalidParams("one voltage per edge required".into()));
        }
        if values.iter().any(|&v| v as usize >= group.order()) {
            return Err(Error::InvalidParams("voltage outside the group".into()));
        }
        Ok(VoltageAssignment { graph, group, values })
    }

    pub fn sheets(&self) -> usize {
        self.group.order()
    }

    /// The derived graph: vertex `(v, σ)` is `v |G| + σ`, edge `(e, σ)` is `e |G| + σ`,
    /// running from `(s, σ)` to `(t, σ α(e))`.
    pub fn derived_graph(&self) -> CoveringMap {
        let n = self.sheets();
        let g = &*self.group;
        let mut total = DirectedMultigraph::new(self.graph.num_vertices * n);
        total.edges.reserve(self.graph.num_edges() * n);
        let mut vertex_map = Vec::with_capacity(total.num_vertices);
        for v in 0..self.graph.num_vertices {
            vertex_map.extend(std::iter::repeat_n(v as u32, n));
        }
        let mut edge_map = Vec::with_capacity(self.graph.num_edges() * n);
        for (e, &(s, t)) in self.graph.edges.iter().enumerate() {
            let a = self.values[e];
            for sigma in 0..n as u32 {
                let src = s * n as u32 + sigma;
                let dst = t * n as u32 + g.mul(sigma, a);
                total.edges.push((src, dst));
                edge_map.push(e as u32);
            }
        }
        CoveringMap { total, base: self.graph.clone(), vertex_map, edge_map }
    }

    /// Voltage along a walk given as `(edge, forward)` steps.
    pub fn walk_voltage(&self, walk: &[(u32, bool)]) -> u32 {
        let g = &*self.group;
        walk.iter().fold(g.identity(), |acc, &(e, fwd)| {
            let a = self.values[e as usize];
            g.mul(acc, if fwd { a } else { g.inv(a) })
        })
    }

    /// Voltages of closed walks at `v`: the subgroup generated by the
    /// spanning-tree cycle voltages of `v`'s weak component.
    pub fn closed_walk_group(&self, v: u32) -> Vec<u32> {
        let g = &*self.group;
        let adj = self.graph.adjacency();
        let mut pot: Vec<Option<u32>> = vec![None; self.graph.num_vertices];
        pot[v as usize] = Some(g.identity());
        let mut queue = VecDeque::from([v]);
        let mut comp_edges: Vec<u32> = Vec::new();
        let mut seen_edge = vec![false; self.graph.num_edges()];
        while let Some(x) = queue.pop_front() {
            let px = pot[x as usize].unwrap();
            for (&e, fwd) in adj.out(x).iter().map(|e| (e, true)).chain(adj.inn(x).iter().map(|e| (e, false))) {
                if !seen_edge[e as usize] {
                    seen_edge[e as usize] = true;
                    comp_edges.push(e);
                }
                let (s, t) = self.graph.edges[e as usize];
                let (y, step) = if fwd {
                    (t, self.values[e as usize])
                } else {
                    (s, g.inv(self.values[e as usize]))
                };
                if pot[y as usize].is_none() {
                    pot[y as usize] = Some(g.mul(px, step));
                    queue.push_back(y);
                }
            }
        }
        let gens: Vec<u32> = comp_edges
            .iter()
            .map(|&e| {
                let (s, t) = self.graph.edges[e as usize];
                let ps = pot[s as usize].unwrap();
                let pt = pot[t as usize].unwrap();
                g.mul(g.mul(ps, self.values[e as usize]), g.inv(pt))
            })
            .collect();
        subgroup_closure(g, &gens)
    }

    /// `|G| / d_v` where `d_v` counts the `g` with `(v, g)` in the component of
    /// `(v, 1)`; cross-checked against a direct component count.
    pub fn component_orbit_count(&self, v: u32) -> Result<usize> {
        if !self.graph.is_connected() {
            return Err(Error::InvalidParams("base graph is disconnected".into()));
        }
        let n = self.sheets();
        let cover = self.derived_graph();
        let parts = cover.total.components(Connectivity::Weak);
        let root = parts.labels[(v as usize) * n + self.group.identity() as usize];
        let d_v = (0..n).filter(|&s| parts.labels[v as usize * n + s] == root).count();
        if n % d_v != 0 {
            return Err(Error::Invariant(format!("d_v = {d_v} does not divide |G| = {n}")));
        }
        let orbit = n / d_v;
        if orbit != parts.count {
            return Err(Error::Invariant(format!("orbit count {orbit} != component count {}", parts.count)));
        }
        let walk = self.closed_walk_group(v).len();
        if walk != d_v {
            return Err(Error::Invariant(format!("closed-walk group {walk} != d_v {d_v}")));
        }
        Ok(orbit)
    }

    /// Number of weak components of the derived graph without building it.
    pub fn derived_component_count(&self) -> usize {
        let n = self.sheets();
        let parts = self.graph.components(Connectivity::Weak);
        parts
            .members()
            .iter()
            .map(|m| n / self.closed_walk_group(m[0]).len())
            .sum()
    }

    /// Checks that left multiplication permutes the derived components
    /// transitively (over each base component).
    pub fn transitivity_check(&self) -> Result<bool> {
        if !self.graph.is_connected() {
            return Err(Error::InvalidParams("base graph is disconnected".into()));
        }
        let n = self.sheets();
        let g = &*self.group;
        let cover = self.derived_graph();
        let parts = cover.total.components(Connectivity::Weak);
        let mut reached = vec![false; parts.count];
        let root_comp = parts.labels[g.identity() as usize];
        for a in 0..n as u32 {
            let mut image: Option<u32> = None;
            for w in 0..cover.total.num_vertices {
                let (v, s) = (w / n, (w % n) as u32);
                let moved = v * n + g.mul(a, s) as usize;
                if parts.labels[w] == root_comp {
                    let c = parts.labels[moved];
                    if *image.get_or_insert(c) != c {
                        return Ok(false);
                    }
                }
            }
            reached[image.unwrap() as usize] = true;
        }
        Ok(reached.iter().all(|&r| r))
    }

    /// Voltage composed with `G -> G/H`, and the covering between the two derived graphs.
    pub fn quotient_by_normal(&self, h: &[u32]) -> Result<(VoltageAssignment<TableGroup>, CoveringMap)> {
        let g = &*self.group;
        let n = g.order();
        let hset: HashSet<u32> = h.iter().copied().collect();
        if !hset.contains(&g.identity()) || h.iter().any(|&a| h.iter().any(|&b| !hset.contains(&g.mul(a, g.inv(b))))) {
            return Err(Error::InvalidParams("H is not a subgroup".into()));
        }
        for x in 0..n as u32 {
            for &a in h {
                if !hset.contains(&g.mul(g.mul(x, a), g.inv(x))) {
                    return Err(Error::InvalidParams("H is not normal".into()));
                }
            }
        }
        let mut coset = vec![u32::MAX; n];
        let mut reps: Vec<u32> = Vec::new();
        for x in 0..n as u32 {
            if coset[x as usize] == u32::MAX {
                let id = reps.len() as u32;
                reps.push(x);
                for &a in h {
                    coset[g.mul(x, a) as usize] = id;
                }
            }
        }
        let m = reps.len();
        let mut table = vec![0u32; m * m];
        for (i, &a) in reps.iter().enumerate() {
            for (j, &b) in reps.iter().enumerate() {
                table[i * m + j] = coset[g.mul(a, b) as usize];
            }
        }
        let labels = reps.iter().map(|&r| format!("{}H", g.label(r))).collect();
        let quotient = Arc::new(TableGroup::from_table(m, table, labels)?);
        let values = self.values.iter().map(|&a| coset[a as usize]).collect();
        let qa = VoltageAssignment::new(self.graph.clone(), quotient, values)?;
        let upper = self.derived_graph();
        let lower = qa.derived_graph();
        let vertex_map = (0..upper.total.num_vertices)
            .map(|w| ((w / n) * m) as u32 + coset[w % n])
            .collect();
        let edge_map = (0..upper.total.num_edges())
            .map(|e| ((e / n) * m) as u32 + coset[e % n])
            .collect();
        let cover = CoveringMap { total: upper.total, base: lower.total, vertex_map, edge_map };
        cover.verify()?;
        Ok((qa, cover))
    }

    /// Galois verdict for the derived covering. When the derived graph is
    /// connected, also checks that the deck group is exactly left multiplication by `G`.
    pub fn galois(&self, limit_search: bool) -> Result<GaloisVerdict> {
        let cover = self.derived_graph();
        let verdict = cover.galois_verdict(limit_search)?;
        if verdict.components == 1 {
            let n = self.sheets();
            let g = &*self.group;
            let decks = cover.deck_transformations(Some(n + 1))?;
            let mut lefts: Vec<Vec<u32>> = (0..n as u32)
                .map(|a| {
                    (0..cover.total.num_vertices)
                        .map(|w| ((w / n) * n) as u32 + g.mul(a, (w % n) as u32))
                        .collect()
                })
                .collect();
            let mut found = decks.clone();
            lefts.sort();
            found.sort();
            if lefts != found {
                return Err(Error::Invariant("deck group differs from left multiplication by G".into()));
            }
        }
        Ok(verdict)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GaloisVerdict {
    pub galois: bool,
    pub sheets: usize,
    pub components: usize,
    /// Number of deck transformations found, when the search ran (capped at `sheets + 1`).
    pub deck_order: Option<usize>,
    pub transitive: Option<bool>,
    /// True when `d! > sheets` settled the question without a search.
    pub by_factorial_bound: bool,
}

/// `d! > n`, without overflow.
pub fn factorial_exceeds(d: usize, n: usize) -> bool {
    let mut f: u128 = 1;
    for i in 1..=d as u128 {
        f *= i;
        if f > n as u128 {
            return true;
        }
    }
    false
}

impl CoveringMap {
    pub fn sheets(&self) -> usize {
        if self.base.num_vertices == 0 {
            return 0;
        }
        self.vertex_map.iter().filter(|&&v| v == 0).count()
    }

    /// Incidence preservation and local bijectivity on stars.
    pub fn verify(&self) -> Result<()> {
        if self.vertex_map.len() != self.total.num_vertices || self.edge_map.len() != self.total.num_edges() {
            return Err(Error::Invariant("covering maps have the wrong length".into()));
        }
        for (e, &(s, t)) in self.total.edges.iter().enumerate() {
            let (bs, bt) = self.base.edges[self.edge_map[e] as usize];
            if self.vertex_map[s as usize] != bs || self.vertex_map[t as usize] != bt {
                return Err(Error::Invariant(format!("edge {e} is not mapped incidence-preservingly")));
            }
        }
        let ta = self.total.adjacency();
        let ba = self.base.adjacency();
        for w in 0..self.total.num_vertices as u32 {
            let v = self.vertex_map[w as usize];
            for (tl, bl) in [(ta.out(w), ba.out(v)), (ta.inn(w), ba.inn(v))] {
                let mut img: Vec<u32> = tl.iter().map(|&e| self.edge_map[e as usize]).collect();
                let mut want: Vec<u32> = bl.to_vec();
                img.sort_unstable();
                want.sort_unstable();
                if img != want {
                    return Err(Error::Invariant(format!("star of vertex {w} is not mapped bijectively")));
                }
            }
        }
        let n = self.sheets();
        let mut fiber = vec![0usize; self.base.num_vertices];
        for &v in &self.vertex_map {
            fiber[v as usize] += 1;
        }
        if fiber.iter().any(|&f| f != n) {
            return Err(Error::Invariant("fibers have unequal size".into()));
        }
        Ok(())
    }

    /// Composite `self` followed by `lower` (whose total is `self.base`).
    pub fn compose(&self, lower: &CoveringMap) -> CoveringMap {
        CoveringMap {
            total: self.total.clone(),
            base: lower.base.clone(),
            vertex_map: self.vertex_map.iter().map(|&v| lower.vertex_map[v as usize]).collect(),
            edge_map: self.edge_map.iter().map(|&e| lower.edge_map[e as usize]).collect(),
        }
    }

    /// For every total vertex, the lifts of the base out-edges (resp. in-edges)
    /// of its image, aligned with the base's adjacency order.
    fn lift_tables(&self) -> (Adjacency, Vec<u32>, Vec<u32>, Vec<u32>, Vec<u32>) {
        let ba = self.base.adjacency();
        let mut pos_out = vec![0u32; self.base.num_edges()];
        let mut pos_in = vec![0u32; self.base.num_edges()];
        for v in 0..self.base.num_vertices as u32 {
            for (i, &e) in ba.out(v).iter().enumerate() {
                pos_out[e as usize] = i as u32;
            }
            for (i, &e) in ba.inn(v).iter().enumerate() {
                pos_in[e as usize] = i as u32;
            }
        }
        let ta = self.total.adjacency();
        let nv = self.total.num_vertices;
        let mut out_start = vec![0u32; nv + 1];
        let mut in_start = vec![0u32; nv + 1];
        for w in 0..nv {
            let v = self.vertex_map[w];
            out_start[w + 1] = out_start[w] + ba.out(v).len() as u32;
            in_start[w + 1] = in_start[w] + ba.inn(v).len() as u32;
        }
        let mut lift_out = vec![0u32; out_start[nv] as usize];
        let mut lift_in = vec![0u32; in_start[nv] as usize];
        for w in 0..nv as u32 {
            for &e in ta.out(w) {
                let p = pos_out[self.edge_map[e as usize] as usize];
                lift_out[(out_start[w as usize] + p) as usize] = e;
            }
            for &e in ta.inn(w) {
                let p = pos_in[self.edge_map[e as usize] as usize];
                lift_in[(in_start[w as usize] + p) as usize] = e;
            }
        }
        // pack starts into the adjacency-shaped tuple
        (ta, out_start, lift_out, in_start, lift_in)
    }

    /// All deck transformations as vertex permutations, stopping after `limit`.
    pub fn deck_transformations(&self, limit: Option<usize>) -> Result<Vec<Vec<u32>>> {
        self.verify()?;
        let search = DeckSearch::new(self);
        Ok(search.run(limit))
    }

    /// Galois means the deck group acts simply transitively on a fiber:
    /// `|Deck| = sheets` and one fiber is a single orbit.
    pub fn galois_verdict(&self, use_factorial_bound: bool) -> Result<GaloisVerdict> {
        if !self.base.is_connected() {
            return Err(Error::InvalidParams("base graph is disconnected".into()));
        }
        let sheets = self.sheets();
        let components = self.total.components(Connectivity::Weak).count;
        if use_factorial_bound && factorial_exceeds(components, sheets) {
            return Ok(GaloisVerdict {
                galois: false,
                sheets,
                components,
                deck_order: None,
                transitive: None,
                by_factorial_bound: true,
            });
        }
        let decks = self.deck_transformations(Some(sheets + 1))?;
        let fiber: Vec<u32> = (0..self.total.num_vertices as u32).filter(|&w| self.vertex_map[w as usize] == 0).collect();
        let orbit: HashSet<u32> = decks.iter().map(|d| d[fiber[0] as usize]).collect();
        let transitive = orbit.len() == fiber.len();
        Ok(GaloisVerdict {
            galois: transitive && decks.len() == sheets,
            sheets,
            components,
            deck_order: Some(decks.len()),
            transitive: Some(transitive),
            by_factorial_bound: false,
        })
    }

    /// Deck transformations of the undirected shadow, computed independently.
    /// Each undirected edge keeps track of which end lies over the base edge's
    /// source, so a deck map must send lifts of `e` to lifts of `e` with ends matched.
    pub fn undirected_deck_count(&self, limit: Option<usize>) -> Result<usize> {
        self.verify()?;
        let nv = self.total.num_vertices;
        // neighbor lists: (neighbor, base edge, this end is the source end)
        let mut nbrs: Vec<Vec<(u32, u32, bool)>> = vec![Vec::new(); nv];
        for (e, &(s, t)) in self.total.edges.iter().enumerate() {
            let b = self.edge_map[e];
            nbrs[s as usize].push((t, b, true));
            nbrs[t as usize].push((s, b, false));
        }
        for l in nbrs.iter_mut() {
            l.sort_unstable();
        }
        let parts = self.total.components(Connectivity::Weak);
        let members = parts.members();
        let roots: Vec<u32> = members.iter().map(|m| m[0]).collect();
        // image of root i at w: the induced vertex map on the component, if consistent
        let try_map = |root: u32, w: u32| -> Option<Vec<(u32, u32)>> {
            let mut img: HashMap<u32, u32> = HashMap::new();
            img.insert(root, w);
            let mut queue = VecDeque::from([root]);
            let mut pairs = vec![(root, w)];
            while let Some(x) = queue.pop_front() {
                let y = img[&x];
                let (nx, ny) = (&nbrs[x as usize], &nbrs[y as usize]);
                if nx.len() != ny.len() {
                    return None;
                }
                // group both lists by (base edge, end) and pair them in order of the
                // already-known images where possible
                let mut by_key: HashMap<(u32, bool), Vec<u32>> = HashMap::new();
                for &(z, b, end) in ny {
                    by_key.entry((b, end)).or_default().push(z);
                }
                for &(z, b, end) in nx {
                    let cands = by_key.get_mut(&(b, end))?;
                    // one lift of (b, end) per vertex in a covering
                    if cands.len() != 1 {
                        return None;
                    }
                    let target = cands[0];
                    match img.get(&z) {
                        Some(&t) if t != target => return None,
                        Some(_) => {}
                        None => {
                            img.insert(z, target);
                            pairs.push((z, target));
                            queue.push_back(z);
                        }
                    }
                }
            }
            Some(pairs)
        };
        let mut options: Vec<Vec<(u32, Vec<(u32, u32)>)>> = Vec::new();
        for (i, &r) in roots.iter().enumerate() {
            let mut opts = Vec::new();
            for w in 0..nv as u32 {
                if self.vertex_map[w as usize] != self.vertex_map[r as usize] {
                    continue;
                }
                let tc = parts.labels[w as usize];
                if members[tc as usize].len() != members[i].len() {
                    continue;
                }
                if let Some(pairs) = try_map(r, w) {
                    let imgs: HashSet<u32> = pairs.iter().map(|p| p.1).collect();
                    if imgs.len() == pairs.len() {
                        opts.push((tc, pairs));
                    }
                }
            }
            options.push(opts);
        }
        let mut count = 0usize;
        let mut used = vec![false; parts.count];
        fn rec(
            i: usize,
            options: &[Vec<(u32, Vec<(u32, u32)>)>],
            used: &mut [bool],
            count: &mut usize,
            limit: Option<usize>,
        ) {
            if limit.is_some_and(|l| *count >= l) {
                return;
            }
            if i == options.len() {
                *count += 1;
                return;
            }
            for (tc, _) in &options[i] {
                if !used[*tc as usize] {
                    used[*tc as usize] = true;
                    rec(i + 1, options, used, count, limit);
                    used[*tc as usize] = false;
                }
            }
        }
        rec(0, &options, &mut used, &mut count, limit);
        Ok(count)
    }
}

struct DeckSearch<'a> {
    cover: &'a CoveringMap,
    adj: Adjacency,
    out_start: Vec<u32>,
    lift_out: Vec<u32>,
    in_start: Vec<u32>,
    lift_in: Vec<u32>,
    parts: Partition,
    members: Vec<Vec<u32>>,
    pos_out: Vec<u32>,
    pos_in: Vec<u32>,
}

impl<'a> DeckSearch<'a> {
    fn new(cover: &'a CoveringMap) -> DeckSearch<'a> {
        let (adj, out_start, lift_out, in_start, lift_in) = cover.lift_tables();
        let parts = cover.total.components(Connectivity::Weak);
        let members = parts.members();
        let ba = cover.base.adjacency();
        let mut pos_out = vec![0u32; cover.base.num_edges()];
        let mut pos_in = vec![0u32; cover.base.num_edges()];
        for v in 0..cover.base.num_vertices as u32 {
            for (i, &e) in ba.out(v).iter().enumerate() {
                pos_out[e as usize] = i as u32;
            }
            for (i, &e) in ba.inn(v).iter().enumerate() {
                pos_in[e as usize] = i as u32;
            }
        }
        DeckSearch { cover, adj, out_start, lift_out, in_start, lift_in, parts, members, pos_out, pos_in }
    }

    /// Propagates `root -> w` over the component of `root`; returns the image
    /// list when it is a consistent injective covering morphism.
    fn propagate(&self, root: u32, w: u32, img: &mut [u32]) -> bool {
        let c = self.cover;
        let comp = &self.members[self.parts.labels[root as usize] as usize];
        img[root as usize] = w;
        let mut queue = VecDeque::from([root]);
        let mut ok = true;
        'bfs: while let Some(x) = queue.pop_front() {
            let y = img[x as usize];
            for &e in self.adj.out(x) {
                let b = c.edge_map[e as usize];
                let le = self.lift_out[(self.out_start[y as usize] + self.pos_out[b as usize]) as usize];
                let (t, t2) = (c.total.edges[e as usize].1, c.total.edges[le as usize].1);
                if img[t as usize] == u32::MAX {
                    img[t as usize] = t2;
                    queue.push_back(t);
                } else if img[t as usize] != t2 {
                    ok = false;
                    break 'bfs;
                }
            }
            for &e in self.adj.inn(x) {
                let b = c.edge_map[e as usize];
                let le = self.lift_in[(self.in_start[y as usize] + self.pos_in[b as usize]) as usize];
                let (s, s2) = (c.total.edges[e as usize].0, c.total.edges[le as usize].0);
                if img[s as usize] == u32::MAX {
                    img[s as usize] = s2;
                    queue.push_back(s);
                } else if img[s as usize] != s2 {
                    ok = false;
                    break 'bfs;
                }
            }
        }
        if ok {
            let mut seen = HashSet::with_capacity(comp.len());
            ok = comp.iter().all(|&v| img[v as usize] != u32::MAX && seen.insert(img[v as usize]));
        }
        if !ok {
            for &v in comp {
                img[v as usize] = u32::MAX;
            }
        }
        ok
    }

    fn run(&self, limit: Option<usize>) -> Vec<Vec<u32>> {
        let c = self.cover;
        let nv = c.total.num_vertices;
        let roots: Vec<u32> = self.members.iter().map(|m| m[0]).collect();
        // candidate images per component root, with the image component
        let fibers: Vec<Vec<u32>> = {
            let mut f = vec![Vec::new(); c.base.num_vertices];
            for w in 0..nv as u32 {
                f[c.vertex_map[w as usize] as usize].push(w);
            }
            f
        };
        let mut out = Vec::new();
        let mut img = vec![u32::MAX; nv];
        let mut used = vec![false; self.parts.count];
        self.rec(0, &roots, &fibers, &mut img, &mut used, &mut out, limit);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        i: usize,
        roots: &[u32],
        fibers: &[Vec<u32>],
        img: &mut Vec<u32>,
        used: &mut [bool],
        out: &mut Vec<Vec<u32>>,
        limit: Option<usize>,
    ) {
        if limit.is_some_and(|l| out.len() >= l) {
            return;
        }
        if i == roots.len() {
            out.push(img.clone());
            return;
        }
        let r = roots[i];
        let size = self.members[i].len();
        for &w in &fibers[self.cover.vertex_map[r as usize] as usize] {
            let tc = self.parts.labels[w as usize] as usize;
            if used[tc] || self.members[tc].len() != size {
                continue;
            }
            if self.propagate(r, w, img) {
                used[tc] = true;
                self.rec(i + 1, roots, fibers, img, used, out, limit);
                used[tc] = false;
                for &v in &self.members[i] {
                    img[v as usize] = u32::MAX;
                }
            }
            if limit.is_some_and(|l| out.len() >= l) {
                return;
            }
        }
    }
}

/// A random connected base graph with a random voltage assignment, for property checks.
pub fn random_voltage_graph<R: Rng>(rng: &mut R, max_group: usize, max_vertices: usize) -> VoltageAssignment<TableGroup> {
    let mut catalog: Vec<TableGroup> = Vec::new();
    for n in 1..=max_group as u32 {
        catalog.push(TableGroup::cyclic(n));
    }
    for n in 2..=(max_group / 2) as u32 {
        catalog.push(TableGroup::dihedral(n));
    }
    if max_group >= 8 {
        catalog.push(TableGroup::quaternion());
        catalog.push(TableGroup::product(&CyclicGroup(2), &CyclicGroup(4)).unwrap());
        catalog.push(TableGroup::product(&CyclicGroup(2), &CyclicGroup(2)).unwrap());
    }
    if max_group >= 24 {
        catalog.push(TableGroup::symmetric(4));
        catalog.push(TableGroup::product(&TableGroup::symmetric(3), &CyclicGroup(4)).unwrap());
    }
    let group = catalog.swap_remove(rng.gen_range(0..catalog.len()));
    let n = rng.gen_range(1..=max_vertices);
    let mut g = DirectedMultigraph::new(n);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    for i in 1..n {
        let a = order[i];
        let b = order[rng.gen_range(0..i)];
        if rng.gen_bool(0.5) {
            g.add_edge(a, b);
        } else {
            g.add_edge(b, a);
        }
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        g.add_edge(a, b);
    }
    let ord = group.order() as u32;
    let id = group.identity();
    // sparse voltages keep a mix of connected and disconnected derived graphs
    let values = (0..g.num_edges())
        .map(|_| if rng.gen_bool(0.6) { id } else { rng.gen_range(0..ord) })
        .collect();
    VoltageAssignment::new(g, Arc::new(group), values).unwrap()
}
