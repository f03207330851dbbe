//! Volcano graphs, abstract tectonic craters and double intertwinements:
//! generators on finite depth truncations and axiom-checking recognizers.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::arith::{gcd, is_prime, mod_inv};
use crate::error::{Error, Result};
use crate::voltgraph::DirectedMultigraph;

/// Largest instance the recognizers accept.
pub const RECOGNIZE_CAP: usize = 1000;
/// Largest number of colorings tried by the tectonic search.
pub const COLORING_SEARCH_CAP: u64 = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeColor {
    Blue,
    Green,
}

impl EdgeColor {
    pub fn name(self) -> &'static str {
        match self {
            EdgeColor::Blue => "blue",
            EdgeColor::Green => "green",
        }
    }

    pub fn parse(s: &str) -> Option<EdgeColor> {
        match s {
            "blue" => Some(EdgeColor::Blue),
            "green" => Some(EdgeColor::Green),
            _ => None,
        }
    }

    fn other(self) -> EdgeColor {
        match self {
            EdgeColor::Blue => EdgeColor::Green,
            EdgeColor::Green => EdgeColor::Blue,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TectonicParams {
    pub r: u64,
    pub s: u64,
    pub t: u64,
    pub c: u64,
}

impl TectonicParams {
    pub fn new(r: u64, s: u64, t: u64, c: u64) -> TectonicParams {
        TectonicParams { r, s, t, c }
    }

    pub fn vertex_count(&self) -> u64 {
        self.r * self.s * self.t
    }

    /// A generator exists when `r, s, t >= 1` and `gcd(c, r) = 1`.
    pub fn is_admissible(&self) -> bool {
        self.r >= 1 && self.s >= 1 && self.t >= 1 && gcd(self.c, self.r) == 1
    }

    /// `c` reduced into `1..=r`; only its class mod `r` matters.
    pub fn normalized(&self) -> TectonicParams {
        let c = if self.r == 0 { self.c } else { (self.c + self.r - 1) % self.r + 1 };
        TectonicParams { c, ..*self }
    }

    pub fn parse(s: &str) -> Result<TectonicParams> {
        let v: Vec<u64> = s
            .split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad tectonic parameters {s:?}"))))
            .collect::<Result<_>>()?;
        match v[..] {
            [r, s, t, c] => Ok(TectonicParams { r, s, t, c }),
            _ => Err(Error::Parse(format!("expected r,s,t,c, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "size")]
pub enum CraterSpec {
    Cycle(usize),
    Isolated(usize),
    Tectonic(TectonicParams),
}

/// A depth-`frontier` truncation: depth per vertex, colors on crater edges.
#[derive(Clone, Debug, Serialize)]
pub struct DepthDecomposition {
    pub graph: DirectedMultigraph,
    pub depth: Vec<u32>,
    pub frontier: u32,
    pub edge_colors: Vec<Option<EdgeColor>>,
}

impl DepthDecomposition {
    pub fn counts_per_depth(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.frontier as usize + 1];
        for &d in &self.depth {
            c[d as usize] += 1;
        }
        c
    }

    pub fn to_dot(&self, name: &str) -> String {
        colored_dot(&self.graph, &self.edge_colors, name)
    }
}

pub fn colored_dot(g: &DirectedMultigraph, colors: &[Option<EdgeColor>], name: &str) -> String {
    g.to_dot(name, None, &|e| match colors.get(e).copied().flatten() {
        Some(c) => format!("color={}", c.name()),
        None => String::new(),
    })
}

/// Colors as read back from DOT.
pub fn parse_colors(raw: &[Option<String>]) -> Vec<Option<EdgeColor>> {
    raw.iter().map(|c| c.as_deref().and_then(EdgeColor::parse)).collect()
}

/// The tectonic crater on `Z^2 / <(s, -ct), (0, rt)>`, blue step `(1, 0)` and green
/// step `(0, 1)`. Vertex `b rs + a` is the class of `(a, b)` with `a < rs`, `b < t`.
pub fn gen_tectonic_crater(p: TectonicParams) -> Result<(DirectedMultigraph, Vec<Option<EdgeColor>>)> {
    if !p.is_admissible() {
        return Err(Error::InvalidParams(format!("inadmissible tectonic parameters {p:?}")));
    }
    let (r, s, t) = (p.r, p.s, p.t);
    let rs = r * s;
    let n = (rs * t) as usize;
    if n > RECOGNIZE_CAP * 100 {
        return Err(Error::CapExceeded { what: "tectonic crater", size: n as u64, cap: (RECOGNIZE_CAP * 100) as u64 });
    }
    // (0, t) is the class of (s x, 0) with c x = 1 mod r
    let x = if r == 1 { 0 } else { mod_inv(p.c % r, r).unwrap() };
    let wrap = (s * x) % rs;
    let idx = |a: u64, b: u64| (b * rs + a) as u32;
    let mut g = DirectedMultigraph::new(n);
    let mut colors = Vec::with_capacity(2 * n);
    for b in 0..t {
        for a in 0..rs {
            g.add_edge(idx(a, b), idx((a + 1) % rs, b));
            colors.push(Some(EdgeColor::Blue));
            let green = if b + 1 < t { idx(a, b + 1) } else { idx((a + wrap) % rs, 0) };
            g.add_edge(idx(a, b), green);
            colors.push(Some(EdgeColor::Green));
        }
    }
    g.vertex_labels = (0..n).map(|v| format!("v{}", v + 1)).collect();
    Ok((g, colors))
}

/// Depth-`depth` truncation of a volcano (cycle or isolated crater) or of a tectonic
/// volcano. Crater vertices get `l + 1` minus their crater out-degree descending
/// edges, deeper vertices one ascending and `l` descending edges; depth-`depth`
/// vertices keep only their ascending edge.
pub fn gen_volcano(l: u64, crater: CraterSpec, depth: u32) -> Result<DepthDecomposition> {
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
    let (crater_graph, crater_colors) = match crater {
        CraterSpec::Cycle(0) | CraterSpec::Isolated(0) => return Err(Error::InvalidParams("empty crater".into())),
        CraterSpec::Cycle(n) => {
            let edges = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
            (DirectedMultigraph::from_edges(n, edges)?, vec![None; n])
        }
        CraterSpec::Isolated(n) => (DirectedMultigraph::new(n), Vec::new()),
        CraterSpec::Tectonic(p) => gen_tectonic_crater(p)?,
    };
    let crater_out = crater_graph.out_degrees();
    if crater_out.iter().any(|&d| d as u64 > l + 1) {
        return Err(Error::InvalidParams("crater out-degree exceeds l + 1".into()));
    }
    let mut size = crater_graph.num_vertices as u64;
    let mut layer = crater_out.iter().map(|&d| l + 1 - d as u64).sum::<u64>();
    for _ in 0..depth {
        size += layer;
        layer *= l;
        if size > 10_000_000 {
            return Err(Error::CapExceeded { what: "volcano truncation", size, cap: 10_000_000 });
        }
    }
    let mut g = DirectedMultigraph::new(crater_graph.num_vertices);
    let mut depths = vec![0u32; crater_graph.num_vertices];
    let mut colors = Vec::new();
    let adj = crater_graph.adjacency();
    let mut parent: Vec<Option<u32>> = vec![None; crater_graph.num_vertices];
    let mut queue: VecDeque<u32> = (0..crater_graph.num_vertices as u32).collect();
    // vertices are numbered breadth first, so a vertex's edges can be emitted when it is dequeued
    let mut pending: Vec<Vec<(u32, u32, Option<EdgeColor>)>> = Vec::new();
    while let Some(v) = queue.pop_front() {
        let d = depths[v as usize];
        let mut out = Vec::new();
        if let Some(p) = parent[v as usize] {
            out.push((v, p, None));
        } else {
            for &e in adj.out(v) {
                out.push((v, crater_graph.edges[e as usize].1, crater_colors.get(e as usize).copied().flatten()));
            }
        }
        if d < depth {
            let children = if d == 0 { l + 1 - crater_out[v as usize] as u64 } else { l };
            for _ in 0..children {
                let w = depths.len() as u32;
                depths.push(d + 1);
                parent.push(Some(v));
                out.push((v, w, None));
                queue.push_back(w);
            }
        }
        pending.push(out);
    }
    g.num_vertices = depths.len();
    for out in pending {
        for (a, b, c) in out {
            g.add_edge(a, b);
            colors.push(c);
        }
    }
    g.vertex_labels = (0..g.num_vertices).map(|v| format!("v{v}@{}", depths[v])).collect();
    Ok(DepthDecomposition { graph: g, depth: depths, frontier: depth, edge_colors: colors })
}

/// `Z^{+-}`: vertex `2v` is `+v`, `2v + 1` is `-v`; edge `e` becomes
/// `e^{++}, e^{+-}, e^{-+}, e^{--}` in that order.
pub fn double_intertwine(z: &DirectedMultigraph) -> DirectedMultigraph {
    let mut g = DirectedMultigraph::new(2 * z.num_vertices);
    for &(a, b) in &z.edges {
        for (sa, sb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            g.add_edge(2 * a + sa, 2 * b + sb);
        }
    }
    g.vertex_labels = (0..z.num_vertices)
        .flat_map(|v| {
            let l = z.vertex_labels.get(v).cloned().unwrap_or_else(|| v.to_string());
            [format!("+{l}"), format!("-{l}")]
        })
        .collect();
    g
}

/// Edge colors of `Z^{+-}` inherited from `Z`.
pub fn double_intertwine_colors(colors: &[Option<EdgeColor>]) -> Vec<Option<EdgeColor>> {
    colors.iter().flat_map(|&c| [c; 4]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "class")]
pub enum GraphClass {
    Crater,
    Volcano { l: u64, depth: u32 },
    TectonicCrater,
    TectonicVolcano { l: u64, depth: u32 },
    DoubleIntertwinement,
}

impl GraphClass {
    pub fn name(&self) -> &'static str {
        match self {
            GraphClass::Crater => "crater",
            GraphClass::Volcano { .. } => "volcano",
            GraphClass::TectonicCrater => "tectonic_crater",
            GraphClass::TectonicVolcano { .. } => "tectonic_volcano",
            GraphClass::DoubleIntertwinement => "double_intertwinement",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct Recognition {
    pub class: &'static str,
    pub verdict: Verdict,
    /// The axiom that failed, or why the search gave up.
    pub reason: Option<String>,
    pub params: Option<TectonicParams>,
    pub depth: Option<Vec<u32>>,
    /// Crater edge colors found or confirmed.
    pub colors: Option<Vec<Option<EdgeColor>>>,
    /// `(+v, -v)` pairs of a double intertwinement.
    pub pairing: Option<Vec<(u32, u32)>>,
    pub quotient: Option<DirectedMultigraph>,
    pub quotient_colors: Option<Vec<Option<EdgeColor>>>,
}

impl Recognition {
    fn new(class: &GraphClass, verdict: Verdict, reason: Option<String>) -> Recognition {
        Recognition {
            class: class.name(),
            verdict,
            reason,
            params: None,
            depth: None,
            colors: None,
            pairing: None,
            quotient: None,
            quotient_colors: None,
        }
    }

    fn no(class: &GraphClass, reason: impl Into<String>) -> Recognition {
        Recognition::new(class, Verdict::No, Some(reason.into()))
    }

    pub fn is_yes(&self) -> bool {
        self.verdict == Verdict::Yes
    }
}

/// Connected directed cycle, or no edges at all.
pub fn is_crater(g: &DirectedMultigraph) -> std::result::Result<(), String> {
    if g.num_edges() == 0 {
        return Ok(());
    }
    let out = g.out_degrees();
    let inn = g.in_degrees();
    if let Some(v) = (0..g.num_vertices).find(|&v| out[v] != 1 || inn[v] != 1) {
        return Err(format!("vertex {v} has out-degree {} and in-degree {} in a crater with edges", out[v], inn[v]));
    }
    if !g.is_connected() {
        return Err("crater has edges but is not one cycle".into());
    }
    Ok(())
}

/// Checks the tectonic crater axioms on a fully colored graph and reads off
/// `(r, s, t, c)` with `c` in `1..=r`.
pub fn check_tectonic(g: &DirectedMultigraph, colors: &[Option<EdgeColor>]) -> std::result::Result<TectonicParams, String> {
    let n = g.num_vertices;
    if n == 0 {
        return Err("(a) no vertices".into());
    }
    if colors.len() != g.num_edges() || colors.iter().any(|c| c.is_none()) {
        return Err("(b) some edge has no color".into());
    }
    let mut perm = [vec![u32::MAX; n], vec![u32::MAX; n]];
    let mut indeg = [vec![0u32; n], vec![0u32; n]];
    for (e, &(a, b)) in g.edges.iter().enumerate() {
        let k = (colors[e].unwrap() == EdgeColor::Green) as usize;
        if perm[k][a as usize] != u32::MAX {
            return Err(format!("(c) vertex {a} has two {} out-edges", colors[e].unwrap().name()));
        }
        perm[k][a as usize] = b;
        indeg[k][b as usize] += 1;
    }
    for k in 0..2 {
        let name = if k == 0 { "blue" } else { "green" };
        if let Some(v) = (0..n).find(|&v| perm[k][v] == u32::MAX || indeg[k][v] != 1) {
            return Err(format!("(c) vertex {v} lacks a unique {name} in- or out-edge"));
        }
    }
    let cycles = |p: &[u32]| -> (Vec<u32>, Vec<usize>) {
        let mut id = vec![u32::MAX; n];
        let mut lens = Vec::new();
        for v in 0..n {
            if id[v] != u32::MAX {
                continue;
            }
            let mut w = v;
            let mut len = 0;
            while id[w] == u32::MAX {
                id[w] = lens.len() as u32;
                w = p[w] as usize;
                len += 1;
            }
            lens.push(len);
        }
        (id, lens)
    };
    let (_, blue_lens) = cycles(&perm[0]);
    let (green_id, green_lens) = cycles(&perm[1]);
    let lb = blue_lens[0];
    let lg = green_lens[0];
    if blue_lens.iter().any(|&x| x != lb) {
        return Err("(d) blue cycles have different lengths".into());
    }
    if green_lens.iter().any(|&x| x != lg) {
        return Err("(d) green cycles have different lengths".into());
    }
    let step = |k: usize, v: usize, times: usize| (0..times).fold(v, |w, _| perm[k][w] as usize);
    // s: blue steps until the blue path first returns to the green cycle
    let first_meet = |v: usize| (1..=lb).find(|&i| green_id[step(0, v, i)] == green_id[v]).unwrap();
    let s = first_meet(0);
    if let Some(v) = (0..n).find(|&v| first_meet(v) != s) {
        return Err(format!("(e) the blue path from vertex {v} meets its green cycle after {} steps, not {s}", first_meet(v)));
    }
    if lb % s != 0 {
        return Err("(d) blue length is not a multiple of the meeting period".into());
    }
    let r = lb / s;
    if lg % r != 0 {
        return Err("(d) green length is not a multiple of r".into());
    }
    let t = lg / r;
    if r * s * t != n {
        return Err(format!("(a) {n} vertices, but r s t = {}", r * s * t));
    }
    let c = (1..=r).find(|&c| (0..n).all(|v| (1..=r).all(|j| step(0, v, j * s) == step(1, v, j * c * t))));
    match c {
        Some(c) => Ok(TectonicParams { r: r as u64, s: s as u64, t: t as u64, c: c as u64 }),
        None => Err(format!("(e) no c with s = {s} blue steps meeting c t green steps")),
    }
}

enum Search {
    Found(Vec<Option<EdgeColor>>, TectonicParams),
    Failed(String),
    GaveUp(String),
}

/// Searches 2-colorings with one blue and one green edge in and out of every vertex.
fn search_tectonic_coloring(g: &DirectedMultigraph) -> Search {
    let n = g.num_vertices;
    let out = g.out_degrees();
    let inn = g.in_degrees();
    if n == 0 {
        return Search::Failed("(a) no vertices".into());
    }
    if let Some(v) = (0..n).find(|&v| out[v] != 2 || inn[v] != 2) {
        return Search::Failed(format!("(c) vertex {v} does not have two out- and two in-edges"));
    }
    let adj = g.adjacency();
    let m = g.num_edges();
    // the two out-edges of a vertex differ in color, as do its two in-edges
    let mut partner = vec![[0u32; 2]; m];
    for v in 0..n as u32 {
        let o = adj.out(v);
        partner[o[0] as usize][0] = o[1];
        partner[o[1] as usize][0] = o[0];
        let i = adj.inn(v);
        partner[i[0] as usize][1] = i[1];
        partner[i[1] as usize][1] = i[0];
    }
    let mut base = vec![None; m];
    let mut comps: Vec<Vec<u32>> = Vec::new();
    for e0 in 0..m {
        if base[e0].is_some() {
            continue;
        }
        base[e0] = Some(EdgeColor::Blue);
        let mut comp = vec![e0 as u32];
        let mut stack = vec![e0 as u32];
        while let Some(e) = stack.pop() {
            let c = base[e as usize].unwrap();
            for &f in &partner[e as usize] {
                match base[f as usize] {
                    None => {
                        base[f as usize] = Some(c.other());
                        comp.push(f);
                        stack.push(f);
                    }
                    Some(cf) if cf == c => return Search::Failed("(c) no consistent 2-coloring exists".into()),
                    _ => {}
                }
            }
        }
        comps.push(comp);
    }
    // a pair of parallel edges looks the same under either coloring
    let free: Vec<&Vec<u32>> = comps
        .iter()
        .filter(|c| !(c.len() == 2 && g.edges[c[0] as usize] == g.edges[c[1] as usize]))
        .collect();
    if free.len() >= 64 || (1u64 << free.len()) > COLORING_SEARCH_CAP {
        return Search::GaveUp(format!("{} independent color swaps exceed the search cap", free.len()));
    }
    let mut last = String::new();
    for mask in 0..(1u64 << free.len()) {
        let mut colors = base.clone();
        for (i, comp) in free.iter().enumerate() {
            if mask >> i & 1 == 1 {
                for &e in comp.iter() {
                    colors[e as usize] = colors[e as usize].map(EdgeColor::other);
                }
            }
        }
        match check_tectonic(g, &colors) {
            Ok(p) => return Search::Found(colors, p),
            Err(e) => last = e,
        }
    }
    Search::Failed(last)
}

/// Tectonic crater test, using the given colors when every edge has one.
fn recognize_tectonic(class: &GraphClass, g: &DirectedMultigraph, colors: &[Option<EdgeColor>]) -> Recognition {
    if colors.len() == g.num_edges() && colors.iter().all(|c| c.is_some()) && g.num_edges() > 0 {
        return match check_tectonic(g, colors) {
            Ok(p) => {
                let mut r = Recognition::new(class, Verdict::Yes, None);
                r.params = Some(p);
                r.colors = Some(colors.to_vec());
                r
            }
            Err(e) => Recognition::no(class, e),
        };
    }
    match search_tectonic_coloring(g) {
        Search::Found(c, p) => {
            let mut r = Recognition::new(class, Verdict::Yes, None);
            r.params = Some(p);
            r.colors = Some(c);
            r
        }
        Search::Failed(e) => Recognition::no(class, e),
        Search::GaveUp(e) => Recognition::new(class, Verdict::Undecided, Some(e)),
    }
}

/// Depth function of a truncation: frontier vertices have out-degree one and
/// every other vertex lies at distance `frontier - depth` from the frontier.
fn depth_function(g: &DirectedMultigraph, frontier: u32) -> std::result::Result<Vec<u32>, String> {
    let n = g.num_vertices;
    if frontier == 0 {
        return Ok(vec![0; n]);
    }
    let out = g.out_degrees();
    let adj = g.adjacency();
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for v in 0..n {
        if out[v] == 1 {
            dist[v] = 0;
            queue.push_back(v as u32);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &e in adj.inn(v) {
            let u = g.edges[e as usize].0 as usize;
            if dist[u] == u32::MAX {
                dist[u] = dist[v as usize] + 1;
                queue.push_back(u as u32);
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| dist[v] == u32::MAX) {
        return Err(format!("vertex {v} cannot reach the frontier"));
    }
    if let Some(v) = (0..n).find(|&v| dist[v] > frontier) {
        return Err(format!("vertex {v} lies deeper than {frontier} steps above the frontier"));
    }
    Ok(dist.iter().map(|&d| frontier - d).collect())
}

/// Checks the layered degree conditions and returns the crater subgraph.
fn check_layers(
    g: &DirectedMultigraph,
    depth: &[u32],
    l: u64,
    frontier: u32,
) -> std::result::Result<(DirectedMultigraph, Vec<u32>), String> {
    let n = g.num_vertices;
    let adj = g.adjacency();
    for (e, &(a, b)) in g.edges.iter().enumerate() {
        let (da, db) = (depth[a as usize], depth[b as usize]);
        if !(da.abs_diff(db) == 1 || da == 0 && db == 0) {
            return Err(format!("edge {e} joins depths {da} and {db}"));
        }
    }
    let crater: Vec<u32> = (0..n as u32).filter(|&v| depth[v as usize] == 0).collect();
    if crater.is_empty() {
        return Err("no depth-0 vertices".into());
    }
    for v in 0..n as u32 {
        let d = depth[v as usize];
        let outs = adj.out(v);
        let up = outs.iter().filter(|&&e| d > 0 && depth[g.edges[e as usize].1 as usize] + 1 == d).count();
        let down = outs.iter().filter(|&&e| depth[g.edges[e as usize].1 as usize] == d + 1).count() as u64;
        if d > 0 && up != 1 {
            return Err(format!("vertex {v} at depth {d} has {up} ascending edges"));
        }
        if d > 0 && d < frontier && down != l {
            return Err(format!("vertex {v} at depth {d} has {down} descending edges, expected {l}"));
        }
        if d == frontier && d > 0 && down != 0 {
            return Err(format!("frontier vertex {v} has descending edges"));
        }
        if d < frontier && outs.len() as u64 != l + 1 {
            return Err(format!("vertex {v} has out-degree {}, expected {}", outs.len(), l + 1));
        }
    }
    Ok(g.induced(&crater))
}

/// Decides membership of `g` (with optional edge colors) in a graph class.
pub fn recognize(g: &DirectedMultigraph, colors: &[Option<EdgeColor>], class: GraphClass) -> Recognition {
    if g.num_vertices > RECOGNIZE_CAP {
        return Recognition::new(
            &class,
            Verdict::Undecided,
            Some(format!("{} vertices exceed the recognizer cap {RECOGNIZE_CAP}", g.num_vertices)),
        );
    }
    match class {
        GraphClass::Crater => match is_crater(g) {
            Ok(()) => Recognition::new(&class, Verdict::Yes, None),
            Err(e) => Recognition::no(&class, e),
        },
        GraphClass::TectonicCrater => recognize_tectonic(&class, g, colors),
        GraphClass::Volcano { l, depth } | GraphClass::TectonicVolcano { l, depth } => {
            let d = match depth_function(g, depth) {
                Ok(d) => d,
                Err(e) => return Recognition::no(&class, e),
            };
            let (crater, kept) = match check_layers(g, &d, l, depth) {
                Ok(x) => x,
                Err(e) => return Recognition::no(&class, e),
            };
            let mut rec = if let GraphClass::Volcano { .. } = class {
                match is_crater(&crater) {
                    Ok(()) => Recognition::new(&class, Verdict::Yes, None),
                    Err(e) => Recognition::no(&class, format!("crater: {e}")),
                }
            } else {
                let cc: Vec<Option<EdgeColor>> = kept.iter().map(|&e| colors.get(e as usize).copied().flatten()).collect();
                let mut r = recognize_tectonic(&class, &crater, &cc);
                if let Some(found) = r.colors.take() {
                    let mut full = vec![None; g.num_edges()];
                    for (i, &e) in kept.iter().enumerate() {
                        full[e as usize] = found[i];
                    }
                    r.colors = Some(full);
                }
                if let Some(reason) = r.reason.as_mut() {
                    *reason = format!("crater: {reason}");
                }
                r
            };
            rec.depth = Some(d);
            rec
        }
        GraphClass::DoubleIntertwinement => recognize_double_intertwinement(g, colors),
    }
}

/// Pairs vertices with identical out- and in-neighbour multisets; any such pairing
/// into twins exhibits `g` as `Z^{+-}` of the quotient.
fn recognize_double_intertwinement(g: &DirectedMultigraph, colors: &[Option<EdgeColor>]) -> Recognition {
    let class = GraphClass::DoubleIntertwinement;
    let n = g.num_vertices;
    let mut rows = vec![Vec::new(); n];
    let mut cols = vec![Vec::new(); n];
    for &(a, b) in &g.edges {
        rows[a as usize].push(b);
        cols[b as usize].push(a);
    }
    for v in 0..n {
        rows[v].sort_unstable();
        cols[v].sort_unstable();
    }
    let mut classes: HashMap<(&[u32], &[u32]), Vec<u32>> = HashMap::new();
    for v in 0..n {
        classes.entry((&rows[v], &cols[v])).or_default().push(v as u32);
    }
    let mut pairing = Vec::with_capacity(n / 2);
    for members in classes.values() {
        if members.len() % 2 == 1 {
            return Recognition::no(&class, format!("vertex {} has no twin to pair with", members[members.len() - 1]));
        }
        for ch in members.chunks(2) {
            pairing.push((ch[0], ch[1]));
        }
    }
    pairing.sort_unstable();
    let mut pos = vec![(0u32, 0u32); n];
    for (i, &(a, b)) in pairing.iter().enumerate() {
        pos[a as usize] = (i as u32, 0);
        pos[b as usize] = (i as u32, 1);
    }
    let mut z = DirectedMultigraph::new(pairing.len());
    let mut zc = Vec::new();
    for (e, &(a, b)) in g.edges.iter().enumerate() {
        if pos[a as usize].1 == 0 && pos[b as usize].1 == 0 {
            z.add_edge(pos[a as usize].0, pos[b as usize].0);
            zc.push(colors.get(e).copied().flatten());
        }
    }
    // reconstruction check
    let rebuilt = double_intertwine(&z);
    let relabel = |v: u32| -> u32 {
        let (a, b) = pairing[(v / 2) as usize];
        if v % 2 == 0 { a } else { b }
    };
    let mut want: Vec<(u32, u32)> = rebuilt.edges.iter().map(|&(a, b)| (relabel(a), relabel(b))).collect();
    let mut have = g.edges.clone();
    want.sort_unstable();
    have.sort_unstable();
    if want != have {
        return Recognition::no(&class, "pairing does not reconstruct the graph");
    }
    let mut r = Recognition::new(&class, Verdict::Yes, None);
    r.pairing = Some(pairing);
    r.quotient = Some(z);
    r.quotient_colors = Some(zc);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voltgraph::Connectivity;
    use proptest::prelude::*;

    fn sorted(mut e: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
        e.sort_unstable();
        e
    }

    #[test]
    fn five_vertex_crater_matches_figure() {
        let (g, c) = gen_tectonic_crater(TectonicParams::new(5, 1, 1, 2)).unwrap();
        // v1..v5 as 0..4: blue v_i -> v_{i+1}, green 1 -> 4 -> 2 -> 5 -> 3 -> 1
        let blue = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];
        let green = [(0, 3), (3, 1), (1, 4), (4, 2), (2, 0)];
        let pick = |col| sorted(g.edges.iter().zip(&c).filter(|(_, &k)| k == Some(col)).map(|(&e, _)| e).collect());
        assert_eq!(pick(EdgeColor::Blue), sorted(blue.to_vec()));
        assert_eq!(pick(EdgeColor::Green), sorted(green.to_vec()));
        let r = recognize(&g, &c, GraphClass::TectonicCrater);
        assert_eq!(r.params, Some(TectonicParams::new(5, 1, 1, 2)));
    }

    #[test]
    fn trivial_crater_is_two_loops() {
        let (g, c) = gen_tectonic_crater(TectonicParams::new(1, 1, 1, 1)).unwrap();
        assert_eq!(g.edges, vec![(0, 0), (0, 0)]);
        assert_eq!(c, vec![Some(EdgeColor::Blue), Some(EdgeColor::Green)]);
        assert!(recognize(&g, &[], GraphClass::TectonicCrater).is_yes());
    }

    #[test]
    fn intertwinement_figures() {
        let z = DirectedMultigraph::from_edges(2, vec![(0, 1)]).unwrap();
        // +v1 = 0, -v1 = 1, +v2 = 2, -v2 = 3
        assert_eq!(sorted(double_intertwine(&z).edges), sorted(vec![(0, 2), (1, 3), (0, 3), (1, 2)]));
        let c4 = DirectedMultigraph::from_edges(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let p = |i: u32| 2 * (i - 1);
        let m = |i: u32| 2 * (i - 1) + 1;
        let figure = vec![
            (p(1), p(2)), (p(2), p(3)), (p(3), p(4)), (p(4), p(1)),
            (m(2), m(3)), (m(3), m(4)), (m(4), m(1)), (m(1), m(2)),
            (p(1), m(2)), (p(2), m(3)), (p(3), m(4)), (p(4), m(1)),
            (m(4), p(1)), (m(2), p(3)), (m(1), p(2)), (m(3), p(4)),
        ];
        let x = double_intertwine(&c4);
        assert_eq!(sorted(x.edges.clone()), sorted(figure));
        let r = recognize(&x, &[], GraphClass::DoubleIntertwinement);
        assert!(r.is_yes());
        assert_eq!(sorted(r.quotient.unwrap().edges), sorted(c4.edges));
        assert!(double_intertwine(&DirectedMultigraph::new(0)).num_vertices == 0);
        assert!(recognize(&DirectedMultigraph::new(0), &[], GraphClass::DoubleIntertwinement).is_yes());
    }

    #[test]
    fn volcano_shapes() {
        let v = gen_volcano(2, CraterSpec::Cycle(3), 0).unwrap();
        assert_eq!(v.graph.edges, vec![(0, 1), (1, 2), (2, 0)]);
        assert!(recognize(&v.graph, &[], GraphClass::Crater).is_yes());
        let v = gen_volcano(2, CraterSpec::Cycle(1), 2).unwrap();
        assert_eq!(v.counts_per_depth(), vec![1, 2, 4]);
        let v = gen_volcano(3, CraterSpec::Isolated(4), 2).unwrap();
        assert_eq!(v.graph.components(Connectivity::Weak).count, 4);
        assert_eq!(v.counts_per_depth(), vec![4, 16, 48]);
        assert!(recognize(&v.graph, &[], GraphClass::Volcano { l: 3, depth: 2 }).is_yes());
    }

    #[test]
    fn deleted_edge_is_rejected() {
        let v = gen_volcano(2, CraterSpec::Cycle(3), 2).unwrap();
        assert!(recognize(&v.graph, &[], GraphClass::Volcano { l: 2, depth: 2 }).is_yes());
        for e in 0..v.graph.num_edges() {
            let mut g = v.graph.clone();
            g.edges.remove(e);
            let r = recognize(&g, &[], GraphClass::Volcano { l: 2, depth: 2 });
            assert_eq!(r.verdict, Verdict::No, "edge {e}");
            assert!(r.reason.is_some());
        }
    }

    #[test]
    fn tectonic_volcano_roundtrip() {
        let p = TectonicParams::new(3, 2, 1, 2);
        let v = gen_volcano(3, CraterSpec::Tectonic(p), 2).unwrap();
        let r = recognize(&v.graph, &v.edge_colors, GraphClass::TectonicVolcano { l: 3, depth: 2 });
        assert_eq!(r.params, Some(p));
        let r = recognize(&v.graph, &[], GraphClass::TectonicVolcano { l: 3, depth: 2 });
        assert!(r.is_yes(), "{:?}", r.reason);
    }

    #[test]
    fn non_members() {
        let path = DirectedMultigraph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        assert!(!recognize(&path, &[], GraphClass::Crater).is_yes());
        assert!(!recognize(&path, &[], GraphClass::TectonicCrater).is_yes());
        assert!(!recognize(&path, &[], GraphClass::DoubleIntertwinement).is_yes());
        assert!(gen_tectonic_crater(TectonicParams::new(4, 1, 1, 2)).is_err());
        assert!(gen_volcano(4, CraterSpec::Cycle(2), 1).is_err());
    }

    proptest! {
        #[test]
        fn tectonic_roundtrip(r in 1u64..=4, s in 1u64..=4, t in 1u64..=4, c in 0u64..8) {
            let p = TectonicParams::new(r, s, t, c);
            prop_assume!(p.is_admissible());
            let (g, col) = gen_tectonic_crater(p).unwrap();
            prop_assert_eq!(g.num_vertices as u64, r * s * t);
            let rec = recognize(&g, &col, GraphClass::TectonicCrater);
            prop_assert_eq!(rec.params, Some(p.normalized()));
        }

        #[test]
        fn intertwinement_roundtrip(n in 1usize..8, edges in proptest::collection::vec((0u32..8, 0u32..8), 0..16)) {
            let edges: Vec<(u32, u32)> = edges.into_iter().map(|(a, b)| (a % n as u32, b % n as u32)).collect();
            let z = DirectedMultigraph::from_edges(n, edges).unwrap();
            let x = double_intertwine(&z);
            prop_assert_eq!(x.num_vertices, 2 * n);
            prop_assert_eq!(x.num_edges(), 4 * z.num_edges());
            let r = recognize(&x, &[], GraphClass::DoubleIntertwinement);
            prop_assert!(r.is_yes());
            let q = r.quotient.unwrap();
            prop_assert_eq!(q.num_edges(), z.num_edges());
        }

        #[test]
        fn recognized_volcanoes_have_one_up_l_down(l in prop::sample::select(vec![2u64, 3]), len in 1usize..=6, depth in 0u32..=3, iso in any::<bool>()) {
            let crater = if iso { CraterSpec::Isolated(len) } else { CraterSpec::Cycle(len) };
            let v = gen_volcano(l, crater, depth).unwrap();
            let r = recognize(&v.graph, &[], GraphClass::Volcano { l, depth });
            prop_assert!(r.is_yes(), "{:?}", r.reason);
            let d = r.depth.unwrap();
            prop_assert_eq!(&d, &v.depth);
            let adj = v.graph.adjacency();
            for x in 0..v.graph.num_vertices as u32 {
                let dx = d[x as usize];
                if dx == 0 || dx == depth { continue; }
                let ups = adj.out(x).iter().filter(|&&e| d[v.graph.edges[e as usize].1 as usize] + 1 == dx).count();
                let downs = adj.out(x).iter().filter(|&&e| d[v.graph.edges[e as usize].1 as usize] == dx + 1).count();
                prop_assert_eq!((ups, downs as u64), (1, l));
            }
        }
    }
}
