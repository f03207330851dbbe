//! Isogeny graphs with full level structure, their GL2 voltage assignments,
//! the determinant quotient tower, and the audits run on them.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::arith::{gcd, ipow, is_prime, mult_order};
use crate::curve::{split_behavior, Curve, FrobeniusData, Point, Reduction, Representatives, Splitting};
use crate::error::{Error, Result};
use crate::field::{Fe, Field, DEFAULT_FIELD_CAP};
use crate::isogeny::{isogeny_steps, IsogenyStep};
use crate::matgroup::{element_order, gl2_order, Gl2Group, Mat2, UnitGroup};
use crate::par;
use crate::voltgraph::{factorial_exceeds, Connectivity, CoveringMap, DirectedMultigraph, FiniteGroup, VoltageAssignment};

pub const DEFAULT_GRAPH_CAP: u64 = 2_000_000;
pub const DEFAULT_DECK_CAP: u64 = 50_000;

/// Which curves with rational level structure enter the vertex set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    All,
    Supersingular,
    Ordinary,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerParams {
    pub q: u64,
    pub l: u64,
    pub p: u64,
    /// The auxiliary level `N`.
    pub level: u64,
    pub n_max: u32,
    pub k: Option<u32>,
    pub selection: Selection,
    /// Require `<s_E, t_E>` to be the same root of unity for all curves.
    pub normalize: bool,
    pub field_cap: u64,
    pub graph_cap: u64,
}

impl TowerParams {
    pub fn new(q: u64, l: u64, p: u64, level: u64, n_max: u32) -> TowerParams {
        TowerParams {
            q,
            l,
            p,
            level,
            n_max,
            k: None,
            selection: Selection::All,
            normalize: false,
            field_cap: DEFAULT_FIELD_CAP,
            graph_cap: DEFAULT_GRAPH_CAP,
        }
    }

    pub fn with_selection(mut self, s: Selection) -> Self {
        self.selection = s;
        self
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = Some(k);
        self
    }

    pub fn normalized(mut self) -> Self {
        self.normalize = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for x in [self.q, self.l, self.p] {
            if !is_prime(x) {
                return Err(Error::NotPrime(x));
            }
        }
        if self.q == self.l || self.q == self.p || self.l == self.p {
            return Err(Error::InvalidParams("p, q and l must be three distinct primes".into()));
        }
        if self.q < 5 {
            return Err(Error::InvalidParams("short Weierstrass models need q >= 5".into()));
        }
        if self.level == 0 || gcd(self.level, self.p * self.q * self.l) != 1 {
            return Err(Error::InvalidParams("N must be a positive integer coprime to pql".into()));
        }
        Ok(())
    }

    /// `p^{n_max} N`.
    pub fn torsion_level(&self) -> u64 {
        ipow(self.p, self.n_max) * self.level
    }
}

/// A curve of the vertex set with its fixed torsion data.
pub struct TowerCurve {
    pub curve: Curve,
    pub frob: FrobeniusData,
    /// Basis `(s_E, t_E)` of `E[p^{n_max}]`.
    pub tate: (Point, Point),
    /// Basis `(r_1, r_2)` of `E[N]`.
    pub level_basis: (Point, Point),
    pub steps: Vec<IsogenyStep>,
    pub step_targets: Vec<usize>,
    /// `P -> (a, b)` with `P = a s_E + b t_E`, over all of `E[p^{n_max}]`.
    coords: HashMap<Point, (u32, u32)>,
}

impl TowerCurve {
    pub fn coords(&self, p: Point) -> Option<(u32, u32)> {
        self.coords.get(&p).copied()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThmCheck {
    pub n: u32,
    pub count: u64,
    pub predicted: u64,
    pub method: &'static str,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub exponent_per_level: u32,
    /// `c` with `count_n = c p^{e(n-1)}` at the largest level.
    pub c: Option<u64>,
    /// The fit also reproduces the previous level.
    pub onset_reached: bool,
    pub c_at_least_bound: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    pub component: usize,
    pub base_vertices: usize,
    pub curves: Vec<usize>,
    pub reduction: &'static str,
    pub cm_disc: Option<i64>,
    pub splitting: Option<&'static str>,
    /// Component counts above this component at levels `0..=n`.
    pub counts: Vec<u64>,
    pub fit: Option<GrowthFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaloisAudit {
    pub component: usize,
    pub n: u32,
    pub sheets: u64,
    pub components: u64,
    pub verdict: &'static str,
    pub method: &'static str,
    pub deck_order: Option<usize>,
    pub transitive: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizedAudit {
    pub component: usize,
    pub n: u32,
    pub m: u32,
    pub m0: Option<u32>,
    pub verdict: &'static str,
    pub deck_order: Option<usize>,
    pub expected: u64,
    pub matches_congruence_subgroup: Option<bool>,
}

/// A set of base vertices closed under edges, with its induced graph.
#[derive(Clone, Debug)]
pub struct Region {
    pub vertices: Vec<u32>,
    pub graph: DirectedMultigraph,
    /// Base edge index of every region edge.
    pub edges: Vec<u32>,
    position: HashMap<u32, u32>,
}

impl Region {
    pub fn position(&self, base_vertex: u32) -> Option<u32> {
        self.position.get(&base_vertex).copied()
    }
}

/// Vertices `(b, P, Q)` over base vertex `b` with `(P, Q)` a basis of `E[p^n]`.
pub struct DirectGraph {
    pub n: u32,
    pub graph: DirectedMultigraph,
    pub vertices: Vec<(u32, Point, Point)>,
    /// Region edge index of every direct edge.
    pub base_edge: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsomorphismWitness {
    pub n: u32,
    pub vertices: usize,
    pub edges: usize,
    pub restricted_to_component: Option<usize>,
    /// Derived-graph index of every direct vertex.
    #[serde(skip)]
    pub phi: Vec<u32>,
}

pub struct YGraph {
    pub n: u32,
    pub derived: CoveringMap,
    pub units: Arc<UnitGroup>,
    /// The direct construction with the smallest-`σ` pre-image rule.
    pub direct: Option<DirectedMultigraph>,
    pub agrees_smallest: Option<bool>,
    /// The same with the largest-`σ` rule.
    pub agrees_largest: Option<bool>,
    pub beta_image: Vec<u32>,
    /// The values of `β_n` generate the same subgroup as `l`.
    pub beta_generates_l: bool,
    pub components: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct YTowerAudit {
    pub n: u32,
    pub m: u32,
    pub counts: Vec<usize>,
    pub m0: Option<u32>,
    pub verdict: &'static str,
    pub deck_order: Option<usize>,
    pub expected: u64,
    pub cyclic: Option<bool>,
    pub matches_unit_subgroup: Option<bool>,
}

pub struct Tower {
    pub params: TowerParams,
    pub k: u32,
    pub field: Arc<Field>,
    pub reps: Representatives,
    pub curves: Vec<TowerCurve>,
    /// `X(N)`: vertices `(E, R_1, R_2)`.
    pub base: DirectedMultigraph,
    pub base_vertices: Vec<(usize, Point, Point)>,
    /// `(source base vertex, step index)` of every base edge.
    pub base_edge_step: Vec<(u32, u32)>,
    pub base_out_offset: Vec<u32>,
    /// `g_e` mod `p^{n_max}` per base edge.
    pub voltages: Vec<Mat2>,
    /// Common value of `<s_E, t_E>` when normalized.
    pub xi: Option<Fe>,
    /// Largest automorphism group order over the representative set.
    pub c_q: u64,
    groups: Mutex<HashMap<u32, Arc<Gl2Group>>>,
}

fn curves_with_torsion(reps: &Representatives, sel: Selection, m: u64) -> Vec<Curve> {
    let pool = match sel {
        Selection::Supersingular => reps.supersingular_members(),
        _ => reps.members(),
    };
    let keep: Vec<bool> = par::map_range(pool.len(), |i| {
        let e = &pool[i];
        e.has_rational_torsion(m)
            && match sel {
                Selection::Ordinary => !e.is_supersingular(),
                _ => true,
            }
    });
    pool.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect()
}

/// The least degree `k` for which the selection has curves with `E[p^{n_max} N]` rational.
/// Supersingular (and mixed) selections use the least even `k` with
/// `p^{n_max} N | q^{k/2} ± 1` (and `l` too when `l >= 5`); ordinary selections scan.
pub fn auto_k(params: &TowerParams) -> Result<u32> {
    params.validate()?;
    let m = params.torsion_level();
    let q = params.q;
    match params.selection {
        Selection::Ordinary => {
            let mut k = 1u32;
            while (q as u128).pow(k) <= params.field_cap as u128 {
                let qk = q.pow(k);
                if (qk - 1) % m == 0 {
                    let field = Arc::new(Field::with_cap(q, k, params.field_cap)?);
                    let reps = Representatives::new(field);
                    if !curves_with_torsion(&reps, Selection::Ordinary, m).is_empty() {
                        return Ok(k);
                    }
                }
                k += 1;
            }
            Err(Error::CapExceeded { what: "field degree search", size: q.pow(k), cap: params.field_cap })
        }
        _ => {
            let need = if params.l >= 5 { m * params.l / gcd(m, params.l) } else { m };
            let mut j = 1u32;
            while (q as u128).pow(2 * j) <= params.field_cap as u128 {
                let h = q.pow(j);
                if (h - 1) % need == 0 || (h + 1) % need == 0 {
                    return Ok(2 * j);
                }
                j += 1;
            }
            Err(Error::CapExceeded { what: "field degree search", size: (q as u128).pow(2 * j).min(u64::MAX as u128) as u64, cap: params.field_cap })
        }
    }
}

/// Discrete logarithm of `z` to base `base` inside `<base>`.
fn dlog(f: &Field, base: Fe, z: Fe, order: u64) -> Option<u64> {
    let lb = f.log(base)? as u64;
    let lz = f.log(z)? as u64;
    let n1 = f.size() as u64 - 1;
    (0..order).find(|&a| (lb * a) % n1 == lz)
}

impl Tower {
    pub fn build(params: TowerParams) -> Result<Tower> {
        params.validate()?;
        let k = match params.k {
            Some(k) => k,
            None => auto_k(&params)?,
        };
        let field = Arc::new(Field::with_cap(params.q, k, params.field_cap)?);
        let reps = Representatives::new(field.clone());
        let c_q = reps.max_automorphisms();
        let m = params.torsion_level();
        let pn = ipow(params.p, params.n_max);
        let selected = curves_with_torsion(&reps, params.selection, m);
        if selected.is_empty() {
            return Err(Error::TorsionNotRational(m));
        }
        let index = Representatives::index_of(&selected);

        // torsion data per curve
        let mut curves: Vec<TowerCurve> = Vec::with_capacity(selected.len());
        for e in &selected {
            let tate = e.torsion_basis(pn)?;
            let level_basis = e.torsion_basis(params.level)?;
            curves.push(TowerCurve {
                curve: e.clone(),
                frob: e.frobenius_data(),
                tate,
                level_basis,
                steps: Vec::new(),
                step_targets: Vec::new(),
                coords: HashMap::new(),
            });
        }
        let mut xi = None;
        if params.normalize && params.n_max > 0 {
            let c0 = &curves[0];
            let x = c0.curve.weil_pairing(c0.tate.0, c0.tate.1, pn)?;
            for c in curves.iter_mut() {
                let w = c.curve.weil_pairing(c.tate.0, c.tate.1, pn)?;
                let a = dlog(&field, x, w, pn).ok_or_else(|| Error::Invariant("pairing outside <xi>".into()))?;
                let inv = crate::arith::mod_inv(a, pn).ok_or_else(|| Error::Invariant("non-primitive pairing".into()))?;
                c.tate.1 = c.curve.mul(c.tate.1, inv as i64);
                debug_assert_eq!(c.curve.weil_pairing(c.tate.0, c.tate.1, pn)?, x);
            }
            xi = Some(x);
        }
        for c in curves.iter_mut() {
            let (s, t) = c.tate;
            let mut map = HashMap::with_capacity((pn * pn) as usize);
            for a in 0..pn {
                for b in 0..pn {
                    map.insert(c.curve.lin(a as i64, s, b as i64, t), (a as u32, b as u32));
                }
            }
            if map.len() as u64 != pn * pn {
                return Err(Error::Invariant("Tate basis is not a basis".into()));
            }
            c.coords = map;
        }
        // isogeny steps
        let step_lists: Vec<Result<Vec<IsogenyStep>>> = par::map_range(curves.len(), |i| {
            let c = &curves[i];
            let test = [c.tate.0, c.tate.1, c.level_basis.0, c.level_basis.1];
            isogeny_steps(&c.curve, params.l, &reps, &test)
        });
        for (c, steps) in curves.iter_mut().zip(step_lists) {
            let steps = steps?;
            c.step_targets = steps
                .iter()
                .map(|s| {
                    index
                        .get(&(s.target.a4, s.target.a6))
                        .copied()
                        .ok_or_else(|| Error::Invariant("isogeny leaves the vertex set".into()))
                })
                .collect::<Result<_>>()?;
            c.steps = steps;
        }

        // X(N)
        let nl = params.level as u32;
        let level_mats: Vec<Mat2> = if nl == 1 { vec![Mat2::identity(1)] } else { Gl2Group::new(nl)?.elements().to_vec() };
        let nverts = (curves.len() * level_mats.len()) as u64;
        if nverts > params.graph_cap {
            return Err(Error::CapExceeded { what: "level-0 graph", size: nverts, cap: params.graph_cap });
        }
        let mut base_vertices = Vec::with_capacity(nverts as usize);
        let mut vkey: HashMap<(usize, Point, Point), u32> = HashMap::new();
        for (ci, c) in curves.iter().enumerate() {
            let (r1, r2) = c.level_basis;
            for t in &level_mats {
                let pt1 = c.curve.lin(t.a as i64, r1, t.b as i64, r2);
                let pt2 = c.curve.lin(t.c as i64, r1, t.d as i64, r2);
                vkey.insert((ci, pt1, pt2), base_vertices.len() as u32);
                base_vertices.push((ci, pt1, pt2));
            }
        }
        let mut base = DirectedMultigraph::new(base_vertices.len());
        let mut base_edge_step = Vec::new();
        let mut base_out_offset = Vec::with_capacity(base_vertices.len() + 1);
        let mut voltages = Vec::new();
        let mut step_voltage: Vec<Vec<Mat2>> = Vec::with_capacity(curves.len());
        for c in &curves {
            let mut vs = Vec::with_capacity(c.steps.len());
            for (j, st) in c.steps.iter().enumerate() {
                let tgt = &curves[c.step_targets[j]];
                let (a1, b1) = tgt.coords(st.eval(c.tate.0)).ok_or_else(|| Error::Invariant("image of s_E outside E'[p^n]".into()))?;
                let (a2, b2) = tgt.coords(st.eval(c.tate.1)).ok_or_else(|| Error::Invariant("image of t_E outside E'[p^n]".into()))?;
                vs.push(Mat2::new(a1 as i64, b1 as i64, a2 as i64, b2 as i64, pn.max(1) as u32));
            }
            step_voltage.push(vs);
        }
        for (b, &(ci, r1, r2)) in base_vertices.iter().enumerate() {
            base_out_offset.push(base.num_edges() as u32);
            let c = &curves[ci];
            for (j, st) in c.steps.iter().enumerate() {
                let ct = c.step_targets[j];
                let key = (ct, st.eval(r1), st.eval(r2));
                let t = *vkey.get(&key).ok_or_else(|| Error::Invariant("image of a level-N basis not found".into()))?;
                base.add_edge(b as u32, t);
                base.edge_labels.push(st.encode(ci, ct));
                base_edge_step.push((b as u32, j as u32));
                voltages.push(step_voltage[ci][j]);
            }
        }
        base_out_offset.push(base.num_edges() as u32);
        base.vertex_labels = base_vertices
            .iter()
            .map(|&(ci, r1, r2)| {
                let e = &curves[ci].curve;
                format!("E{ci}|{}|{}", e.encode_point(r1), e.encode_point(r2))
            })
            .collect();
        Ok(Tower {
            params,
            k,
            field,
            reps,
            curves,
            base,
            base_vertices,
            base_edge_step,
            base_out_offset,
            voltages,
            xi,
            c_q,
            groups: Mutex::new(HashMap::new()),
        })
    }

    pub fn p_power(&self, n: u32) -> u64 {
        ipow(self.params.p, n)
    }

    fn check_level(&self, n: u32) -> Result<()> {
        if n > self.params.n_max {
            return Err(Error::InvalidParams(format!("level {n} exceeds n_max = {}", self.params.n_max)));
        }
        Ok(())
    }

    /// `GL_2(Z/p^n)`, built once per level.
    pub fn level_group(&self, n: u32) -> Result<Arc<Gl2Group>> {
        self.check_level(n)?;
        if n == 0 {
            return Err(Error::InvalidParams("level 0 carries the trivial group".into()));
        }
        let mut cache = self.groups.lock().unwrap();
        if let Some(g) = cache.get(&n) {
            return Ok(g.clone());
        }
        let g = Arc::new(Gl2Group::new(self.p_power(n) as u32)?);
        cache.insert(n, g.clone());
        Ok(g)
    }

    pub fn base_components(&self) -> crate::voltgraph::Partition {
        self.base.components(Connectivity::Weak)
    }

    pub fn region_all(&self) -> Region {
        let vertices: Vec<u32> = (0..self.base.num_vertices as u32).collect();
        let position = vertices.iter().map(|&v| (v, v)).collect();
        Region { vertices, graph: self.base.clone(), edges: (0..self.base.num_edges() as u32).collect(), position }
    }

    /// The weak component `c` of `X(N)` as a region.
    pub fn region_component(&self, c: usize) -> Result<Region> {
        let parts = self.base_components();
        if c >= parts.count {
            return Err(Error::InvalidParams(format!("no component {c}")));
        }
        let vertices: Vec<u32> = (0..self.base.num_vertices as u32).filter(|&v| parts.labels[v as usize] == c as u32).collect();
        let (graph, edges) = self.base.induced(&vertices);
        let position = vertices.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        Ok(Region { vertices, graph, edges, position })
    }

    /// The voltage `α_n` on a region, valued in `GL_2(Z/p^n)`.
    pub fn voltage(&self, region: &Region, n: u32) -> Result<VoltageAssignment<Gl2Group>> {
        let g = self.level_group(n)?;
        let pn = self.p_power(n) as u32;
        let values = region
            .edges
            .iter()
            .map(|&e| g.index_of(&self.voltages[e as usize].reduce_mod(pn).unwrap()).unwrap())
            .collect();
        VoltageAssignment::new(region.graph.clone(), g, values)
    }

    fn check_size(&self, what: &'static str, size: u64) -> Result<()> {
        if size > self.params.graph_cap {
            return Err(Error::CapExceeded { what, size, cap: self.params.graph_cap });
        }
        Ok(())
    }

    /// The derived graph of `α_n` over a region.
    pub fn derived(&self, region: &Region, n: u32) -> Result<CoveringMap> {
        if n == 0 {
            return Ok(CoveringMap {
                total: region.graph.clone(),
                base: region.graph.clone(),
                vertex_map: (0..region.graph.num_vertices as u32).collect(),
                edge_map: (0..region.graph.num_edges() as u32).collect(),
            });
        }
        self.check_size("derived graph", region.vertices.len() as u64 * gl2_order(self.params.p, n)?)?;
        Ok(self.voltage(region, n)?.derived_graph())
    }

    /// Bases of `E[p^n]` by brute force: ordered pairs of `p^n`-torsion points
    /// whose Weil pairing has exact order `p^n`.
    pub fn torsion_bases(&self, curve: usize, n: u32) -> Result<Vec<(Point, Point)>> {
        let c = &self.curves[curve];
        let pn = self.p_power(n);
        if n == 0 {
            return Ok(vec![(Point::Inf, Point::Inf)]);
        }
        let mut pts: Vec<Point> = c.coords.keys().copied().filter(|&p| c.curve.mul(p, pn as i64).is_inf()).collect();
        pts.sort_by_key(|&p| c.curve.point_key(p));
        let f = &self.field;
        let rows: Vec<Vec<(Point, Point)>> = par::map_range(pts.len(), |i| {
            let a = pts[i];
            pts.iter()
                .filter(|&&b| {
                    c.curve
                        .weil_pairing(a, b, pn)
                        .map(|w| f.multiplicative_order(w).ok() == Some(pn))
                        .unwrap_or(false)
                })
                .map(|&b| (a, b))
                .collect()
        });
        Ok(rows.into_iter().flatten().collect())
    }

    /// The level-`n` graph built directly from points and isogenies.
    pub fn build_level_graph(&self, region: &Region, n: u32) -> Result<DirectGraph> {
        self.check_level(n)?;
        let order = if n == 0 { 1 } else { gl2_order(self.params.p, n)? };
        self.check_size("level graph", region.vertices.len() as u64 * order)?;
        let pn = self.p_power(n);
        let used: Vec<usize> = {
            let mut s: Vec<usize> = region.vertices.iter().map(|&b| self.base_vertices[b as usize].0).collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        let mut bases: HashMap<usize, Vec<(Point, Point)>> = HashMap::new();
        // images of the p^n-torsion under each step
        let mut images: HashMap<(usize, usize), HashMap<Point, Point>> = HashMap::new();
        for &ci in &used {
            let b = self.torsion_bases(ci, n)?;
            if b.len() as u64 != order {
                return Err(Error::Invariant(format!("{} bases of E[{pn}], expected {order}", b.len())));
            }
            bases.insert(ci, b);
            let c = &self.curves[ci];
            let pts: Vec<Point> = c.coords.keys().copied().filter(|&p| c.curve.mul(p, pn as i64).is_inf()).collect();
            for (j, st) in c.steps.iter().enumerate() {
                images.insert((ci, j), pts.iter().map(|&p| (p, st.eval(p))).collect());
            }
        }
        let mut vertices = Vec::new();
        for &b in &region.vertices {
            let ci = self.base_vertices[b as usize].0;
            for &(p, q) in &bases[&ci] {
                vertices.push((b, p, q));
            }
        }
        let key: HashMap<(u32, Point, Point), u32> = vertices.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        let region_offsets: Vec<u32> = {
            let mut off = Vec::with_capacity(region.vertices.len());
            let mut acc = 0u32;
            for &b in &region.vertices {
                off.push(acc);
                acc += self.base_out_offset[b as usize + 1] - self.base_out_offset[b as usize];
            }
            off
        };
        let edge_rows: Vec<Result<Vec<(u32, u32, u32)>>> = par::map_range(vertices.len(), |x| {
            let (b, p, q) = vertices[x];
            let ci = self.base_vertices[b as usize].0;
            let lo = self.base_out_offset[b as usize];
            let hi = self.base_out_offset[b as usize + 1];
            let pos = region.position(b).unwrap() as usize;
            let mut row = Vec::with_capacity((hi - lo) as usize);
            for e in lo..hi {
                let j = self.base_edge_step[e as usize].1 as usize;
                let tb = self.base.edges[e as usize].1;
                let img = &images[&(ci, j)];
                let t = key
                    .get(&(tb, img[&p], img[&q]))
                    .ok_or_else(|| Error::Invariant("edge image is not a vertex".into()))?;
                row.push((x as u32, *t, region_offsets[pos] + (e - lo)));
            }
            Ok(row)
        });
        let mut graph = DirectedMultigraph::new(vertices.len());
        let mut base_edge = Vec::new();
        for row in edge_rows {
            for (s, t, e) in row? {
                graph.add_edge(s, t);
                base_edge.push(e);
            }
        }
        Ok(DirectGraph { n, graph, vertices, base_edge })
    }

    /// The matrix `σ` with `(P, Q)^T = σ (p^{n_max-n} s_E, p^{n_max-n} t_E)^T`.
    pub fn sigma_of(&self, curve: usize, n: u32, p: Point, q: Point) -> Result<Mat2> {
        let c = &self.curves[curve];
        let shift = self.p_power(self.params.n_max - n);
        let pn = self.p_power(n) as u32;
        let down = |v: u32| -> Result<i64> {
            if v as u64 % shift != 0 {
                return Err(Error::NotTorsion(pn as u64));
            }
            Ok((v as u64 / shift) as i64)
        };
        let (a, b) = c.coords(p).ok_or(Error::NotTorsion(pn as u64))?;
        let (cc, d) = c.coords(q).ok_or(Error::NotTorsion(pn as u64))?;
        Ok(Mat2::new(down(a)?, down(b)?, down(cc)?, down(d)?, pn))
    }

    /// Checks the map `(E, R_1, R_2, P, Q) -> ((E, R_1, R_2), σ)` is a directed-graph
    /// isomorphism between the direct graph and the derived graph of `α_n`.
    pub fn derived_vs_direct(&self, n: u32, component: Option<usize>) -> Result<IsomorphismWitness> {
        let region = match component {
            Some(c) => self.region_component(c)?,
            None => self.region_all(),
        };
        let direct = self.build_level_graph(&region, n)?;
        let derived = self.derived(&region, n)?;
        let nv = direct.graph.num_vertices;
        if nv != derived.total.num_vertices || direct.graph.num_edges() != derived.total.num_edges() {
            return Err(Error::Invariant("direct and derived graphs differ in size".into()));
        }
        let order = if n == 0 { 1 } else { self.level_group(n)?.order() };
        let group = if n == 0 { None } else { Some(self.level_group(n)?) };
        let phi: Vec<u32> = direct
            .vertices
            .iter()
            .map(|&(b, p, q)| -> Result<u32> {
                let pos = region.position(b).unwrap();
                let sigma = match &group {
                    None => 0,
                    Some(g) => {
                        let s = self.sigma_of(self.base_vertices[b as usize].0, n, p, q)?;
                        g.index_of(&s).ok_or_else(|| Error::Invariant("σ is singular".into()))?
                    }
                };
                Ok(pos * order as u32 + sigma)
            })
            .collect::<Result<_>>()?;
        let mut seen = vec![false; nv];
        for &v in &phi {
            if std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::Invariant("σ is not unique per vertex".into()));
            }
        }
        for (i, &(s, t)) in direct.graph.edges.iter().enumerate() {
            let sigma = phi[s as usize] % order as u32;
            let de = direct.base_edge[i] as usize * order + sigma as usize;
            let (ds, dt) = derived.total.edges[de];
            if ds != phi[s as usize] || dt != phi[t as usize] {
                return Err(Error::Invariant(format!("edge {i} is not preserved")));
            }
        }
        Ok(IsomorphismWitness { n, vertices: nv, edges: direct.graph.num_edges(), restricted_to_component: component, phi })
    }

    /// `(E, R_1, R_2, P, Q) -> (E, R_1, R_2, pP, pQ)` from level `n` to `n - 1`,
    /// on derived graphs: `(b, σ) -> (b, σ mod p^{n-1})`.
    pub fn covering_step(&self, region: &Region, n: u32) -> Result<CoveringMap> {
        if n == 0 {
            return Err(Error::InvalidParams("no level below 0".into()));
        }
        let upper = self.derived(region, n)?;
        let lower = self.derived(region, n - 1)?;
        let gu = self.level_group(n)?;
        let nu = gu.order();
        let (nl, reduce): (usize, Box<dyn Fn(u32) -> u32>) = if n == 1 {
            (1, Box::new(|_| 0))
        } else {
            let gl = self.level_group(n - 1)?;
            let pl = self.p_power(n - 1) as u32;
            let gu2 = gu.clone();
            (gl.order(), Box::new(move |s| gl.index_of(&gu2.element(s).reduce_mod(pl).unwrap()).unwrap()))
        };
        let vertex_map = (0..upper.total.num_vertices).map(|w| ((w / nu) * nl) as u32 + reduce((w % nu) as u32)).collect();
        let edge_map = (0..upper.total.num_edges()).map(|e| ((e / nu) * nl) as u32 + reduce((e % nu) as u32)).collect();
        let cover = CoveringMap { total: upper.total, base: lower.total, vertex_map, edge_map };
        cover.verify()?;
        Ok(cover)
    }

    /// Coverings `X_n -> X_{n-1}` for `n = 1..=n_max`.
    pub fn covering_chain(&self, region: &Region) -> Result<Vec<CoveringMap>> {
        (1..=self.params.n_max).map(|n| self.covering_step(region, n)).collect()
    }

    /// Number of components of the level-`n` graph above a region, from the
    /// closed-walk voltage group of each of its components.
    pub fn component_count(&self, region: &Region, n: u32) -> Result<u64> {
        let parts = region.graph.components(Connectivity::Weak);
        if n == 0 {
            return Ok(parts.count as u64);
        }
        let a = self.voltage(region, n)?;
        let order = a.sheets() as u64;
        Ok(parts
            .members()
            .iter()
            .map(|m| order / a.closed_walk_group(m[0]).len() as u64)
            .sum())
    }

    pub fn component_reduction(&self, region: &Region) -> Result<(Reduction, Option<i64>)> {
        let mut kinds = region.vertices.iter().map(|&b| {
            let f = &self.curves[self.base_vertices[b as usize].0].frob;
            (f.reduction, f.cm_disc)
        });
        let first = kinds.next().ok_or_else(|| Error::InvalidParams("empty region".into()))?;
        if kinds.any(|k| k.0 != first.0) {
            return Err(Error::Invariant("reduction type varies on a component".into()));
        }
        Ok(first)
    }

    /// Reduction type, counts per level and growth fit for every base component.
    pub fn classify_components(&self, n: u32) -> Result<Vec<ComponentReport>> {
        self.check_level(n)?;
        let parts = self.base_components();
        let mut out = Vec::new();
        for c in 0..parts.count {
            let region = self.region_component(c)?;
            let (red, disc) = self.component_reduction(&region)?;
            let counts = (0..=n).map(|i| self.component_count(&region, i)).collect::<Result<Vec<u64>>>()?;
            let mut curves: Vec<usize> = region.vertices.iter().map(|&b| self.base_vertices[b as usize].0).collect();
            curves.sort_unstable();
            curves.dedup();
            let splitting = match disc {
                Some(d) => Some(split_behavior(d, self.params.l)?),
                None => None,
            };
            let fit = match (red, splitting) {
                (Reduction::Ordinary, Some(s)) if n >= 1 => Some(self.growth_fit(&counts, s)),
                _ => None,
            };
            out.push(ComponentReport {
                component: c,
                base_vertices: region.vertices.len(),
                curves,
                reduction: match red {
                    Reduction::Ordinary => "ordinary",
                    Reduction::Supersingular => "supersingular",
                },
                cm_disc: disc,
                splitting: splitting.map(|s| match s {
                    Splitting::Split => "split",
                    Splitting::Inert => "inert",
                    Splitting::Ramified => "ramified",
                }),
                counts,
                fit,
            });
        }
        Ok(out)
    }

    /// Fit `count_n = c p^{e(n-1)}` at the largest level, `e = 2` when `l`
    /// splits and `3` otherwise, and test it against the level below.
    pub fn growth_fit(&self, counts: &[u64], s: Splitting) -> GrowthFit {
        let e = if s == Splitting::Split { 2 } else { 3 };
        let p = self.params.p;
        let n = counts.len() - 1;
        let scale = ipow(p, e * (n as u32 - 1));
        let c = (counts[n] % scale == 0).then(|| counts[n] / scale);
        let onset_reached = match c {
            Some(c) if n >= 2 => c * ipow(p, e * (n as u32 - 2)) == counts[n - 1],
            _ => false,
        };
        GrowthFit {
            exponent_per_level: e,
            c,
            onset_reached,
            c_at_least_bound: c.map(|c| c >= (p + 1) * p),
        }
    }

    /// Component count of the supersingular part at level `n` against `|(Z/p^n N)^× / <l>|`.
    pub fn supersingular_count_check(&self, n: u32) -> Result<ThmCheck> {
        self.check_level(n)?;
        let parts = self.base_components();
        let mut count = 0;
        for c in 0..parts.count {
            let region = self.region_component(c)?;
            if self.component_reduction(&region)?.0 == Reduction::Supersingular {
                count += self.component_count(&region, n)?;
            }
        }
        let predicted = crate::matgroup::unit_index(self.p_power(n) * self.params.level, self.params.l)?;
        Ok(ThmCheck { n, count, predicted, method: "closed-walk voltage group", pass: count == predicted })
    }

    /// Galois status of the level-`n` graph over base component `c`.
    pub fn galois_audit(&self, c: usize, n: u32, deck_cap: u64) -> Result<GaloisAudit> {
        self.check_level(n)?;
        let region = self.region_component(c)?;
        let sheets = if n == 0 { 1 } else { gl2_order(self.params.p, n)? };
        let components = self.component_count(&region, n)?;
        let size = region.vertices.len() as u64 * sheets;
        let mk = |verdict, method, deck_order, transitive| GaloisAudit {
            component: c,
            n,
            sheets,
            components,
            verdict,
            method,
            deck_order,
            transitive,
        };
        if components > 1 && factorial_exceeds(components as usize, sheets as usize) {
            return Ok(mk("not_galois", "factorial_bound", None, None));
        }
        if size <= deck_cap {
            let verdict = if n == 0 {
                self.derived(&region, 0)?.galois_verdict(false)?
            } else {
                self.voltage(&region, n)?.galois(false)?
            };
            let v = if verdict.galois { "galois" } else { "not_galois" };
            return Ok(mk(v, "deck_enumeration", verdict.deck_order, verdict.transitive));
        }
        if components == 1 {
            // a connected derived graph is Galois with group the voltage group
            return Ok(mk("galois", "connected_derived_graph", None, None));
        }
        Ok(mk("undecided", "none", None, None))
    }

    /// Smallest `m` from which component counts above `region` stay constant up to
    /// `n_max` and the level-`m` graph has no multiple edges.
    pub fn stabilization_level(&self, region: &Region) -> Result<Option<u32>> {
        let nm = self.params.n_max;
        let counts = (0..=nm).map(|i| self.component_count(region, i)).collect::<Result<Vec<_>>>()?;
        for m in 0..nm {
            if counts[m as usize..].iter().all(|&x| x == counts[m as usize]) && !self.derived(region, m)?.total.has_multi_edges() {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }

    /// For `n > m >= m0`: the deck group of a component of `X_n` over its image
    /// in `X_m` against the congruence subgroup `G_{n,m}`.
    pub fn stabilized_deck_audit(&self, c: usize, n: u32, m: u32) -> Result<StabilizedAudit> {
        self.check_level(n)?;
        if m >= n {
            return Err(Error::InvalidParams("need n > m".into()));
        }
        let region = self.region_component(c)?;
        let m0 = self.stabilization_level(&region)?;
        let expected = ipow(self.params.p, 4 * (n - m));
        let mut audit = StabilizedAudit {
            component: c,
            n,
            m,
            m0,
            verdict: "undecided",
            deck_order: None,
            expected,
            matches_congruence_subgroup: None,
        };
        if m0.is_none_or(|m0| m < m0) {
            return Ok(audit);
        }
        let mut cover = self.covering_step(&region, n)?;
        for k in (m + 1..n).rev() {
            cover = cover.compose(&self.covering_step(&region, k)?);
        }
        let (sub, _) = restrict_to_component(&cover, 0)?;
        let decks = sub.cover.deck_transformations(Some(expected as usize + 1))?;
        audit.deck_order = Some(decks.len());
        // left multiplication by matrices congruent to I mod p^m
        let g = self.level_group(n)?;
        let pm = self.p_power(m) as u32;
        let nu = g.order();
        let kernel: Vec<u32> = (0..nu as u32)
            .filter(|&x| m == 0 || g.element(x).reduce_mod(pm).unwrap() == Mat2::identity(pm))
            .collect();
        let mut lefts: Vec<Vec<u32>> = kernel
            .iter()
            .map(|&a| {
                sub.vertices
                    .iter()
                    .map(|&w| {
                        let img = (w as usize / nu * nu) as u32 + g.mul(a, w % nu as u32);
                        sub.local[&img]
                    })
                    .collect()
            })
            .collect();
        let mut found = decks;
        lefts.sort();
        found.sort();
        let ok = lefts == found;
        audit.matches_congruence_subgroup = Some(ok);
        audit.verdict = if ok && found.len() as u64 == expected { "pass" } else { "fail" };
        Ok(audit)
    }

    /// The Y-graph at level `n`: derived graph of `β_n = det ∘ α_n` and, when
    /// `N > C_q`, the direct construction through the Weil pairing with both
    /// pre-image rules.
    pub fn build_y_graph(&self, n: u32, direct: bool) -> Result<YGraph> {
        self.check_level(n)?;
        if !self.params.normalize {
            return Err(Error::InvalidParams("Y-graphs need normalized Tate bases".into()));
        }
        let pn = self.p_power(n);
        let units = Arc::new(UnitGroup::new(pn as u32)?);
        let values: Vec<u32> = self
            .voltages
            .iter()
            .map(|g| units.index_of(g.det() as u64 % pn).unwrap())
            .collect();
        let mut beta_image: Vec<u32> = values.iter().map(|&i| units.element(i)).collect();
        beta_image.sort_unstable();
        beta_image.dedup();
        self.check_size("Y-graph", self.base.num_vertices as u64 * units.order() as u64)?;
        let a = VoltageAssignment::new(self.base.clone(), units.clone(), values)?;
        let derived = a.derived_graph();
        let components = derived.total.components(Connectivity::Weak).count;
        let beta_generates_l = unit_span(&beta_image, pn) == unit_span(&[(self.params.l % pn) as u32], pn);
        let mut y = YGraph {
            n,
            derived,
            units,
            direct: None,
            agrees_smallest: None,
            agrees_largest: None,
            beta_image,
            beta_generates_l,
            components,
        };
        if direct && self.params.level > self.c_q {
            let small = self.direct_y_graph(n, false)?;
            let large = self.direct_y_graph(n, true)?;
            y.agrees_smallest = Some(small.edges == y.derived.total.edges);
            y.agrees_largest = Some(large.edges == y.derived.total.edges);
            y.direct = Some(small);
        }
        Ok(y)
    }

    /// Vertices `(b, a)` with `ζ = ξ_n^a`; edges from a fixed pre-image `(P, Q)` per vertex.
    fn direct_y_graph(&self, n: u32, largest: bool) -> Result<DirectedMultigraph> {
        let pn = self.p_power(n);
        let units = UnitGroup::new(pn as u32)?;
        let nu = units.order();
        let f = &self.field;
        if n == 0 {
            return Ok(self.base.clone());
        }
        let xi = self.xi.ok_or_else(|| Error::InvalidParams("bases are not normalized".into()))?;
        let xi_n = f.pow(xi, self.p_power(self.params.n_max - n));
        let mut power: HashMap<Fe, u64> = HashMap::new();
        let mut z = Fe::ONE;
        for a in 0..pn {
            power.insert(z, a);
            z = f.mul(z, xi_n);
        }
        let g = self.level_group(n)?;
        // pre-image σ per determinant
        let mut pre: HashMap<u32, Mat2> = HashMap::new();
        for x in g.elements() {
            let d = x.det();
            if largest || !pre.contains_key(&d) {
                pre.insert(d, *x);
            }
        }
        let shift = self.p_power(self.params.n_max - n) as i64;
        let rows: Vec<Result<Vec<(u32, u32)>>> = par::map_range(self.base.num_vertices * nu, |y| {
            let b = y / nu;
            let a = units.element((y % nu) as u32);
            let ci = self.base_vertices[b].0;
            let c = &self.curves[ci];
            let (s, t) = (c.curve.mul(c.tate.0, shift), c.curve.mul(c.tate.1, shift));
            let sg = pre[&a];
            let p = c.curve.lin(sg.a as i64, s, sg.b as i64, t);
            let q = c.curve.lin(sg.c as i64, s, sg.d as i64, t);
            let lo = self.base_out_offset[b];
            let hi = self.base_out_offset[b + 1];
            let mut row = Vec::new();
            for e in lo..hi {
                let j = self.base_edge_step[e as usize].1 as usize;
                let st = &c.steps[j];
                let tgt = &self.curves[c.step_targets[j]].curve;
                let w = tgt.weil_pairing(st.eval(p), st.eval(q), pn)?;
                let a2 = *power.get(&w).ok_or_else(|| Error::Invariant("pairing value outside <ξ_n>".into()))?;
                let ai = units.index_of(a2).ok_or_else(|| Error::Invariant("pairing value is not primitive".into()))?;
                let tb = self.base.edges[e as usize].1 as usize;
                row.push((y as u32, (tb * nu) as u32 + ai));
            }
            Ok(row)
        });
        // edges in derived order: base edge major, unit minor
        let mut by_vertex: Vec<Vec<(u32, u32)>> = Vec::with_capacity(rows.len());
        for r in rows {
            by_vertex.push(r?);
        }
        let mut g2 = DirectedMultigraph::new(self.base.num_vertices * nu);
        for e in 0..self.base.num_edges() {
            let (b, _) = self.base_edge_step[e];
            let j = e as u32 - self.base_out_offset[b as usize];
            for ai in 0..nu {
                let y = b as usize * nu + ai;
                g2.edges.push(by_vertex[y][j as usize]);
            }
        }
        Ok(g2)
    }

    /// Deck group of `Y_n` over `Y_m` on one component, against `𝒢_{n,m}`.
    pub fn y_tower_audit(&self, n: u32, m: u32) -> Result<YTowerAudit> {
        self.check_level(n)?;
        if m > n {
            return Err(Error::InvalidParams("need n >= m".into()));
        }
        let ys = (0..=self.params.n_max).map(|i| self.build_y_graph(i, false)).collect::<Result<Vec<_>>>()?;
        let counts: Vec<usize> = ys.iter().map(|y| y.components).collect();
        let mut m0 = None;
        for i in 0..=self.params.n_max {
            if counts[i as usize..].iter().all(|&x| x == counts[i as usize]) && !ys[i as usize].derived.total.has_multi_edges() {
                m0 = Some(i);
                break;
            }
        }
        let expected = ipow(self.params.p, n - m);
        let mut audit = YTowerAudit {
            n,
            m,
            counts,
            m0,
            verdict: "undecided",
            deck_order: None,
            expected,
            cyclic: None,
            matches_unit_subgroup: None,
        };
        if m0.is_none_or(|m0| m < m0) {
            return Ok(audit);
        }
        let (un, um) = (&ys[n as usize], &ys[m as usize]);
        let (nu, nm) = (un.units.order(), um.units.order());
        let pm = self.p_power(m);
        let vertex_map = (0..un.derived.total.num_vertices)
            .map(|w| ((w / nu) * nm) as u32 + um.units.index_of(un.units.element((w % nu) as u32) as u64 % pm).unwrap())
            .collect();
        let edge_map = (0..un.derived.total.num_edges())
            .map(|e| ((e / nu) * nm) as u32 + um.units.index_of(un.units.element((e % nu) as u32) as u64 % pm).unwrap())
            .collect();
        let cover = CoveringMap { total: un.derived.total.clone(), base: um.derived.total.clone(), vertex_map, edge_map };
        cover.verify()?;
        let (sub, _) = restrict_to_component(&cover, 0)?;
        let decks = sub.cover.deck_transformations(Some(expected as usize + 1))?;
        audit.deck_order = Some(decks.len());
        // cyclic: some deck map has order |Deck|
        let nd = decks.len();
        let cyclic = decks.iter().any(|d| perm_order(d) == nd);
        audit.cyclic = Some(cyclic);
        let units = &un.units;
        let mut lefts: Vec<Vec<u32>> = (0..nu as u32)
            .filter(|&u| m == 0 || units.element(u) as u64 % pm == 1 % pm)
            .map(|u| {
                sub.vertices
                    .iter()
                    .map(|&w| {
                        let img = (w as usize / nu * nu) as u32 + units.mul(u, w % nu as u32);
                        sub.local[&img]
                    })
                    .collect()
            })
            .collect();
        let mut found = decks;
        lefts.sort();
        found.sort();
        let ok = lefts == found;
        audit.matches_unit_subgroup = Some(ok);
        audit.verdict = if ok && cyclic && nd as u64 == expected { "pass" } else { "fail" };
        Ok(audit)
    }

    /// Out-degree of every base vertex, for regularity checks.
    pub fn out_degrees(&self) -> Vec<usize> {
        self.base.out_degrees()
    }

    /// The step of the target curve inverting step `j` of curve `ci` up to `[l]`,
    /// as an index into the target's step list (matched by action on the test points).
    pub fn dual_step_index(&self, ci: usize, j: usize) -> Result<Option<usize>> {
        let c = &self.curves[ci];
        let st = &c.steps[j];
        let test = [c.tate.0, c.tate.1, c.level_basis.0, c.level_basis.1];
        let Some(back) = crate::isogeny::dual_step(st, &test)? else {
            return Ok(None);
        };
        let tc = &self.curves[c.step_targets[j]];
        let ttest = [tc.tate.0, tc.tate.1, tc.level_basis.0, tc.level_basis.1];
        let want: Vec<Point> = ttest.iter().map(|&p| back.eval(p)).collect();
        Ok(tc.steps.iter().position(|s| ttest.iter().map(|&p| s.eval(p)).collect::<Vec<_>>() == want))
    }

    /// Voltage of step `j` of curve `ci`.
    pub fn step_voltage(&self, ci: usize, j: usize) -> Mat2 {
        let b = self.base_vertices.iter().position(|v| v.0 == ci).unwrap();
        self.voltages[(self.base_out_offset[b] + j as u32) as usize]
    }

    /// Strong components equal weak components at level `n` over the region.
    pub fn weak_strong_equivalent(&self, region: &Region, n: u32) -> Result<bool> {
        let d = self.derived(region, n)?;
        Ok(d.total.components(Connectivity::Weak) == d.total.components(Connectivity::Strong))
    }

    /// `|(Z/p^n)^× / <l^{2u}>|` with `l^u = 1 mod N`: bound on Y components over one component.
    pub fn y_component_bound(&self, n: u32) -> u64 {
        let pn = self.p_power(n);
        let u = mult_order(self.params.l, self.params.level).unwrap_or(1);
        let g = crate::arith::mod_pow(self.params.l, 2 * u, pn.max(1));
        crate::arith::euler_phi(pn) / mult_order(g, pn).unwrap_or(1)
    }
}

/// A covering restricted to one component of its total graph and that component's image.
pub struct SubCover {
    pub cover: CoveringMap,
    /// Original total vertices of the component, in order.
    pub vertices: Vec<u32>,
    /// Original total vertex -> local index.
    pub local: HashMap<u32, u32>,
}

/// Restricts `cover` to the weak component containing total vertex `root`.
pub fn restrict_to_component(cover: &CoveringMap, root: u32) -> Result<(SubCover, Vec<u32>)> {
    let tp = cover.total.components(Connectivity::Weak);
    let bp = cover.base.components(Connectivity::Weak);
    let tc = tp.labels[root as usize];
    let bc = bp.labels[cover.vertex_map[root as usize] as usize];
    let tv: Vec<u32> = (0..cover.total.num_vertices as u32).filter(|&v| tp.labels[v as usize] == tc).collect();
    let bv: Vec<u32> = (0..cover.base.num_vertices as u32).filter(|&v| bp.labels[v as usize] == bc).collect();
    let (total, tedges) = cover.total.induced(&tv);
    let (base, bedges) = cover.base.induced(&bv);
    let bpos: HashMap<u32, u32> = bv.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let bepos: HashMap<u32, u32> = bedges.iter().enumerate().map(|(i, &e)| (e, i as u32)).collect();
    let vertex_map = tv.iter().map(|&v| bpos[&cover.vertex_map[v as usize]]).collect();
    let edge_map = tedges.iter().map(|&e| bepos[&cover.edge_map[e as usize]]).collect();
    let sub = CoveringMap { total, base, vertex_map, edge_map };
    sub.verify()?;
    let local = tv.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    Ok((SubCover { cover: sub, vertices: tv, local }, bv))
}

/// Subgroup of `(Z/m)^×` generated by `gens`, sorted.
fn unit_span(gens: &[u32], m: u64) -> Vec<u64> {
    let mut seen = vec![false; m as usize];
    let mut out = vec![1 % m];
    seen[(1 % m) as usize] = true;
    let mut i = 0;
    while i < out.len() {
        let x = out[i];
        for &g in gens {
            let y = x * g as u64 % m;
            if !seen[y as usize] {
                seen[y as usize] = true;
                out.push(y);
            }
        }
        i += 1;
    }
    out.sort_unstable();
    out
}

fn perm_order(p: &[u32]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut ord = 1usize;
    for i in 0..p.len() {
        if seen[i] {
            continue;
        }
        let mut len = 0;
        let mut j = i;
        while !seen[j] {
            seen[j] = true;
            j = p[j] as usize;
            len += 1;
        }
        ord = ord / gcd(ord as u64, len as u64) as usize * len;
    }
    ord
}

/// Order of a unit modulo `m` as an element of a `UnitGroup`.
pub fn unit_order(units: &UnitGroup, x: u64) -> Option<usize> {
    units.index_of(x).map(|i| element_order(units, i))
}

#[derive(Clone, Debug, Serialize)]
pub struct OrdinaryInstance {
    pub q: u64,
    pub k: u32,
    pub l: u64,
    pub p: u64,
    pub component: usize,
    pub cm_disc: i64,
    pub splitting: &'static str,
    pub counts: Vec<u64>,
    pub fit: GrowthFit,
    pub certificate_at_top: bool,
}

/// Ordinary components over `F_{q^k}` (auto `k`, `n_max = 2`, `N = 1`) with their growth data.
pub fn ordinary_instances(q: u64, l: u64, p: u64, field_cap: u64) -> Result<Vec<OrdinaryInstance>> {
    let mut params = TowerParams::new(q, l, p, 1, 2).with_selection(Selection::Ordinary);
    params.field_cap = field_cap;
    let tower = Tower::build(params)?;
    let mut out = Vec::new();
    let sheets = gl2_order(p, 2)? as usize;
    for r in tower.classify_components(2)? {
        let (Some(disc), Some(fit)) = (r.cm_disc, r.fit.clone()) else { continue };
        out.push(OrdinaryInstance {
            q,
            k: tower.k,
            l,
            p,
            component: r.component,
            cm_disc: disc,
            splitting: r.splitting.unwrap_or("?"),
            counts: r.counts.clone(),
            certificate_at_top: factorial_exceeds(r.counts[2] as usize, sheets),
            fit,
        });
    }
    Ok(out)
}

/// Set of base vertices over curves of the given reduction type.
pub fn vertices_of_type(tower: &Tower, red: Reduction) -> HashSet<u32> {
    (0..tower.base.num_vertices as u32)
        .filter(|&b| tower.curves[tower.base_vertices[b as usize].0].frob.reduction == red)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ss_531(n_max: u32) -> Tower {
        Tower::build(TowerParams::new(5, 2, 3, 1, n_max).with_selection(Selection::Supersingular)).unwrap()
    }

    #[test]
    fn guards() {
        assert!(TowerParams::new(5, 2, 5, 1, 1).validate().is_err());
        assert!(TowerParams::new(5, 2, 3, 2, 1).validate().is_err());
        assert!(TowerParams::new(5, 2, 3, 7, 1).validate().is_ok());
        assert!(TowerParams::new(6, 2, 3, 1, 1).validate().is_err());
    }

    #[test]
    fn auto_degree() {
        assert_eq!(auto_k(&TowerParams::new(5, 2, 3, 1, 1)).unwrap(), 2);
        assert_eq!(auto_k(&TowerParams::new(5, 2, 3, 1, 2)).unwrap(), 6);
        assert_eq!(auto_k(&TowerParams::new(7, 2, 3, 1, 2).with_selection(Selection::Ordinary)).unwrap(), 3);
    }

    #[test]
    fn level_zero_and_one() {
        let t = ss_531(1);
        assert_eq!(t.k, 2);
        assert_eq!(t.curves.len(), 1);
        let degs = t.out_degrees();
        assert!(degs.iter().all(|&d| d == degs[0]));
        for (e, g) in t.voltages.iter().enumerate() {
            assert_eq!(g.det() as u64, 2 % 3, "edge {e}");
        }
        let w = t.derived_vs_direct(1, None).unwrap();
        assert_eq!(w.vertices, 48);
        let chk = t.supersingular_count_check(1).unwrap();
        assert!(chk.pass);
        assert_eq!(chk.count, 1);
        let region = t.region_all();
        let d = t.derived(&region, 1).unwrap();
        assert_eq!(d.total.components(Connectivity::Weak).count, 1);
        assert!(t.weak_strong_equivalent(&region, 1).unwrap());
        let chain = t.covering_chain(&region).unwrap();
        assert_eq!(chain[0].sheets(), 48);
    }

    #[test]
    fn dual_voltage_is_scalar() {
        let t = ss_531(1);
        let c = &t.curves[0];
        for j in 0..c.steps.len() {
            let back = t.dual_step_index(0, j).unwrap().expect("dual exists");
            let g = t.step_voltage(0, j).mul(&t.step_voltage(c.step_targets[j], back)).unwrap();
            assert_eq!(g, Mat2::scalar(2, 3));
        }
    }

    #[test]
    fn galois_at_level_one() {
        let t = ss_531(1);
        let a = t.galois_audit(0, 1, DEFAULT_DECK_CAP).unwrap();
        assert_eq!(a.verdict, "galois");
        assert_eq!(a.deck_order, Some(48));
        assert_eq!(a.transitive, Some(true));
        let a0 = t.galois_audit(0, 0, DEFAULT_DECK_CAP).unwrap();
        assert_eq!((a0.verdict, a0.deck_order), ("galois", Some(1)));
    }
}
