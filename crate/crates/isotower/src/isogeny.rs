//! Prime-degree isogenies: kernels, Vélu's formulas and normalized steps
//! between representative curves.

use crate::curve::{Curve, Point, Representatives};
use crate::error::{Error, Result};
use crate::field::Fe;

/// A cyclic subgroup of order `l` stable under Frobenius, described by the
/// x-coordinates of its nonzero points (one per `±` pair).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Kernel {
    pub l: u64,
    /// Sorted by canonical rank.
    pub xs: Vec<Fe>,
    /// Smallest rational point of exact order `l` in the subgroup, if its points are rational.
    pub generator: Option<Point>,
}

impl Kernel {
    pub fn contains(&self, p: Point) -> bool {
        match p {
            Point::Inf => true,
            Point::Aff(x, _) => self.xs.contains(&x),
        }
    }
}

/// `x(2P)` from `x(P)`; `None` when `2P = ∞`.
fn x_double(e: &Curve, x: Fe) -> Option<Fe> {
    let f = &e.field;
    let fx = e.rhs(x);
    if fx.is_zero() {
        return None;
    }
    let num = f.sub(
        f.square(f.sub(f.square(x), e.a4)),
        f.mul(f.mul(f.from_int(8), e.a6), x),
    );
    Some(f.div(num, f.mul(f.from_int(4), fx)).unwrap())
}

/// `x(P + Q) + x(P - Q)`, defined for `x(P) != x(Q)`.
fn x_sum_diff(e: &Curve, x1: Fe, x2: Fe) -> Option<Fe> {
    let f = &e.field;
    if x1 == x2 {
        return None;
    }
    let num = f.add(
        f.mul(f.add(x1, x2), f.add(f.mul(x1, x2), e.a4)),
        f.add(e.a6, e.a6),
    );
    Some(f.div(f.add(num, num), f.square(f.sub(x1, x2))).unwrap())
}

/// The x-coordinates `x(kP)`, `k = 1..=(l-1)/2`, for `P` with `x(P) = x0` of odd
/// order `l`; `None` when `x0` is not the abscissa of such a point.
fn odd_kernel_xs(e: &Curve, x0: Fe, l: u64) -> Option<Vec<Fe>> {
    let half = ((l - 1) / 2) as usize;
    let mut xs = vec![x0];
    if half >= 2 {
        xs.push(x_double(e, x0)?);
    }
    while xs.len() < half {
        let k = xs.len();
        let next = e.field.sub(x_sum_diff(e, x0, xs[k - 1])?, xs[k - 2]);
        xs.push(next);
    }
    // l P = ∞ iff x(((l+1)/2) P) = x(((l-1)/2) P)
    let last = xs[half - 1];
    let up = if half == 1 {
        x_double(e, x0)?
    } else {
        e.field.sub(x_sum_diff(e, x0, last)?, xs[half - 2])
    };
    if up != last {
        return None;
    }
    let mut sorted = xs.clone();
    sorted.sort_by_key(|&x| e.field.rank(x));
    sorted.dedup();
    if sorted.len() != half || e.rhs(x0).is_zero() {
        return None;
    }
    Some(xs)
}

fn kernel_generator(e: &Curve, xs: &[Fe]) -> Option<Point> {
    let f = &e.field;
    let mut pts = Vec::new();
    for &x in xs {
        let v = e.rhs(x);
        if let Some(r) = f.sqrt(v) {
            pts.push(Point::Aff(x, r));
            pts.push(Point::Aff(x, f.neg(r)));
        }
    }
    pts.into_iter().min_by_key(|&p| e.point_key(p))
}

/// Every Frobenius-stable cyclic subgroup of order `l` whose points have rational
/// abscissas. For `l ∈ {2, 3}` these are all rational `l`-isogeny kernels.
pub fn rational_kernels(e: &Curve, l: u64) -> Result<Vec<Kernel>> {
    let f = &e.field;
    if l as u32 == f.characteristic() || !crate::arith::is_prime(l) {
        return Err(Error::InvalidParams(format!("isogeny degree {l} must be a prime other than q")));
    }
    let mut out: Vec<Kernel> = Vec::new();
    for x in f.elements() {
        if l == 2 {
            if e.rhs(x).is_zero() {
                out.push(Kernel { l, xs: vec![x], generator: Some(Point::Aff(x, Fe::ZERO)) });
            }
            continue;
        }
        if let Some(xs) = odd_kernel_xs(e, x, l) {
            let mut sorted = xs;
            sorted.sort_by_key(|&x| f.rank(x));
            if sorted[0] != x {
                continue;
            }
            let generator = kernel_generator(e, &sorted);
            out.push(Kernel { l, xs: sorted, generator });
        }
    }
    Ok(out)
}

/// The `l + 1` cyclic subgroups of a fully rational `E[l]`.
pub fn kernel_subgroups(e: &Curve, l: u64) -> Result<Vec<Kernel>> {
    let ks = rational_kernels(e, l)?;
    if ks.len() as u64 != l + 1 || ks.iter().any(|k| k.generator.is_none()) {
        return Err(Error::TorsionNotRational(l));
    }
    Ok(ks)
}

/// Vélu's isogeny with a given kernel, onto the raw codomain.
#[derive(Clone, Debug)]
pub struct Velu {
    pub domain: Curve,
    pub codomain: Curve,
    /// `(x_Q, t_Q, u_Q)` per kernel point pair.
    terms: Vec<(Fe, Fe, Fe)>,
}

impl Velu {
    pub fn new(e: &Curve, kernel: &Kernel) -> Velu {
        let f = &e.field;
        let mut terms = Vec::with_capacity(kernel.xs.len());
        let (mut t, mut w) = (Fe::ZERO, Fe::ZERO);
        for &xq in &kernel.xs {
            let gx = f.add(f.mul(f.from_int(3), f.square(xq)), e.a4);
            let (tq, uq) = if kernel.l == 2 {
                (gx, Fe::ZERO)
            } else {
                (f.add(gx, gx), f.mul(f.from_int(4), e.rhs(xq)))
            };
            t = f.add(t, tq);
            w = f.add(w, f.add(uq, f.mul(xq, tq)));
            terms.push((xq, tq, uq));
        }
        let a4 = f.sub(e.a4, f.mul(f.from_int(5), t));
        let a6 = f.sub(e.a6, f.mul(f.from_int(7), w));
        let codomain = Curve::new(e.field.clone(), a4, a6).expect("Vélu codomain is nonsingular");
        Velu { domain: e.clone(), codomain, terms }
    }

    pub fn eval(&self, p: Point) -> Point {
        let f = &self.domain.field;
        let (x, y) = match p {
            Point::Inf => return Point::Inf,
            Point::Aff(x, y) => (x, y),
        };
        let (mut sx, mut sy) = (x, Fe::ONE);
        for &(xq, tq, uq) in &self.terms {
            if x == xq {
                return Point::Inf;
            }
            let d = f.inv(f.sub(x, xq)).unwrap();
            let d2 = f.square(d);
            sx = f.add(sx, f.add(f.mul(tq, d), f.mul(uq, d2)));
            let d3 = f.mul(d2, d);
            sy = f.sub(sy, f.add(f.mul(tq, d2), f.mul(f.add(uq, uq), d3)));
        }
        Point::Aff(sx, f.mul(y, sy))
    }
}

/// An `l`-isogeny between representative curves: Vélu followed by the twist
/// `(x, y) -> (u^2 x, u^3 y)` onto the representative.
#[derive(Clone, Debug)]
pub struct IsogenyStep {
    pub source: Curve,
    pub target: Curve,
    pub kernel: Kernel,
    pub velu: Velu,
    pub u: Fe,
    /// Position of the post-composed automorphism in the target's automorphism list.
    pub aut: usize,
}

impl IsogenyStep {
    pub fn degree(&self) -> u64 {
        self.kernel.l
    }

    pub fn eval(&self, p: Point) -> Point {
        self.velu.codomain.twist_point(self.u, self.velu.eval(p))
    }

    /// Export encoding `src>dst|kgen=<point>|aut=<u>`.
    pub fn encode(&self, src: usize, dst: usize) -> String {
        let kgen = match self.kernel.generator {
            Some(p) => self.source.encode_point(p),
            None => format!("x={}", self.source.field.encode(self.kernel.xs[0])),
        };
        format!("{src}>{dst}|kgen={kgen}|aut={}", self.source.field.encode(self.u))
    }
}

/// All edges out of `e`: for every kernel and every automorphism of the
/// normalized target one candidate, candidates with the same target and the same
/// images of `test` (a basis of the relevant torsion) merged, first kept.
pub fn isogeny_steps(e: &Curve, l: u64, reps: &Representatives, test: &[Point]) -> Result<Vec<IsogenyStep>> {
    let mut out: Vec<(IsogenyStep, Vec<Point>)> = Vec::new();
    for kernel in rational_kernels(e, l)? {
        let velu = Velu::new(e, &kernel);
        let (target, u0) = reps.normalize(&velu.codomain);
        for (aut, v) in target.automorphisms().into_iter().enumerate() {
            let step = IsogenyStep {
                source: e.clone(),
                target: target.clone(),
                kernel: kernel.clone(),
                velu: velu.clone(),
                u: e.field.mul(v, u0),
                aut,
            };
            let images: Vec<Point> = test.iter().map(|&p| step.eval(p)).collect();
            if !out.iter().any(|(s, im)| s.target == step.target && *im == images) {
                out.push((step, images));
            }
        }
    }
    Ok(out.into_iter().map(|(s, _)| s).collect())
}

/// Finds an isogeny back from `step.target` whose composite with `step` is `[l]`
/// on `points`; returns it when it exists.
pub fn dual_step(step: &IsogenyStep, points: &[Point]) -> Result<Option<IsogenyStep>> {
    let src = &step.source;
    let tgt = &step.target;
    let l = step.degree() as i64;
    let images: Vec<Point> = points.iter().map(|&p| step.eval(p)).collect();
    for kernel in rational_kernels(tgt, step.degree())? {
        let velu = Velu::new(tgt, &kernel);
        for u in velu.codomain.isomorphisms_to(src) {
            let back = IsogenyStep {
                source: tgt.clone(),
                target: src.clone(),
                kernel: kernel.clone(),
                velu: velu.clone(),
                u,
                aut: 0,
            };
            if points.iter().zip(&images).all(|(&p, &im)| back.eval(im) == src.mul(p, l)) {
                return Ok(Some(back));
            }
        }
    }
    Ok(None)
}

/// The classical modular polynomial `Φ_2(X, Y)` evaluated in the field.
pub fn modular_polynomial_2(e: &Curve, x: Fe, y: Fe) -> Fe {
    let f = &e.field;
    let c = |n: i128| -> Fe {
        let q = f.characteristic() as i128;
        f.from_int(n.rem_euclid(q) as i64)
    };
    let x2 = f.square(x);
    let y2 = f.square(y);
    let terms = [
        f.mul(x2, x),
        f.mul(y2, y),
        f.neg(f.mul(x2, y2)),
        f.mul(c(1488), f.add(f.mul(x2, y), f.mul(x, y2))),
        f.mul(c(-162000), f.add(x2, y2)),
        f.mul(c(40773375), f.mul(x, y)),
        f.mul(c(8748000000), f.add(x, y)),
        c(-157464000000000),
    ];
    terms.iter().fold(Fe::ZERO, |acc, &t| f.add(acc, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use std::sync::Arc;

    fn f(q: u64, k: u32) -> Arc<Field> {
        Arc::new(Field::new(q, k).unwrap())
    }

    fn brute_kernels(e: &Curve, l: u64) -> Vec<Vec<Fe>> {
        // cyclic subgroups of E[l] from the point list, keyed by x-sets
        let pts = e.torsion_points(l);
        let mut seen: Vec<Vec<Fe>> = Vec::new();
        for &p in &pts {
            if p.is_inf() {
                continue;
            }
            let mut xs: Vec<Fe> = (1..l as i64).filter_map(|k| e.mul(p, k).x()).collect();
            xs.sort_by_key(|&x| e.field.rank(x));
            xs.dedup();
            if !seen.contains(&xs) {
                seen.push(xs);
            }
        }
        seen
    }

    #[test]
    fn two_and_three_kernels_with_full_torsion() {
        // y^2 = x^3 + 1 over F_25 has E(F) = Z/6 x Z/6
        let fl = f(5, 2);
        let e = Curve::from_ints(fl.clone(), 0, 1).unwrap();
        for l in [2u64, 3] {
            let ks = kernel_subgroups(&e, l).unwrap();
            assert_eq!(ks.len() as u64, l + 1);
            let mut brute = brute_kernels(&e, l);
            let mut got: Vec<Vec<Fe>> = ks.iter().map(|k| k.xs.clone()).collect();
            brute.sort();
            got.sort();
            assert_eq!(got, brute);
            let total: u64 = ks.iter().map(|k| 2 * k.xs.len() as u64).map(|n| if l == 2 { n / 2 } else { n }).sum();
            assert_eq!(total, l * l - 1);
            for k in &ks {
                let g = k.generator.unwrap();
                assert!(e.has_exact_order(g, l));
                let min = e.torsion_points(l).into_iter().filter(|&p| !p.is_inf() && k.contains(p)).min_by_key(|&p| e.point_key(p));
                assert_eq!(Some(g), min);
            }
        }
    }

    #[test]
    fn velu_is_a_homomorphism_with_the_right_kernel() {
        let fl = f(5, 2);
        let reps = Representatives::new(fl.clone());
        for e in reps.members().into_iter().step_by(7) {
            let pts = e.points();
            for l in [2u64, 3] {
                for k in rational_kernels(&e, l).unwrap() {
                    let v = Velu::new(&e, &k);
                    let mut kernel_size = 0;
                    for &p in &pts {
                        let img = v.eval(p);
                        assert!(v.codomain.is_on(img));
                        if img.is_inf() {
                            kernel_size += 1;
                            assert!(k.contains(p));
                        }
                        for &r in pts.iter().step_by(5) {
                            assert_eq!(v.eval(e.add(p, r)), v.codomain.add(img, v.eval(r)));
                        }
                    }
                    if k.generator.is_some() {
                        assert_eq!(kernel_size, l);
                    }
                }
            }
        }
    }

    #[test]
    fn two_isogenous_j_invariants_satisfy_modular_polynomial() {
        for (q, k) in [(5u64, 2u32), (13, 1), (7, 3)] {
            let fl = f(q, k);
            let reps = Representatives::new(fl.clone());
            for e in reps.members().into_iter().step_by(3) {
                for ker in rational_kernels(&e, 2).unwrap() {
                    let v = Velu::new(&e, &ker);
                    assert!(modular_polynomial_2(&e, e.j_invariant(), v.codomain.j_invariant()).is_zero());
                }
            }
        }
    }

    #[test]
    fn steps_count_and_dual() {
        // q = 13 = 1 mod 12: generic targets have Aut = {±1}
        let fl = f(13, 2);
        let reps = Representatives::new(fl.clone());
        let e = reps
            .members()
            .into_iter()
            .find(|e| e.automorphisms().len() == 2 && e.has_full_torsion(6))
            .expect("curve with rational 6-torsion");
        let (s3, t3) = e.torsion_basis(3).unwrap();
        let (s2, t2) = e.torsion_basis(2).unwrap();
        let at3 = isogeny_steps(&e, 2, &reps, &[s3, t3]).unwrap();
        let at2 = isogeny_steps(&e, 2, &reps, &[s2, t2]).unwrap();
        let kernels = kernel_subgroups(&e, 2).unwrap();
        for k in &kernels {
            let n3 = at3.iter().filter(|s| s.kernel == *k).count();
            let n2 = at2.iter().filter(|s| s.kernel == *k).count();
            let aut = at3.iter().find(|s| s.kernel == *k).unwrap().target.automorphisms().len();
            if aut == 2 {
                assert_eq!((n3, n2), (2, 1));
            }
        }
        let e6 = e.torsion_points(6);
        for st in &at3 {
            assert!(dual_step(st, &e6).unwrap().is_some());
            assert_eq!(st.eval(st.kernel.generator.unwrap()), Point::Inf);
        }
    }

    #[test]
    fn pairing_compatibility_on_three_torsion() {
        let fl = f(5, 2);
        let e = Curve::from_ints(fl.clone(), 0, 1).unwrap();
        let e3 = e.torsion_points(3);
        for k in kernel_subgroups(&e, 2).unwrap() {
            let v = Velu::new(&e, &k);
            for &a in &e3 {
                for &b in &e3 {
                    let lhs = v.codomain.weil_pairing(v.eval(a), v.eval(b), 3).unwrap();
                    let rhs = fl.pow(e.weil_pairing(a, b, 3).unwrap(), 2);
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }
}
