//! Closed convex subsets of the plane containing the origin, kept as exact
//! rational polyhedra: hull vertices + recession cone + irredundant
//! halfspace list, all three canonical and in sync.
//!
//! Polarity, Minkowski addition, hull-of-union, support/radial functions and
//! membership are exact; only the Euclidean quantities (Hausdorff distance,
//! norms, inradius) leave the rational world, through square roots taken at
//! the very end.

use std::cmp::Ordering;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::geom::{
    angle_cmp, canonical_dir, cone_from_rays, hull, rat_to_f64, Cone, Rat, Vec2,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    /// Primitive integer normal.
    pub n: Vec2,
    /// Offset; nonnegative exactly because the body contains the origin.
    pub c: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexBody2 {
    verts: Vec<Vec2>,
    cone: Cone,
    halfspaces: Vec<Halfspace>,
}

impl ConvexBody2 {
    pub fn verts(&self) -> &[Vec2] {
        &self.verts
    }

    pub fn recession(&self) -> &Cone {
        &self.cone
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn is_plane(&self) -> bool {
        self.cone == Cone::Plane
    }

    pub fn is_bounded(&self) -> bool {
        self.cone == Cone::Zero
    }

    // ---------------- constructors ----------------

    pub fn origin() -> ConvexBody2 {
        ConvexBody2::from_vrep(&[Vec2::zero()], &[]).unwrap()
    }

    pub fn plane() -> ConvexBody2 {
        ConvexBody2 {
            verts: vec![Vec2::zero()],
            cone: Cone::Plane,
            halfspaces: vec![],
        }
    }

    /// Polytope / polyhedron from points and recession-ray generators.
    pub fn from_vrep(points: &[Vec2], rays: &[Vec2]) -> Result<ConvexBody2> {
        if points.is_empty() {
            return Err(CfError::InvalidInput("need at least one point".into()));
        }
        let cone = cone_from_rays(rays);
        let (verts, cone) = canonical_vrep(points, cone)?;
        let halfspaces = hrep_of(&verts, &cone)?;
        if halfspaces.iter().any(|h| h.c.is_negative()) {
            return Err(CfError::InvalidInput(
                "set does not contain the origin".into(),
            ));
        }
        Ok(ConvexBody2 {
            verts,
            cone,
            halfspaces,
        })
    }

    /// Intersection of halfspaces `<n, x> <= c` (all `c >= 0`).
    pub fn from_hrep(hs: &[(Vec2, Rat)]) -> Result<ConvexBody2> {
        if hs.iter().any(|(n, _)| n.is_zero()) {
            return Err(CfError::InvalidInput("zero normal".into()));
        }
        if hs.iter().any(|(_, c)| c.is_negative()) {
            return Err(CfError::InvalidInput(
                "negative offset: the origin must belong to the set".into(),
            ));
        }
        // dual data describes the polar; polar twice recovers the set
        let dual = dualize(hs)?;
        dual.polar()
    }

    /// Inscribed regular n-gon of the centred ball of radius `r`
    /// (coordinates are the exact rationals nearest to `r cos/sin`).
    pub fn ball_ngon(r: f64, sides: usize) -> Result<ConvexBody2> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(CfError::InvalidParameters("need finite r > 0".into()));
        }
        if sides < 3 {
            return Err(CfError::InvalidParameters("need at least 3 sides".into()));
        }
        let rr = crate::geom::rat_from_f64(r).unwrap();
        let r2 = &rr * &rr;
        let mut pts = Vec::with_capacity(sides);
        for k in 0..sides {
            let a = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
            let (mut x, mut y) = (r * a.cos(), r * a.sin());
            // nudge inward until the vertex is exactly inside the ball, so
            // the polygon is a true inscribed one
            loop {
                let v = Vec2::from_f64(x, y).unwrap();
                if v.norm2() <= r2 {
                    pts.push(v);
                    break;
                }
                x *= 1.0 - 4.0 * f64::EPSILON;
                y *= 1.0 - 4.0 * f64::EPSILON;
            }
        }
        ConvexBody2::from_vrep(&pts, &[])
    }

    pub fn regular_polygon(sides: usize, r: f64) -> Result<ConvexBody2> {
        ConvexBody2::ball_ngon(r, sides)
    }

    pub fn segment(p: Vec2, q: Vec2) -> Result<ConvexBody2> {
        ConvexBody2::from_vrep(&[p, q], &[])
    }

    pub fn centred_segment(u: Vec2) -> Result<ConvexBody2> {
        let nu = u.neg();
        ConvexBody2::segment(nu, u)
    }

    /// `{ |x_1| <= a }`.
    pub fn strip(a: Rat) -> Result<ConvexBody2> {
        if a.is_negative() {
            return Err(CfError::InvalidParameters("need a >= 0".into()));
        }
        let e2 = Vec2::new(Rat::zero(), Rat::one());
        ConvexBody2::from_vrep(
            &[
                Vec2::new(a.clone(), Rat::zero()),
                Vec2::new(-a, Rat::zero()),
            ],
            &[e2.clone(), e2.neg()],
        )
    }

    /// `{ <n, x> <= c }` with `c >= 0`.
    pub fn halfplane(n: Vec2, c: Rat) -> Result<ConvexBody2> {
        if n.is_zero() {
            return Err(CfError::InvalidInput("zero normal".into()));
        }
        if c.is_negative() {
            return Err(CfError::InvalidInput(
                "negative offset: the origin must belong to the set".into(),
            ));
        }
        let n = n.primitive();
        let foot = n.scale(&(&c / n.norm2()));
        ConvexBody2::from_vrep(&[foot], &Cone::Halfplane(n).generators())
    }

    // ---------------- semigroup operations ----------------

    /// Polar body `{ u : <u, x> <= 1 for all x }`.
    pub fn polar(&self) -> Result<ConvexBody2> {
        dualize(
            &self
                .halfspaces
                .iter()
                .map(|h| (h.n.clone(), h.c.clone()))
                .collect::<Vec<_>>(),
        )
    }

    pub fn minkowski_sum(&self, other: &ConvexBody2) -> Result<ConvexBody2> {
        if self.is_plane() || other.is_plane() {
            return Ok(ConvexBody2::plane());
        }
        // bounded full-dimensional polygons: merge the two angle-sorted edge
        // cycles instead of hulling all pairwise vertex sums
        if self.is_bounded() && other.is_bounded() && self.verts.len() >= 3 && other.verts.len() >= 3
        {
            let (sa, ea) = rotated_edges(&self.verts);
            let (sb, eb) = rotated_edges(&other.verts);
            let mut pts = Vec::with_capacity(ea.len() + eb.len() + 1);
            let mut p = sa.add(&sb);
            let (mut i, mut j) = (0, 0);
            pts.push(p.clone());
            while i < ea.len() || j < eb.len() {
                let take_a = if i == ea.len() {
                    false
                } else if j == eb.len() {
                    true
                } else {
                    angle_cmp(&ea[i], &eb[j]) != Ordering::Greater
                };
                let e = if take_a { &ea[i] } else { &eb[j] };
                p = p.add(e);
                pts.push(p.clone());
                if take_a {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            return ConvexBody2::from_vrep(&pts, &[]);
        }
        let mut pts = Vec::with_capacity(self.verts.len() * other.verts.len());
        for p in &self.verts {
            for q in &other.verts {
                pts.push(p.add(q));
            }
        }
        let mut rays = self.cone.generators();
        rays.extend(other.cone.generators());
        ConvexBody2::from_vrep(&pts, &rays)
    }

    /// Inner approximation: repeatedly drops vertices lying within `eps` of
    /// the chord joining their kept neighbours. Only for bounded bodies.
    pub fn prune(&self, eps: f64) -> ConvexBody2 {
        if !self.is_bounded() || self.verts.len() < 8 {
            return self.clone();
        }
        let n = self.verts.len();
        let mut keep = vec![true; n];
        let mut i = 0;
        while i < n {
            let prev = self.verts[(i + n - 1) % n].clone();
            let cur = &self.verts[i];
            let next = &self.verts[(i + 1) % n];
            let chord = next.sub(&prev);
            let off = cur.sub(&prev);
            let dev = rat_to_f64(&chord.cross(&off)).abs() / chord.norm_f64().max(1e-300);
            if dev < eps {
                keep[i] = false;
                i += 2; // never drop adjacent vertices in one pass
            } else {
                i += 1;
            }
        }
        if keep.iter().all(|&k| k) {
            return self.clone();
        }
        let pts: Vec<Vec2> = self
            .verts
            .iter()
            .zip(&keep)
            .filter_map(|(v, &k)| k.then(|| v.clone()))
            .collect();
        ConvexBody2::from_vrep(&pts, &[]).unwrap_or_else(|_| self.clone())
    }

    /// Closed convex hull of the union.
    pub fn hull_union(&self, other: &ConvexBody2) -> Result<ConvexBody2> {
        let mut pts = self.verts.clone();
        pts.extend(other.verts.iter().cloned());
        let mut rays = self.cone.generators();
        rays.extend(other.cone.generators());
        ConvexBody2::from_vrep(&pts, &rays)
    }

    pub fn scale(&self, a: &Rat) -> Result<ConvexBody2> {
        if a.is_negative() {
            return Err(CfError::InvalidParameters("need a >= 0".into()));
        }
        if a.is_zero() {
            return Ok(ConvexBody2::origin());
        }
        if self.is_plane() {
            return Ok(ConvexBody2::plane());
        }
        let pts: Vec<Vec2> = self.verts.iter().map(|v| v.scale(a)).collect();
        ConvexBody2::from_vrep(&pts, &self.cone.generators())
    }

    // ---------------- queries ----------------

    /// Support value `sup <u, x>`; `None` encodes +infinity.
    pub fn support(&self, u: &Vec2) -> Option<Rat> {
        if u.is_zero() {
            return Some(Rat::zero());
        }
        if self
            .cone
            .generators()
            .iter()
            .any(|g| u.dot(g).is_positive())
        {
            return None;
        }
        self.verts.iter().map(|v| u.dot(v)).max()
    }

    /// Radial value `sup { t >= 0 : t u in K }`; `None` encodes +infinity.
    pub fn radial(&self, u: &Vec2) -> Result<Option<Rat>> {
        if u.is_zero() {
            return Err(CfError::InvalidParameters(
                "radial function needs a nonzero direction".into(),
            ));
        }
        let mut best: Option<Rat> = None;
        for h in &self.halfspaces {
            let d = h.n.dot(u);
            if d.is_positive() {
                let t = &h.c / d;
                best = Some(match best {
                    Some(b) => b.min(t),
                    None => t,
                });
            }
        }
        Ok(best)
    }

    pub fn contains_point(&self, p: &Vec2) -> bool {
        self.halfspaces.iter().all(|h| h.n.dot(p) <= h.c)
    }

    /// Exact inclusion test.
    pub fn subset_of(&self, other: &ConvexBody2) -> bool {
        self.verts.iter().all(|v| other.contains_point(v))
            && self.cone.is_subcone(&other.cone)
    }

    /// `sup |x|` over the body; infinite for unbounded sets.
    pub fn norm(&self) -> f64 {
        if !self.is_bounded() {
            return f64::INFINITY;
        }
        self.verts
            .iter()
            .map(|v| rat_to_f64(&v.norm2()))
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Largest `r` with the centred ball `r B` inside the body.
    pub fn inradius_centered(&self) -> f64 {
        if self.halfspaces.is_empty() {
            return f64::INFINITY;
        }
        self.halfspaces
            .iter()
            .map(|h| rat_to_f64(&(&h.c * &h.c / h.n.norm2())))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Exact `r B <= K` for rational `r >= 0`.
    pub fn contains_scaled_ball(&self, r: &Rat) -> bool {
        let r2 = r * r;
        self.halfspaces
            .iter()
            .all(|h| !h.c.is_negative() && &h.c * &h.c >= &r2 * h.n.norm2())
    }

    /// Exact `K <= R B` for rational `R >= 0`.
    pub fn within_scaled_ball(&self, big_r: &Rat) -> bool {
        let r2 = big_r * big_r;
        self.is_bounded() && self.verts.iter().all(|v| v.norm2() <= r2)
    }

    /// `inf { t >= 0 : K <= L + t B }`; infinite when the recession cones
    /// make the inclusion impossible.
    pub fn support_deficit(&self, other: &ConvexBody2) -> f64 {
        if !self.cone.is_subcone(&other.cone) {
            return f64::INFINITY;
        }
        if other.is_plane() {
            return 0.0;
        }
        // merged event directions: all facet normals of both bodies; the
        // halfspace lists are kept angle-sorted, so a linear merge suffices
        let mut events: Vec<Vec2> = Vec::with_capacity(self.halfspaces.len() + other.halfspaces.len());
        let (mut i, mut j) = (0, 0);
        while i < self.halfspaces.len() || j < other.halfspaces.len() {
            let next = if i == self.halfspaces.len() {
                let n = &other.halfspaces[j].n;
                j += 1;
                n
            } else if j == other.halfspaces.len() {
                let n = &self.halfspaces[i].n;
                i += 1;
                n
            } else {
                match angle_cmp(&self.halfspaces[i].n, &other.halfspaces[j].n) {
                    Ordering::Greater => {
                        let n = &other.halfspaces[j].n;
                        j += 1;
                        n
                    }
                    Ordering::Equal => {
                        let n = &self.halfspaces[i].n;
                        i += 1;
                        j += 1;
                        n
                    }
                    Ordering::Less => {
                        let n = &self.halfspaces[i].n;
                        i += 1;
                        n
                    }
                }
            };
            if events.last() != Some(next) {
                events.push(next.clone());
            }
        }
        let gens_k = self.cone.generators();
        let gens_l = other.cone.generators();
        let finite = |gens: &[Vec2], u: &Vec2| !gens.iter().any(|g| u.dot(g).is_positive());
        // supporting-vertex pointers advance monotonically as the event
        // direction rotates, so each evaluation is an amortized-O(1) climb
        let mut hint_k = ArgmaxHint::new(&self.verts, self.is_bounded());
        let mut hint_l = ArgmaxHint::new(&other.verts, other.is_bounded());
        let mut best = 0.0f64;
        let m = events.len();
        for i in 0..m {
            let u = &events[i];
            if finite(&gens_l, u) {
                debug_assert!(finite(&gens_k, u));
                let sk = u.dot(hint_k.argmax(u));
                let sl = u.dot(hint_l.argmax(u));
                best = best.max(rat_to_f64(&(sk - sl)) / u.norm_f64());
            }
            // arc to the next event: constant supporting vertices
            let w = &events[(i + 1) % m];
            if m >= 2 && u.cross(w).is_positive() {
                let mid = u.add(w);
                if finite(&gens_k, &mid) && finite(&gens_l, &mid) {
                    let d = hint_k.argmax(&mid).sub(hint_l.argmax(&mid));
                    if !d.is_zero() && u.cross(&d).is_positive() && d.cross(w).is_positive() {
                        best = best.max(d.norm_f64());
                    }
                }
            }
        }
        best
    }

    /// Hausdorff distance (sup of support differences over unit directions).
    pub fn hausdorff(&self, other: &ConvexBody2) -> f64 {
        let a = self.support_deficit(other);
        let b = other.support_deficit(self);
        a.max(b)
    }

    /// Largest coordinate size (numerator plus denominator bits) over the
    /// vertex list. Repeated polar/sum steps roughly double this, so long
    /// iterations cap it via [`ConvexBody2::round_dyadic`].
    pub fn coord_bits(&self) -> u64 {
        self.verts
            .iter()
            .flat_map(|v| [&v.x, &v.y])
            .map(|r| r.numer().bits() + r.denom().bits())
            .max()
            .unwrap_or(0)
    }

    /// Rounds every vertex coordinate to the nearest multiple of `2^-k`
    /// (recession cone untouched) and re-canonicalizes.
    pub fn round_dyadic(&self, k: u32) -> Result<ConvexBody2> {
        let pow: Rat = Rat::from_integer(num::BigInt::one() << k as usize);
        let rd = |r: &Rat| (r * &pow).round() / &pow;
        let pts: Vec<Vec2> = self
            .verts
            .iter()
            .map(|v| Vec2::new(rd(&v.x), rd(&v.y)))
            .collect();
        ConvexBody2::from_vrep(&pts, &self.cone.generators())
    }
}

/// Edge cycle of a CCW polygon rotated to start at the angularly smallest
/// edge, together with that edge's source vertex.
fn rotated_edges(verts: &[Vec2]) -> (Vec2, Vec<Vec2>) {
    let n = verts.len();
    let edges: Vec<Vec2> = (0..n).map(|i| verts[(i + 1) % n].sub(&verts[i])).collect();
    let m = (0..n)
        .min_by(|&a, &b| angle_cmp(&edges[a], &edges[b]))
        .unwrap();
    let rotated = edges[m..].iter().chain(&edges[..m]).cloned().collect();
    (verts[m].clone(), rotated)
}

/// Hill-climbing argmax over a convex vertex chain/cycle, keeping the last
/// winning index as the start for the next (rotated) query direction.
struct ArgmaxHint<'a> {
    verts: &'a [Vec2],
    cyclic: bool,
    at: usize,
}

impl<'a> ArgmaxHint<'a> {
    fn new(verts: &'a [Vec2], cyclic: bool) -> Self {
        ArgmaxHint { verts, cyclic, at: 0 }
    }

    fn argmax(&mut self, u: &Vec2) -> &'a Vec2 {
        let n = self.verts.len();
        if n > 1 {
            let cyclic = self.cyclic;
            // d = 1 forward, d = n-1 backward
            let step = move |i: usize, d: usize| -> Option<usize> {
                if cyclic {
                    Some((i + d) % n)
                } else if d == 1 {
                    (i + 1 < n).then(|| i + 1)
                } else {
                    (i > 0).then(|| i - 1)
                }
            };
            let mut cur = u.dot(&self.verts[self.at]);
            for d in [1usize, n - 1] {
                let mut moved = 0;
                while moved < n {
                    match step(self.at, d) {
                        Some(j) => {
                            let val = u.dot(&self.verts[j]);
                            if val > cur {
                                self.at = j;
                                cur = val;
                                moved += 1;
                            } else {
                                break;
                            }
                        }
                        None => break,
                    }
                }
            }
        }
        &self.verts[self.at]
    }
}

/// Body `conv({0} ∪ {n/c}) + cone({n : c = 0})` — the polar of the
/// intersection of the given halfspaces.
fn dualize(hs: &[(Vec2, Rat)]) -> Result<ConvexBody2> {
    let mut pts = vec![Vec2::zero()];
    let mut rays = Vec::new();
    for (n, c) in hs {
        if c.is_zero() {
            rays.push(n.clone());
        } else {
            pts.push(n.scale(&(Rat::one() / c)));
        }
    }
    ConvexBody2::from_vrep(&pts, &rays)
}

/// Canonical vertex chain for `conv(points) + cone`.
fn canonical_vrep(points: &[Vec2], cone: Cone) -> Result<(Vec<Vec2>, Cone)> {
    match cone {
        Cone::Plane => Ok((vec![Vec2::zero()], Cone::Plane)),
        Cone::Halfplane(n) => {
            let c = points.iter().map(|p| n.dot(p)).max().unwrap();
            let foot = n.scale(&(&c / n.norm2()));
            Ok((vec![foot], Cone::Halfplane(n)))
        }
        Cone::Line(d) => {
            let n = canonical_dir(&d.perp());
            let lo = points.iter().map(|p| n.dot(p)).min().unwrap();
            let hi = points.iter().map(|p| n.dot(p)).max().unwrap();
            let n2 = n.norm2();
            let mut verts = vec![n.scale(&(&lo / &n2))];
            if hi != lo {
                verts.push(n.scale(&(&hi / &n2)));
            }
            Ok((verts, Cone::Line(d)))
        }
        Cone::Zero => Ok((canonical_start(hull(points)), Cone::Zero)),
        pointed => {
            let (din, _dout) = match &pointed {
                Cone::Ray(d) => (d.clone(), d.clone()),
                Cone::Wedge(a, b) => (b.clone(), a.clone()),
                _ => unreachable!(),
            };
            let gens = pointed.generators();
            let h = hull(points);
            if h.len() == 1 {
                return Ok((h, pointed));
            }
            if h.len() == 2 {
                let e = h[1].sub(&h[0]);
                let n_fwd = e.rperp();
                let fwd_ok = gens.iter().all(|g| !n_fwd.dot(g).is_positive());
                let bwd_ok = gens.iter().all(|g| !n_fwd.dot(g).is_negative());
                if fwd_ok && bwd_ok {
                    // segment parallel to a ray cone: a half-line
                    let keep = if din.dot(&e).is_positive() {
                        h[0].clone()
                    } else {
                        h[1].clone()
                    };
                    return Ok((vec![keep], pointed));
                }
                if fwd_ok {
                    return Ok((h, pointed));
                }
                if bwd_ok {
                    return Ok((vec![h[1].clone(), h[0].clone()], pointed));
                }
                // neither edge survives: single extreme point
                let lam = interior_of_polar(&pointed);
                let v = h.into_iter().max_by(|a, b| lam.dot(a).cmp(&lam.dot(b))).unwrap();
                return Ok((vec![v], pointed));
            }
            // full polygon: keep the contiguous arc of edges compatible
            // with the recession cone
            let m = h.len();
            let mut surviving: Vec<usize> = Vec::new();
            for i in 0..m {
                let n_e = h[(i + 1) % m].sub(&h[i]).rperp();
                if gens.iter().all(|g| !n_e.dot(g).is_positive()) {
                    surviving.push(i);
                }
            }
            if surviving.is_empty() {
                let lam = interior_of_polar(&pointed);
                let v = h.into_iter().max_by(|a, b| lam.dot(a).cmp(&lam.dot(b))).unwrap();
                return Ok((vec![v], pointed));
            }
            // order the surviving edges by normal angle measured from the
            // start of the polar sector
            let base = din.neg().rperp();
            let mut keyed: Vec<(usize, Vec2)> = surviving
                .iter()
                .map(|&i| (i, h[(i + 1) % m].sub(&h[i]).rperp()))
                .collect();
            keyed.sort_by(|(_, na), (_, nb)| angle_cmp_from(&base, na, nb));
            let mut verts = vec![h[keyed[0].0].clone()];
            for (idx, _) in &keyed {
                verts.push(h[(idx + 1) % m].clone());
            }
            Ok((verts, pointed))
        }
    }
}

/// Angular order starting at `base` and sweeping CCW.
fn angle_cmp_from(base: &Vec2, a: &Vec2, b: &Vec2) -> Ordering {
    let class = |v: &Vec2| -> u8 {
        let cr = base.cross(v);
        if cr.is_positive() || (cr.is_zero() && base.dot(v).is_positive()) {
            0
        } else {
            1
        }
    };
    match class(a).cmp(&class(b)) {
        Ordering::Equal => b.cross(a).cmp(&Rat::zero()),
        o => o,
    }
}

/// A rational direction strictly inside the polar cone of a pointed cone.
fn interior_of_polar(cone: &Cone) -> Vec2 {
    match cone {
        Cone::Ray(d) => d.neg(),
        Cone::Wedge(_, _) => match cone.polar() {
            Cone::Wedge(p, q) => p.add(&q),
            _ => unreachable!(),
        },
        _ => unreachable!(),
    }
}

/// Irredundant halfspace list from a canonical vertex chain + cone.
fn hrep_of(verts: &[Vec2], cone: &Cone) -> Result<Vec<Halfspace>> {
    let hs_of = |n: Vec2, p: &Vec2| -> Halfspace {
        let n = n.primitive();
        let c = n.dot(p);
        Halfspace { n, c }
    };
    let mut hs: Vec<Halfspace> = match cone {
        Cone::Plane => vec![],
        Cone::Halfplane(n) => vec![hs_of(n.clone(), &verts[0])],
        Cone::Line(d) => {
            let n = canonical_dir(&d.perp());
            if verts.len() == 1 {
                vec![hs_of(n.clone(), &verts[0]), hs_of(n.neg(), &verts[0])]
            } else {
                // verts[0] is the low foot, verts[1] the high one
                vec![hs_of(n.clone(), &verts[1]), hs_of(n.neg(), &verts[0])]
            }
        }
        Cone::Zero => match verts.len() {
            1 => {
                let p = &verts[0];
                let e1 = Vec2::new(Rat::one(), Rat::zero());
                let e2 = Vec2::new(Rat::zero(), Rat::one());
                vec![
                    hs_of(e1.clone(), p),
                    hs_of(e1.neg(), p),
                    hs_of(e2.clone(), p),
                    hs_of(e2.neg(), p),
                ]
            }
            2 => {
                let e = verts[1].sub(&verts[0]).primitive();
                let n = e.perp();
                vec![
                    hs_of(n.clone(), &verts[0]),
                    hs_of(n.neg(), &verts[0]),
                    hs_of(e.clone(), &verts[1]),
                    hs_of(e.neg(), &verts[0]),
                ]
            }
            m => (0..m)
                .map(|i| {
                    let n = verts[(i + 1) % m].sub(&verts[i]).rperp();
                    hs_of(n, &verts[i])
                })
                .collect(),
        },
        pointed => {
            let (din, dout) = match pointed {
                Cone::Ray(d) => (d.clone(), d.clone()),
                Cone::Wedge(a, b) => (b.clone(), a.clone()),
                _ => unreachable!(),
            };
            let k = verts.len();
            let mut out = Vec::with_capacity(k + 1);
            if k == 1 && matches!(pointed, Cone::Ray(_)) {
                // half-line: both side constraints plus the end cap
                let p = din.perp();
                out.push(hs_of(p.clone(), &verts[0]));
                out.push(hs_of(p.neg(), &verts[0]));
                out.push(hs_of(din.neg(), &verts[0]));
            } else {
                out.push(hs_of(din.neg().rperp(), &verts[0]));
                for i in 0..k - 1 {
                    out.push(hs_of(verts[i + 1].sub(&verts[i]).rperp(), &verts[i]));
                }
                out.push(hs_of(dout.rperp(), &verts[k - 1]));
            }
            out
        }
    };
    hs.sort_by(|a, b| angle_cmp(&a.n, &b.n));
    hs.dedup();
    Ok(hs)
}

/// Rotate a CCW cycle so the angularly smallest vertex comes first.
fn canonical_start(mut verts: Vec<Vec2>) -> Vec<Vec2> {
    if verts.len() <= 2 {
        verts.sort_by(|a, b| a.x.cmp(&b.x).then(a.y.cmp(&b.y)));
        return verts;
    }
    let start = verts
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let (za, zb) = (a.is_zero(), b.is_zero());
            match zb.cmp(&za) {
                Ordering::Equal if za => Ordering::Equal,
                Ordering::Equal => angle_cmp(a, b).then_with(|| a.norm2().cmp(&b.norm2())),
                o => o,
            }
        })
        .map(|(i, _)| i)
        .unwrap();
    verts.rotate_left(start);
    verts
}

// ---------------- JSON boundary ----------------

/// External description of a set term.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum BodySpec {
    /// Centred Euclidean ball of the given radius (handled by the scalar
    /// reduction; polygonal work uses `ball_ngon`).
    Ball(f64),
    Segment([[f64; 2]; 2]),
    Strip(f64),
    Polygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        rays: Vec<[f64; 2]>,
    },
}

impl BodySpec {
    pub fn to_body(&self) -> Result<ConvexBody2> {
        let vv = |p: &[f64; 2]| {
            Vec2::from_f64(p[0], p[1])
                .ok_or_else(|| CfError::Format("non-finite coordinate".into()))
        };
        match self {
            BodySpec::Ball(_) => Err(CfError::InvalidInput(
                "ball terms are evaluated by the scalar reduction".into(),
            )),
            BodySpec::Segment([p, q]) => ConvexBody2::segment(vv(p)?, vv(q)?),
            BodySpec::Strip(a) => {
                let a = crate::geom::rat_from_f64(*a)
                    .ok_or_else(|| CfError::Format("non-finite width".into()))?;
                ConvexBody2::strip(a)
            }
            BodySpec::Polygon { vertices, rays } => {
                let pts: Result<Vec<Vec2>> = vertices.iter().map(vv).collect();
                let rys: Result<Vec<Vec2>> = rays.iter().map(vv).collect();
                ConvexBody2::from_vrep(&pts?, &rys?)
            }
        }
    }

    pub fn from_body(b: &ConvexBody2) -> BodySpec {
        BodySpec::Polygon {
            vertices: b.verts().iter().map(|v| { let (x, y) = v.to_f64(); [x, y] }).collect(),
            rays: b
                .recession()
                .generators()
                .iter()
                .map(|v| { let (x, y) = v.to_f64(); [x, y] })
                .collect(),
        }
    }
}
