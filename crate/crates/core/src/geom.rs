//! Exact rational primitives for the planar convex-body kernel.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::cmp::Ordering;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Every finite f64 is rational; this conversion is exact.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Vec2 {
    pub x: Rat,
    pub y: Rat,
}

impl Vec2 {
    pub fn new(x: Rat, y: Rat) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 ::new(Rat::zero(), Rat::zero())
    }

    pub fn from_f64(x: f64, y: f64) -> Option<Self> {
        Some(Vec2::new(rat_from_f64(x)?, rat_from_f64(y)?))
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn add(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn sub(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn neg(&self) -> Vec2 {
        Vec2::new(-self.x.clone(), -self.y.clone())
    }

    pub fn scale(&self, a: &Rat) -> Vec2 {
        Vec2::new(&self.x * a, &self.y * a)
    }

    pub fn dot(&self, o: &Vec2) -> Rat {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn cross(&self, o: &Vec2) -> Rat {
        &self.x * &o.y - &self.y * &o.x
    }

    pub fn norm2(&self) -> Rat {
        self.dot(self)
    }

    pub fn norm_f64(&self) -> f64 {
        rat_to_f64(&self.norm2()).sqrt()
    }

    /// Rotate by +90 degrees.
    pub fn perp(&self) -> Vec2 {
        Vec2::new(-self.y.clone(), self.x.clone())
    }

    /// Rotate by -90 degrees; outward normal of a CCW boundary edge.
    pub fn rperp(&self) -> Vec2 {
        Vec2::new(self.y.clone(), -self.x.clone())
    }

    /// Scale to the shortest integer vector with the same direction.
    pub fn primitive(&self) -> Vec2 {
        assert!(!self.is_zero());
        let lcm = num::integer::lcm(self.x.denom().clone(), self.y.denom().clone());
        let xi = self.x.numer() * (&lcm / self.x.denom());
        let yi = self.y.numer() * (&lcm / self.y.denom());
        let g = num::integer::gcd(xi.abs(), yi.abs());
        Vec2::new(
            Rat::from_integer(xi / &g),
            Rat::from_integer(yi / &g),
        )
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.x), rat_to_f64(&self.y))
    }
}

/// Sign of the cross product (b - a) x (c - a): > 0 iff a,b,c make a left turn.
pub fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> Ordering {
    b.sub(a).cross(&c.sub(a)).cmp(&Rat::zero())
}

/// Lower half-plane-first angular order on nonzero vectors, starting at the
/// positive x-axis and sweeping CCW through [0, 2pi).
pub fn angle_cmp(a: &Vec2, b: &Vec2) -> Ordering {
    let half = |v: &Vec2| -> u8 {
        if v.y.is_positive() || (v.y.is_zero() && v.x.is_positive()) {
            0
        } else {
            1
        }
    };
    match half(a).cmp(&half(b)) {
        Ordering::Equal => b.cross(a).cmp(&Rat::zero()),
        o => o,
    }
}

/// Strict convex hull (collinear interior points dropped), CCW.
/// Returns 1 point for coincident input, 2 for collinear input.
pub fn hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.cmp(&b.x).then(a.y.cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let build = |iter: &mut dyn Iterator<Item = &Vec2>| -> Vec<Vec2> {
        let mut chain: Vec<Vec2> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && orient(&chain[chain.len() - 2], &chain[chain.len() - 1], p) != Ordering::Greater
            {
                chain.pop();
            }
            chain.push(p.clone());
        }
        chain
    };
    let mut lower = build(&mut pts.iter());
    let mut upper = build(&mut pts.iter().rev());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    if lower.len() < 2 {
        // fully collinear input collapses: recover the two extreme points
        return vec![pts[0].clone(), pts[pts.len() - 1].clone()];
    }
    lower
}

/// Recession cones of planar closed convex sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cone {
    Zero,
    /// Single ray direction (primitive).
    Ray(Vec2),
    /// CCW sector from `a` to `b`, angle strictly between 0 and pi.
    Wedge(Vec2, Vec2),
    /// Full line spanned by the (canonically signed) direction.
    Line(Vec2),
    /// `{ x : <n, x> <= 0 }` for the stored outward normal.
    Halfplane(Vec2),
    Plane,
}

impl Cone {
    /// Generators whose conic hull is the cone (for Minkowski data and
    /// polar-constraint lists).
    pub fn generators(&self) -> Vec<Vec2> {
        match self {
            Cone::Zero => vec![],
            Cone::Ray(d) => vec![d.clone()],
            Cone::Wedge(a, b) => vec![a.clone(), b.clone()],
            Cone::Line(d) => vec![d.clone(), d.neg()],
            Cone::Halfplane(n) => {
                let t = n.perp();
                vec![t.clone(), t.neg(), n.neg()]
            }
            Cone::Plane => vec![
                Vec2::new(Rat::one(), Rat::zero()),
                Vec2::new(-Rat::one(), Rat::zero()),
                Vec2::new(Rat::zero(), Rat::one()),
                Vec2::new(Rat::zero(), -Rat::one()),
            ],
        }
    }

    pub fn contains(&self, v: &Vec2) -> bool {
        if v.is_zero() {
            return true;
        }
        match self {
            Cone::Zero => false,
            Cone::Ray(d) => d.cross(v).is_zero() && d.dot(v).is_positive(),
            Cone::Wedge(a, b) => !a.cross(v).is_negative() && !v.cross(b).is_negative(),
            Cone::Line(d) => d.cross(v).is_zero(),
            Cone::Halfplane(n) => !n.dot(v).is_positive(),
            Cone::Plane => true,
        }
    }

    pub fn is_subcone(&self, other: &Cone) -> bool {
        self.generators().iter().all(|g| other.contains(g))
    }

    /// Polar cone `{ u : <u, x> <= 0 on the cone }`.
    pub fn polar(&self) -> Cone {
        match self {
            Cone::Zero => Cone::Plane,
            Cone::Plane => Cone::Zero,
            Cone::Line(d) => Cone::Line(canonical_dir(&d.perp())),
            Cone::Halfplane(n) => Cone::Ray(n.neg().primitive()),
            Cone::Ray(d) => Cone::Halfplane(d.clone()),
            Cone::Wedge(a, b) => {
                // boundary rays: the perps of a and b pointing away from the sector
                let pa = pick_perp_away(a, b);
                let pb = pick_perp_away(b, a);
                // CCW order: from perp-of-b to perp-of-a
                Cone::Wedge(pb, pa)
            }
        }
    }
}

fn pick_perp_away(of: &Vec2, other: &Vec2) -> Vec2 {
    let p = of.perp();
    if p.dot(other).is_positive() {
        p.neg().primitive()
    } else {
        p.primitive()
    }
}

/// Canonical sign for a line direction: upper half-plane representative.
pub fn canonical_dir(d: &Vec2) -> Vec2 {
    let p = d.primitive();
    if p.y.is_negative() || (p.y.is_zero() && p.x.is_negative()) {
        p.neg()
    } else {
        p
    }
}

/// Conic hull of a list of ray generators.
pub fn cone_from_rays(rays: &[Vec2]) -> Cone {
    let mut dirs: Vec<Vec2> = rays
        .iter()
        .filter(|r| !r.is_zero())
        .map(|r| r.primitive())
        .collect();
    dirs.sort_by(angle_cmp);
    dirs.dedup();
    if dirs.is_empty() {
        return Cone::Zero;
    }
    if dirs.len() == 1 {
        return Cone::Ray(dirs.pop().unwrap());
    }
    // look for a start ray r0 with every other ray in its CCW half-plane
    let start = dirs
        .iter()
        .position(|r| dirs.iter().all(|s| !r.cross(s).is_negative()));
    let r0 = match start {
        Some(i) => dirs[i].clone(),
        None => return Cone::Plane,
    };
    // the CCW-furthest ray from r0 within that half-plane
    let r1 = dirs
        .iter()
        .max_by(|s, t| {
            // both have angle from r0 in [0, pi]
            let (cs, ct) = (r0.cross(s), r0.cross(t));
            let (ds, dt) = (r0.dot(s), r0.dot(t));
            // compare angles via (sign of cross-of-pair) within the half-plane
            if cs.is_zero() && ds.is_positive() {
                return Ordering::Less; // s parallel to r0: angle 0
            }
            if ct.is_zero() && dt.is_positive() {
                return Ordering::Greater;
            }
            if cs.is_zero() {
                return Ordering::Greater; // s antiparallel: angle pi
            }
            if ct.is_zero() {
                return Ordering::Less;
            }
            s.cross(t).cmp(&Rat::zero()).reverse()
        })
        .unwrap()
        .clone();
    if r0.cross(&r1).is_positive() {
        return Cone::Wedge(r0, r1);
    }
    // r1 is parallel or antiparallel to r0
    if r0.dot(&r1).is_positive() {
        return Cone::Ray(r0);
    }
    // sector spans exactly pi
    if dirs.len() == 2 {
        return Cone::Line(canonical_dir(&r0));
    }
    // some interior ray: closed half-plane { cross(r0, x) >= 0 } = { <n, x> <= 0 }
    Cone::Halfplane(r0.perp().neg().primitive())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i64, y: i64) -> Vec2 {
        Vec2::new(rat_i(x), rat_i(y))
    }

    #[test]
    fn hull_basic() {
        let h = hull(&[v(0, 0), v(2, 0), v(2, 2), v(0, 2), v(1, 1), v(1, 0)]);
        assert_eq!(h.len(), 4);
        // CCW orientation
        assert_eq!(orient(&h[0], &h[1], &h[2]), Ordering::Greater);
        let h = hull(&[v(0, 0), v(1, 1), v(3, 3)]);
        assert_eq!(h, vec![v(0, 0), v(3, 3)]);
        assert_eq!(hull(&[v(5, 5), v(5, 5)]).len(), 1);
    }

    #[test]
    fn angle_order() {
        let mut dirs = vec![v(0, -1), v(1, 0), v(-1, 0), v(0, 1), v(1, 1), v(-1, -1)];
        dirs.sort_by(angle_cmp);
        assert_eq!(dirs, vec![v(1, 0), v(1, 1), v(0, 1), v(-1, 0), v(-1, -1), v(0, -1)]);
    }

    #[test]
    fn cones() {
        assert_eq!(cone_from_rays(&[]), Cone::Zero);
        assert_eq!(cone_from_rays(&[v(2, 0)]), Cone::Ray(v(1, 0)));
        assert_eq!(cone_from_rays(&[v(1, 0), v(0, 1)]), Cone::Wedge(v(1, 0), v(0, 1)));
        assert_eq!(cone_from_rays(&[v(1, 0), v(-1, 0)]), Cone::Line(v(1, 0)));
        assert_eq!(
            cone_from_rays(&[v(1, 0), v(-1, 0), v(0, 1)]),
            Cone::Halfplane(v(0, -1))
        );
        assert_eq!(cone_from_rays(&[v(1, 0), v(-1, 1), v(-1, -1)]), Cone::Plane);
        // wedge order flips when given reversed
        assert_eq!(cone_from_rays(&[v(0, 1), v(1, 0)]), Cone::Wedge(v(1, 0), v(0, 1)));
    }

    #[test]
    fn polar_cones() {
        assert_eq!(Cone::Ray(v(1, 0)).polar(), Cone::Halfplane(v(1, 0)));
        assert_eq!(Cone::Halfplane(v(0, -1)).polar(), Cone::Ray(v(0, 1)));
        assert_eq!(Cone::Line(v(1, 0)).polar(), Cone::Line(v(0, 1)));
        let w = Cone::Wedge(v(1, 0), v(0, 1)).polar();
        // polar of the first quadrant is the third quadrant
        assert!(w.contains(&v(-1, -1)));
        assert!(w.contains(&v(-1, 0)));
        assert!(w.contains(&v(0, -1)));
        assert!(!w.contains(&v(1, 0)));
        match &w {
            Cone::Wedge(a, b) => assert!(a.cross(b).is_positive()),
            _ => panic!("expected wedge"),
        }
        // double polar returns the original wedge
        let w2 = w.polar();
        assert!(w2.contains(&v(1, 0)) && w2.contains(&v(0, 1)) && !w2.contains(&v(-1, 0)));
    }
}
