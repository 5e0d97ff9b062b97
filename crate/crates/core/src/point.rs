//! Points of the single-particle state space and their metrics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// A point of one of the supported state spaces.
///
/// Each variant carries its own metric (see [`Point::distance`]):
/// absolute difference for scalars, Euclidean distance for `Vec3` and
/// `Phase`, the discrete metric for symbols and the max metric over
/// components for tuples (points of `S^k`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Point {
    Scalar(f64),
    Vec3([f64; 3]),
    Phase { x: Vec<f64>, v: Vec<f64> },
    Symbol(u32),
    Tuple(Vec<Point>),
}

/// The state space a point lives in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointKind {
    Scalar,
    Vec3,
    /// Position-velocity point in `R^d x R^d`; carries `d`.
    Phase(usize),
    Symbol,
    Tuple(Vec<PointKind>),
}

impl PointKind {
    /// True if every point of this kind is a finite symbol (or a tuple of them),
    /// so that the metric is the discrete one.
    pub fn is_discrete(&self) -> bool {
        match self {
            PointKind::Symbol => true,
            PointKind::Tuple(parts) => parts.iter().all(PointKind::is_discrete),
            _ => false,
        }
    }

    /// Number of real coordinates, or `None` for kinds containing symbols.
    pub fn real_dim(&self) -> Option<usize> {
        match self {
            PointKind::Scalar => Some(1),
            PointKind::Vec3 => Some(3),
            PointKind::Phase(d) => Some(2 * d),
            PointKind::Symbol => None,
            PointKind::Tuple(parts) => parts.iter().map(PointKind::real_dim).sum(),
        }
    }
}

impl Point {
    pub fn kind(&self) -> PointKind {
        match self {
            Point::Scalar(_) => PointKind::Scalar,
            Point::Vec3(_) => PointKind::Vec3,
            Point::Phase { x, .. } => PointKind::Phase(x.len()),
            Point::Symbol(_) => PointKind::Symbol,
            Point::Tuple(parts) => PointKind::Tuple(parts.iter().map(Point::kind).collect()),
        }
    }

    /// Intrinsic metric. Points of different kinds are at infinite distance.
    pub fn distance(&self, other: &Point) -> f64 {
        match (self, other) {
            (Point::Scalar(a), Point::Scalar(b)) => (a - b).abs(),
            (Point::Vec3(a), Point::Vec3(b)) => {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                let dz = a[2] - b[2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
            (Point::Phase { x: xa, v: va }, Point::Phase { x: xb, v: vb })
                if xa.len() == xb.len() && va.len() == vb.len() =>
            {
                let s: f64 = xa
                    .iter()
                    .zip(xb)
                    .chain(va.iter().zip(vb))
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
                s.sqrt()
            }
            (Point::Symbol(a), Point::Symbol(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            (Point::Tuple(a), Point::Tuple(b)) if a.len() == b.len() => a
                .iter()
                .zip(b)
                .map(|(p, q)| p.distance(q))
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }

    /// Real coordinates in a fixed order (`x` then `v` for phase points,
    /// components in order for tuples). `None` if the point contains a symbol.
    pub fn coords(&self) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        self.push_coords(&mut out).then_some(out)
    }

    fn push_coords(&self, out: &mut Vec<f64>) -> bool {
        match self {
            Point::Scalar(a) => out.push(*a),
            Point::Vec3(a) => out.extend_from_slice(a),
            Point::Phase { x, v } => {
                out.extend_from_slice(x);
                out.extend_from_slice(v);
            }
            Point::Symbol(_) => return false,
            Point::Tuple(parts) => {
                for p in parts {
                    if !p.push_coords(out) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Rebuilds a point of `kind` from coordinates laid out as in [`Point::coords`].
    pub fn from_coords(kind: &PointKind, coords: &[f64]) -> Option<Point> {
        let mut it = coords.iter().copied();
        let p = Self::take_coords(kind, &mut it)?;
        it.next().is_none().then_some(p)
    }

    fn take_coords(kind: &PointKind, it: &mut impl Iterator<Item = f64>) -> Option<Point> {
        Some(match kind {
            PointKind::Scalar => Point::Scalar(it.next()?),
            PointKind::Vec3 => Point::Vec3([it.next()?, it.next()?, it.next()?]),
            PointKind::Phase(d) => {
                let x: Vec<f64> = it.take(*d).collect();
                let v: Vec<f64> = it.take(*d).collect();
                if x.len() != *d || v.len() != *d {
                    return None;
                }
                Point::Phase { x, v }
            }
            PointKind::Symbol => return None,
            PointKind::Tuple(parts) => Point::Tuple(
                parts
                    .iter()
                    .map(|k| Self::take_coords(k, it))
                    .collect::<Option<Vec<_>>>()?,
            ),
        })
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Point::Scalar(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<u32> {
        match self {
            Point::Symbol(s) => Some(*s),
            _ => None,
        }
    }

    /// The first real coordinate, or the symbol index for symbols. Used by
    /// scalar test functions.
    pub fn lead(&self) -> f64 {
        match self {
            Point::Scalar(a) => *a,
            Point::Vec3(a) => a[0],
            Point::Phase { x, .. } => x.first().copied().unwrap_or(0.0),
            Point::Symbol(s) => f64::from(*s),
            Point::Tuple(parts) => parts.first().map(Point::lead).unwrap_or(0.0),
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            Point::Scalar(_) => 0,
            Point::Vec3(_) => 1,
            Point::Phase { .. } => 2,
            Point::Symbol(_) => 3,
            Point::Tuple(_) => 4,
        }
    }
}

/// `total_cmp` with the two zeros identified.
fn cmp_f64(a: f64, b: f64) -> Ordering {
    (a + 0.0).total_cmp(&(b + 0.0))
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match cmp_f64(*x, *y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

// Lexicographic order with `total_cmp` on floats (−0 and +0 identified), so
// equality is bitwise up to the sign of zero.
impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Point::Scalar(a), Point::Scalar(b)) => cmp_f64(*a, *b),
            (Point::Vec3(a), Point::Vec3(b)) => cmp_slices(a, b),
            (Point::Phase { x: xa, v: va }, Point::Phase { x: xb, v: vb }) => {
                cmp_slices(xa, xb).then_with(|| cmp_slices(va, vb))
            }
            (Point::Symbol(a), Point::Symbol(b)) => a.cmp(b),
            (Point::Tuple(a), Point::Tuple(b)) => a.cmp(b),
            _ => self.variant_rank().cmp(&other.variant_rank()),
        }
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point {}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_vec3() -> impl Strategy<Value = Point> {
        prop::array::uniform3(-10.0..10.0f64).prop_map(Point::Vec3)
    }

    fn arb_phase() -> impl Strategy<Value = Point> {
        (prop::collection::vec(-5.0..5.0f64, 2), prop::collection::vec(-5.0..5.0f64, 2))
            .prop_map(|(x, v)| Point::Phase { x, v })
    }

    fn triangle(a: &Point, b: &Point, c: &Point) -> bool {
        a.distance(c) <= a.distance(b) + b.distance(c) + 1e-12
    }

    proptest! {
        #[test]
        fn scalar_metric_axioms(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64) {
            let (a, b, c) = (Point::Scalar(a), Point::Scalar(b), Point::Scalar(c));
            prop_assert!(a.distance(&b) >= 0.0);
            prop_assert_eq!(a.distance(&b), b.distance(&a));
            prop_assert!(triangle(&a, &b, &c));
        }

        #[test]
        fn vec3_and_phase_metric_axioms(a in arb_vec3(), b in arb_vec3(), c in arb_vec3(),
                                        p in arb_phase(), q in arb_phase(), r in arb_phase()) {
            prop_assert_eq!(a.distance(&b), b.distance(&a));
            prop_assert!(triangle(&a, &b, &c));
            prop_assert_eq!(p.distance(&q), q.distance(&p));
            prop_assert!(triangle(&p, &q, &r));
        }

        #[test]
        fn tuple_max_metric_axioms(a in prop::collection::vec(-3.0..3.0f64, 3),
                                   b in prop::collection::vec(-3.0..3.0f64, 3),
                                   c in prop::collection::vec(-3.0..3.0f64, 3)) {
            let t = |v: &Vec<f64>| Point::Tuple(v.iter().map(|&x| Point::Scalar(x)).collect());
            let (a, b, c) = (t(&a), t(&b), t(&c));
            prop_assert!(triangle(&a, &b, &c));
            prop_assert_eq!(a.distance(&a), 0.0);
        }
    }

    #[test]
    fn symbol_metric_is_discrete() {
        assert_eq!(Point::Symbol(2).distance(&Point::Symbol(2)), 0.0);
        assert_eq!(Point::Symbol(0).distance(&Point::Symbol(5)), 1.0);
    }

    #[test]
    fn float_equality_is_bitwise_up_to_zero_sign() {
        assert_eq!(Point::Scalar(0.0), Point::Scalar(-0.0));
        assert_ne!(Point::Scalar(0.1), Point::Scalar(f64::from_bits(0.1f64.to_bits() + 1)));
        assert_eq!(Point::Scalar(1.5), Point::Scalar(1.5));
        assert!(Point::Scalar(1.0) < Point::Scalar(2.0));
    }

    #[test]
    fn coords_round_trip() {
        let p = Point::Tuple(vec![
            Point::Phase { x: vec![1.0], v: vec![2.0] },
            Point::Vec3([3.0, 4.0, 5.0]),
        ]);
        let c = p.coords().unwrap();
        assert_eq!(c, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(Point::from_coords(&p.kind(), &c).unwrap(), p);
        assert!(Point::Symbol(1).coords().is_none());
    }
}
