//! The deck group of a genus-2 surface, realized by side pairings of the
//! regular hyperbolic octagon with interior angles `pi/4`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2, TAU};
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::hyperbolic::{
    angle_diff, dist_g, BoundaryPoint, DiscPoint, HyperbolicGeodesic, MobiusMap, R_MAX,
};
use crate::{Error, Result};

/// Longest word length accepted by ball enumeration.
pub const MAX_BALL_LENGTH: usize = 8;

/// A generator `a, b, c, d` or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    /// `generator` in `0..4` stands for `a, b, c, d`.
    pub fn new(generator: u8, inverse: bool) -> Self {
        assert!(generator < 4, "generator index out of range");
        Self(2 * generator + inverse as u8)
    }

    /// All eight letters in the order `a, A, b, B, c, C, d, D`.
    pub fn all() -> [Letter; 8] {
        core::array::from_fn(|k| Letter(k as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn generator(self) -> u8 {
        self.0 / 2
    }

    pub fn is_inverse(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn inverse(self) -> Self {
        Self(self.0 ^ 1)
    }

    pub fn to_char(self) -> char {
        let c = (b'a' + self.generator()) as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        let g = match c.to_ascii_lowercase() {
            'a' => 0,
            'b' => 1,
            'c' => 2,
            'd' => 3,
            _ => return None,
        };
        Some(Self::new(g, c.is_ascii_uppercase()))
    }
}

/// A freely reduced word in the generators. Uppercase letters denote inverses
/// in the string form, so the relator reads `abABcdCD`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GroupWord(Vec<Letter>);

impl GroupWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// Rejects words with adjacent cancelling letters.
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if let Some(position) = letters.windows(2).position(|w| w[1] == w[0].inverse()) {
            return Err(Error::NotReduced { position });
        }
        Ok(Self(letters))
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Letter::from_char(c).ok_or(Error::InvalidParameter("unknown generator letter"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Freely reduced product `self * other`.
    pub fn concat(&self, other: &GroupWord) -> Self {
        Self::reduce(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn pow(&self, n: usize) -> Self {
        Self::reduce(core::iter::repeat_n(self.0.iter().copied(), n).flatten())
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

/// Side pairings of the regular octagon centered at the origin.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    maps: [MobiusMap; 8],
    inradius: f64,
    r_oct: f64,
    vertices: [DiscPoint; 8],
    midpoints: [DiscPoint; 8],
    relator_residual: f64,
}

fn half_turn_about_midpoint(k: usize, inradius: f64) -> MobiusMap {
    let phi = k as f64 * FRAC_PI_4;
    let t = MobiusMap::rotation(phi) * MobiusMap::translation(inradius) * MobiusMap::rotation(-phi);
    t * MobiusMap::rotation(PI) * t.inverse()
}

/// The map carrying side `j` onto side `i` with the octagon landing on the
/// far side of side `i`.
fn side_pairing(i: usize, j: usize, inradius: f64) -> MobiusMap {
    half_turn_about_midpoint(i, inradius) * MobiusMap::rotation((i as f64 - j as f64) * FRAC_PI_4)
}

impl GeneratorSet {
    /// Sides `0..8` in counterclockwise order carry the labels
    /// `a, b, A, B, c, d, C, D`.
    pub fn build_octagon_group() -> Result<Self> {
        let inradius = (1.0 + SQRT_2).acosh();
        let r_oct = ((1.0 + SQRT_2) * (1.0 + SQRT_2)).acosh();
        let a = side_pairing(0, 2, inradius);
        let b = side_pairing(1, 3, inradius).inverse();
        let c = side_pairing(4, 6, inradius);
        let d = side_pairing(5, 7, inradius).inverse();
        let gens = [a, b, c, d];
        let maps = core::array::from_fn(|k| {
            let g = gens[k / 2];
            if k % 2 == 0 {
                g
            } else {
                g.inverse()
            }
        });
        let vertices = core::array::from_fn(|k| {
            DiscPoint::new(FRAC_PI_8 + k as f64 * FRAC_PI_4, r_oct).expect("octagon vertex")
        });
        let midpoints = core::array::from_fn(|k| {
            DiscPoint::new(k as f64 * FRAC_PI_4, inradius).expect("octagon side midpoint")
        });
        let mut set = Self {
            maps,
            inradius,
            r_oct,
            vertices,
            midpoints,
            relator_residual: 0.0,
        };
        let relator = GroupWord::parse("abABcdCD")?;
        let residual = set.evaluate_word(&relator).distance_to_identity();
        if !(residual <= 1e-9) {
            return Err(Error::Construction { residual });
        }
        set.relator_residual = residual;
        Ok(set)
    }

    pub fn map(&self, letter: Letter) -> &MobiusMap {
        &self.maps[letter.index()]
    }

    /// The generators `a, b, c, d` (without inverses).
    pub fn generators(&self) -> [MobiusMap; 4] {
        core::array::from_fn(|k| self.maps[2 * k])
    }

    pub fn relator_residual(&self) -> f64 {
        self.relator_residual
    }

    /// Circumradius of the octagon.
    pub fn r_oct(&self) -> f64 {
        self.r_oct
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn vertices(&self) -> &[DiscPoint; 8] {
        &self.vertices
    }

    pub fn side_midpoints(&self) -> &[DiscPoint; 8] {
        &self.midpoints
    }

    pub fn evaluate_word(&self, w: &GroupWord) -> MobiusMap {
        w.letters()
            .iter()
            .fold(MobiusMap::identity(), |acc, &l| acc * self.maps[l.index()])
    }

    /// All elements with a word of length at most `max_len`, each with its
    /// shortlex-least word, in shortlex order. Elements are identified by
    /// their image of the origin, which is free since the group is torsion
    /// free.
    pub fn enumerate_ball(&self, max_len: usize) -> Result<Vec<(GroupWord, MobiusMap)>> {
        if max_len > MAX_BALL_LENGTH {
            return Err(Error::Resource {
                requested: max_len,
                max: MAX_BALL_LENGTH,
            });
        }
        let mut out: Vec<(GroupWord, MobiusMap)> =
            alloc::vec![(GroupWord::identity(), MobiusMap::identity())];
        let mut index = OrbitIndex::default();
        index.insert(&MobiusMap::identity(), 0);
        let mut frontier = 0..1;
        for _ in 0..max_len {
            let start = out.len();
            for parent in frontier.clone() {
                for l in Letter::all() {
                    if out[parent].0.letters().last() == Some(&l.inverse()) {
                        continue;
                    }
                    let map = out[parent].1 * self.maps[l.index()];
                    if index.find(&map, &out).is_some() {
                        continue;
                    }
                    let mut letters = out[parent].0.letters().to_vec();
                    letters.push(l);
                    index.insert(&map, out.len());
                    out.push((GroupWord(letters), map));
                }
            }
            frontier = start..out.len();
        }
        Ok(out)
    }

    /// Greedy side-pairing reduction into the closed octagon. Returns `w` and
    /// `p0 = evaluate(w) p`.
    pub fn reduce_to_domain(&self, p: &DiscPoint) -> Result<(GroupWord, DiscPoint)> {
        let mut applied: Vec<Letter> = Vec::new();
        let p0 = self.reduce_core(p, |l| applied.push(l))?;
        // Letters are applied on the left: p0 = g_k ... g_1 p.
        Ok((GroupWord::reduce(applied.into_iter().rev()), p0))
    }

    /// As [`Self::reduce_to_domain`], returning the reducing map instead of
    /// its word.
    pub fn reduce_with_map(&self, p: &DiscPoint) -> Result<(MobiusMap, DiscPoint)> {
        let mut map = MobiusMap::identity();
        let p0 = self.reduce_core(p, |l| map = self.maps[l.index()] * map)?;
        Ok((map, p0))
    }

    fn reduce_core(&self, p: &DiscPoint, mut on_step: impl FnMut(Letter)) -> Result<DiscPoint> {
        if p.rho() > R_MAX - 2.0 {
            return Err(Error::Truncation {
                rho: p.rho(),
                max: R_MAX - 2.0,
            });
        }
        let max_steps = (10.0 * p.rho()).ceil() as usize + 1;
        let mut q = *p;
        for _ in 0..=max_steps {
            let mut best: Option<(Letter, DiscPoint)> = None;
            for l in Letter::all() {
                let img = self.maps[l.index()].apply(&q)?;
                if best.is_none_or(|(_, b)| img.rho() < b.rho()) {
                    best = Some((l, img));
                }
            }
            let (l, img) = best.expect("eight letters");
            if img.rho() < q.rho() - 1e-12 {
                q = img;
                on_step(l);
            } else {
                return Ok(q);
            }
        }
        Err(Error::ReductionFailure { steps: max_steps })
    }

    pub fn is_fixed_direction(
        &self,
        xi: &BoundaryPoint,
        max_len: usize,
        tol: f64,
    ) -> Result<Option<GroupWord>> {
        Ok(FixedDirections::new(self, max_len)?.witness(xi, tol))
    }
}

/// Spatial hash of origin images.
#[derive(Default)]
struct OrbitIndex {
    cells: BTreeMap<(i64, i64), Vec<usize>>,
}

impl OrbitIndex {
    fn key(map: &MobiusMap) -> ((i64, i64), DiscPoint) {
        let p = map
            .apply(&DiscPoint::origin())
            .expect("orbit point within truncation");
        let h = p.hyperboloid();
        ((h.x.floor() as i64, h.y.floor() as i64), p)
    }

    fn insert(&mut self, map: &MobiusMap, idx: usize) {
        let (k, _) = Self::key(map);
        self.cells.entry(k).or_default().push(idx);
    }

    fn find(&self, map: &MobiusMap, table: &[(GroupWord, MobiusMap)]) -> Option<usize> {
        let ((kx, ky), p) = Self::key(map);
        let o = DiscPoint::origin();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &i in list {
                        let q = table[i].1.apply(&o).expect("orbit point within truncation");
                        // Distinct orbit points are at least twice the inradius apart.
                        if dist_g(&p, &q) < 1e-6 {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }
}

/// Attracting and repelling fixed points of a hyperbolic map.
pub fn fixed_points(m: &MobiusMap) -> Result<(BoundaryPoint, BoundaryPoint)> {
    let (a, b) = (m.a(), m.b());
    if !m.is_hyperbolic() || b.norm() == 0.0 {
        return Err(Error::NotHyperbolic {
            half_trace: a.re.abs(),
        });
    }
    // Roots of conj(b) z^2 - 2i Im(a) z - b = 0, both on the unit circle.
    let disc = (b.norm_sqr() - a.im * a.im).max(0.0).sqrt();
    let z1 = (Complex64::new(disc, a.im)) / b.conj();
    let z2 = (Complex64::new(-disc, a.im)) / b.conj();
    // Derivative 1 / (conj(b) z + conj(a))^2 has modulus < 1 at the attractor.
    let attracting = |z: Complex64| (b.conj() * z + a.conj()).norm() > 1.0;
    let (att, rep) = if attracting(z1) { (z1, z2) } else { (z2, z1) };
    Ok((BoundaryPoint::new(att.arg()), BoundaryPoint::new(rep.arg())))
}

/// Axis, fixed points and translation length of a hyperbolic map.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisData {
    pub word: Option<GroupWord>,
    pub xi_attract: BoundaryPoint,
    pub xi_repel: BoundaryPoint,
    /// Oriented from the repelling to the attracting fixed point.
    pub axis: HyperbolicGeodesic,
    pub translation_length: f64,
    /// Largest distance from the axis of the image of a sampled axis point.
    pub invariance_residual: f64,
}

pub fn axis_of(m: &MobiusMap) -> Result<AxisData> {
    let (xi_attract, xi_repel) = fixed_points(m)?;
    let axis = HyperbolicGeodesic::new(xi_repel, xi_attract)?;
    let translation_length = 2.0 * m.half_trace().abs().acosh();
    let mut invariance_residual: f64 = 0.0;
    for k in -5..=5 {
        let p = axis.point_at(k as f64)?;
        let (_, y) = axis.fermi_coords(&m.apply(&p)?);
        invariance_residual = invariance_residual.max(y.abs());
    }
    Ok(AxisData {
        word: None,
        xi_attract,
        xi_repel,
        axis,
        translation_length,
        invariance_residual,
    })
}

impl GeneratorSet {
    pub fn axis_of_word(&self, w: &GroupWord) -> Result<AxisData> {
        let mut data = axis_of(&self.evaluate_word(w))?;
        data.word = Some(w.clone());
        Ok(data)
    }
}

/// Fixed points of all nontrivial elements of a ball, sorted by angle for
/// repeated queries.
#[derive(Debug, Clone)]
pub struct FixedDirections {
    /// `(angle, shortlex rank, word)`.
    entries: Vec<(f64, usize, GroupWord)>,
    max_len: usize,
}

impl FixedDirections {
    pub fn new(gens: &GeneratorSet, max_len: usize) -> Result<Self> {
        let ball = gens.enumerate_ball(max_len)?;
        let mut entries = Vec::with_capacity(2 * ball.len());
        for (rank, (word, map)) in ball.into_iter().enumerate().skip(1) {
            let (p, q) = fixed_points(&map)?;
            entries.push((p.angle(), rank, word.clone()));
            entries.push((q.angle(), rank, word));
        }
        entries.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(Self { entries, max_len })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Shortlex-least word with a fixed point within `tol` of `xi`.
    pub fn witness(&self, xi: &BoundaryPoint, tol: f64) -> Option<GroupWord> {
        let x = xi.angle();
        let n = self.entries.len();
        if n == 0 {
            return None;
        }
        let start = self.entries.partition_point(|e| e.0 < x - tol);
        let end = self.entries.partition_point(|e| e.0 <= x + tol);
        // Near 0 and 2 pi the window wraps around.
        let low = self.entries.partition_point(|e| e.0 <= x + tol - TAU);
        let high = self.entries.partition_point(|e| e.0 < x - tol + TAU);
        let mut best: Option<usize> = None;
        for i in (start..end).chain(0..low).chain(high..n) {
            let e = &self.entries[i];
            if angle_diff(e.0, x).abs() <= tol && best.is_none_or(|b| e.1 < self.entries[b].1) {
                best = Some(i);
            }
        }
        best.map(|i| self.entries[i].2.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn gens() -> &'static GeneratorSet {
        static G: OnceLock<GeneratorSet> = OnceLock::new();
        G.get_or_init(|| GeneratorSet::build_octagon_group().unwrap())
    }

    fn w(s: &str) -> GroupWord {
        GroupWord::parse(s).unwrap()
    }

    #[test]
    fn relator_and_generators() {
        let g = gens();
        assert!(g.relator_residual() < 1e-9);
        for m in g.generators() {
            assert!(2.0 * m.half_trace().abs() > 2.0);
            assert!(m.det_residual().abs() < 1e-12);
            // Each generator moves the origin to a neighbouring copy's center.
            let d = dist_g(
                &DiscPoint::origin(),
                &m.apply(&DiscPoint::origin()).unwrap(),
            );
            assert!((d - 2.0 * g.inradius()).abs() < 1e-10);
        }
        // Other orderings of the relator are not the identity.
        assert!(g.evaluate_word(&w("abcdABCD")).distance_to_identity() > 1e-3);
    }

    #[test]
    fn octagon_shape() {
        let g = gens();
        assert_eq!(g.vertices().len(), 8);
        assert!((g.r_oct() - 2.448452447678076).abs() < 1e-12);
        assert!((g.inradius() - 1.528570919480998).abs() < 1e-12);
        for k in 0..8 {
            let v = g.vertices()[k];
            assert!((v.rho() - g.r_oct()).abs() < 1e-14);
            // Interior angle between the two sides meeting at v.
            let to_v = MobiusMap::to_point(&v).inverse();
            let m1 = to_v.apply(&g.side_midpoints()[k]).unwrap().theta();
            let m2 = to_v
                .apply(&g.side_midpoints()[(k + 1) % 8])
                .unwrap()
                .theta();
            assert!((angle_diff(m1, m2).abs() - FRAC_PI_4).abs() < 1e-8);
            // Adjacent vertices are joined by a geodesic through the midpoint.
            let (geo, _, _) =
                HyperbolicGeodesic::through_points(&v, &g.vertices()[(k + 1) % 8]).unwrap();
            let (_, y) = geo.fermi_coords(&g.side_midpoints()[(k + 1) % 8]);
            assert!(y.abs() < 1e-10);
        }
    }

    #[test]
    fn side_pairings_match_sides() {
        let g = gens();
        // a carries side 2 onto side 0; b carries side 1 onto side 3.
        let mids = g.side_midpoints();
        let pairs = [("a", 2, 0), ("b", 1, 3), ("c", 6, 4), ("d", 5, 7)];
        for (name, from, to) in pairs {
            let m = g.evaluate_word(&w(name));
            let img = m.apply(&mids[from]).unwrap();
            assert!(dist_g(&img, &mids[to]) < 1e-10, "{name}");
        }
    }

    #[test]
    fn words() {
        assert!(matches!(
            GroupWord::parse("aA"),
            Err(Error::NotReduced { position: 0 })
        ));
        assert_eq!(
            GroupWord::reduce(w("ab").letters().iter().chain(w("Bc").letters()).copied()),
            w("ac")
        );
        assert_eq!(w("abC").inverse(), w("cBA"));
        assert_eq!(w("abC").to_string(), "abC");
        assert_eq!(GroupWord::identity().to_string(), "1");
        assert_eq!(w("ab").pow(3), w("ababab"));
        let g = gens();
        assert!(
            g.evaluate_word(&GroupWord::identity())
                .distance_to_identity()
                == 0.0
        );
    }

    #[test]
    fn evaluation_is_a_homomorphism() {
        let g = gens();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w1 = GroupWord::reduce(
                (0..rng.random_range(0..7)).map(|_| Letter(rng.random_range(0..8))),
            );
            let w2 = GroupWord::reduce(
                (0..rng.random_range(0..7)).map(|_| Letter(rng.random_range(0..8))),
            );
            let lhs = g.evaluate_word(&w1.concat(&w2));
            let rhs = g.evaluate_word(&w1) * g.evaluate_word(&w2);
            assert!(
                lhs.distance_to(&rhs) < 1e-9 * lhs.a().norm().max(1.0),
                "{} {} {}",
                w1,
                w2,
                lhs.distance_to(&rhs)
            );
        }
    }

    #[test]
    fn ball_counts() {
        let g = gens();
        assert_eq!(g.enumerate_ball(0).unwrap().len(), 1);
        assert_eq!(g.enumerate_ball(1).unwrap().len(), 9);
        let ball = g.enumerate_ball(4).unwrap();
        let sizes: Vec<usize> = (0..=4)
            .map(|l| ball.iter().filter(|e| e.0.len() == l).count())
            .collect();
        assert_eq!(sizes, [1, 8, 56, 392, 2736]);
        assert!(matches!(g.enumerate_ball(9), Err(Error::Resource { .. })));
    }

    #[test]
    fn ball_has_no_duplicates() {
        let g = gens();
        let ball = g.enumerate_ball(2).unwrap();
        assert_eq!(ball.len(), 65);
        for i in 0..ball.len() {
            for j in 0..i {
                assert!(
                    ball[i].1.distance_to(&ball[j].1) > 1e-3,
                    "{} {}",
                    ball[i].0,
                    ball[j].0
                );
            }
        }
        // Shortlex order.
        for pair in ball.windows(2) {
            assert!((pair[0].0.len(), &pair[0].0) < (pair[1].0.len(), &pair[1].0));
        }
    }

    #[test]
    fn relator_halves_collapse_in_the_ball() {
        // abAB = DCdc: two words of length 4 for one element.
        let g = gens();
        let ball = g.enumerate_ball(4).unwrap();
        let target = g.evaluate_word(&w("DCdc"));
        let found: Vec<_> = ball
            .iter()
            .filter(|e| e.1.distance_to(&target) < 1e-8)
            .collect();
        assert_eq!(found.len(), 1);
    }

    #[test]
    fn fixed_point_examples() {
        let g = gens();
        let a = g.evaluate_word(&w("a"));
        let (att, rep) = fixed_points(&a).unwrap();
        assert!(a.apply_boundary(&att).distance(&att) < 1e-9);
        assert!(a.apply_boundary(&rep).distance(&rep) < 1e-9);
        let mut p = DiscPoint::origin();
        for _ in 0..20 {
            p = a.apply(&p).unwrap_or(p);
        }
        assert!(angle_diff(p.theta(), att.angle()).abs() < 1e-3);
        let (att_inv, rep_inv) = fixed_points(&a.inverse()).unwrap();
        assert!(att_inv.distance(&rep) < 1e-12 && rep_inv.distance(&att) < 1e-12);
        assert!(matches!(
            fixed_points(&MobiusMap::rotation(1.0)),
            Err(Error::NotHyperbolic { .. })
        ));
    }

    #[test]
    fn axes() {
        let g = gens();
        let ax = g.axis_of_word(&w("a")).unwrap();
        assert!(ax.invariance_residual < 1e-7);
        assert!((ax.translation_length - 2.0 * (1.0 + SQRT_2 / 2.0).acosh()).abs() < 1e-12);
        let a = g.evaluate_word(&w("a"));
        for k in 0..10 {
            let p = ax.axis.point_at(k as f64 * 0.7 - 3.0).unwrap();
            let d = dist_g(&p, &a.apply(&p).unwrap());
            assert!((d - ax.translation_length).abs() < 1e-7);
            let q = ax
                .axis
                .frame()
                .disc_point(k as f64 * 0.7 - 3.0, 1.0)
                .unwrap();
            assert!(dist_g(&q, &a.apply(&q).unwrap()) > ax.translation_length);
        }
        let ax2 = g.axis_of_word(&w("aa")).unwrap();
        assert!((ax2.translation_length - 2.0 * ax.translation_length).abs() < 1e-7);
        assert!(ax.axis.xi_plus().distance(&ax.xi_attract) < crate::TOL_ANGLE);
        assert!(ax.axis.xi_minus().distance(&ax.xi_repel) < crate::TOL_ANGLE);
    }

    #[test]
    fn fixed_direction_witnesses() {
        let g = gens();
        let table = FixedDirections::new(g, 3).unwrap();
        let (att_a, _) = fixed_points(&g.evaluate_word(&w("a"))).unwrap();
        assert_eq!(table.witness(&att_a, 1e-9), Some(w("a")));
        let (att_ab, _) = fixed_points(&g.evaluate_word(&w("ab"))).unwrap();
        assert_eq!(table.witness(&att_ab, 1e-9), Some(w("ab")));
        assert_eq!(
            g.is_fixed_direction(&att_ab, 2, 1e-9).unwrap(),
            Some(w("ab"))
        );
        assert_eq!(g.is_fixed_direction(&att_ab, 1, 1e-9).unwrap(), None);
    }

    #[test]
    fn fixed_direction_wraps_around_zero() {
        let g = gens();
        let table = FixedDirections::new(g, 2).unwrap();
        let xi = table.entries[0].0;
        // A query just below 2 pi finds a fixed point just above 0.
        let q = BoundaryPoint::new(xi - 1e-7 + TAU);
        assert!(table.witness(&q, 1e-6).is_some());
    }

    #[test]
    fn reduction_examples() {
        let g = gens();
        let inside = DiscPoint::new(0.3, 1.0).unwrap();
        let (word, p0) = g.reduce_to_domain(&inside).unwrap();
        assert!(word.is_empty() && p0 == inside);
        let ao = g
            .evaluate_word(&w("a"))
            .apply(&DiscPoint::origin())
            .unwrap();
        let (word, p0) = g.reduce_to_domain(&ao).unwrap();
        assert_eq!(word, w("A"));
        assert!(p0.rho() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let p = DiscPoint::new(rng.random_range(0.0..TAU), 10.0).unwrap();
            let (word, p0) = g.reduce_to_domain(&p).unwrap();
            assert!(p0.rho() <= g.r_oct() + 1e-6);
            let img = g.evaluate_word(&word).apply(&p).unwrap();
            assert!(dist_g(&img, &p0) < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduction_is_constant_on_orbits(theta in 0.0..TAU, rho in 0.0..12.0f64, k in 0usize..8) {
            let g = gens();
            let p = DiscPoint::new(theta, rho).unwrap();
            let gp = g.maps[k].apply(&p).unwrap();
            prop_assume!(gp.rho() <= R_MAX - 2.0);
            let (_, p0) = g.reduce_to_domain(&p).unwrap();
            let (_, q0) = g.reduce_to_domain(&gp).unwrap();
            prop_assert!(dist_g(&p0, &q0) < 1e-7);
        }

        #[test]
        fn fixed_points_are_fixed(word in proptest::collection::vec(0u8..8, 1..6)) {
            let g = gens();
            let word = GroupWord::reduce(word.into_iter().map(Letter));
            prop_assume!(!word.is_empty());
            let m = g.evaluate_word(&word);
            let (att, rep) = fixed_points(&m).unwrap();
            prop_assert!(m.apply_boundary(&att).distance(&att) < 1e-8);
            prop_assert!(m.apply_boundary(&rep).distance(&rep) < 1e-8);
            prop_assert!(att.distance(&rep) > crate::TOL_ANGLE);
        }
    }
}
