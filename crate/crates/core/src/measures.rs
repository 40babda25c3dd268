//! Finite signed atomic measures and the cost integrands `H`.
//!
//! Measures are kept canonical: atoms closer than [`ATOM_TOL`] (sup norm) are
//! merged, weights below [`WEIGHT_TOL`] in absolute value are dropped, and
//! atoms are stored in lexicographic order of their points.

use std::fmt;
use std::sync::Arc;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Cube, Point};
use crate::numeric::{cluster_points, compensated_sum, pairwise_sum};

/// Coincidence tolerance for atom locations (absolute, sup norm).
pub const ATOM_TOL: f64 = 1e-12;
/// Weights with smaller magnitude are treated as zero.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Tolerance on total masses that must agree.
pub const MASS_TOL: f64 = 1e-9;

/// Structural properties a general integrand is asserted to have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostFlags {
    pub even: bool,
    pub subadditive: bool,
    pub nondecreasing: bool,
    pub zero_at_zero: bool,
    pub continuous_at_zero: bool,
}

impl CostFlags {
    /// All properties an H-mass integrand is required to have.
    pub fn h_mass() -> Self {
        CostFlags {
            even: true,
            subadditive: true,
            nondecreasing: true,
            zero_at_zero: true,
            continuous_at_zero: true,
        }
    }
}

type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A caller-supplied integrand with asserted flags.
#[derive(Clone)]
pub struct GeneralCost {
    h: Integrand,
    flags: CostFlags,
    name: String,
}

impl GeneralCost {
    pub fn flags(&self) -> CostFlags {
        self.flags
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// The energy integrand: `|θ|^α`, the size functional, or a general `H`.
#[derive(Clone)]
pub enum CostSpec {
    Power(f64),
    Size,
    General(GeneralCost),
}

impl fmt::Debug for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostSpec::Power(a) => write!(f, "Power({a})"),
            CostSpec::Size => write!(f, "Size"),
            CostSpec::General(g) => write!(f, "General({}, {:?})", g.name, g.flags),
        }
    }
}

impl CostSpec {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidCost(format!("alpha = {alpha} not in (0, 1]")));
        }
        Ok(CostSpec::Power(alpha))
    }

    /// Wraps `h` after spot-checking the asserted flags on 10³ sampled pairs.
    pub fn general<F>(name: impl Into<String>, h: F, flags: CostFlags) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c057);
        let sample = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-6.0..3.0));
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
        if flags.zero_at_zero && h(0.0).abs() > 1e-15 {
            return Err(Error::InvalidCost(format!("{name}: H(0) = {} != 0", h(0.0))));
        }
        for _ in 0..1000 {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let (ha, hb) = (h(a), h(b));
            if !ha.is_finite() || ha < 0.0 {
                return Err(Error::InvalidCost(format!("{name}: H({a}) = {ha}")));
            }
            if flags.even && !close(h(-a), ha) {
                return Err(Error::InvalidCost(format!("{name}: not even at {a}")));
            }
            if flags.nondecreasing {
                let (lo, hi) = if a < b { (ha, hb) } else { (hb, ha) };
                if lo > hi && !close(lo, hi) {
                    return Err(Error::InvalidCost(format!(
                        "{name}: decreasing between {a} and {b}"
                    )));
                }
            }
            if flags.subadditive {
                let hab = h(a + b);
                if hab > ha + hb && !close(hab, ha + hb) {
                    return Err(Error::InvalidCost(format!(
                        "{name}: H({a}+{b}) = {hab} > {}",
                        ha + hb
                    )));
                }
            }
        }
        Ok(CostSpec::General(GeneralCost {
            h: Arc::new(h),
            flags,
            name,
        }))
    }

    /// `H(θ)`; even in `θ` and zero at zero for the built-in integrands.
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            CostSpec::Power(a) => {
                let t = theta.abs();
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(*a)
                }
            }
            CostSpec::Size => {
                if theta == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            CostSpec::General(g) => (g.h)(theta),
        }
    }

    pub fn is_subadditive(&self) -> bool {
        match self {
            CostSpec::Power(_) | CostSpec::Size => true,
            CostSpec::General(g) => g.flags.subadditive,
        }
    }

    pub fn is_continuous_at_zero(&self) -> bool {
        match self {
            CostSpec::Power(_) => true,
            CostSpec::Size => false,
            CostSpec::General(g) => g.flags.continuous_at_zero,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CostSpec::Power(a) => format!("power({a})"),
            CostSpec::Size => "size".into(),
            CostSpec::General(g) => g.name.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size: Option<bool>,
}

impl Serialize for CostSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            CostSpec::Power(a) => CostRepr {
                power: Some(*a),
                size: None,
            },
            CostSpec::Size => CostRepr {
                power: None,
                size: Some(true),
            },
            CostSpec::General(_) => {
                return Err(serde::ser::Error::custom("general costs are not serializable"))
            }
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CostSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CostRepr::deserialize(d)?;
        match (repr.power, repr.size) {
            (Some(a), None) => CostSpec::power(a).map_err(serde::de::Error::custom),
            (None, Some(true)) => Ok(CostSpec::Size),
            _ => Err(serde::de::Error::custom(
                r#"cost must be {"power": alpha} or {"size": true}"#,
            )),
        }
    }
}

/// One weighted point mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(rename = "x")]
    pub point: Point,
    #[serde(rename = "w")]
    pub weight: f64,
}

/// A finite signed combination of Dirac masses, in canonical form.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct SignedAtomicMeasure {
    atoms: Vec<Atom>,
}

#[derive(Deserialize)]
struct MeasureRepr {
    atoms: Vec<Atom>,
}

impl<'de> Deserialize<'de> for SignedAtomicMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(d)?;
        if repr.atoms.iter().any(|a| a.weight == 0.0) {
            return Err(serde::de::Error::custom("atom weights must be nonzero"));
        }
        SignedAtomicMeasure::from_atoms(repr.atoms.into_iter().map(|a| (a.point, a.weight)))
            .map_err(serde::de::Error::custom)
    }
}

impl SignedAtomicMeasure {
    pub fn empty() -> Self {
        SignedAtomicMeasure::default()
    }

    pub fn dirac(p: Point, w: f64) -> Self {
        canonicalize(vec![(p, w)])
    }

    /// Canonicalizes after checking that every atom is finite and of one dimension.
    pub fn from_atoms<I: IntoIterator<Item = (Point, f64)>>(raw: I) -> Result<Self> {
        let raw: Vec<(Point, f64)> = raw.into_iter().collect();
        if let Some((p0, _)) = raw.first() {
            for (p, w) in &raw {
                check_dim(p0.dim(), p.dim())?;
                if !p.is_finite() || !w.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(canonicalize(raw))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.point.dim())
    }

    pub fn points(&self) -> Vec<Point> {
        self.atoms.iter().map(|a| a.point.clone()).collect()
    }

    /// Signed total `Σ w_i`.
    pub fn total(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight))
    }

    /// Total variation `Σ |w_i|`.
    pub fn total_variation(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight.abs()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|a| a.weight > 0.0)
    }

    /// Weight of the atom at `p` (zero when absent).
    pub fn weight_at(&self, p: &Point) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.point.sup_dist_unchecked(p) <= ATOM_TOL)
            .map(|a| a.weight)
            .sum()
    }

    pub fn scale(&self, t: f64) -> Self {
        canonicalize(
            self.atoms
                .iter()
                .map(|a| (a.point.clone(), a.weight * t))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        canonicalize(
            self.atoms
                .iter()
                .chain(&other.atoms)
                .map(|a| (a.point.clone(), a.weight))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Atom-by-atom comparison after canonicalization.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let diff = self.sub(other);
        diff.atoms.iter().all(|a| a.weight.abs() <= tol)
    }

    /// Largest weight discrepancy against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .atoms
            .iter()
            .map(|a| a.weight.abs())
            .fold(0.0, f64::max)
    }
}

/// Merges coincident points, drops zero weights and sorts atoms.
///
/// Points of differing dimension are never merged with each other.
pub fn canonicalize(raw: Vec<(Point, f64)>) -> SignedAtomicMeasure {
    if raw.is_empty() {
        return SignedAtomicMeasure::empty();
    }
    let points: Vec<Point> = raw.iter().map(|(p, _)| p.clone()).collect();
    let (ids, reps) = cluster_points(&points, ATOM_TOL);
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); reps.len()];
    for ((_, w), id) in raw.iter().zip(&ids) {
        buckets[*id].push(*w);
    }
    let atoms = reps
        .into_iter()
        .zip(buckets)
        .filter_map(|(p, ws)| {
            let w = compensated_sum(ws);
            (w.abs() > WEIGHT_TOL).then_some(Atom {
                point: p,
                weight: w,
            })
        })
        .collect();
    SignedAtomicMeasure { atoms }
}

/// `Σ_i H(|w_i|)`: the H-mass of the positive part plus that of the negative part.
pub fn h_mass_measure(mu: &SignedAtomicMeasure, cost: &CostSpec) -> f64 {
    let terms: Vec<f64> = mu.atoms.iter().map(|a| cost.eval(a.weight.abs())).collect();
    pairwise_sum(&terms)
}

/// Jordan decomposition `μ = μ⁺ − μ⁻`.
pub fn jordan(mu: &SignedAtomicMeasure) -> (SignedAtomicMeasure, SignedAtomicMeasure) {
    let pos = mu.atoms.iter().filter(|a| a.weight > 0.0).cloned().collect();
    let neg = mu
        .atoms
        .iter()
        .filter(|a| a.weight < 0.0)
        .map(|a| Atom {
            point: a.point.clone(),
            weight: -a.weight,
        })
        .collect();
    (
        SignedAtomicMeasure { atoms: pos },
        SignedAtomicMeasure { atoms: neg },
    )
}

/// A finite union of open axis-aligned cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    cubes: Vec<Cube>,
}

impl Region {
    pub fn cube(c: Cube) -> Self {
        Region { cubes: vec![c] }
    }

    pub fn union(cubes: Vec<Cube>) -> Self {
        Region { cubes }
    }

    /// The open sup-norm ball `{z : ‖z − x‖_∞ < r}`.
    pub fn sup_ball(x: &Point, r: f64) -> Result<Self> {
        Ok(Region::cube(Cube::new(x.clone(), 2.0 * r)?))
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    /// Open membership: strictly inside some cube.
    pub fn contains(&self, p: &Point) -> bool {
        self.cubes.iter().any(|c| c.contains_strict(p))
    }

    pub fn on_boundary(&self, p: &Point) -> bool {
        self.cubes.iter().any(|c| c.on_boundary(p))
    }
}

/// `μ ⌞ region`; atoms on any cube face are rejected.
pub fn restrict_measure(mu: &SignedAtomicMeasure, region: &Region) -> Result<SignedAtomicMeasure> {
    let mut kept = Vec::new();
    for a in &mu.atoms {
        if region.on_boundary(&a.point) {
            return Err(Error::AtomOnBoundary {
                point: a.point.coords().to_vec(),
            });
        }
        if region.contains(&a.point) {
            kept.push(a.clone());
        }
    }
    Ok(SignedAtomicMeasure { atoms: kept })
}

/// Exact Kantorovich 1-distance between two positive measures of equal mass,
/// solved as a transportation linear program on the atom bipartite graph.
pub fn w1_distance(mu: &SignedAtomicMeasure, nu: &SignedAtomicMeasure) -> Result<f64> {
    if !mu.is_nonnegative() || !nu.is_nonnegative() {
        return Err(Error::InvalidArgument("W1 needs positive measures".into()));
    }
    let (m, n) = (mu.total(), nu.total());
    if (m - n).abs() > MASS_TOL {
        return Err(Error::MassMismatch { left: m, right: n });
    }
    if mu.is_empty() || nu.is_empty() {
        return Ok(0.0);
    }
    if let (Some(a), Some(b)) = (mu.dim(), nu.dim()) {
        check_dim(a, b)?;
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = mu
        .atoms
        .iter()
        .map(|a| {
            nu.atoms
                .iter()
                .map(|b| lp.add_var(a.point.dist(&b.point), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    // rescale the target so the equalities are exactly consistent
    let ratio = m / n;
    for (i, a) in mu.atoms.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, a.weight);
    }
    for (j, b) in nu.atoms.iter().enumerate() {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(col.as_slice(), ComparisonOp::Eq, b.weight * ratio);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Lp(e.to_string()))?
        .into_solution()
        .map_err(|_| Error::Lp("transport LP interrupted".into()))?;
    Ok(sol.objective().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> Point {
        Point::from([x, y])
    }

    #[test]
    fn canonicalize_examples() {
        let m = canonicalize(vec![(p(1.0, 2.0), 0.5), (p(1.0, 2.0), 0.5)]);
        assert_eq!(m.atoms(), &[Atom { point: p(1.0, 2.0), weight: 1.0 }]);
        assert!(canonicalize(vec![(p(1.0, 2.0), 1.0), (p(1.0, 2.0), -1.0)]).is_empty());
        assert!(canonicalize(vec![]).is_empty());
        let near = canonicalize(vec![(p(0.0, 0.0), 1.0), (p(1e-13, 0.0), 1.0)]);
        assert_eq!(near.len(), 1);
    }

    #[test]
    fn h_mass_examples() {
        let a = CostSpec::power(0.5).unwrap();
        assert_eq!(h_mass_measure(&SignedAtomicMeasure::dirac(p(0.0, 0.0), 1.0), &a), 1.0);
        let two = canonicalize(vec![(p(0.0, 0.0), 0.25), (p(1.0, 0.0), 0.25)]);
        assert_eq!(h_mass_measure(&two, &a), 1.0);
        let dipole = canonicalize(vec![(p(0.0, 0.0), 1.0), (p(1.0, 0.0), -1.0)]);
        assert_eq!(h_mass_measure(&dipole, &CostSpec::Size), 2.0);
    }

    #[test]
    fn jordan_examples() {
        let dipole = canonicalize(vec![(p(0.0, 0.0), 1.0), (p(1.0, 0.0), -1.0)]);
        let (pos, neg) = jordan(&dipole);
        assert_eq!(pos, SignedAtomicMeasure::dirac(p(0.0, 0.0), 1.0));
        assert_eq!(neg, SignedAtomicMeasure::dirac(p(1.0, 0.0), 1.0));
        let (pe, ne) = jordan(&SignedAtomicMeasure::empty());
        assert!(pe.is_empty() && ne.is_empty());
        let (p2, n2) = jordan(&SignedAtomicMeasure::dirac(p(0.0, 0.0), 2.0));
        assert_eq!(p2.total(), 2.0);
        assert!(n2.is_empty());
    }

    #[test]
    fn restriction_examples() {
        let q = Region::cube(Cube::from_corner(&p(0.0, 0.0), 0.5).unwrap());
        let inside = SignedAtomicMeasure::dirac(p(0.25, 0.25), 1.0);
        assert_eq!(restrict_measure(&inside, &q).unwrap(), inside);
        let outside = SignedAtomicMeasure::dirac(p(0.75, 0.75), 1.0);
        assert!(restrict_measure(&outside, &q).unwrap().is_empty());
        let face = SignedAtomicMeasure::dirac(p(0.5, 0.25), 1.0);
        assert!(matches!(
            restrict_measure(&face, &q),
            Err(Error::AtomOnBoundary { .. })
        ));
    }

    #[test]
    fn w1_examples() {
        let d0 = SignedAtomicMeasure::dirac(p(0.0, 0.0), 1.0);
        let d1 = SignedAtomicMeasure::dirac(p(1.0, 0.0), 1.0);
        assert_abs_diff_eq!(w1_distance(&d0, &d1).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w1_distance(&d0, &d0).unwrap(), 0.0, epsilon = 1e-12);
        let split = canonicalize(vec![(p(0.0, 0.0), 0.5), (p(1.0, 0.0), 0.5)]);
        let mid = SignedAtomicMeasure::dirac(p(0.5, 0.0), 1.0);
        assert_abs_diff_eq!(w1_distance(&split, &mid).unwrap(), 0.5, epsilon = 1e-12);
        let heavy = SignedAtomicMeasure::dirac(p(0.5, 0.0), 2.0);
        assert!(matches!(
            w1_distance(&split, &heavy),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn cost_validation() {
        assert!(CostSpec::power(0.0).is_err());
        assert!(CostSpec::power(1.5).is_err());
        assert!(CostSpec::general("sqrt", |t: f64| t.abs().sqrt(), CostFlags::h_mass()).is_ok());
        // t^2 is not subadditive
        assert!(CostSpec::general("square", |t: f64| t * t, CostFlags::h_mass()).is_err());
        // 1 - |t| is decreasing
        assert!(CostSpec::general(
            "decreasing",
            |t: f64| if t == 0.0 { 0.0 } else { 1.0 / (1.0 + t.abs()) },
            CostFlags::h_mass()
        )
        .is_err());
    }

    #[test]
    fn cost_json_forms() {
        let c: CostSpec = serde_json::from_str(r#"{"power": 0.5}"#).unwrap();
        assert!(matches!(c, CostSpec::Power(a) if a == 0.5));
        let s: CostSpec = serde_json::from_str(r#"{"size": true}"#).unwrap();
        assert!(matches!(s, CostSpec::Size));
        assert!(serde_json::from_str::<CostSpec>(r#"{"power": 2.0}"#).is_err());
        assert_eq!(serde_json::to_string(&CostSpec::Size).unwrap(), r#"{"size":true}"#);
    }

    #[test]
    fn measure_json_roundtrip() {
        let m: SignedAtomicMeasure =
            serde_json::from_str(r#"{"atoms": [{"x": [0, 0], "w": 1.0}, {"x": [1, 0], "w": -0.5}]}"#)
                .unwrap();
        assert_eq!(m.len(), 2);
        let back: SignedAtomicMeasure =
            serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<SignedAtomicMeasure>(r#"{"atoms": [{"x": [0], "w": 0}]}"#)
            .is_err());
    }
}
