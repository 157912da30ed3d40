//! Simplicial fans in `N_R = R^4` and the combinatorics of primitive
//! collections.
//!
//! Ray indices are 1-based throughout, so `Cone::new([3, 4])` is the cone
//! spanned by `v_3` and `v_4`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactlin::{self, det4, dot, Int, LatticePoint, LinearError, Mat, Rat, Vec4};

pub const DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FanError {
    #[error("ray index {index} out of range (fan has {ray_count} rays)")]
    IndexOutOfRange { index: usize, ray_count: usize },
    #[error("duplicate ray index {0}")]
    DuplicateIndex(usize),
    #[error("primitive collection {0} must have between 2 and 5 elements")]
    CollectionSize(IndexList),
    #[error("not a Fano face fan: {0}")]
    NotFanoFaceFan(String),
    #[error("{0} is not a primitive collection of the fan")]
    NotPrimitive(IndexList),
    #[error("sum of rays in {0} lies in no cone of the fan")]
    NoContainingCone(IndexList),
    #[error("relation for {0} has non-integral coefficients (fan is not smooth)")]
    NonIntegral(IndexList),
    #[error("containing cones disagree on the relation for {0}")]
    AmbiguousRelation(IndexList),
    #[error("relations do not determine all rays")]
    Underdetermined,
    #[error("relations are inconsistent")]
    Inconsistent,
    #[error("every 4-subset of rays contains a primitive collection")]
    NoSeedCone,
    #[error("reconstructed fan is invalid: {0}")]
    InvalidReconstruction(String),
}

/// A sorted list of distinct 1-based ray indices, used for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexList(pub Vec<usize>);

impl fmt::Display for IndexList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().join(","))
    }
}

fn checked_indices(
    indices: impl IntoIterator<Item = usize>,
    ray_count: usize,
) -> Result<Vec<usize>, FanError> {
    let mut v: Vec<usize> = indices.into_iter().collect();
    v.sort_unstable();
    for w in v.windows(2) {
        if w[0] == w[1] {
            return Err(FanError::DuplicateIndex(w[0]));
        }
    }
    if let Some(&bad) = v.iter().find(|&&i| i == 0 || i > ray_count) {
        return Err(FanError::IndexOutOfRange {
            index: bad,
            ray_count,
        });
    }
    Ok(v)
}

/// A simplicial cone, stored as the sorted set of its generator indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cone(Vec<usize>);

impl Cone {
    /// Panics on duplicate or zero indices; use [`Cone::try_new`] for
    /// untrusted input.
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        Self::try_new(indices, usize::MAX).expect("invalid cone indices")
    }

    pub fn try_new(
        indices: impl IntoIterator<Item = usize>,
        ray_count: usize,
    ) -> Result<Self, FanError> {
        checked_indices(indices, ray_count).map(Cone)
    }

    pub fn zero() -> Self {
        Cone(Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset(&self, other: &Cone) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    /// `self` with generator `i` added.
    pub fn with(&self, i: usize) -> Cone {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&i) {
            v.insert(pos, i);
        }
        Cone(v)
    }

    /// `self` with generator `i` removed.
    pub fn without(&self, i: usize) -> Cone {
        Cone(self.0.iter().copied().filter(|&j| j != i).collect())
    }
}

impl fmt::Display for Cone {
    /// Orbit-closure notation, `V(3,4)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V({})", self.0.iter().join(","))
    }
}

/// A set of rays that is not a cone while all of its proper subsets are.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimitiveCollection(Vec<usize>);

impl PrimitiveCollection {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self, FanError> {
        let v = checked_indices(indices, usize::MAX)?;
        if !(2..=DIM + 1).contains(&v.len()) {
            return Err(FanError::CollectionSize(IndexList(v)));
        }
        Ok(PrimitiveCollection(v))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn is_subset_of(&self, cone: &[usize]) -> bool {
        self.0.iter().all(|i| cone.contains(i))
    }

    fn label(&self) -> IndexList {
        IndexList(self.0.clone())
    }
}

impl fmt::Display for PrimitiveCollection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.label().fmt(f)
    }
}

/// The relation `sum_{i in P} v_i = sum_j c_j v_j` over the minimal cone
/// containing the left-hand side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveRelation {
    pub collection: PrimitiveCollection,
    /// The cone `sigma_P`, possibly the zero cone.
    pub sigma: Cone,
    /// Strictly positive integer coefficients, keyed by generator of `sigma`.
    pub coefficients: BTreeMap<usize, Int>,
    pub degree: Int,
}

impl PrimitiveRelation {
    /// Builds the relation from its parts, computing the degree.
    pub fn new(collection: PrimitiveCollection, coefficients: BTreeMap<usize, Int>) -> Self {
        let sigma = Cone(coefficients.keys().copied().collect());
        let total: Int = coefficients.values().sum();
        let degree = Int::from(collection.len()) - total;
        PrimitiveRelation {
            collection,
            sigma,
            coefficients,
            degree,
        }
    }

    /// Coefficient of each ray in `sum_{P} v_i - sum_j c_j v_j`.
    pub fn linear_form(&self) -> BTreeMap<usize, Int> {
        let mut form: BTreeMap<usize, Int> =
            self.collection.0.iter().map(|&i| (i, Int::one())).collect();
        for (&j, c) in &self.coefficients {
            *form.entry(j).or_insert_with(Int::zero) -= c;
        }
        form.retain(|_, c| !c.is_zero());
        form
    }

    /// `sum_{P} v_i - sum_j c_j v_j`, zero for a genuine relation.
    pub fn residual(&self, rays: &[LatticePoint]) -> LatticePoint {
        self.linear_form()
            .iter()
            .fold(LatticePoint::zero(), |acc, (&i, c)| {
                &acc + &rays[i - 1].scale(c)
            })
    }
}

impl fmt::Display for PrimitiveRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs = self
            .collection
            .0
            .iter()
            .map(|i| format!("v{i}"))
            .join(" + ");
        let rhs = if self.coefficients.is_empty() {
            "0".to_string()
        } else {
            self.coefficients
                .iter()
                .map(|(j, c)| {
                    if c.is_one() {
                        format!("v{j}")
                    } else {
                        format!("{c} v{j}")
                    }
                })
                .join(" + ")
        };
        write!(f, "{lhs} = {rhs}")
    }
}

/// A complete simplicial fan given by its rays and maximal cones.
///
/// Faces of every dimension are derived from the maximal cones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    rays: Vec<LatticePoint>,
    max_cones: BTreeSet<Cone>,
    /// Σ(3): 3-cone → maximal cones containing it.
    walls: BTreeMap<Cone, Vec<Cone>>,
    /// Σ(2)
    faces2: BTreeSet<Cone>,
}

impl Fan {
    /// Assembles a fan from explicit maximal cones. No geometric checks are
    /// made; see [`validate_fan`].
    pub fn from_max_cones(
        rays: Vec<LatticePoint>,
        max_cones: impl IntoIterator<Item = Cone>,
    ) -> Result<Self, FanError> {
        let d = rays.len();
        let max_cones: BTreeSet<Cone> = max_cones.into_iter().collect();
        let mut walls: BTreeMap<Cone, Vec<Cone>> = BTreeMap::new();
        let mut faces2 = BTreeSet::new();
        for cone in &max_cones {
            checked_indices(cone.0.iter().copied(), d)?;
            if cone.dim() != DIM {
                return Err(FanError::NotFanoFaceFan(format!(
                    "maximal cone {cone} does not have {DIM} generators"
                )));
            }
            for &i in &cone.0 {
                walls.entry(cone.without(i)).or_default().push(cone.clone());
            }
            for pair in cone.0.iter().copied().combinations(2) {
                faces2.insert(Cone(pair));
            }
        }
        Ok(Fan {
            rays,
            max_cones,
            walls,
            faces2,
        })
    }

    pub fn rays(&self) -> &[LatticePoint] {
        &self.rays
    }

    /// Generator `v_i` (1-based).
    pub fn ray(&self, i: usize) -> &LatticePoint {
        &self.rays[i - 1]
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    pub fn max_cones(&self) -> &BTreeSet<Cone> {
        &self.max_cones
    }

    /// Σ(3) in lexicographic order.
    pub fn walls(&self) -> impl Iterator<Item = &Cone> {
        self.walls.keys()
    }

    /// Maximal cones having the 3-cone `wall` as a face.
    pub fn cones_on_wall(&self, wall: &Cone) -> &[Cone] {
        self.walls.get(wall).map_or(&[], Vec::as_slice)
    }

    /// Σ(2) in lexicographic order.
    pub fn two_cones(&self) -> impl Iterator<Item = &Cone> {
        self.faces2.iter()
    }

    pub fn is_max_cone(&self, cone: &Cone) -> bool {
        self.max_cones.contains(cone)
    }

    pub fn is_face(&self, cone: &Cone) -> bool {
        match cone.dim() {
            0 => true,
            1 => (1..=self.ray_count()).contains(&cone.0[0]),
            2 => self.faces2.contains(cone),
            3 => self.walls.contains_key(cone),
            4 => self.max_cones.contains(cone),
            _ => false,
        }
    }

    fn is_face_slice(&self, indices: &[usize]) -> bool {
        self.is_face(&Cone(indices.to_vec()))
    }

    fn generators<'a>(&'a self, cone: &'a Cone) -> impl Iterator<Item = &'a LatticePoint> + 'a {
        cone.0.iter().map(move |&i| self.ray(i))
    }

    /// Nonnegative coordinates of `point` in the generators of a maximal
    /// cone, if the point lies in that cone.
    fn cone_coordinates(&self, cone: &Cone, point: &LatticePoint) -> Option<Vec<Rat>> {
        let a = Mat::from_points(self.generators(cone)).ok()?.transpose();
        let b: Vec<Rat> = point.0.iter().cloned().map(Rat::from_integer).collect();
        let sol = exactlin::solve(&a, &b).ok()?;
        (sol.rank == DIM && sol.x.iter().all(|c| !c.is_negative())).then_some(sol.x)
    }
}

/// All 4-subsets of the rays that contain no primitive collection.
pub fn build_fan(
    rays: Vec<LatticePoint>,
    collections: &[PrimitiveCollection],
) -> Result<Fan, FanError> {
    let d = rays.len();
    for c in collections {
        checked_indices(c.0.iter().copied(), d)?;
        if !(2..=DIM + 1).contains(&c.len()) {
            return Err(FanError::CollectionSize(c.label()));
        }
    }
    let cones = (1..=d)
        .combinations(DIM)
        .filter(|s| !collections.iter().any(|c| c.is_subset_of(s)))
        .map(Cone)
        .collect_vec();
    Fan::from_max_cones(rays, cones)
}

/// The face fan of the polytope spanned by `rays`.
///
/// A 4-subset is a maximal cone when the functional `u` equal to 1 on its
/// rays exists and is `< 1` on every other ray, i.e. the subset spans a
/// simplicial facet.
pub fn build_fan_from_rays(rays: Vec<LatticePoint>) -> Result<Fan, FanError> {
    let d = rays.len();
    let one = vec![Rat::one(); DIM];
    let mut cones = Vec::new();
    for subset in (1..=d).combinations(DIM) {
        let a = Mat::from_points(subset.iter().map(|&i| &rays[i - 1])).expect("4x4 matrix");
        let sol = match exactlin::solve(&a, &one) {
            Ok(sol) if sol.rank == DIM => sol,
            _ => continue,
        };
        let u = Vec4([
            sol.x[0].clone(),
            sol.x[1].clone(),
            sol.x[2].clone(),
            sol.x[3].clone(),
        ]);
        let beneath = (1..=d)
            .filter(|i| !subset.contains(i))
            .all(|i| dot(&u, &rays[i - 1]) < Rat::one());
        if beneath {
            cones.push(Cone(subset));
        }
    }
    let fan = Fan::from_max_cones(rays, cones)?;
    let report = validate_fan(&fan);
    if !(report.smooth && report.complete) {
        return Err(FanError::NotFanoFaceFan(report.issues.join("; ")));
    }
    Ok(fan)
}

/// Subsets of size 2..=5 that are not faces but whose proper subsets are.
/// Sorted by size, then lexicographically.
pub fn minimal_nonfaces(fan: &Fan) -> Vec<PrimitiveCollection> {
    let d = fan.ray_count();
    let mut out = Vec::new();
    for k in 2..=DIM + 1 {
        for subset in (1..=d).combinations(k) {
            if fan.is_face_slice(&subset) {
                continue;
            }
            let proper_faces = subset
                .iter()
                .copied()
                .combinations(k - 1)
                .all(|sub| fan.is_face_slice(&sub));
            if proper_faces {
                out.push(PrimitiveCollection(subset));
            }
        }
    }
    out
}

/// The primitive relation of `collection`.
///
/// Every maximal cone containing `sum_{P} v_i` is scanned; they must all
/// agree on the positive support and coefficients.
pub fn primitive_relation(
    fan: &Fan,
    collection: &PrimitiveCollection,
) -> Result<PrimitiveRelation, FanError> {
    checked_indices(collection.0.iter().copied(), fan.ray_count())?;
    let k = collection.len();
    let is_primitive = !fan.is_face_slice(&collection.0)
        && collection
            .0
            .iter()
            .copied()
            .combinations(k - 1)
            .all(|sub| fan.is_face_slice(&sub));
    if !is_primitive {
        return Err(FanError::NotPrimitive(collection.label()));
    }
    let sum = collection
        .0
        .iter()
        .fold(LatticePoint::zero(), |acc, &i| &acc + fan.ray(i));
    if sum.is_zero() {
        return Ok(PrimitiveRelation::new(collection.clone(), BTreeMap::new()));
    }
    let mut found: Option<BTreeMap<usize, Rat>> = None;
    for cone in fan.max_cones() {
        let Some(coords) = fan.cone_coordinates(cone, &sum) else {
            continue;
        };
        let support: BTreeMap<usize, Rat> = cone
            .0
            .iter()
            .copied()
            .zip(coords)
            .filter(|(_, c)| c.is_positive())
            .collect();
        match &found {
            None => found = Some(support),
            Some(prev) if *prev == support => {}
            Some(_) => return Err(FanError::AmbiguousRelation(collection.label())),
        }
    }
    let support = found.ok_or_else(|| FanError::NoContainingCone(collection.label()))?;
    let mut coefficients = BTreeMap::new();
    for (j, c) in support {
        if !c.is_integer() {
            return Err(FanError::NonIntegral(collection.label()));
        }
        coefficients.insert(j, c.to_integer());
    }
    Ok(PrimitiveRelation::new(collection.clone(), coefficients))
}

/// Relations for every primitive collection, in [`minimal_nonfaces`] order.
pub fn primitive_relations(fan: &Fan) -> Result<Vec<PrimitiveRelation>, FanError> {
    minimal_nonfaces(fan)
        .iter()
        .map(|c| primitive_relation(fan, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FanReport {
    pub smooth: bool,
    pub complete: bool,
    pub simplicial_ok: bool,
    pub issues: Vec<String>,
}

/// `±e_i` and `(±1, ±1, ±1, ±1)`.
fn probe_vectors() -> Vec<LatticePoint> {
    let mut probes = Vec::with_capacity(24);
    for axis in 0..DIM {
        let e = LatticePoint::unit(axis);
        probes.push(-&e);
        probes.push(e);
    }
    for signs in (0..DIM).map(|_| [-1i64, 1]).multi_cartesian_product() {
        probes.push(LatticePoint::from_i64([
            signs[0], signs[1], signs[2], signs[3],
        ]));
    }
    probes
}

pub fn validate_fan(fan: &Fan) -> FanReport {
    let mut issues = Vec::new();
    let mut simplicial_ok = !fan.max_cones().is_empty();
    let mut smooth = simplicial_ok;
    if fan.max_cones().is_empty() {
        issues.push("fan has no maximal cones".to_string());
    }
    for cone in fan.max_cones() {
        let g: Vec<&LatticePoint> = fan.generators(cone).collect();
        let det = det4([g[0], g[1], g[2], g[3]]);
        if det.is_zero() {
            simplicial_ok = false;
            smooth = false;
            issues.push(format!("maximal cone {cone} is degenerate"));
        } else if !det.abs().is_one() {
            smooth = false;
            issues.push(format!("maximal cone {cone} has determinant {det}"));
        }
    }

    let mut complete = !fan.max_cones().is_empty();
    for (wall, cones) in &fan.walls {
        if cones.len() != 2 {
            complete = false;
            issues.push(format!(
                "wall {wall} lies on {} maximal cones, expected 2",
                cones.len()
            ));
        }
    }
    if simplicial_ok {
        for probe in probe_vectors() {
            let covered = fan
                .max_cones()
                .iter()
                .any(|cone| fan.cone_coordinates(cone, &probe).is_some());
            if !covered {
                complete = false;
                issues.push(format!("probe ({probe}) lies in no maximal cone"));
            }
        }
    }
    FanReport {
        smooth,
        complete,
        simplicial_ok,
        issues,
    }
}

/// True iff every primitive relation has positive degree.
pub fn is_fano(fan: &Fan) -> Result<bool, FanError> {
    Ok(primitive_relations(fan)?
        .iter()
        .all(|r| r.degree.is_positive()))
}

/// Recovers ray coordinates from primitive relations.
///
/// The lexicographically first 4-subset containing no collection is taken
/// as the standard basis; the remaining rays are solved for coordinate by
/// coordinate.
pub fn reconstruct_rays(
    relations: &[PrimitiveRelation],
    ray_count: usize,
) -> Result<Vec<LatticePoint>, FanError> {
    let collections: Vec<PrimitiveCollection> =
        relations.iter().map(|r| r.collection.clone()).collect();
    for r in relations {
        checked_indices(r.collection.0.iter().copied(), ray_count)?;
        checked_indices(r.coefficients.keys().copied(), ray_count)?;
    }
    let seed = (1..=ray_count)
        .combinations(DIM)
        .find(|s| !collections.iter().any(|c| c.is_subset_of(s)))
        .ok_or(FanError::NoSeedCone)?;
    let unknowns: Vec<usize> = (1..=ray_count).filter(|i| !seed.contains(i)).collect();

    let mut rays: Vec<LatticePoint> = vec![LatticePoint::zero(); ray_count];
    for (axis, &s) in seed.iter().enumerate() {
        rays[s - 1] = LatticePoint::unit(axis);
    }
    if !unknowns.is_empty() {
        let forms: Vec<BTreeMap<usize, Int>> = relations
            .iter()
            .map(PrimitiveRelation::linear_form)
            .collect();
        if forms.is_empty() {
            return Err(FanError::Underdetermined);
        }
        let coeff = |form: &BTreeMap<usize, Int>, i: usize| {
            Rat::from_integer(form.get(&i).cloned().unwrap_or_default())
        };
        let a = Mat::from_rows(
            forms
                .iter()
                .map(|f| unknowns.iter().map(|&i| coeff(f, i)).collect())
                .collect(),
        )
        .map_err(|_| FanError::Underdetermined)?;
        for axis in 0..DIM {
            let b: Vec<Rat> = forms
                .iter()
                .map(|f| {
                    -seed
                        .iter()
                        .filter(|&&s| rays[s - 1].0[axis].is_one())
                        .map(|&s| coeff(f, s))
                        .sum::<Rat>()
                })
                .collect();
            let sol = exactlin::solve(&a, &b).map_err(|e| match e {
                LinearError::Inconsistent => FanError::Inconsistent,
                _ => FanError::Underdetermined,
            })?;
            if sol.rank < unknowns.len() {
                return Err(FanError::Underdetermined);
            }
            for (&i, x) in unknowns.iter().zip(&sol.x) {
                if !x.is_integer() {
                    return Err(FanError::Inconsistent);
                }
                rays[i - 1].0[axis] = x.to_integer();
            }
        }
    }

    let fan = build_fan(rays.clone(), &collections)?;
    let report = validate_fan(&fan);
    if !(report.smooth && report.complete) {
        return Err(FanError::InvalidReconstruction(report.issues.join("; ")));
    }
    Ok(rays)
}

/// A matrix `g in GL(4, Z)` with `g a'_i = a_i` for every ray pair, where
/// `a` and `b` are ray lists with the same labelling. Rows of the result are
/// the rows of `g`.
pub fn lattice_equivalence(a: &[LatticePoint], b: &[LatticePoint]) -> Option<[LatticePoint; 4]> {
    if a.len() != b.len() {
        return None;
    }
    // a basis of Z^4 among b's rays fixes g uniquely
    let basis = (0..b.len()).combinations(DIM).find(|s| {
        det4([&b[s[0]], &b[s[1]], &b[s[2]], &b[s[3]]])
            .abs()
            .is_one()
    })?;
    let m = Mat::from_points(basis.iter().map(|&i| &b[i])).ok()?;
    let mut g: [LatticePoint; 4] = std::array::from_fn(|_| LatticePoint::zero());
    for (row, g_row) in g.iter_mut().enumerate() {
        let rhs: Vec<Rat> = basis
            .iter()
            .map(|&i| Rat::from_integer(a[i].0[row].clone()))
            .collect();
        let sol = exactlin::solve(&m, &rhs).ok()?;
        let x = Vec4([
            sol.x[0].clone(),
            sol.x[1].clone(),
            sol.x[2].clone(),
            sol.x[3].clone(),
        ]);
        *g_row = x.to_integral()?;
    }
    if !det4([&g[0], &g[1], &g[2], &g[3]]).abs().is_one() {
        return None;
    }
    let apply = |v: &LatticePoint| {
        Vec4(std::array::from_fn(|r| {
            g[r].0.iter().zip(&v.0).map(|(x, y)| x * y).sum::<Int>()
        }))
    };
    a.iter().zip(b).all(|(x, y)| apply(y) == *x).then_some(g)
}
