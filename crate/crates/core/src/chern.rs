//! Intersection numbers of torus-invariant divisors with invariant curves
//! and surfaces, and the second Chern character `ch2(T_X) = 1/2 sum D_i^2`
//! of a smooth complete toric 4-fold.
//!
//! `D_w . V(sigma)` with `w` a generator of `sigma` is computed by moving
//! `D_w` to the linearly equivalent `D_w - div(chi^u)`, where `u` pairs to 1
//! with `v_w` and to 0 with the other generators of `sigma`. The moved
//! divisor no longer contains `V(sigma)`, so it meets it transversally.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exactlin::{self, dot, DualVector, LatticePoint, Mat, Rat, Vec4};
use crate::fan::{Cone, Fan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChernError {
    #[error("ray {w} is not a generator of {cone}")]
    NotInCone { w: usize, cone: Cone },
    #[error("ray index {0} out of range")]
    BadRay(usize),
    #[error("{0} is not a cone of the fan")]
    NotACone(Cone),
    #[error("{cone} is not a {expected}-dimensional cone")]
    WrongDimension { cone: Cone, expected: usize },
    #[error("generators of {0} are linearly dependent")]
    DependentGenerators(Cone),
    #[error("dual vector {u} does not satisfy the constraints for ray {w} on {cone}")]
    BadDual { w: usize, cone: Cone, u: String },
    #[error("fan has no 2-dimensional cones")]
    NoSurfaces,
}

/// A formal rational combination of invariant curves `V(tau)`, `tau` a
/// 3-cone. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CurveCycle(BTreeMap<Cone, Rat>);

impl CurveCycle {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, curve: Cone, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.0.entry(curve).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.0.retain(|_, c| !c.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Cone, &Rat)> {
        self.0.iter()
    }

    pub fn coefficient(&self, curve: &Cone) -> Rat {
        self.0.get(curve).cloned().unwrap_or_else(Rat::zero)
    }
}

impl fmt::Display for CurveCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (curve, c) in &self.0 {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c}) {curve}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `ch2 . S > 0` on every invariant surface.
    TwoFano,
    /// Minimum exactly zero.
    NefNotTwoFano,
    NotNef,
}

impl Classification {
    pub fn from_min(min: &Rat) -> Self {
        if min.is_positive() {
            Classification::TwoFano
        } else if min.is_zero() {
            Classification::NefNotTwoFano
        } else {
            Classification::NotNef
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::TwoFano => "two_fano",
            Classification::NefNotTwoFano => "nef_not_two_fano",
            Classification::NotNef => "not_nef",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `ch2(T_X) . V(sigma)` for every 2-cone, with the minimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ch2Report {
    pub values: BTreeMap<Cone, Rat>,
    pub min: Rat,
    /// Lexicographically first 2-cone attaining `min`.
    pub witness: Cone,
    pub classification: Classification,
}

/// Picks the dual vector `u` used to move `D_w` off `V(cone)`.
///
/// Any `u` with `<u, v_w> = 1` and `<u, v_j> = 0` for the other generators
/// gives the same intersection numbers.
pub trait DualChoice: Sync {
    fn dual(&self, fan: &Fan, w: usize, cone: &Cone) -> Result<DualVector, ChernError>;
}

/// The solution of the constraint system with free variables set to zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalDual;

impl DualChoice for CanonicalDual {
    fn dual(&self, fan: &Fan, w: usize, cone: &Cone) -> Result<DualVector, ChernError> {
        find_u(fan, w, cone)
    }
}

fn check_ray(fan: &Fan, w: usize) -> Result<(), ChernError> {
    if w == 0 || w > fan.ray_count() {
        return Err(ChernError::BadRay(w));
    }
    Ok(())
}

fn check_cone(fan: &Fan, cone: &Cone, dim: usize) -> Result<(), ChernError> {
    if cone.dim() != dim {
        return Err(ChernError::WrongDimension {
            cone: cone.clone(),
            expected: dim,
        });
    }
    if !fan.is_face(cone) {
        return Err(ChernError::NotACone(cone.clone()));
    }
    Ok(())
}

/// A `u` with `<u, v_w> = 1` and `<u, v_j> = 0` for the other generators of
/// `cone`.
pub fn find_u(fan: &Fan, w: usize, cone: &Cone) -> Result<DualVector, ChernError> {
    check_ray(fan, w)?;
    if !cone.contains(w) {
        return Err(ChernError::NotInCone {
            w,
            cone: cone.clone(),
        });
    }
    if !fan.is_face(cone) {
        return Err(ChernError::NotACone(cone.clone()));
    }
    let a = Mat::from_points(cone.indices().iter().map(|&i| fan.ray(i)))
        .expect("cone has at least one generator");
    let b: Vec<Rat> = cone
        .indices()
        .iter()
        .map(|&i| if i == w { Rat::one() } else { Rat::zero() })
        .collect();
    let sol = exactlin::solve(&a, &b).map_err(|_| ChernError::DependentGenerators(cone.clone()))?;
    if sol.rank != cone.dim() {
        return Err(ChernError::DependentGenerators(cone.clone()));
    }
    Ok(Vec4([
        sol.x[0].clone(),
        sol.x[1].clone(),
        sol.x[2].clone(),
        sol.x[3].clone(),
    ]))
}

/// Checks that `u` satisfies the constraints of [`find_u`].
pub fn check_dual(fan: &Fan, w: usize, cone: &Cone, u: &DualVector) -> Result<(), ChernError> {
    let ok = cone.indices().iter().all(|&j| {
        let expected = if j == w { Rat::one() } else { Rat::zero() };
        dot(u, fan.ray(j)) == expected
    });
    if ok {
        Ok(())
    } else {
        Err(ChernError::BadDual {
            w,
            cone: cone.clone(),
            u: u.to_string(),
        })
    }
}

/// `D_w . V(tau)` using the given `u` when `w` is a generator of `tau`.
pub fn divisor_dot_curve_using(
    fan: &Fan,
    w: usize,
    tau: &Cone,
    u: &DualVector,
) -> Result<Rat, ChernError> {
    check_ray(fan, w)?;
    check_cone(fan, tau, 3)?;
    if !tau.contains(w) {
        let hit = fan.is_max_cone(&tau.with(w));
        return Ok(if hit { Rat::one() } else { Rat::zero() });
    }
    check_dual(fan, w, tau, u)?;
    // the two maximal cones on the wall contribute, everything else misses
    Ok(fan
        .cones_on_wall(tau)
        .iter()
        .flat_map(|c| c.indices().iter().filter(|&&n| !tau.contains(n)))
        .map(|&n| -dot(u, fan.ray(n)))
        .sum())
}

/// `D_w . V(tau)` for a 3-cone `tau`.
pub fn divisor_dot_curve(fan: &Fan, w: usize, tau: &Cone) -> Result<Rat, ChernError> {
    if tau.contains(w) {
        let u = find_u(fan, w, tau)?;
        divisor_dot_curve_using(fan, w, tau, &u)
    } else {
        divisor_dot_curve_using(fan, w, tau, &DualVector::zero())
    }
}

/// `D_w . V(sigma)` as a cycle of invariant curves, using the given `u` when
/// `w` is a generator of `sigma`.
pub fn divisor_dot_surface_using(
    fan: &Fan,
    w: usize,
    sigma: &Cone,
    u: &DualVector,
) -> Result<CurveCycle, ChernError> {
    check_ray(fan, w)?;
    check_cone(fan, sigma, 2)?;
    let mut cycle = CurveCycle::zero();
    if !sigma.contains(w) {
        let tau = sigma.with(w);
        if fan.is_face(&tau) {
            cycle.add_term(tau, Rat::one());
        }
        return Ok(cycle);
    }
    check_dual(fan, w, sigma, u)?;
    for n in (1..=fan.ray_count()).filter(|&n| !sigma.contains(n)) {
        let tau = sigma.with(n);
        if fan.is_face(&tau) {
            cycle.add_term(tau, -dot(u, fan.ray(n)));
        }
    }
    Ok(cycle)
}

/// `D_w . V(sigma)` for a 2-cone `sigma`.
pub fn divisor_dot_surface(fan: &Fan, w: usize, sigma: &Cone) -> Result<CurveCycle, ChernError> {
    if sigma.contains(w) {
        let u = find_u(fan, w, sigma)?;
        divisor_dot_surface_using(fan, w, sigma, &u)
    } else {
        divisor_dot_surface_using(fan, w, sigma, &DualVector::zero())
    }
}

/// Intersection numbers on one fan, with `D_w . V(tau)` cached per
/// `(w, tau)`.
///
/// The cache is write-once per entry and safe to share across threads.
pub struct Intersections<'f, D: DualChoice = CanonicalDual> {
    fan: &'f Fan,
    choice: D,
    wall_index: HashMap<Cone, usize>,
    memo: Vec<OnceLock<Rat>>,
}

impl<'f> Intersections<'f, CanonicalDual> {
    pub fn new(fan: &'f Fan) -> Self {
        Self::with_choice(fan, CanonicalDual)
    }
}

impl<'f, D: DualChoice> Intersections<'f, D> {
    pub fn with_choice(fan: &'f Fan, choice: D) -> Self {
        let wall_index: HashMap<Cone, usize> = fan
            .walls()
            .cloned()
            .enumerate()
            .map(|(i, c)| (c, i))
            .collect();
        let memo = (0..wall_index.len() * fan.ray_count())
            .map(|_| OnceLock::new())
            .collect();
        Intersections {
            fan,
            choice,
            wall_index,
            memo,
        }
    }

    pub fn fan(&self) -> &Fan {
        self.fan
    }

    fn dual_for(&self, w: usize, cone: &Cone) -> Result<DualVector, ChernError> {
        if cone.contains(w) {
            self.choice.dual(self.fan, w, cone)
        } else {
            Ok(DualVector::zero())
        }
    }

    pub fn divisor_dot_curve(&self, w: usize, tau: &Cone) -> Result<Rat, ChernError> {
        check_ray(self.fan, w)?;
        let Some(&t) = self.wall_index.get(tau) else {
            check_cone(self.fan, tau, 3)?;
            unreachable!("3-cone missing from wall index");
        };
        let slot = &self.memo[t * self.fan.ray_count() + (w - 1)];
        if let Some(v) = slot.get() {
            return Ok(v.clone());
        }
        let u = self.dual_for(w, tau)?;
        let value = divisor_dot_curve_using(self.fan, w, tau, &u)?;
        Ok(slot.get_or_init(|| value).clone())
    }

    pub fn divisor_dot_surface(&self, w: usize, sigma: &Cone) -> Result<CurveCycle, ChernError> {
        check_ray(self.fan, w)?;
        let u = self.dual_for(w, sigma)?;
        divisor_dot_surface_using(self.fan, w, sigma, &u)
    }

    /// `D_w^2 . V(sigma)`.
    pub fn self_intersection_on_surface(&self, w: usize, sigma: &Cone) -> Result<Rat, ChernError> {
        let cycle = self.divisor_dot_surface(w, sigma)?;
        let mut total = Rat::zero();
        for (tau, c) in cycle.terms() {
            total += c * self.divisor_dot_curve(w, tau)?;
        }
        Ok(total)
    }

    /// `ch2(T_X) . V(sigma) = 1/2 sum_w D_w^2 . V(sigma)`.
    pub fn ch2_dot_surface(&self, sigma: &Cone) -> Result<Rat, ChernError> {
        check_cone(self.fan, sigma, 2)?;
        let total = (1..=self.fan.ray_count()).try_fold(Rat::zero(), |acc, w| {
            Ok::<_, ChernError>(acc + self.self_intersection_on_surface(w, sigma)?)
        })?;
        Ok(total / Rat::from_integer(2.into()))
    }

    /// `-K_X . V(tau) = sum_w D_w . V(tau)`.
    pub fn anticanonical_degree(&self, tau: &Cone) -> Result<Rat, ChernError> {
        self.curve_intersections(tau).map(|v| v.into_iter().sum())
    }

    /// `(D_1 . V(tau), ..., D_d . V(tau))`, the relation among the rays
    /// given by the curve class of `V(tau)`.
    pub fn curve_intersections(&self, tau: &Cone) -> Result<Vec<Rat>, ChernError> {
        (1..=self.fan.ray_count())
            .map(|w| self.divisor_dot_curve(w, tau))
            .collect()
    }

    /// Evaluates every 2-cone, in parallel.
    pub fn classify(&self) -> Result<Ch2Report, ChernError> {
        let cones: Vec<&Cone> = self.fan.two_cones().collect();
        let values: Vec<Rat> = cones
            .par_iter()
            .map(|s| self.ch2_dot_surface(s))
            .collect::<Result<_, _>>()?;
        let values: BTreeMap<Cone, Rat> = cones.into_iter().cloned().zip(values).collect();
        let (witness, min) = values
            .iter()
            .fold(None::<(&Cone, &Rat)>, |best, (c, v)| match best {
                Some((_, m)) if m <= v => best,
                _ => Some((c, v)),
            })
            .map(|(c, v)| (c.clone(), v.clone()))
            .ok_or(ChernError::NoSurfaces)?;
        Ok(Ch2Report {
            classification: Classification::from_min(&min),
            values,
            min,
            witness,
        })
    }
}

pub fn ch2_dot_surface(fan: &Fan, sigma: &Cone) -> Result<Rat, ChernError> {
    Intersections::new(fan).ch2_dot_surface(sigma)
}

pub fn anticanonical_degree(fan: &Fan, tau: &Cone) -> Result<Rat, ChernError> {
    Intersections::new(fan).anticanonical_degree(tau)
}

pub fn classify(fan: &Fan) -> Result<Ch2Report, ChernError> {
    Intersections::new(fan).classify()
}

/// `sum_w (D_w . V(tau)) v_w`, zero for every wall of a smooth complete fan.
pub fn wall_relation_residual(intersections: &[Rat], rays: &[LatticePoint]) -> DualVector {
    intersections
        .iter()
        .zip(rays)
        .fold(DualVector::zero(), |acc, (a, v)| {
            &acc + &v.to_rational().scale(a)
        })
}
