//! Exact integer and rational linear algebra for four-dimensional lattices.
//!
//! Everything here is arbitrary precision. Rationals are `num_rational`
//! ratios, which are normalized on construction (positive denominator,
//! coprime parts), so every value leaving this module is in lowest terms.

use std::fmt;
use std::ops::{Add, Index, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub type Int = BigInt;
pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearError {
    #[error("linear system has no solution")]
    Inconsistent,
    #[error("dimension mismatch: matrix has {rows} rows, right-hand side has {rhs}")]
    DimensionMismatch { rows: usize, rhs: usize },
    #[error("matrix must have at least one row and one column, with rows of equal length")]
    BadShape,
}

/// A fixed-length 4-vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vec4<T>(pub [T; 4]);

/// A point of the lattice `N = Z^4`, e.g. a ray generator.
pub type LatticePoint = Vec4<Int>;

/// A rational point of the dual space `M_Q`.
pub type DualVector = Vec4<Rat>;

impl<T> Index<usize> for Vec4<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Clone + Zero> Vec4<T> {
    pub fn zero() -> Self {
        Vec4([T::zero(), T::zero(), T::zero(), T::zero()])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, k: &T) -> Self
    where
        for<'a> &'a T: std::ops::Mul<&'a T, Output = T>,
    {
        Vec4(std::array::from_fn(|i| &self.0[i] * k))
    }
}

impl<T> Add for &Vec4<T>
where
    for<'a> &'a T: Add<&'a T, Output = T>,
{
    type Output = Vec4<T>;

    fn add(self, rhs: Self) -> Vec4<T> {
        Vec4(std::array::from_fn(|i| &self.0[i] + &rhs.0[i]))
    }
}

impl<T> Sub for &Vec4<T>
where
    for<'a> &'a T: Sub<&'a T, Output = T>,
{
    type Output = Vec4<T>;

    fn sub(self, rhs: Self) -> Vec4<T> {
        Vec4(std::array::from_fn(|i| &self.0[i] - &rhs.0[i]))
    }
}

impl<T> Neg for &Vec4<T>
where
    for<'a> &'a T: Neg<Output = T>,
{
    type Output = Vec4<T>;

    fn neg(self) -> Vec4<T> {
        Vec4(std::array::from_fn(|i| -&self.0[i]))
    }
}

impl<T: fmt::Display> fmt::Display for Vec4<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

impl LatticePoint {
    pub fn from_i64(coords: [i64; 4]) -> Self {
        Vec4(coords.map(Int::from))
    }

    /// Standard basis vector `e_{axis+1}`.
    pub fn unit(axis: usize) -> Self {
        let mut v = Self::zero();
        v.0[axis] = Int::one();
        v
    }

    /// Nonzero with coprime coordinates.
    pub fn is_primitive(&self) -> bool {
        let g = self.0.iter().fold(Int::zero(), |g, c| g.gcd(c));
        g.is_one()
    }

    pub fn to_rational(&self) -> DualVector {
        Vec4(self.0.clone().map(Rat::from_integer))
    }
}

impl DualVector {
    /// The integral point equal to `self`, if every coordinate is an integer.
    pub fn to_integral(&self) -> Option<LatticePoint> {
        if self.0.iter().all(|c| c.is_integer()) {
            Some(Vec4(self.0.clone().map(|c| c.to_integer())))
        } else {
            None
        }
    }
}

/// The pairing `<u, v>` between `M_Q` and `N`.
pub fn dot(u: &DualVector, v: &LatticePoint) -> Rat {
    u.0.iter().zip(&v.0).fold(Rat::zero(), |acc, (a, b)| {
        acc + a * Rat::from_integer(b.clone())
    })
}

/// Determinant of the 4x4 integer matrix with the given rows.
///
/// Fraction-free (Bareiss) elimination, so every intermediate stays integral.
pub fn det4(rows: [&LatticePoint; 4]) -> Int {
    let mut m: Vec<Vec<Int>> = rows.iter().map(|r| r.0.to_vec()).collect();
    let n = 4;
    let mut sign = Int::one();
    let mut prev = Int::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return Int::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = t / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// A dense rational matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl Mat {
    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, LinearError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(LinearError::BadShape);
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Rows are the given lattice points.
    pub fn from_points<'a>(
        points: impl IntoIterator<Item = &'a LatticePoint>,
    ) -> Result<Self, LinearError> {
        Self::from_rows(
            points
                .into_iter()
                .map(|p| p.0.iter().cloned().map(Rat::from_integer).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> Mat {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c).clone());
            }
        }
        Mat {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn mul_vec(&self, x: &[Rat]) -> Vec<Rat> {
        assert_eq!(x.len(), self.cols, "vector length must equal column count");
        (0..self.rows)
            .map(|r| (0..self.cols).fold(Rat::zero(), |acc, c| acc + self.get(r, c) * &x[c]))
            .collect()
    }
}

/// A particular solution of `A x = b` together with `rank(A)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub x: Vec<Rat>,
    pub rank: usize,
}

impl Solution {
    /// Dimension of the affine solution space.
    pub fn nullity(&self) -> usize {
        self.x.len() - self.rank
    }
}

struct Echelon {
    /// Reduced row echelon form of the augmented matrix, `cols + extra` wide.
    rows: Vec<Vec<Rat>>,
    pivots: Vec<usize>,
}

/// Gauss-Jordan elimination over the first `cols` columns. Pivots are chosen
/// left to right, taking the first row with a nonzero entry.
fn reduce(mut rows: Vec<Vec<Rat>>, cols: usize) -> Echelon {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let (pivot_row, row) = if i < r {
                    let (a, b) = rows.split_at_mut(r);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = rows.split_at_mut(i);
                    (&a[r], &mut b[0])
                };
                for (v, p) in row.iter_mut().zip(pivot_row) {
                    *v = &*v - &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Echelon { rows, pivots }
}

/// Solves `A x = b` exactly.
///
/// When the system is underdetermined the returned solution sets every free
/// variable to zero, so the result is deterministic.
pub fn solve(a: &Mat, b: &[Rat]) -> Result<Solution, LinearError> {
    if b.len() != a.rows {
        return Err(LinearError::DimensionMismatch {
            rows: a.rows,
            rhs: b.len(),
        });
    }
    let aug: Vec<Vec<Rat>> = (0..a.rows)
        .map(|r| {
            let mut row: Vec<Rat> = (0..a.cols).map(|c| a.get(r, c).clone()).collect();
            row.push(b[r].clone());
            row
        })
        .collect();
    let ech = reduce(aug, a.cols);
    let rank = ech.pivots.len();
    if ech.rows[rank..].iter().any(|row| !row[a.cols].is_zero()) {
        return Err(LinearError::Inconsistent);
    }
    let mut x = vec![Rat::zero(); a.cols];
    for (row, &c) in ech.rows.iter().zip(&ech.pivots) {
        x[c] = row[a.cols].clone();
    }
    debug_assert_eq!(a.mul_vec(&x), b);
    Ok(Solution { x, rank })
}

/// A basis of `{x : A x = 0}`, one vector per free column.
pub fn null_space(a: &Mat) -> Vec<Vec<Rat>> {
    let rows: Vec<Vec<Rat>> = (0..a.rows)
        .map(|r| (0..a.cols).map(|c| a.get(r, c).clone()).collect())
        .collect();
    let ech = reduce(rows, a.cols);
    (0..a.cols)
        .filter(|c| !ech.pivots.contains(c))
        .map(|free| {
            let mut v = vec![Rat::zero(); a.cols];
            v[free] = Rat::one();
            for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
                v[p] = -row[free].clone();
            }
            v
        })
        .collect()
}

/// Rank of `A`.
pub fn rank(a: &Mat) -> usize {
    a.cols - null_space(a).len()
}
