//! Fixed-capacity coordinate vectors.
//!
//! Every chart used by the crate needs at most `n + 1 = 9` coordinates, so
//! points and tangent vectors are stored inline and are `Copy`. This keeps the
//! inner loops (projections, root finding, finite differences) free of heap
//! traffic.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Largest number of coordinates a [`Vector`] can hold.
pub const MAX_COORDS: usize = 9;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    data: [f64; MAX_COORDS],
    len: usize,
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_COORDS, "vector length {len} exceeds {MAX_COORDS}");
        Vector {
            data: [0.0; MAX_COORDS],
            len,
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Vector::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    /// The `i`-th standard basis vector of length `len`.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = Vector::zeros(len);
        v.data[i] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.as_slice().iter()
    }

    /// Euclidean dot product of the raw coordinates.
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len, other.len);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `self + t * other`
    pub fn axpy(&self, t: f64, other: &Vector) -> Vector {
        let mut out = *self;
        for (o, b) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *o += t * b;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        self.axpy(1.0, &rhs)
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        self.axpy(-1.0, &rhs)
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, rhs: Vector) {
        *self = self.axpy(1.0, &rhs);
    }
}

impl SubAssign for Vector {
    fn sub_assign(&mut self, rhs: Vector) {
        *self = self.axpy(-1.0, &rhs);
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(mut self, t: f64) -> Vector {
        for x in self.as_mut_slice() {
            *x *= t;
        }
        self
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: Vector) -> Vector {
        v * self
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Vector::from_slice(&[1.0, 2.0, 3.0]);
        let b = Vector::from_slice(&[0.5, -1.0, 2.0]);
        assert_eq!((a + b).as_slice(), &[1.5, 1.0, 5.0]);
        assert_eq!((a - b).as_slice(), &[0.5, 3.0, 1.0]);
        assert_eq!((2.0 * a).as_slice(), &[2.0, 4.0, 6.0]);
        assert_eq!(a.dot(&b), 0.5 - 2.0 + 6.0);
        assert_eq!(a.axpy(2.0, &b).as_slice(), &[2.0, 0.0, 7.0]);
        assert_eq!(Vector::basis(3, 1).as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    #[should_panic]
    fn too_long() {
        Vector::zeros(MAX_COORDS + 1);
    }
}
