//! Mixed-radix enumeration of joint action and observation tuples.
//!
//! Tuples are ordered lexicographically with agent 0 as the most significant
//! component, so the rank of `(x_0, ..., x_{N-1})` is
//! `sum_i x_i * prod_{j > i} radix_j`.

use crate::error::{Error, Result};

/// Default cap on any enumerated joint space.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSpace {
    radices: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl JointSpace {
    /// Fails with `CapacityExceeded` when the product of `radices` exceeds `cap`.
    pub fn new(radices: Vec<usize>, cap: u64) -> Result<Self> {
        let mut total: u128 = 1;
        for &r in &radices {
            total = total.saturating_mul(r as u128);
        }
        if total > cap as u128 {
            let exact = radices
                .iter()
                .fold(num_bigint::BigUint::from(1u32), |acc, &r| acc * r);
            return Err(Error::capacity("joint space", exact, cap));
        }
        let mut strides = vec![1; radices.len()];
        for i in (0..radices.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * radices[i + 1];
        }
        Ok(JointSpace {
            len: total as usize,
            radices,
            strides,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn arity(&self) -> usize {
        self.radices.len()
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// `None` when the tuple has the wrong arity or a component is out of range.
    pub fn rank(&self, tuple: &[usize]) -> Option<usize> {
        if tuple.len() != self.radices.len() {
            return None;
        }
        let mut r = 0;
        for ((&x, &radix), &stride) in tuple.iter().zip(&self.radices).zip(&self.strides) {
            if x >= radix {
                return None;
            }
            r += x * stride;
        }
        Some(r)
    }

    pub fn unrank(&self, mut rank: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let x = rank / s;
                rank %= s;
                x
            })
            .collect()
    }

    pub fn iter(&self) -> JointIter<'_> {
        JointIter {
            space: self,
            current: if self.len == 0 {
                None
            } else {
                Some(vec![0; self.radices.len()])
            },
        }
    }
}

#[derive(Debug)]
pub struct JointIter<'a> {
    space: &'a JointSpace,
    current: Option<Vec<usize>>,
}

impl Iterator for JointIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        for i in (0..next.len()).rev() {
            next[i] += 1;
            if next[i] < self.space.radices[i] {
                self.current = Some(next);
                return Some(out);
            }
            next[i] = 0;
        }
        Some(out)
    }
}
