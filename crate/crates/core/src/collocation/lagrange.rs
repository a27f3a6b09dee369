//! Lagrange cardinal functions in product form.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Lagrange<T> {
    pub nodes: Vec<T>,
    w: Vec<T>,
}

impl<T: Real> Lagrange<T> {
    pub fn new(nodes: Vec<T>) -> Self {
        let w = nodes
            .iter()
            .enumerate()
            .map(|(j, &xj)| {
                let p = nodes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != j)
                    .fold(T::one(), |p, (_, &xi)| p * (xj - xi));
                T::one() / p
            })
            .collect();
        Self { nodes, w }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `l_j(t)` for all j.
    pub fn values(&self, t: T) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut p = self.w[j];
                for i in 0..n {
                    if i != j {
                        p *= t - self.nodes[i];
                    }
                }
                p
            })
            .collect()
    }

    /// `l_j'(t)` for all j.
    pub fn derivatives(&self, t: T) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut s = T::zero();
                for q in 0..n {
                    if q == j {
                        continue;
                    }
                    let mut p = T::one();
                    for i in 0..n {
                        if i != j && i != q {
                            p *= t - self.nodes[i];
                        }
                    }
                    s += p;
                }
                self.w[j] * s
            })
            .collect()
    }
}
