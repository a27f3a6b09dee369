//! Reference node sets on [-1, 1] and Gauss quadrature.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{config, Result};
use crate::scalar::Real;

/// Node families for differentiation windows and collocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeFamily {
    /// Chebyshev points of the second kind, endpoints included.
    Chebyshev2,
    /// Left Gauss–Radau points, -1 included.
    Radau,
    /// Gauss–Legendre points, interior only.
    GaussLegendre,
    /// Equally spaced points, endpoints included.
    Equidistant,
}

impl NodeFamily {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cheb2" | "chebyshev2" | "chebyshev" => Some(Self::Chebyshev2),
            "radau" => Some(Self::Radau),
            "gauss" | "gauss-legendre" | "legendre" => Some(Self::GaussLegendre),
            "equi" | "equidistant" | "uniform" => Some(Self::Equidistant),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Chebyshev2 => "cheb2",
            Self::Radau => "radau",
            Self::GaussLegendre => "gauss",
            Self::Equidistant => "equidistant",
        }
    }
}

/// Chebyshev points of the second kind in increasing order.
///
/// Uses the sine form so that the set is exactly symmetric and the middle
/// point of an odd set is exactly zero.
pub fn chebyshev2<T: Real>(m: usize) -> Vec<T> {
    let pi = T::pi();
    let den = T::from_count(2 * (m - 1));
    (1..=m)
        .map(|i| {
            let num = T::from_count(2 * i) - T::from_count(m + 1);
            (pi * num / den).sin()
        })
        .collect()
}

pub fn equidistant<T: Real>(m: usize) -> Vec<T> {
    let two = T::lit(2.0);
    let den = T::from_count(m - 1);
    (0..m)
        .map(|i| {
            if i == m - 1 {
                T::one()
            } else {
                -T::one() + two * T::from_count(i) / den
            }
        })
        .collect()
}

/// Nodes and weights of the n-point Gauss–Jacobi rule for the weight
/// (1-x)^alpha (1+x)^beta, via the eigenvalues of the Jacobi matrix.
pub fn gauss_jacobi<T: Real>(n: usize, alpha: f64, beta: f64) -> (Vec<T>, Vec<T>) {
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let diag = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        jac[(i, i)] = diag;
        if i + 1 < n {
            let k = (i + 1) as f64;
            let s = 2.0 * k + ab;
            let b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
            let b = b2.sqrt();
            jac[(i, i + 1)] = b;
            jac[(i + 1, i)] = b;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // polish the eigenvalues with two Newton steps on P_n^(alpha, beta)
    for p in &mut pairs {
        for _ in 0..2 {
            let (v, dv) = jacobi_poly(n, alpha, beta, p.0);
            if dv != 0.0 {
                p.0 -= v / dv;
            }
        }
    }
    if n % 2 == 1 && alpha == beta {
        // symmetric rule: pin the middle node
        pairs[n / 2].0 = 0.0;
    }
    if alpha == beta {
        for i in 0..n / 2 {
            let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
            let w = 0.5 * (pairs[n - 1 - i].1 + pairs[i].1);
            pairs[i] = (-x, w);
            pairs[n - 1 - i] = (x, w);
        }
    }
    pairs
        .into_iter()
        .map(|(x, w)| (T::lit(x), T::lit(w)))
        .unzip()
}

/// Value and derivative of the Jacobi polynomial P_n^(alpha, beta) at x.
fn jacobi_poly(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let eval = |n: usize, a: f64, b: f64| -> f64 {
        let mut p0 = 1.0;
        if n == 0 {
            return p0;
        }
        let mut p1 = 0.5 * (a - b + (a + b + 2.0) * x);
        for k in 2..=n {
            let k = k as f64;
            let c = 2.0 * k + a + b;
            let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
            let a2 = (c - 1.0) * (a * a - b * b);
            let a3 = (c - 2.0) * (c - 1.0) * c;
            let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
            let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let v = eval(n, alpha, beta);
    let dv = if n == 0 { 0.0 } else { 0.5 * (n as f64 + alpha + beta + 1.0) * eval(n - 1, alpha + 1.0, beta + 1.0) };
    (v, dv)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Left Gauss–Radau nodes on [-1, 1], starting with -1.
pub fn radau_left<T: Real>(m: usize) -> Vec<T> {
    let mut x = vec![-T::one()];
    x.extend(gauss_jacobi::<T>(m - 1, 0.0, 1.0).0);
    x
}

/// Gauss–Lobatto nodes on [-1, 1], endpoints included.
pub fn lobatto<T: Real>(m: usize) -> Vec<T> {
    let mut x = vec![-T::one()];
    x.extend(gauss_jacobi::<T>(m - 2, 1.0, 1.0).0);
    x.push(T::one());
    x
}

/// Reference nodes of a family on [-1, 1].
pub fn reference_nodes<T: Real>(family: NodeFamily, m: usize) -> Result<Vec<T>> {
    if m < 2 {
        return config(format!("node count must be at least 2, got {m}"));
    }
    Ok(match family {
        NodeFamily::Chebyshev2 => chebyshev2(m),
        NodeFamily::Equidistant => equidistant(m),
        NodeFamily::GaussLegendre => gauss_legendre(m).0,
        NodeFamily::Radau => radau_left(m),
    })
}

// Lanczos approximation, only ever called with small positive arguments.
fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre(n: usize, x: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, x);
        if n == 0 {
            return p0;
        }
        for k in 1..n {
            let k = k as f64;
            let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn cheb2_three_points() {
        assert_eq!(chebyshev2::<f64>(3), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn gauss_legendre_roots_and_weights() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre::<f64>(n);
            for xi in &x {
                assert!(legendre(n, *xi).abs() < 1e-14, "n={n} x={xi} {:e}", legendre(n, *xi));
            }
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-14);
            // exact for x^(2n-2)
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * n as i32 - 2)).sum();
            assert!((q - 2.0 / (2 * n - 1) as f64).abs() < 1e-14);
        }
        let (x, _) = gauss_legendre::<f64>(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn radau_is_exact_to_degree_2m_minus_2() {
        // weights from the Lagrange basis integrals, checked against monomials
        for m in 2..=8 {
            let x = radau_left::<f64>(m);
            assert_eq!(x[0], -1.0);
            // roots of (P_{m-1} + P_m)/(1+x)
            for xi in &x[1..] {
                let v = legendre(m - 1, *xi) + legendre(m, *xi);
                assert!(v.abs() < 1e-13, "m={m}");
            }
        }
    }

    #[test]
    fn lobatto_interior_are_derivative_roots() {
        for m in 3..=9 {
            let x = lobatto::<f64>(m);
            let n = m - 1;
            for xi in &x[1..m - 1] {
                let h = 1e-6;
                let d = (legendre(n, xi + h) - legendre(n, xi - h)) / (2.0 * h);
                assert!(d.abs() < 1e-6 * (n * n) as f64, "m={m}");
            }
        }
    }

    #[test]
    fn gamma_small_values() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-14);
        assert!((gamma(3.0) - 2.0).abs() < 1e-13);
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
