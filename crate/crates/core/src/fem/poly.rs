//! Nodal polynomial bases over reference elements.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};

/// A family of polynomials `h_l(x) = Σ_j c[l][j] · x^e_j` sharing one monomial set, fitted so that
/// `h_l(node_m) = δ_lm`.
#[derive(Debug, Clone)]
pub struct NodalBasis<const D: usize> {
    exponents: Vec<[u8; D]>,
    nodes: Vec<[f64; D]>,
    /// row-major, `nodes.len() × exponents.len()`
    coeffs: Vec<f64>,
}

impl<const D: usize> NodalBasis<D> {
    /// Solves the nodal interpolation system. Requires as many nodes as monomials.
    pub fn fit(exponents: Vec<[u8; D]>, nodes: Vec<[f64; D]>) -> Result<Self> {
        let n = nodes.len();
        assert_eq!(n, exponents.len(), "node and monomial counts differ");
        // V[m][j] = x_m^e_j ; coefficients C satisfy V Cᵀ = I
        let v = Mat::<f64>::from_fn(n, n, |m, j| monomial(&exponents[j], &nodes[m]));
        let lu = v.partial_piv_lu();
        let x = lu.solve(Mat::<f64>::identity(n, n));
        let mut coeffs = vec![0.0; n * n];
        for l in 0..n {
            for j in 0..n {
                coeffs[l * n + j] = x[(j, l)];
            }
        }
        let basis = Self {
            exponents,
            nodes,
            coeffs,
        };
        // reject a singular system instead of returning garbage
        for l in 0..n {
            for m in 0..n {
                let target = if l == m { 1.0 } else { 0.0 };
                let got = basis.value(l, &basis.nodes[m]);
                if !got.is_finite() || (got - target).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(
                        "nodal interpolation system is singular".into(),
                    ));
                }
            }
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn exponents(&self) -> &[[u8; D]] {
        &self.exponents
    }

    pub fn nodes(&self) -> &[[f64; D]] {
        &self.nodes
    }

    /// Coefficients of `h_l` in monomial order.
    pub fn coefficients(&self, l: usize) -> &[f64] {
        let n = self.exponents.len();
        &self.coeffs[l * n..(l + 1) * n]
    }

    pub fn value(&self, l: usize, x: &[f64; D]) -> f64 {
        self.coefficients(l)
            .iter()
            .zip(&self.exponents)
            .map(|(c, e)| c * monomial(e, x))
            .sum()
    }

    pub fn gradient(&self, l: usize, x: &[f64; D]) -> [f64; D] {
        let mut g = [0.0; D];
        for (c, e) in self.coefficients(l).iter().zip(&self.exponents) {
            for (axis, gi) in g.iter_mut().enumerate() {
                if e[axis] == 0 {
                    continue;
                }
                let mut d = *e;
                d[axis] -= 1;
                *gi += c * f64::from(e[axis]) * monomial(&d, x);
            }
        }
        g
    }

    /// `∂_axis h_l` as `(coefficient, exponent)` terms.
    pub fn derivative_terms(&self, l: usize, axis: usize) -> Vec<(f64, [u8; D])> {
        self.coefficients(l)
            .iter()
            .zip(&self.exponents)
            .filter(|(_, e)| e[axis] > 0)
            .map(|(c, e)| {
                let mut d = *e;
                d[axis] -= 1;
                (c * f64::from(e[axis]), d)
            })
            .collect()
    }

    /// `h_l` as `(coefficient, exponent)` terms.
    pub fn terms(&self, l: usize) -> Vec<(f64, [u8; D])> {
        self.coefficients(l)
            .iter()
            .copied()
            .zip(self.exponents.iter().copied())
            .collect()
    }
}

pub fn monomial<const D: usize>(e: &[u8; D], x: &[f64; D]) -> f64 {
    let mut p = 1.0;
    for k in 0..D {
        p *= x[k].powi(i32::from(e[k]));
    }
    p
}

/// ∫∫ u^a v^b over the reference triangle {u, v ≥ 0, u + v ≤ 1}: a!·b!/(a+b+2)!.
pub fn triangle_monomial_integral(a: u32, b: u32) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 2)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Integral over the reference triangle of the product of two polynomials given as terms.
pub fn triangle_product_integral(p: &[(f64, [u8; 2])], q: &[(f64, [u8; 2])]) -> f64 {
    let mut s = 0.0;
    for (cp, ep) in p {
        for (cq, eq) in q {
            s += cp
                * cq
                * triangle_monomial_integral(u32::from(ep[0] + eq[0]), u32::from(ep[1] + eq[1]));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_rule_small_cases() {
        assert!((triangle_monomial_integral(0, 0) - 0.5).abs() < 1e-15);
        assert!((triangle_monomial_integral(1, 0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((triangle_monomial_integral(1, 1) - 1.0 / 24.0).abs() < 1e-15);
        assert!((triangle_monomial_integral(2, 0) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn singular_layout_is_reported() {
        // two coincident nodes cannot be interpolated
        let r = NodalBasis::fit(vec![[0u8], [1]], vec![[0.5], [0.5]]);
        assert!(r.is_err());
    }

    #[test]
    fn one_dimensional_linear_basis() {
        let b = NodalBasis::fit(vec![[0u8], [1]], vec![[0.0], [1.0]]).unwrap();
        assert!((b.value(0, &[0.25]) - 0.75).abs() < 1e-15);
        assert!((b.gradient(1, &[0.3])[0] - 1.0).abs() < 1e-15);
    }
}
