//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)` and the unit
//! interval `[0, 1]`.

use crate::{Error, Result};

/// Highest polynomial degree for which rules are generated.
pub const MAX_DEGREE: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    /// Reference coordinates: `(ξ, η)` on the triangle, `s` on the interval.
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type TriangleRule = QuadratureRule<2>;
pub type EdgeRule = QuadratureRule<1>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Applies the rule to `f`, returning the reference integral.
    pub fn integrate(&self, mut f: impl FnMut(&[f64; D]) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }
}

/// Quadrature degrees used for triangles and edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureDegrees {
    pub triangle: usize,
    pub edge: usize,
}

impl QuadratureDegrees {
    pub const DEFAULT: Self = QuadratureDegrees {
        triangle: 4,
        edge: 5,
    };
    pub const ELEVATED: Self = QuadratureDegrees {
        triangle: 7,
        edge: 9,
    };
}

impl Default for QuadratureDegrees {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    Ok(EdgeRule {
        points: x.iter().map(|&x| [0.5 * (x + 1.0)]).collect(),
        weights: w.iter().map(|&w| 0.5 * w).collect(),
        degree,
    })
}

/// Triangle rule exact for polynomials of total degree `degree`, with
/// positive weights summing to 1/2. Symmetric rules are used up to degree 5,
/// collapsed Gauss products above.
pub fn tri_rule(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut orbit3 = |a: f64, w: f64| {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a], [b, a], [a, b]] {
            points.push(p);
            weights.push(0.5 * w);
        }
    };
    match degree {
        0 | 1 => {
            return Ok(TriangleRule {
                points: vec![[1.0 / 3.0; 2]],
                weights: vec![0.5],
                degree,
            });
        }
        2 => orbit3(1.0 / 6.0, 1.0 / 3.0),
        3 | 4 => {
            orbit3(0.445_948_490_915_964_9, 0.223_381_589_678_011_5);
            orbit3(0.091_576_213_509_770_74, 0.109_951_743_655_321_9);
        }
        5 => {
            orbit3(0.470_142_064_105_115_1, 0.132_394_152_788_506_2);
            orbit3(0.101_286_507_323_456_3, 0.125_939_180_544_827_2);
            points.push([1.0 / 3.0; 2]);
            weights.push(0.5 * 0.225);
        }
        _ => return Ok(collapsed_rule(degree)),
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}

/// Duffy-collapsed tensor Gauss rule; the Jacobian adds one degree in ξ.
fn collapsed_rule(degree: usize) -> TriangleRule {
    let n = degree.div_ceil(2) + 1;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let xi = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let s = 0.5 * (x[j] + 1.0);
            points.push([xi, s * (1.0 - xi)]);
            weights.push(0.25 * w[i] * w[j] * (1.0 - xi));
        }
    }
    TriangleRule {
        points,
        weights,
        degree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// ∫_T ξ^i η^j over the reference triangle.
    fn monomial_exact(i: usize, j: usize) -> f64 {
        factorial(i) * factorial(j) / factorial(i + j + 2)
    }

    #[test]
    fn triangle_exactness() {
        for degree in 0..=12 {
            let rule = tri_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 0.5, epsilon = 1e-15);
            for i in 0..=degree {
                for j in 0..=degree - i {
                    let q = rule.integrate(|p| p[0].powi(i as i32) * p[1].powi(j as i32));
                    assert_relative_eq!(
                        q,
                        monomial_exact(i, j),
                        epsilon = 1e-15,
                        max_relative = 1e-13
                    );
                }
            }
        }
    }

    #[test]
    fn edge_exactness() {
        for degree in 0..=15 {
            let rule = edge_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for k in 0..=degree {
                let q = rule.integrate(|p| p[0].powi(k as i32));
                assert_relative_eq!(q, 1.0 / (k as f64 + 1.0), max_relative = 1e-13);
            }
        }
        assert_eq!(edge_rule(5).unwrap().len(), 3);
        assert_eq!(edge_rule(9).unwrap().len(), 5);
    }

    #[test]
    fn named_examples() {
        assert_relative_eq!(
            tri_rule(4).unwrap().integrate(|_| 1.0),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            edge_rule(2).unwrap().integrate(|p| p[0] * p[0]),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        let rule = tri_rule(4).unwrap();
        assert_eq!(rule.len(), 6);
        let q = rule.integrate(|p| p[0] * p[0] * p[1] * p[1]);
        assert_relative_eq!(q, 1.0 / 180.0, epsilon = 1e-16);
    }

    #[test]
    fn unsupported_degree() {
        assert_eq!(
            tri_rule(MAX_DEGREE + 1),
            Err(Error::UnsupportedQuadrature(MAX_DEGREE + 1))
        );
        assert!(edge_rule(1000).is_err());
    }
}
