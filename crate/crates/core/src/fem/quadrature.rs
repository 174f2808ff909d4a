use crate::error::{Error, Result};

/// Tensor-product Gauss-Legendre rule on the reference cell `[-1, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

fn gauss_1d(order: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let (x, w): (Vec<f64>, Vec<f64>) = match order {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let s = 2.0 * (10.0f64 / 7.0).sqrt();
            let a = (5.0 - s).sqrt() / 3.0;
            let b = (5.0 + s).sqrt() / 3.0;
            let r = 13.0 * 70f64.sqrt();
            let wa = (322.0 + r) / 900.0;
            let wb = (322.0 - r) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
        _ => return None,
    };
    Some((x, w))
}

impl QuadratureRule {
    /// `order × order` Gauss rule, exact for polynomials of degree
    /// `2 * order - 1` in each direction.
    pub fn gauss(order: usize) -> Result<Self> {
        let (x, w) = gauss_1d(order)
            .ok_or_else(|| Error::invalid(format!("Gauss order {order} unsupported (1..=5)")))?;
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (j, &y) in x.iter().enumerate() {
            for (i, &xx) in x.iter().enumerate() {
                points.push([xx, y]);
                weights.push(w[i] * w[j]);
            }
        }
        Ok(QuadratureRule { points, weights })
    }

    /// Default rule for bilinear and trilinear forms.
    pub fn standard() -> Self {
        Self::gauss(3).expect("order 3 is supported")
    }

    /// Rule used for error norms and diagnostics.
    pub fn accurate() -> Self {
        Self::gauss(5).expect("order 5 is supported")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
