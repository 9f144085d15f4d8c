use super::tensor::{Scalar, Tensor};
use crate::Result;

pub const LEAKY_SLOPE: f64 = 0.2;

pub fn leaky_relu<T: Scalar>(x: &Tensor<T>, slope: T) -> Tensor<T> {
    x.map(|v| if v >= T::zero() { v } else { slope * v })
}

/// Backward of [`leaky_relu`]; the subgradient at zero takes the identity
/// branch.
pub fn leaky_relu_backward<T: Scalar>(grad_out: &Tensor<T>, x: &Tensor<T>, slope: T) -> Result<Tensor<T>> {
    grad_out.same_shape(x)?;
    let data = grad_out
        .data()
        .iter()
        .zip(x.data())
        .map(|(&g, &v)| if v >= T::zero() { g } else { slope * g })
        .collect();
    Tensor::new(x.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorkit::gradcheck::{check_gradient, random_tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn values() {
        let x = Tensor::new(&[3], vec![3.0, -1.0, 0.0]).unwrap();
        let y = leaky_relu(&x, LEAKY_SLOPE);
        assert_eq!(y.data()[0], 3.0);
        assert!((y.data()[1] + 0.2).abs() < 1e-15);
        assert_eq!(y.data()[2], 0.0);
    }

    #[test]
    fn subgradient_at_zero_is_one() {
        let x = Tensor::new(&[1], vec![0.0]).unwrap();
        let g = leaky_relu_backward(&Tensor::full(&[1], 1.0), &x, LEAKY_SLOPE).unwrap();
        assert_eq!(g.data(), &[1.0]);
    }

    #[test]
    fn gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = random_tensor(&[3, 7], &mut rng);
            let probe = random_tensor(&[3, 7], &mut rng);
            let g = leaky_relu_backward(&probe, &x, LEAKY_SLOPE).unwrap();
            check_gradient(&x, &g, |x| leaky_relu(x, LEAKY_SLOPE).dot(&probe).unwrap()).unwrap();
        }
    }
}
