use super::{checked, LfWeights};
use crate::error::Result;

/// `F(β1 p1 + β2 p2 + β3 p3, v, x) + α (p1 - 2 p2 + p3)`.
pub fn lf_apply<F>(w: &LfWeights, f: &F, p1: f64, p2: f64, p3: f64, v: f64, x: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let [b1, b2, b3] = w.beta();
    let mean = b1 * p1 + b2 * p2 + b3 * p3;
    let base = checked(f(mean, v, x), mean, v, x)?;
    Ok(base + w.alpha() * numerical_moment(p1, p2, p3))
}

/// `p1 - 2 p2 + p3`. Fed with three consecutive second differences this is
/// `h²` times the central fourth difference at the middle node.
pub fn numerical_moment(p1: f64, p2: f64, p3: f64) -> f64 {
    p1 - 2.0 * p2 + p3
}

/// Smallest moment coefficient for which `F̂_β` is g-monotone when
/// `-γ <= ∂F/∂p <= 0`; any `α` strictly above it works.
pub fn alpha_lower_bound(w: &LfWeights, gamma: f64) -> f64 {
    let [b1, _, b3] = w.beta();
    b1.max(b3) * gamma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_abs_diff_eq;

    fn ex1(p: f64, _v: f64, x: f64) -> f64 {
        -p * p * p + x * x * x
    }

    fn ex2(p: f64, _v: f64, _x: f64) -> f64 {
        -p * p + 1.0
    }

    #[test]
    fn diagonal_reduces_to_operator() {
        let w = LfWeights::f1(2.5);
        for p in [-3.0, -0.2, 0.0, 1.7] {
            let v = lf_apply(&w, &ex1, p, p, p, 0.0, 0.4).unwrap();
            assert_abs_diff_eq!(v, ex1(p, 0.0, 0.4), epsilon = 1e-13);
        }
    }

    #[test]
    fn worked_values() {
        let v = lf_apply(&LfWeights::f1(1.5), &ex1, 1.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(v, -64.0 / 27.0 + 1.5, epsilon = 1e-14);

        let v = lf_apply(&LfWeights::f2(1.0), &ex2, 0.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn non_finite_evaluation_is_reported() {
        let bad = |p: f64, _v: f64, _x: f64| 1.0 / (p - 1.0);
        let err = lf_apply(&LfWeights::f2(1.0), &bad, 0.0, 1.0, 2.0, 0.5, 0.25).unwrap_err();
        match err {
            Error::NonFinite { p, v, x } => {
                assert_eq!((p, v, x), (1.0, 0.5, 0.25));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn moment_examples() {
        assert_eq!(numerical_moment(4.2, 4.2, 4.2), 0.0);
        // U = (1, 0, 0, 0, 0), h = 1: δ² at nodes 2, 3, 4 is (1, 0, 0)
        assert_eq!(numerical_moment(1.0, 0.0, 0.0), 1.0);
        let u = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(u[0] - 4.0 * u[1] + 6.0 * u[2] - 4.0 * u[3] + u[4], 1.0);
    }

    #[test]
    fn moment_of_quartic_matches_fourth_difference() {
        // U_j = x_j^4, h = 0.1: both sides equal 24 h² up to rounding
        let h: f64 = 0.1;
        let u = |k: i32| (0.3 + k as f64 * h).powi(4);
        let d2 = |k: i32| (u(k + 1) - 2.0 * u(k) + u(k - 1)) / (h * h);
        let moment = numerical_moment(d2(-1), d2(0), d2(1));
        let fourth = h * h * (u(-2) - 4.0 * u(-1) + 6.0 * u(0) - 4.0 * u(1) + u(2)) / h.powi(4);
        assert_abs_diff_eq!(moment, fourth, epsilon = 1e-10);
        assert_abs_diff_eq!(moment, 24.0 * h * h, epsilon = 1e-10);
    }

    #[test]
    fn alpha_bounds() {
        assert_abs_diff_eq!(alpha_lower_bound(&LfWeights::f1(0.0), 3.0), 1.0, epsilon = 1e-15);
        assert_eq!(alpha_lower_bound(&LfWeights::f2(0.0), 17.0), 0.0);
        assert_eq!(alpha_lower_bound(&LfWeights::f3(0.0), 4.0), 1.0);
    }
}
