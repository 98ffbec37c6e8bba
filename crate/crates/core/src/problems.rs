//! Boundary value problems `F(u_xx, u, x) = 0` on `(a, b)` and the five
//! benchmark problems.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::verify::SampleBox;
use crate::operators::EllipticityBounds;

/// `F(p, v, x)` with `p` the second-derivative slot and `v` the value slot.
pub type OperatorFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Problem {
    name: String,
    a: f64,
    b: f64,
    f: OperatorFn,
    u_a: f64,
    u_b: f64,
    exact: Option<ScalarFn>,
    alternate_exact: Option<ScalarFn>,
    gamma_hint: Option<EllipticityBounds>,
    monotone_in_p: bool,
    sample_box: Option<SampleBox>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &(self.a, self.b))
            .field("u_a", &self.u_a)
            .field("u_b", &self.u_b)
            .field("has_exact", &self.exact.is_some())
            .field("has_alternate_exact", &self.alternate_exact.is_some())
            .field("gamma_hint", &self.gamma_hint)
            .field("monotone_in_p", &self.monotone_in_p)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(name: impl Into<String>, a: f64, b: f64, f: F, u_a: f64, u_b: f64) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidConfig(format!("problem domain needs a < b, got ({a}, {b})")));
        }
        if !(u_a.is_finite() && u_b.is_finite()) {
            return Err(Error::InvalidConfig("boundary data must be finite".into()));
        }
        Ok(Self {
            name: name.into(),
            a,
            b,
            f: Arc::new(f),
            u_a,
            u_b,
            exact: None,
            alternate_exact: None,
            gamma_hint: None,
            monotone_in_p: false,
            sample_box: None,
        })
    }

    fn check_boundary(&self, u: &ScalarFn) -> Result<()> {
        let (ga, gb) = (u(self.a), u(self.b));
        if (ga - self.u_a).abs() > 1e-12 || (gb - self.u_b).abs() > 1e-12 {
            return Err(Error::BoundaryMismatch {
                u_a: self.u_a,
                u_b: self.u_b,
                got_a: ga,
                got_b: gb,
            });
        }
        Ok(())
    }

    /// Attaches an exact solution; it must match the boundary data to `1e-12`.
    pub fn with_exact(mut self, u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let u: ScalarFn = Arc::new(u);
        self.check_boundary(&u)?;
        self.exact = Some(u);
        Ok(self)
    }

    /// A second classical solution, for problems that are not uniquely solvable.
    pub fn with_alternate_exact(mut self, u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let u: ScalarFn = Arc::new(u);
        self.check_boundary(&u)?;
        self.alternate_exact = Some(u);
        Ok(self)
    }

    pub fn with_gamma_hint(mut self, gamma: EllipticityBounds) -> Self {
        self.gamma_hint = Some(gamma);
        self
    }

    /// Declares `F` nonincreasing in `p` everywhere, which lets the Godunov
    /// operators compare interval endpoints instead of sampling.
    pub fn monotone_in_p(mut self, yes: bool) -> Self {
        self.monotone_in_p = yes;
        self
    }

    /// Box on which the operator properties are meant to be probed.
    pub fn with_sample_box(mut self, b: SampleBox) -> Self {
        self.sample_box = Some(b);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn boundary(&self) -> (f64, f64) {
        (self.u_a, self.u_b)
    }

    pub fn f(&self, p: f64, v: f64, x: f64) -> f64 {
        (self.f)(p, v, x)
    }

    pub fn operator(&self) -> &(dyn Fn(f64, f64, f64) -> f64 + Send + Sync) {
        &*self.f
    }

    pub fn exact(&self) -> Option<&(dyn Fn(f64) -> f64 + Send + Sync)> {
        self.exact.as_deref()
    }

    pub fn alternate_exact(&self) -> Option<&(dyn Fn(f64) -> f64 + Send + Sync)> {
        self.alternate_exact.as_deref()
    }

    pub fn gamma_hint(&self) -> Option<EllipticityBounds> {
        self.gamma_hint
    }

    pub fn is_monotone_in_p(&self) -> bool {
        self.monotone_in_p
    }

    pub fn sample_box(&self) -> Option<SampleBox> {
        self.sample_box
    }
}

/// `−u_xx³ + x³ = 0` on `(−1, 1)`, `u = x³/6`.
pub fn example1() -> Problem {
    Problem::new("example1", -1.0, 1.0, |p, _v, x| -p * p * p + x * x * x, -1.0 / 6.0, 1.0 / 6.0)
        .and_then(|p| p.with_exact(|x| x * x * x / 6.0))
        .expect("example1 is well formed")
        .monotone_in_p(true)
        .with_sample_box(SampleBox::new((-1.2, 1.2), (-0.2, 0.2), (-1.0, 1.0)).expect("valid box"))
}

/// `−u_xx² + 1 = 0` on `(0, 1)` with the two classical solutions
/// `u⁺ = x²/2` (convex, the viscosity solution) and `u⁻ = −x²/2 + x`.
pub fn example2() -> Problem {
    Problem::new("example2", 0.0, 1.0, |p, _v, _x| -p * p + 1.0, 0.0, 0.5)
        .and_then(|p| p.with_exact(|x| 0.5 * x * x))
        .and_then(|p| p.with_alternate_exact(|x| -0.5 * x * x + x))
        .expect("example2 is well formed")
        .with_sample_box(SampleBox::new((0.5, 1.5), (0.0, 0.5), (0.0, 1.0)).expect("valid box"))
}

/// Source of the two-control Bellman problem; `S(0) = 0`.
pub fn example3_source(x: f64) -> f64 {
    if x < 0.0 {
        12.0 * x * x
    } else {
        -24.0 * x * x
    }
}

/// `min over A ∈ {1, 2} of (−A u_xx − S(x)) = 0` on `(−1, 1)`, `u = x|x|³`.
pub fn example3() -> Problem {
    Problem::new(
        "example3",
        -1.0,
        1.0,
        |p, _v, x| {
            bellman_min_finite(&[1.0, 2.0], p, example3_source(x))
                .expect("nonempty controls")
                .0
        },
        -1.0,
        1.0,
    )
    .and_then(|p| p.with_exact(|x| x * x.abs().powi(3)))
    .expect("example3 is well formed")
    .monotone_in_p(true)
    .with_gamma_hint(EllipticityBounds::new(2.0).expect("positive"))
    .with_sample_box(SampleBox::new((-13.0, 13.0), (-1.0, 1.0), (-1.0, 1.0)).expect("valid box"))
}

/// `inf over θ ∈ [−1, 1] of (−θp + θ²v + x⁻²)` in closed form.
pub fn example4_operator(p: f64, v: f64, x: f64) -> f64 {
    let src = 1.0 / (x * x);
    if v > 0.0 {
        let theta = (p / (2.0 * v)).clamp(-1.0, 1.0);
        -theta * p + theta * theta * v + src
    } else if v == 0.0 {
        -p.abs() + src
    } else {
        // concave in θ: the infimum sits at θ = ±1
        v - p.abs() + src
    }
}

/// `inf over θ ∈ [−1, 1] of (−θ u_xx + θ² u + x⁻²) = 0` on `(2, 4)`, `u = x²`.
pub fn example4() -> Problem {
    Problem::new("example4", 2.0, 4.0, example4_operator, 4.0, 16.0)
        .and_then(|p| p.with_exact(|x| x * x))
        .expect("example4 is well formed")
        .with_sample_box(SampleBox::new((1.0, 3.0), (3.0, 17.0), (2.0, 4.0)).expect("valid box"))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `−u_xx³ + 8 sign(x) = 0` on `(−1, 1)`, `u = x|x|`, with `sign(0) = 0`.
pub fn example5() -> Problem {
    Problem::new("example5", -1.0, 1.0, |p, _v, x| -p * p * p + 8.0 * sign(x), -1.0, 1.0)
        .and_then(|p| p.with_exact(|x| x * x.abs()))
        .expect("example5 is well formed")
        .monotone_in_p(true)
        .with_sample_box(SampleBox::new((-2.2, 2.2), (-1.0, 1.0), (-1.0, 1.0)).expect("valid box"))
}

pub const PROBLEM_NAMES: [&str; 5] = ["example1", "example2", "example3", "example4", "example5"];

pub fn by_name(name: &str) -> Result<Problem> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "example3" => Ok(example3()),
        "example4" => Ok(example4()),
        "example5" => Ok(example5()),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

/// Minimum of `−A·p − source` over the coefficients and the (0-based) index
/// of the first minimiser.
pub fn bellman_min_finite(coeffs: &[f64], p: f64, source: f64) -> Result<(f64, usize)> {
    let mut it = coeffs.iter().enumerate();
    let (_, &a0) = it.next().ok_or(Error::EmptyControls)?;
    let mut best = (-a0 * p - source, 0);
    for (k, &a) in it {
        let val = -a * p - source;
        if val < best.0 {
            best = (val, k);
        }
    }
    Ok(best)
}

/// Named initial guesses: `example4-cubic` is `(3/14)x³ + 16/7`, which
/// matches the Example 4 boundary data.
pub fn custom_guess(name: &str) -> Option<fn(f64) -> f64> {
    match name {
        "example4-cubic" => Some(|x| 3.0 / 14.0 * x * x * x + 16.0 / 7.0),
        _ => None,
    }
}

pub const CUSTOM_GUESS_NAMES: [&str; 1] = ["example4-cubic"];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example1_values() {
        let p = example1();
        assert_eq!(p.f(1.0, 0.0, 1.0), 0.0);
        assert_eq!(p.f(0.0, 0.0, 0.0), 0.0);
        assert_abs_diff_eq!(p.exact().unwrap()(1.0), 1.0 / 6.0);
        assert!(p.is_monotone_in_p());
    }

    #[test]
    fn example2_values() {
        let p = example2();
        assert_eq!(p.f(1.0, 0.3, 0.2), 0.0);
        assert_eq!(p.f(-1.0, 0.3, 0.2), 0.0);
        assert_eq!(p.f(0.0, 0.0, 0.0), 1.0);
        assert_eq!(p.exact().unwrap()(1.0), 0.5);
        assert_eq!(p.alternate_exact().unwrap()(1.0), 0.5);
        assert_eq!(p.alternate_exact().unwrap()(0.0), 0.0);
        assert!(!p.is_monotone_in_p());
    }

    #[test]
    fn example3_values() {
        let p = example3();
        assert_abs_diff_eq!(p.f(-3.0, 0.0, -0.5), 0.0);
        assert_abs_diff_eq!(p.f(3.0, 0.0, 0.5), 0.0);
        assert_eq!(p.f(0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn example4_values() {
        for x in [2.1, 2.5, 3.3, 3.9] {
            assert_abs_diff_eq!(example4_operator(2.0, x * x, x), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(example4_operator(10.0, 1.0, 2.0), -8.75, epsilon = 1e-15);
        assert_abs_diff_eq!(example4_operator(-3.0, 0.0, 2.0), -2.75, epsilon = 1e-15);
        assert_eq!(example4().boundary(), (4.0, 16.0));
    }

    #[test]
    fn example5_values() {
        let p = example5();
        assert_eq!(p.f(2.0, 0.0, 0.5), 0.0);
        assert_eq!(p.f(0.0, 0.0, 0.0), 0.0);
        assert_eq!(p.exact().unwrap()(-1.0), -1.0);
    }

    #[test]
    fn boundary_mismatch_is_rejected() {
        let p = Problem::new("t", 0.0, 1.0, |p, _, _| -p, 0.0, 1.0).unwrap();
        assert!(matches!(p.clone().with_exact(|x| 2.0 * x), Err(Error::BoundaryMismatch { .. })));
        assert!(p.with_exact(|x| x).is_ok());
        assert!(Problem::new("t", 1.0, 1.0, |p, _, _| -p, 0.0, 1.0).is_err());
    }

    #[test]
    fn registry() {
        for name in PROBLEM_NAMES {
            assert_eq!(by_name(name).unwrap().name(), name);
        }
        assert!(matches!(by_name("example6"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn bellman_examples() {
        assert_eq!(bellman_min_finite(&[1.0, 2.0], -1.0, 0.0).unwrap(), (1.0, 0));
        assert_eq!(bellman_min_finite(&[1.0, 2.0], 1.0, 0.0).unwrap(), (-2.0, 1));
        assert_eq!(bellman_min_finite(&[1.0, 2.0], 0.0, 0.0).unwrap().1, 0);
        assert!(matches!(bellman_min_finite(&[], 0.0, 0.0), Err(Error::EmptyControls)));
    }

    #[test]
    fn custom_guess_matches_boundary() {
        let g = custom_guess("example4-cubic").unwrap();
        assert_abs_diff_eq!(g(2.0), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g(4.0), 16.0, epsilon = 1e-14);
        assert!(custom_guess("nope").is_none());
    }

    // Analytic second derivatives of the exact solutions.
    fn uxx(name: &str, x: f64) -> f64 {
        match name {
            "example1" => x,
            "example2" => 1.0,
            "example3" => 12.0 * x * x.abs(),
            "example4" => 2.0,
            "example5" => 2.0 * sign(x),
            _ => unreachable!(),
        }
    }

    #[test]
    fn exact_solutions_solve_their_equations() {
        for name in PROBLEM_NAMES {
            let prob = by_name(name).unwrap();
            let (a, b) = prob.domain();
            let u = prob.exact().unwrap();
            for k in 1..1000 {
                let x = a + (b - a) * k as f64 / 1000.0;
                if x.abs() < 1e-12 && (name == "example3" || name == "example5") {
                    continue;
                }
                let r = prob.f(uxx(name, x), u(x), x);
                assert!(r.abs() <= 1e-12, "{name} at {x}: {r}");
            }
        }
        let p2 = example2();
        let um = p2.alternate_exact().unwrap();
        for k in 1..100 {
            let x = k as f64 / 100.0;
            assert_eq!(p2.f(-1.0, um(x), x), 0.0);
        }
    }

    /// θ-grid oracle with golden-section refinement around the best node.
    fn ex4_oracle(p: f64, v: f64, x: f64) -> f64 {
        let g = |t: f64| -t * p + t * t * v + 1.0 / (x * x);
        let n = 100_000;
        let node = |k: usize| -1.0 + 2.0 * k as f64 / n as f64;
        let mut best_k = 0;
        let mut best = g(-1.0);
        for k in 1..=n {
            let val = g(node(k));
            if val < best {
                best = val;
                best_k = k;
            }
        }
        let (mut lo, mut hi) = (node(best_k.saturating_sub(1)), node((best_k + 1).min(n)));
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = hi - r * (hi - lo);
            let d = lo + r * (hi - lo);
            if g(c) < g(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        best.min(g(0.5 * (lo + hi)))
    }

    #[test]
    fn example4_closed_form_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let p = rng.gen_range(-10.0..10.0);
            let v = rng.gen_range(-5.0..20.0);
            let x = rng.gen_range(2.0..4.0);
            let want = ex4_oracle(p, v, x);
            assert!((example4_operator(p, v, x) - want).abs() <= 1e-9, "({p}, {v}, {x})");
        }
        assert!((example4_operator(-3.0, 0.0, 2.0) - ex4_oracle(-3.0, 0.0, 2.0)).abs() <= 1e-12);
    }
}
