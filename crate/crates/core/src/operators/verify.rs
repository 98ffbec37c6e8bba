//! Sampled checks of consistency, g-monotonicity and ellipticity.
//!
//! None of these certify anything; they probe the operator at seeded random
//! points of a box (always including its corners) and report the worst
//! offenders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EllipticityBounds, ExtremumStrategy, OperatorKind};
use crate::error::{Error, Result};

/// Axis-aligned box over `(p, v, x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBox {
    pub p: (f64, f64),
    pub v: (f64, f64),
    pub x: (f64, f64),
}

impl SampleBox {
    pub fn new(p: (f64, f64), v: (f64, f64), x: (f64, f64)) -> Result<Self> {
        for (name, (lo, hi)) in [("p", p), ("v", v), ("x", x)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "sample box range for {name} must be finite with lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { p, v, x })
    }

    pub fn with_p(self, lo: f64, hi: f64) -> Result<Self> {
        Self::new((lo, hi), self.v, self.x)
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Corner points of a list of ranges, followed by `n` uniform draws.
fn sample_points<const D: usize>(ranges: [(f64, f64); D], n: usize, seed: u64) -> Vec<[f64; D]> {
    let mut out = Vec::with_capacity((1 << D) + n);
    for mask in 0..(1usize << D) {
        let mut pt = [0.0; D];
        for (k, r) in ranges.iter().enumerate() {
            pt[k] = if mask & (1 << k) == 0 { r.0 } else { r.1 };
        }
        out.push(pt);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let mut pt = [0.0; D];
        for (k, r) in ranges.iter().enumerate() {
            pt[k] = draw(&mut rng, *r);
        }
        out.push(pt);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Absolute tolerance, scaled by `1 + |local magnitude|`.
    pub tol: f64,
    /// Finite-difference step is `fd_rel_step * (1 + |p|)`.
    pub fd_rel_step: f64,
    pub strategy: ExtremumStrategy,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0x5eed,
            tol: 1e-8,
            fd_rel_step: 1e-5,
            strategy: ExtremumStrategy::default(),
        }
    }
}

/// One failing sample. `point` is `(p1, p2, p3, v, x)`; for single-`p`
/// properties the three `p` entries coincide.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub point: [f64; 5],
    pub what: String,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub property: &'static str,
    pub passed: bool,
    pub samples: usize,
    /// Largest observed defect, in the same units as the tolerance test.
    pub max_defect: f64,
    /// Up to five worst violations, largest first.
    pub worst: Vec<Violation>,
    pub errors: Vec<String>,
}

const MAX_REPORTED: usize = 5;

impl PropertyReport {
    fn new(property: &'static str) -> Self {
        Self {
            property,
            passed: true,
            samples: 0,
            max_defect: 0.0,
            worst: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn violation(&mut self, v: Violation) {
        self.passed = false;
        self.worst.push(v);
        self.worst
            .sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap_or(std::cmp::Ordering::Equal));
        self.worst.truncate(MAX_REPORTED);
    }

    fn error(&mut self, e: Error) {
        self.passed = false;
        if self.errors.len() < MAX_REPORTED {
            self.errors.push(e.to_string());
        }
    }
}

/// `|F̂(p,p,p,v,x) − F(p,v,x)| <= tol·(1 + |F|)` at every sample.
pub fn check_consistency<F>(op: &OperatorKind, f: &F, sbox: &SampleBox, opts: &VerifyOptions) -> PropertyReport
where
    F: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let mut rep = PropertyReport::new("consistency");
    for [p, v, x] in sample_points([sbox.p, sbox.v, sbox.x], opts.samples, opts.seed) {
        rep.samples += 1;
        let exact = f(p, v, x);
        match op.apply(f, [p, p, p], v, x, opts.strategy) {
            Ok(val) => {
                let defect = (val - exact).abs() / (1.0 + exact.abs());
                rep.max_defect = rep.max_defect.max(defect);
                if !(defect <= opts.tol) {
                    rep.violation(Violation {
                        point: [p, p, p, v, x],
                        what: format!("F̂ = {val}, F = {exact}"),
                        magnitude: defect,
                    });
                }
            }
            Err(e) => rep.error(e),
        }
    }
    rep
}

/// Central-difference sign pattern `(↑, ↓, ↑)` in `(p1, p2, p3)`.
pub fn check_gmonotonicity<F>(op: &OperatorKind, f: &F, sbox: &SampleBox, opts: &VerifyOptions) -> PropertyReport
where
    F: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let mut rep = PropertyReport::new("g-monotonicity");
    let pts = sample_points([sbox.p, sbox.p, sbox.p, sbox.v, sbox.x], opts.samples, opts.seed);
    'samples: for [p1, p2, p3, v, x] in pts {
        rep.samples += 1;
        let p = [p1, p2, p3];
        let mut d = [0.0; 3];
        for k in 0..3 {
            let step = opts.fd_rel_step * (1.0 + p[k].abs());
            let (mut hi, mut lo) = (p, p);
            hi[k] += step;
            lo[k] -= step;
            let fh = op.apply(f, hi, v, x, opts.strategy);
            let fl = op.apply(f, lo, v, x, opts.strategy);
            match (fh, fl) {
                (Ok(a), Ok(b)) => d[k] = (a - b) / (2.0 * step),
                (Err(e), _) | (_, Err(e)) => {
                    rep.error(e);
                    continue 'samples;
                }
            }
        }
        let scale = 1.0 + d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // defect > 0 means the wrong sign
        let defects = [-d[0] / scale, d[1] / scale, -d[2] / scale];
        for (k, &defect) in defects.iter().enumerate() {
            rep.max_defect = rep.max_defect.max(defect);
            if !(defect <= opts.tol) {
                let dir = if k == 1 { "increasing" } else { "decreasing" };
                rep.violation(Violation {
                    point: [p1, p2, p3, v, x],
                    what: format!("F̂ {dir} in p{} (slope {})", k + 1, d[k]),
                    magnitude: defect,
                });
            }
        }
    }
    rep
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticityReport {
    pub property: PropertyReport,
    /// `max(−∂F/∂p)` over the samples.
    pub gamma_hat: f64,
    /// `min(−∂F/∂p)` over the samples.
    pub min_slope: f64,
}

impl EllipticityReport {
    /// Smallest `γ` with `−γ <= ∂F/∂p <= −1/γ` on the samples, if the
    /// operator is uniformly elliptic there.
    pub fn bounds(&self) -> Option<EllipticityBounds> {
        if !self.property.passed || !(self.min_slope > 0.0) {
            return None;
        }
        EllipticityBounds::new(self.gamma_hat.max(1.0 / self.min_slope)).ok()
    }
}

/// `∂F/∂p <= tol·(1 + |∂F/∂p|)` at every sample, plus the empirical slope range.
pub fn check_ellipticity<F>(f: &F, sbox: &SampleBox, opts: &VerifyOptions) -> EllipticityReport
where
    F: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let mut rep = PropertyReport::new("ellipticity");
    let mut gamma_hat = f64::NEG_INFINITY;
    let mut min_slope = f64::INFINITY;
    for [p, v, x] in sample_points([sbox.p, sbox.v, sbox.x], opts.samples, opts.seed) {
        rep.samples += 1;
        let step = opts.fd_rel_step * (1.0 + p.abs());
        let d = (f(p + step, v, x) - f(p - step, v, x)) / (2.0 * step);
        if !d.is_finite() {
            rep.error(Error::NonFinite { p, v, x });
            continue;
        }
        gamma_hat = gamma_hat.max(-d);
        min_slope = min_slope.min(-d);
        let defect = d / (1.0 + d.abs());
        rep.max_defect = rep.max_defect.max(defect);
        if !(defect <= opts.tol) {
            rep.violation(Violation {
                point: [p, p, p, v, x],
                what: format!("∂F/∂p = {d} > 0"),
                magnitude: defect,
            });
        }
    }
    EllipticityReport {
        property: rep,
        gamma_hat,
        min_slope,
    }
}
