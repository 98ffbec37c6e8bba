use super::{checked, ExtremumStrategy};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumMode {
    Min,
    Max,
}

/// Extremal value of `p ↦ F(p, v, x)` on an interval and where it was found.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub argument: f64,
    pub strategy: ExtremumStrategy,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Extremum of `p ↦ F(p, v, x)` over `[lo, hi]`.
pub fn interval_extremum<F>(
    f: &F,
    v: f64,
    x: f64,
    lo: f64,
    hi: f64,
    mode: ExtremumMode,
    strategy: ExtremumStrategy,
) -> Result<Extremum>
where
    F: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    debug_assert!(lo <= hi);
    let eval = |p: f64| checked(f(p, v, x), p, v, x);
    // minimise sign * F
    let sign = match mode {
        ExtremumMode::Min => 1.0,
        ExtremumMode::Max => -1.0,
    };
    let better = |a: f64, b: f64| sign * a < sign * b;

    if lo == hi {
        return Ok(Extremum {
            value: eval(lo)?,
            argument: lo,
            strategy,
        });
    }

    match strategy {
        ExtremumStrategy::EllipticEndpoints => {
            let (flo, fhi) = (eval(lo)?, eval(hi)?);
            let (value, argument) = if better(fhi, flo) { (fhi, hi) } else { (flo, lo) };
            Ok(Extremum {
                value,
                argument,
                strategy,
            })
        }
        ExtremumStrategy::Sampled { intervals } => {
            let n = intervals.max(2);
            let step = (hi - lo) / n as f64;
            let node = |k: usize| if k == n { hi } else { lo + k as f64 * step };
            let mut best_k = 0;
            let mut best = eval(lo)?;
            for k in 1..=n {
                let fk = eval(node(k))?;
                if better(fk, best) {
                    best = fk;
                    best_k = k;
                }
            }
            let mut argument = node(best_k);
            let a = node(best_k.saturating_sub(1));
            let b = node((best_k + 1).min(n));
            let (pg, fg) = golden_section(&eval, a, b, sign)?;
            if better(fg, best) {
                best = fg;
                argument = pg;
            }
            Ok(Extremum {
                value: best,
                argument,
                strategy,
            })
        }
    }
}

fn golden_section<E>(eval: &E, mut a: f64, mut b: f64, sign: f64) -> Result<(f64, f64)>
where
    E: Fn(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sign * eval(c)?;
    let mut fd = sign * eval(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sign * eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sign * eval(d)?;
        }
    }
    let (p, fp) = if fc < fd { (c, fc) } else { (d, fd) };
    Ok((p, sign * fp))
}

/// Shared first two cases of the Godunov tables; `None` when `p2` lies
/// strictly between `p1` and `p3`.
fn outer_case(p1: f64, p2: f64, p3: f64) -> Option<(f64, f64, ExtremumMode)> {
    let lo = p1.min(p2).min(p3);
    let hi = p1.max(p2).max(p3);
    if p2 >= p1.max(p3) {
        Some((lo, hi, ExtremumMode::Min))
    } else if p2 <= p1.min(p3) {
        Some((lo, hi, ExtremumMode::Max))
    } else {
        None
    }
}

/// `F̂_4`: min over `I(p1,p2,p3)` when `p2` is the largest, max when it is the
/// smallest, otherwise min over the sub-interval between `p2` and the
/// smaller outer value.
pub fn godunov_ext<F>(
    f: &F,
    p1: f64,
    p2: f64,
    p3: f64,
    v: f64,
    x: f64,
    strategy: ExtremumStrategy,
) -> Result<Extremum>
where
    F: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let inner = if p1 < p2 { (p1, p2, ExtremumMode::Min) } else { (p3, p2, ExtremumMode::Min) };
    let (lo, hi, mode) = outer_case(p1, p2, p3).unwrap_or(inner);
    interval_extremum(f, v, x, lo, hi, mode, strategy)
}

/// `F̂_5`: as [`godunov_ext`] but the monotone cases take the max between `p2`
/// and the larger outer value.
pub fn godunov_extr<F>(
    f: &F,
    p1: f64,
    p2: f64,
    p3: f64,
    v: f64,
    x: f64,
    strategy: ExtremumStrategy,
) -> Result<Extremum>
where
    F: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let inner = if p1 < p2 { (p2, p3, ExtremumMode::Max) } else { (p2, p1, ExtremumMode::Max) };
    let (lo, hi, mode) = outer_case(p1, p2, p3).unwrap_or(inner);
    interval_extremum(f, v, x, lo, hi, mode, strategy)
}
