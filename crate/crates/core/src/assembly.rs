//! The discrete system `F̂(δ²U_{j−1}, δ²U_j, δ²U_{j+1}, U_j, x_j) = 0` for
//! `j = 2..J−1`, with `U_1 = u_a` and `U_J = u_b` pinned.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::operators::{ExtremumStrategy, OperatorKind};
use crate::problems::Problem;
use crate::solvers::linalg::BandMatrix;

/// How `δ²U_1` and `δ²U_J` are closed when the stencil leaves the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GhostPolicy {
    /// `δ²U_1 := δ²U_2`, `δ²U_J := δ²U_{J−1}`.
    SecondDiffConstant,
    /// Ghost values `U_0 = 2U_1 − U_2` and `U_{J+1} = 2U_J − U_{J−1}`, so
    /// the boundary second differences vanish.
    #[default]
    LinearValueExtrapolation,
}

impl GhostPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            GhostPolicy::SecondDiffConstant => "second-diff-constant",
            GhostPolicy::LinearValueExtrapolation => "linear-extrapolation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "second-diff-constant" => Some(GhostPolicy::SecondDiffConstant),
            "linear-extrapolation" => Some(GhostPolicy::LinearValueExtrapolation),
            _ => None,
        }
    }
}

impl fmt::Display for GhostPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub kind: OperatorKind,
    pub ghost: GhostPolicy,
    /// Overrides the extremum strategy the problem would otherwise select.
    pub strategy: Option<ExtremumStrategy>,
}

impl SchemeConfig {
    pub fn new(kind: OperatorKind) -> Self {
        Self {
            kind,
            ghost: GhostPolicy::default(),
            strategy: None,
        }
    }

    pub fn with_ghost(self, ghost: GhostPolicy) -> Self {
        Self { ghost, ..self }
    }

    pub fn with_strategy(self, strategy: ExtremumStrategy) -> Self {
        Self {
            strategy: Some(strategy),
            ..self
        }
    }
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, ghost={}", self.kind, self.ghost)
    }
}

/// Second differences of `u` at all `J` nodes (index `j − 1`), with the two
/// boundary entries closed by `ghost`.
pub fn ghost_second_differences(grid: &Grid, u: &GridFunction, ghost: GhostPolicy) -> Vec<f64> {
    let v = u.values();
    let n = v.len();
    let h2 = grid.h() * grid.h();
    let mut d2 = vec![0.0; n];
    for k in 1..n - 1 {
        d2[k] = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / h2;
    }
    match ghost {
        GhostPolicy::SecondDiffConstant => {
            d2[0] = d2[1];
            d2[n - 1] = d2[n - 2];
        }
        GhostPolicy::LinearValueExtrapolation => {
            let u0 = 2.0 * v[0] - v[1];
            let un = 2.0 * v[n - 1] - v[n - 2];
            d2[0] = (v[1] - 2.0 * v[0] + u0) / h2;
            d2[n - 1] = (un - 2.0 * v[n - 1] + v[n - 2]) / h2;
        }
    }
    d2
}

#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    grid: Grid,
    problem: Problem,
    config: SchemeConfig,
    strategy: ExtremumStrategy,
}

impl DiscreteSystem {
    /// The grid must span the problem's domain.
    pub fn new(problem: Problem, grid: Grid, config: SchemeConfig) -> Result<Self> {
        let (a, b) = problem.domain();
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if (grid.a() - a).abs() > tol || (grid.b() - b).abs() > tol {
            return Err(Error::InvalidGrid(format!(
                "grid spans [{}, {}] but the problem domain is [{a}, {b}]",
                grid.a(),
                grid.b()
            )));
        }
        let strategy = config.strategy.unwrap_or(if problem.is_monotone_in_p() {
            ExtremumStrategy::EllipticEndpoints
        } else {
            ExtremumStrategy::default()
        });
        Ok(Self {
            grid,
            problem,
            config,
            strategy,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    /// Extremum strategy in effect for the Godunov operators.
    pub fn strategy(&self) -> ExtremumStrategy {
        self.strategy
    }

    pub fn unknowns(&self) -> usize {
        self.grid.len() - 2
    }

    /// Copy of `u` with the boundary data written into the end nodes.
    pub fn pinned(&self, u: &GridFunction) -> GridFunction {
        let (ua, ub) = self.problem.boundary();
        let mut out = u.clone();
        let n = out.len();
        out.set(1, ua);
        out.set(n, ub);
        out
    }

    /// Residual components `j = 2..J−1`; `u` must carry the boundary data.
    pub fn residual(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let (ua, ub) = self.problem.boundary();
        let (ga, gb) = (u.get(1), u.get(u.len()));
        let tol = |c: f64| 1e-12 * (1.0 + c.abs());
        if (ga - ua).abs() > tol(ua) || (gb - ub).abs() > tol(ub) {
            return Err(Error::BoundaryMismatch {
                u_a: ua,
                u_b: ub,
                got_a: ga,
                got_b: gb,
            });
        }
        self.residual_unpinned(u.values())
    }

    fn check_len(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Residual of an arbitrary full vector, whatever its end values.
    pub(crate) fn residual_unpinned(&self, v: &[f64]) -> Result<Vec<f64>> {
        let gf = GridFunction::from_vec_unchecked(v.to_vec());
        let d2 = ghost_second_differences(&self.grid, &gf, self.config.ghost);
        (2..v.len())
            .map(|j| self.eval_row(j, [d2[j - 2], d2[j - 1], d2[j]], v[j - 1]))
            .collect()
    }

    fn eval_row(&self, j: usize, p: [f64; 3], v: f64) -> Result<f64> {
        let x = self.grid.x(j);
        self.config
            .kind
            .apply(self.problem.operator(), p, v, x, self.strategy)
            .map_err(|e| Error::AtNode {
                node: j,
                source: Box::new(e),
            })
    }

    /// Second difference at 1-based node `k` of the full vector `v`.
    fn local_d2(&self, v: &[f64], k: usize) -> f64 {
        let n = v.len();
        let h2 = self.grid.h() * self.grid.h();
        // δ² at an interior node
        let at = |k: usize| (v[k] - 2.0 * v[k - 1] + v[k - 2]) / h2;
        match (k, self.config.ghost) {
            (1, GhostPolicy::SecondDiffConstant) => at(2),
            (1, GhostPolicy::LinearValueExtrapolation) => (v[1] - 2.0 * v[0] + (2.0 * v[0] - v[1])) / h2,
            (k, GhostPolicy::SecondDiffConstant) if k == n => at(n - 1),
            (k, GhostPolicy::LinearValueExtrapolation) if k == n => {
                ((2.0 * v[n - 1] - v[n - 2]) - 2.0 * v[n - 1] + v[n - 2]) / h2
            }
            (k, _) => at(k),
        }
    }

    /// Residual component at 1-based interior node `j`.
    fn row(&self, v: &[f64], j: usize) -> Result<f64> {
        let p = [self.local_d2(v, j - 1), self.local_d2(v, j), self.local_d2(v, j + 1)];
        self.eval_row(j, p, v[j - 1])
    }

    /// Central finite-difference Jacobian of the residual with respect to
    /// the interior unknowns, in band storage with two diagonals either side.
    /// The default step for unknown `U_j` is `1e-6·(1 + |U_j|)`.
    pub fn jacobian_fd(&self, u: &GridFunction, fd_step: Option<f64>) -> Result<BandMatrix> {
        self.check_len(u)?;
        let m = self.unknowns();
        let mut jac = BandMatrix::new(m, 2, 2);
        let mut v = u.values().to_vec();
        for col in 0..m {
            // unknown `col` is node col + 2 (1-based), stored at v[col + 1]
            let idx = col + 1;
            let orig = v[idx];
            let step = fd_step.unwrap_or(1e-6) * (1.0 + orig.abs());
            let rows = col.saturating_sub(2)..(col + 3).min(m);
            v[idx] = orig + step;
            let plus: Vec<f64> = rows.clone().map(|r| self.row(&v, r + 2)).collect::<Result<_>>()?;
            v[idx] = orig - step;
            let minus: Vec<f64> = rows.clone().map(|r| self.row(&v, r + 2)).collect::<Result<_>>()?;
            v[idx] = orig;
            for (k, r) in rows.enumerate() {
                let d = (plus[k] - minus[k]) / (2.0 * step);
                if !d.is_finite() {
                    return Err(Error::AtNode {
                        node: r + 2,
                        source: Box::new(Error::NonFinite {
                            p: f64::NAN,
                            v: orig,
                            x: self.grid.x(r + 2),
                        }),
                    });
                }
                jac.set(r, col, d);
            }
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LfWeights;
    use crate::problems::{example1, example2, example4};
    use approx::assert_abs_diff_eq;

    fn lf(w: LfWeights) -> SchemeConfig {
        SchemeConfig::new(OperatorKind::LaxFriedrichs(w))
    }

    fn sys(problem: Problem, points: usize, cfg: SchemeConfig) -> DiscreteSystem {
        let (a, b) = problem.domain();
        DiscreteSystem::new(problem, Grid::new(a, b, points).unwrap(), cfg).unwrap()
    }

    #[test]
    fn ghost_examples() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let q = g.sample(|x| 0.5 * x * x);
        let d = ghost_second_differences(&g, &q, GhostPolicy::SecondDiffConstant);
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let d = ghost_second_differences(&g, &q, GhostPolicy::LinearValueExtrapolation);
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[10], 0.0, epsilon = 1e-12);
        assert!(d[1..10].iter().all(|v| (v - 1.0).abs() < 1e-12));
        let lin = g.sample(|x| 3.0 * x - 1.0);
        for ghost in [GhostPolicy::SecondDiffConstant, GhostPolicy::LinearValueExtrapolation] {
            let d = ghost_second_differences(&g, &lin, ghost);
            assert!(d.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn ghost_names_round_trip() {
        for g in [GhostPolicy::SecondDiffConstant, GhostPolicy::LinearValueExtrapolation] {
            assert_eq!(GhostPolicy::from_name(g.name()), Some(g));
        }
        assert_eq!(GhostPolicy::from_name("nope"), None);
    }

    #[test]
    fn domain_mismatch_rejected() {
        let g = Grid::new(0.0, 2.0, 11).unwrap();
        assert!(DiscreteSystem::new(example2(), g, lf(LfWeights::f1(1.0))).is_err());
    }

    #[test]
    fn quadratic_interpolant_is_a_root_with_constant_ghost() {
        let cfgs = [
            lf(LfWeights::f1(1.0)),
            lf(LfWeights::f2(0.0)),
            lf(LfWeights::f3(-1.0)),
            SchemeConfig::new(OperatorKind::GodunovExt),
            SchemeConfig::new(OperatorKind::GodunovExtr),
        ];
        for cfg in cfgs {
            let s = sys(example2(), 21, cfg.with_ghost(GhostPolicy::SecondDiffConstant));
            let u = s.grid().sample(|x| 0.5 * x * x);
            let r = s.residual(&u).unwrap();
            assert!(r.iter().all(|v| v.abs() < 1e-12), "{cfg}: {r:?}");
            assert_eq!(r.len(), 19);
        }
    }

    #[test]
    fn example1_constant_ghost_residual_at_ends() {
        let s = sys(example1(), 21, lf(LfWeights::f1(1.5)).with_ghost(GhostPolicy::SecondDiffConstant));
        let g = s.grid().clone();
        let u = g.sample(|x| x * x * x / 6.0);
        let r = s.residual(&u).unwrap();
        let h = g.h();
        let x2 = g.x(2);
        let want = -(x2 + h / 3.0).powi(3) + x2.powi(3) + 1.5 * h;
        assert_abs_diff_eq!(r[0], want, epsilon = 1e-10);
        for v in &r[1..r.len() - 1] {
            assert!(v.abs() < 1e-10);
        }
        assert!(r[r.len() - 1].abs() > 1e-3);
    }

    #[test]
    fn linear_data_with_standard_scheme_gives_f_at_zero() {
        let p = example4();
        let s = sys(p.clone(), 11, lf(LfWeights::f2(0.0)));
        let u = s.grid().sample(|x| 4.0 + 6.0 * (x - 2.0));
        let r = s.residual(&u).unwrap();
        for (k, rv) in r.iter().enumerate() {
            let j = k + 2;
            assert_abs_diff_eq!(*rv, p.f(0.0, u.get(j), s.grid().x(j)), epsilon = 1e-9);
        }
    }

    #[test]
    fn residual_requires_pins() {
        let s = sys(example1(), 11, lf(LfWeights::f1(1.5)));
        let u = GridFunction::zeros(s.grid());
        assert!(matches!(s.residual(&u), Err(Error::BoundaryMismatch { .. })));
        assert!(s.residual(&s.pinned(&u)).is_ok());
    }

    #[test]
    fn evaluation_errors_name_the_node() {
        let p = Problem::new("bad", 0.0, 1.0, |p, _v, x| if x > 0.45 && x < 0.55 { f64::NAN } else { -p }, 0.0, 0.0)
            .unwrap();
        let s = sys(p, 11, lf(LfWeights::f1(1.0)));
        match s.residual(&GridFunction::zeros(s.grid())) {
            Err(Error::AtNode { node, .. }) => assert_eq!(node, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn residual_locality() {
        for ghost in [GhostPolicy::SecondDiffConstant, GhostPolicy::LinearValueExtrapolation] {
            let s = sys(example1(), 15, lf(LfWeights::f1(1.5)).with_ghost(ghost));
            let u = s.pinned(&s.grid().sample(|x| x.sin() / 6.0));
            let r0 = s.residual(&u).unwrap();
            for j in 2..15 {
                let mut w = u.clone();
                w.set(j, u.get(j) + 1e-3);
                let r = s.residual(&w).unwrap();
                for (k, (a, b)) in r.iter().zip(&r0).enumerate() {
                    let row = k + 2;
                    if (a - b).abs() > 0.0 {
                        // boundary rows reach one node further under the constant ghost
                        let reach = if ghost == GhostPolicy::SecondDiffConstant && (row == 2 || row == 14) { 3 } else { 2 };
                        assert!(row.abs_diff(j) <= reach, "{ghost}: node {j} moved row {row}");
                    }
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_analytic_band_for_linear_operator() {
        let p = Problem::new("lin", 0.0, 1.0, |p, _v, _x| -p, 0.0, 0.0).unwrap();
        let w = LfWeights::f3(0.7);
        let s = sys(p, 12, lf(w));
        let h2 = s.grid().h().powi(2);
        let u = s.pinned(&s.grid().sample(|x| (3.0 * x).cos()));
        let jac = s.jacobian_fd(&u, None).unwrap();
        let m = s.unknowns();
        // row of F̂ in terms of δ²: coefficients c = (−β1 + α, −β2 − 2α, −β3 + α)
        let [b1, b2, b3] = w.beta();
        let a = w.alpha();
        let c = [-b1 + a, -b2 - 2.0 * a, -b3 + a];
        for r in 0..m {
            let node = r + 2;
            let mut want = vec![0.0; m + 2]; // indexed by node - 1 over 1..=J
            for (q, ck) in c.iter().enumerate() {
                let k = node - 1 + q; // δ² at node k (1-based)
                if k == 1 || k == m + 2 {
                    continue; // linear extrapolation ghost δ² is identically zero
                }
                want[k - 2] += ck / h2;
                want[k - 1] += -2.0 * ck / h2;
                want[k] += ck / h2;
            }
            for col in 0..m {
                let got = if r.abs_diff(col) <= 2 { jac.get(r, col) } else { 0.0 };
                assert_abs_diff_eq!(got, want[col + 1], epsilon = 1e-5 * (1.0 + want[col + 1].abs()));
            }
        }
    }

    #[test]
    fn jacobian_richardson_on_example1() {
        let s = sys(example1(), 11, lf(LfWeights::f1(1.5)));
        let u = s.pinned(&s.grid().sample(|x| x / 6.0 + 0.05 * (3.0 * x).sin()));
        let big = s.jacobian_fd(&u, Some(1e-2)).unwrap();
        let mid = s.jacobian_fd(&u, Some(5e-3)).unwrap();
        let tiny = s.jacobian_fd(&u, Some(1e-7)).unwrap();
        let m = s.unknowns();
        let (mut e_big, mut e_mid) = (0.0f64, 0.0f64);
        for r in 0..m {
            for c in r.saturating_sub(2)..(r + 3).min(m) {
                e_big = e_big.max((big.get(r, c) - tiny.get(r, c)).abs());
                e_mid = e_mid.max((mid.get(r, c) - tiny.get(r, c)).abs());
            }
        }
        // halving the step cuts the truncation error by about four
        let ratio = e_big / e_mid;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn jacobian_vector_product_matches_directional_derivative() {
        let s = sys(example1(), 13, lf(LfWeights::f1(1.5)));
        let u = s.pinned(&s.grid().sample(|x| x * x * x / 6.0 + 0.01 * (x * 5.0).cos()));
        let jac = s.jacobian_fd(&u, None).unwrap();
        let m = s.unknowns();
        let dir: Vec<f64> = (0..m).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let jv = jac.matvec(&dir);
        let eps = 1e-6;
        let shift = |sgn: f64| {
            let mut w = u.clone();
            for k in 0..m {
                w.set(k + 2, u.get(k + 2) + sgn * eps * dir[k]);
            }
            s.residual(&w).unwrap()
        };
        let (rp, rm) = (shift(1.0), shift(-1.0));
        for k in 0..m {
            let dd = (rp[k] - rm[k]) / (2.0 * eps);
            assert!((dd - jv[k]).abs() <= 1e-4 * (1.0 + dd.abs()), "row {k}: {dd} vs {}", jv[k]);
        }
    }
}
