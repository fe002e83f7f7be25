//! Deterministic Rosenzweig-MacArthur prey-predator dynamics.
//!
//! The model couples logistic prey growth to a Holling type III functional
//! response:
//!
//! ```text
//! dX/dt = r X - c X^2 - Y f(X),      f(X) = C X^2 / (X^2 + k^2)
//! dY/dt = (E f(X) - mu) Y
//! ```
//!
//! This module provides the vector field, the closed-form equilibria with
//! their linearizations and stability classes, and the transcritical
//! bifurcation curve in the (r, mu) parameter plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Eigenvalue real parts smaller than this in magnitude are treated as zero
/// when classifying hyperbolicity.
pub const HYPERBOLICITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model parameter {name} must be strictly positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },
    #[error("state is not finite: ({x}, {y})")]
    NonFiniteState { x: f64, y: f64 },
}

/// Ecological constants of the model.
///
/// `c`, `e`, `cmax`, `k` default to the values the source studies keep fixed
/// (0.02, 0.4, 1, 10); `r` and `mu` are the swept parameters. No range is
/// enforced on `r` and `mu` beyond positivity: the existence and stability
/// predicates handle any positive values gracefully.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Intrinsic growth rate of the prey (1/time).
    pub r: f64,
    /// Mortality rate of the predator (1/time).
    pub mu: f64,
    /// Competition factor of the prey (1/(population * time)).
    pub c: f64,
    /// Assimilation efficiency of the predator (dimensionless).
    #[serde(rename = "E")]
    pub e: f64,
    /// Maximum food intake of the predator (population/time).
    #[serde(rename = "C")]
    pub cmax: f64,
    /// Half-saturation constant of the functional response (population).
    pub k: f64,
}

impl ModelParams {
    /// Standard constants with the given growth and mortality rates.
    pub fn with_rates(r: f64, mu: f64) -> Self {
        ModelParams {
            r,
            mu,
            c: 0.02,
            e: 0.4,
            cmax: 1.0,
            k: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("r", self.r),
            ("mu", self.mu),
            ("c", self.c),
            ("E", self.e),
            ("C", self.cmax),
            ("k", self.k),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositiveParam { name, value });
            }
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::with_rates(1.5, 0.22)
    }
}

/// A point in population phase space. Components may be negative: the
/// stochastic dynamics with additive noise do not preserve the quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn new(x: f64, y: f64) -> Self {
        State { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: State) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Which equilibrium a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Extinction,
    PreyOnly,
    Coexistence,
}

/// Local stability class read off the eigenvalues of the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    StableNode,
    StableSpiral,
    Saddle,
    UnstableNode,
    UnstableSpiral,
    NonHyperbolic,
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableSpiral)
    }
}

/// An equilibrium point together with its linearization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub point: State,
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: (Complex64, Complex64),
    pub stability: Stability,
}

/// Holling type III functional response f(x) = C x^2 / (x^2 + k^2).
///
/// Monotone increasing for x >= 0 and saturating at `cmax`.
pub fn holling_f(x: f64, params: &ModelParams) -> f64 {
    let x2 = x * x;
    params.cmax * x2 / (x2 + params.k * params.k)
}

/// Derivative of the functional response, f'(x) = 2 C k^2 x / (x^2 + k^2)^2.
pub fn holling_f_prime(x: f64, params: &ModelParams) -> f64 {
    let x2 = x * x;
    let denom = x2 + params.k * params.k;
    2.0 * params.cmax * params.k * params.k * x / (denom * denom)
}

/// The vector field of the deterministic system.
pub fn drift(s: State, params: &ModelParams) -> State {
    let f = holling_f(s.x, params);
    State {
        x: params.r * s.x - params.c * s.x * s.x - s.y * f,
        y: (params.e * f - params.mu) * s.y,
    }
}

/// Net per-capita predator growth g(x) = E f(x) - mu.
///
/// Strictly increasing on x > 0, equal to -mu at x = 0, and leveling off at
/// E C - mu for large x. Its unique positive root (when mu < E C) is the
/// prey component of the coexistence equilibrium.
pub fn net_predator_growth(x: f64, params: &ModelParams) -> f64 {
    params.e * holling_f(x, params) - params.mu
}

/// Jacobian of the vector field at a state.
pub fn jacobian_at(s: State, params: &ModelParams) -> [[f64; 2]; 2] {
    let f = holling_f(s.x, params);
    let fp = holling_f_prime(s.x, params);
    [
        [params.r - 2.0 * params.c * s.x - s.y * fp, -f],
        [params.e * s.y * fp, params.e * f - params.mu],
    ]
}

/// Eigenvalues of a real 2x2 matrix as roots of its characteristic
/// polynomial, ordered by non-decreasing real part. A complex pair is
/// returned conjugate, positive imaginary part first.
pub fn eigenvalues_2x2(m: [[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let a = 0.5 * (tr - sq);
        let b = 0.5 * (tr + sq);
        (Complex64::new(a, 0.0), Complex64::new(b, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        let re = 0.5 * tr;
        (Complex64::new(re, im), Complex64::new(re, -im))
    }
}

/// Stability class of an equilibrium from its eigenvalue pair.
///
/// Any eigenvalue whose real part is within [`HYPERBOLICITY_TOL`] of zero
/// makes the point non-hyperbolic.
pub fn classify(eigenvalues: (Complex64, Complex64)) -> Stability {
    let (l1, l2) = eigenvalues;
    if l1.re.abs() < HYPERBOLICITY_TOL || l2.re.abs() < HYPERBOLICITY_TOL {
        return Stability::NonHyperbolic;
    }
    let spiral = l1.im != 0.0 || l2.im != 0.0;
    match (l1.re < 0.0, l2.re < 0.0) {
        (true, true) => {
            if spiral {
                Stability::StableSpiral
            } else {
                Stability::StableNode
            }
        }
        (false, false) => {
            if spiral {
                Stability::UnstableSpiral
            } else {
                Stability::UnstableNode
            }
        }
        _ => Stability::Saddle,
    }
}

/// Mortality on the transcritical bifurcation curve: mu_T(r) = E C r^2 / (c^2 k^2 + r^2).
///
/// For mu above the curve the prey-only equilibrium is stable; below it the
/// coexistence equilibrium exists and attracts. Strictly increasing in r and
/// leveling off at E C.
pub fn bifurcation_mu(r: f64, params: &ModelParams) -> f64 {
    let ck = params.c * params.k;
    params.e * params.cmax * r * r / (ck * ck + r * r)
}

/// Existence of the interior coexistence equilibrium (strict inequality:
/// on the bifurcation curve itself the point is considered absent).
pub fn coexistence_exists(params: &ModelParams) -> bool {
    params.mu < bifurcation_mu(params.r, params) && params.mu < params.e * params.cmax
}

/// Closed form of the coexistence equilibrium, if it exists.
///
/// The prey component k sqrt(mu / (E C - mu)) does not depend on r; the
/// predator component is the prey isocline evaluated there.
pub fn coexistence_point(params: &ModelParams) -> Option<State> {
    if !coexistence_exists(params) {
        return None;
    }
    let x = params.k * (params.mu / (params.e * params.cmax - params.mu)).sqrt();
    let y = (params.r - params.c * x) * (x * x + params.k * params.k) / (params.cmax * x);
    Some(State::new(x, y))
}

/// The attractor of the deterministic flow in the first quadrant: the
/// coexistence point when it exists, otherwise the prey-only equilibrium.
pub fn attractor(params: &ModelParams) -> State {
    coexistence_point(params).unwrap_or_else(|| State::new(params.r / params.c, 0.0))
}

fn report_at(kind: EquilibriumKind, point: State, params: &ModelParams) -> EquilibriumReport {
    let jacobian = jacobian_at(point, params);
    let eigenvalues = eigenvalues_2x2(jacobian);
    EquilibriumReport {
        kind,
        point,
        jacobian,
        eigenvalues,
        stability: classify(eigenvalues),
    }
}

/// All equilibria of the system with their linearizations.
///
/// The extinction point (0,0) and the prey-only point (r/c, 0) always exist;
/// the coexistence point is present exactly when [`coexistence_exists`]
/// holds. When mu >= E C the coexistence branch is absent (its closed form
/// is undefined there) rather than an error.
pub fn equilibria(params: &ModelParams) -> Vec<EquilibriumReport> {
    let mut out = vec![
        report_at(EquilibriumKind::Extinction, State::new(0.0, 0.0), params),
        report_at(
            EquilibriumKind::PreyOnly,
            State::new(params.r / params.c, 0.0),
            params,
        ),
    ];
    if let Some(z3) = coexistence_point(params) {
        out.push(report_at(EquilibriumKind::Coexistence, z3, params));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn defaults(r: f64, mu: f64) -> ModelParams {
        ModelParams::with_rates(r, mu)
    }

    #[test]
    fn holling_response_anchors() {
        let p = defaults(1.5, 0.22);
        assert_eq!(holling_f(0.0, &p), 0.0);
        // half saturation at x = k
        assert_abs_diff_eq!(holling_f(10.0, &p), 0.5, epsilon = 1e-15);
        // saturation limit
        assert_relative_eq!(holling_f(1e12, &p), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn holling_derivative_anchors() {
        let p = defaults(1.5, 0.22);
        assert_eq!(holling_f_prime(0.0, &p), 0.0);
        // 2 * 1 * 100 * 10 / 200^2
        assert_abs_diff_eq!(holling_f_prime(10.0, &p), 0.05, epsilon = 1e-15);
        // central difference check
        let x = 5.0;
        let h = 1e-5;
        let fd = (holling_f(x + h, &p) - holling_f(x - h, &p)) / (2.0 * h);
        assert_abs_diff_eq!(holling_f_prime(x, &p), fd, epsilon = 1e-6);
    }

    #[test]
    fn drift_vanishes_at_equilibria() {
        let p = defaults(1.5, 0.22);
        let at_origin = drift(State::new(0.0, 0.0), &p);
        assert_eq!((at_origin.x, at_origin.y), (0.0, 0.0));

        for r in [0.2, 0.7, 1.5, 2.4] {
            let p = defaults(r, 0.22);
            let v = drift(State::new(50.0 * r, 0.0), &p);
            assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-10);
            assert_eq!(v.y, 0.0);
        }

        // reported coexistence point for r=1.5, mu=0.22
        let v = drift(State::new(11.0554, 25.7070), &defaults(1.5, 0.22));
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn predator_growth_root() {
        let p = defaults(1.5, 0.22);
        assert_eq!(net_predator_growth(0.0, &p), -p.mu);

        let root = p.k * (p.mu / (p.e * p.cmax - p.mu)).sqrt();
        assert_abs_diff_eq!(net_predator_growth(root, &p), 0.0, epsilon = 1e-12);

        // bisection oracle on g over [0.1, 1000]
        let (mut lo, mut hi) = (0.1, 1000.0);
        assert!(net_predator_growth(lo, &p) < 0.0 && net_predator_growth(hi, &p) > 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if net_predator_growth(mid, &p) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(0.5 * (lo + hi), root, epsilon = 1e-9);
        assert_abs_diff_eq!(0.5 * (lo + hi), 11.0554, epsilon = 1e-3);
    }

    #[test]
    fn equilibria_reported_values() {
        // no coexistence: stable prey-only node with eigenvalues (-0.2, -0.05)
        let reports = equilibria(&defaults(0.2, 0.25));
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].stability, Stability::Saddle);
        let z2 = &reports[1];
        assert_eq!(z2.kind, EquilibriumKind::PreyOnly);
        assert_abs_diff_eq!(z2.point.x, 10.0, epsilon = 1e-12);
        assert_eq!(z2.stability, Stability::StableNode);
        assert_abs_diff_eq!(z2.eigenvalues.0.re, -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(z2.eigenvalues.1.re, -0.05, epsilon = 1e-12);

        // coexistence cases against reported points
        let cases = [
            (0.5, 0.14, 7.34, 7.4),
            (1.5, 0.22, 11.06, 25.7),
            (2.5, 0.2, 10.0, 46.0),
        ];
        for (r, mu, x3, y3) in cases {
            let reports = equilibria(&defaults(r, mu));
            assert_eq!(reports.len(), 3);
            let z3 = &reports[2];
            assert_eq!(z3.kind, EquilibriumKind::Coexistence);
            assert_abs_diff_eq!(z3.point.x, x3, epsilon = 0.05);
            assert_abs_diff_eq!(z3.point.y, y3, epsilon = 0.05);
            assert!(z3.stability.is_stable(), "{r},{mu}: {:?}", z3.stability);
        }
        assert_eq!(
            equilibria(&defaults(1.5, 0.22))[2].stability,
            Stability::StableSpiral
        );
    }

    #[test]
    fn equilibrium_eigenvalues_satisfy_characteristic_polynomial() {
        for (r, mu) in [(0.2, 0.25), (0.5, 0.14), (1.5, 0.22), (2.5, 0.2)] {
            for rep in equilibria(&defaults(r, mu)) {
                let tr = rep.jacobian[0][0] + rep.jacobian[1][1];
                let det = rep.jacobian[0][0] * rep.jacobian[1][1]
                    - rep.jacobian[0][1] * rep.jacobian[1][0];
                for l in [rep.eigenvalues.0, rep.eigenvalues.1] {
                    let residual = l * l - tr * l + det;
                    assert!(residual.norm() < 1e-12, "residual {}", residual.norm());
                }
            }
        }
    }

    #[test]
    fn coexistence_condition() {
        assert!(!coexistence_exists(&defaults(0.2, 0.25)));
        assert!(coexistence_exists(&defaults(1.5, 0.22)));

        // exactly on the curve: strict inequality, no coexistence point
        let r = 0.7;
        let mut p = defaults(r, 0.1);
        p.mu = bifurcation_mu(r, &p);
        assert!(!coexistence_exists(&p));
        assert!(coexistence_point(&p).is_none());

        // mu >= E C: only the two boundary equilibria, no error
        let p = defaults(1.5, 0.45);
        assert!(!coexistence_exists(&p));
        assert_eq!(equilibria(&p).len(), 2);
    }

    #[test]
    fn jacobian_closed_forms() {
        let p = defaults(1.3, 0.21);
        let j = jacobian_at(State::new(0.0, 0.0), &p);
        assert_eq!(j, [[p.r, 0.0], [0.0, -p.mu]]);

        let x2 = 50.0 * p.r;
        let j = jacobian_at(State::new(x2, 0.0), &p);
        let f = holling_f(x2, &p);
        assert_abs_diff_eq!(j[0][0], -p.r, epsilon = 1e-12);
        assert_abs_diff_eq!(j[0][1], -f, epsilon = 1e-15);
        assert_eq!(j[1][0], 0.0);
        assert_abs_diff_eq!(j[1][1], 0.4 * f - p.mu, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = defaults(1.5, 0.22);
        let h = 1e-6;
        for s in [
            State::new(3.0, 4.0),
            State::new(11.0, 25.0),
            State::new(40.0, 1.0),
        ] {
            let j = jacobian_at(s, &p);
            let dx1 = drift(State::new(s.x + h, s.y), &p);
            let dx0 = drift(State::new(s.x - h, s.y), &p);
            let dy1 = drift(State::new(s.x, s.y + h), &p);
            let dy0 = drift(State::new(s.x, s.y - h), &p);
            assert_abs_diff_eq!(j[0][0], (dx1.x - dx0.x) / (2.0 * h), epsilon = 1e-5);
            assert_abs_diff_eq!(j[1][0], (dx1.y - dx0.y) / (2.0 * h), epsilon = 1e-5);
            assert_abs_diff_eq!(j[0][1], (dy1.x - dy0.x) / (2.0 * h), epsilon = 1e-5);
            assert_abs_diff_eq!(j[1][1], (dy1.y - dy0.y) / (2.0 * h), epsilon = 1e-5);
        }
    }

    #[test]
    fn eigenvalue_anchors() {
        let (l1, l2) = eigenvalues_2x2([[0.2, 0.0], [0.0, -0.25]]);
        assert_eq!((l1.re, l1.im), (-0.25, 0.0));
        assert_eq!((l2.re, l2.im), (0.2, 0.0));

        // reported spiral eigenvalues at the coexistence point, r=0.5, mu=0.14
        let z3 = coexistence_point(&defaults(0.5, 0.14)).unwrap();
        let (l1, l2) = eigenvalues_2x2(jacobian_at(z3, &defaults(0.5, 0.14)));
        assert_abs_diff_eq!(l1.re, -0.126, epsilon = 0.005);
        assert_abs_diff_eq!(l1.im.abs(), 0.220, epsilon = 0.005);
        assert_eq!(l1.re, l2.re);
        assert_eq!(l1.im, -l2.im);
    }

    #[test]
    fn spiral_eigenvalues_match_trace_determinant_route() {
        // independent evaluation through the closed-form trace and
        // determinant of the coexistence Jacobian (standard constants)
        let (r, mu) = (1.5, 0.22);
        let p = defaults(r, mu);
        let srt = (mu / (0.4 - mu)).sqrt();
        let tr = r - 0.4 * srt - 5.0 * r * (0.4 - mu) + (mu * (0.4 - mu)).sqrt();
        let det = mu * (5.0 * r * (0.4 - mu) - (mu * (0.4 - mu)).sqrt());
        let phi = 0.5 * tr;
        let psi = (det - phi * phi).sqrt();
        assert_abs_diff_eq!(phi, -0.047, epsilon = 5e-4);
        assert_abs_diff_eq!(psi, 0.501, epsilon = 5e-4);

        let z3 = coexistence_point(&p).unwrap();
        let (l1, _) = eigenvalues_2x2(jacobian_at(z3, &p));
        assert_abs_diff_eq!(l1.re, phi, epsilon = 1e-10);
        assert_abs_diff_eq!(l1.im, psi, epsilon = 1e-10);
    }

    #[test]
    fn bifurcation_curve_anchors() {
        let p = defaults(1.0, 0.1);
        assert_abs_diff_eq!(bifurcation_mu(0.2, &p), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(bifurcation_mu(1e4, &p), 0.4, epsilon = 1e-6);

        // on the curve the second eigenvalue of the prey-only Jacobian is zero
        for r in [0.1, 0.5, 1.5, 2.4] {
            let mut p = defaults(r, 0.1);
            p.mu = bifurcation_mu(r, &p);
            let j = jacobian_at(State::new(r / p.c, 0.0), &p);
            assert_abs_diff_eq!(j[1][1], 0.0, epsilon = 1e-12);
            let reports = equilibria(&p);
            assert_eq!(reports[1].stability, Stability::NonHyperbolic);
        }
    }

    #[test]
    fn classify_anchors() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        assert_eq!(classify((c(-0.2, 0.0), c(-0.05, 0.0))), Stability::StableNode);
        assert_eq!(
            classify((c(-0.13, 0.22), c(-0.13, -0.22))),
            Stability::StableSpiral
        );
        assert_eq!(classify((c(-0.25, 0.0), c(1.5, 0.0))), Stability::Saddle);
        assert_eq!(classify((c(0.3, 0.0), c(0.7, 0.0))), Stability::UnstableNode);
        assert_eq!(
            classify((c(0.1, 0.5), c(0.1, -0.5))),
            Stability::UnstableSpiral
        );
        assert_eq!(classify((c(0.0, 0.4), c(0.0, -0.4))), Stability::NonHyperbolic);
        assert_eq!(classify((c(5e-13, 0.0), c(-1.0, 0.0))), Stability::NonHyperbolic);
    }

    #[test]
    fn coexistence_stability_across_study_ranges() {
        // Claimed: a stable spiral throughout r in (0, 2.5), mu in (0, 0.22).
        // Numerically that is almost right but not literally true: the point
        // degenerates to a stable node near small mu / large r, and a Hopf
        // curve clips the extreme (r, mu) corner. Assert stability on an
        // interior sampling of the ranges and pin one corner counterexample.
        let mut spirals = 0;
        let mut nodes = 0;
        for i in 0..25 {
            for j in 0..22 {
                let r = 0.05 + 0.1 * i as f64; // up to 2.45
                let mu = 0.005 + 0.01 * j as f64; // up to 0.215
                let p = defaults(r, mu);
                if let Some(z3) = coexistence_point(&p) {
                    let rep = report_at(EquilibriumKind::Coexistence, z3, &p);
                    assert!(
                        rep.stability.is_stable(),
                        "unstable coexistence at r={r}, mu={mu}: {:?}",
                        rep.eigenvalues
                    );
                    match rep.stability {
                        Stability::StableSpiral => spirals += 1,
                        Stability::StableNode => nodes += 1,
                        _ => unreachable!(),
                    }
                }
            }
        }
        assert!(spirals > 0 && nodes > 0, "spirals={spirals} nodes={nodes}");

        // the corner counterexample, still inside the open ranges
        let p = defaults(2.499, 0.2195);
        let z3 = coexistence_point(&p).unwrap();
        let rep = report_at(EquilibriumKind::Coexistence, z3, &p);
        assert_eq!(rep.stability, Stability::UnstableSpiral);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::with_rates(1.0, 0.1).validate().is_ok());
        assert!(ModelParams::with_rates(0.0, 0.1).validate().is_err());
        assert!(ModelParams::with_rates(1.0, -0.1).validate().is_err());
        let mut p = ModelParams::with_rates(1.0, 0.1);
        p.k = f64::NAN;
        assert!(p.validate().is_err());
    }
}
