//! Model constants and the elementary curves of the stopping problem.
//!
//! The state is a geometric Brownian motion `dX = mu X dt + sigma X dW`
//! together with its running maximum `S`, and the payoff collected at a
//! stopping time is `(F(S)/X - 1)^+` with the saturating cap
//! `F(s) = 1 - exp(-s)`. Everything downstream (the free-boundary ODE,
//! the candidate value functions, the finite-difference oracle and the
//! simulator) is driven by the constants and scalar curves defined here:
//!
//! * the characteristic roots `m < 0 < n` of
//!   `sigma^2/2 k^2 + (mu - sigma^2/2) k - r = 0`,
//! * the hold-region ceiling `G(s) = G_inf F(s)` where the generator of
//!   the payoff changes sign,
//! * `gamma(s) = F(s)/s` and the auxiliary increasing map `theta`, whose
//!   inverse yields the zero-slope curve `zeta(s)` of the transformed
//!   boundary ODE.

use crate::error::{Error, Result};

/// Market constants plus every derived quantity the solvers need.
///
/// Immutable after construction; all methods are pure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Drift rate of the GBM.
    pub mu: f64,
    /// Volatility (nonzero; only sigma^2 enters the equations).
    pub sigma: f64,
    /// Discount rate (positive).
    pub r: f64,
    /// Negative characteristic root.
    pub m: f64,
    /// Positive characteristic root.
    pub n: f64,
    /// Large-s limit of G: `(m+1)(n+1)/(mn)`, in ]0, 1].
    pub g_inf: f64,
    /// Asymptote of the optimal boundary: `(m+1)/m`, in ]0, g_inf[.
    pub h_circ_inf: f64,
    /// Left limit of `zeta`; the unique root of `theta(q) = 1`.
    pub q_dagger: f64,
}

/// Saturating payoff cap `F(s) = 1 - exp(-s)`.
#[inline]
pub fn f_cap(s: f64) -> f64 {
    -f64::exp_m1(-s)
}

/// Derivative `F'(s) = exp(-s)`.
#[inline]
pub fn f_cap_deriv(s: f64) -> f64 {
    (-s).exp()
}

impl ModelParams {
    /// Derives all model constants from `(mu, sigma, r)`.
    ///
    /// Requires `r > 0`, `sigma != 0` and the standing assumption
    /// `mu <= sigma^2 < r + mu` (the second inequality strict, the first
    /// not). The roots are computed with the cancellation-free form of
    /// the quadratic formula since they feed every downstream exponent.
    pub fn new(mu: f64, sigma: f64, r: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && r.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "non-finite input: mu = {mu}, sigma = {sigma}, r = {r}"
            )));
        }
        if r <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "discount rate r must be positive (got {r})"
            )));
        }
        if sigma == 0.0 {
            return Err(Error::InvalidParam("volatility sigma must be nonzero".into()));
        }
        let s2 = sigma * sigma;
        if s2 >= r + mu {
            return Err(Error::AssumptionViolated(format!(
                "sigma^2 < r + mu fails: sigma^2 = {s2} >= r + mu = {}",
                r + mu
            )));
        }
        if s2 < mu {
            return Err(Error::AssumptionViolated(format!(
                "sigma^2 >= mu fails: sigma^2 = {s2} < mu = {mu}"
            )));
        }

        // 1/2 s2 k^2 + (mu - 1/2 s2) k - r = 0, solved without subtractive
        // cancellation regardless of the sign of the linear coefficient.
        let a = 0.5 * s2;
        let b = mu - 0.5 * s2;
        let disc = (b * b + 2.0 * r * s2).sqrt();
        let qq = if b >= 0.0 { -0.5 * (b + disc) } else { 0.5 * (disc - b) };
        let (root1, root2) = (qq / a, -r / qq);
        let (m, n) = if root1 < root2 { (root1, root2) } else { (root2, root1) };

        let g_inf = (m + 1.0) * (n + 1.0) / (m * n);
        let h_circ_inf = (m + 1.0) / m;

        let mut params = ModelParams {
            mu,
            sigma,
            r,
            m,
            n,
            g_inf,
            h_circ_inf,
            q_dagger: f64::NAN,
        };
        params.q_dagger = params.invert_theta(1.0)?;
        Ok(params)
    }

    /// Stopped payoff `(F(s)/x - 1)^+` for `0 < x <= s`.
    pub fn reward(&self, x: f64, s: f64) -> Result<f64> {
        if !(x > 0.0 && x <= s) {
            return Err(Error::DomainError(format!(
                "reward requires 0 < x <= s (got x = {x}, s = {s})"
            )));
        }
        Ok((f_cap(s) / x - 1.0).max(0.0))
    }

    /// Hold-region ceiling `G(s) = g_inf * F(s)` for `s > 0`.
    pub fn g_curve(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::DomainError(format!("g_curve requires s > 0 (got {s})")));
        }
        Ok(self.g_inf * f_cap(s))
    }

    /// `gamma(s) = F(s)/s`, strictly decreasing from 1 to 0.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::DomainError(format!("gamma requires s > 0 (got {s})")));
        }
        // Series head for tiny s; the direct quotient loses nothing for
        // moderate s thanks to exp_m1.
        if s < 1e-8 {
            Ok(1.0 - 0.5 * s + s * s / 6.0)
        } else {
            Ok(f_cap(s) / s)
        }
    }

    /// Strictly increasing auxiliary map on `]0, (m+1)/m[` with
    /// `theta(0+) = 0` and `theta -> inf` at the right endpoint.
    pub fn theta(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < self.h_circ_inf) {
            return Err(Error::DomainError(format!(
                "theta requires 0 < q < (m+1)/m = {} (got {q})",
                self.h_circ_inf
            )));
        }
        let top = (self.n + 1.0) / self.n - q;
        let bot = self.h_circ_inf - q;
        Ok(q * (top / bot).powf(1.0 / (self.n - self.m)))
    }

    /// Inverse of [`theta`](Self::theta) by bisection to absolute
    /// tolerance 1e-12.
    ///
    /// Bisection rather than Newton: theta has an unbounded derivative
    /// at the right endpoint, so bracketing is the only safe play.
    pub fn invert_theta(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::DomainError(format!("invert_theta requires y > 0 (got {y})")));
        }
        let (mut lo, mut hi) = (0.0_f64, self.h_circ_inf);
        let mut iters = 0;
        while hi - lo > 1e-12 && iters < 200 {
            let mid = 0.5 * (lo + hi);
            // theta is strictly increasing, so the bracket never collapses
            // onto an endpoint where it is undefined.
            if self.theta(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
        }
        Ok(0.5 * (lo + hi))
    }

    /// Zero-slope curve `zeta(s) = theta^{-1}(1/gamma(s))` of the
    /// transformed boundary ODE; increases from `q_dagger` to `(m+1)/m`.
    pub fn zeta(&self, s: f64) -> Result<f64> {
        let g = self.gamma(s)?;
        self.invert_theta(1.0 / g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference parameter set used across the crate's tests:
    /// mu = 0.05, sigma^2 = 0.2, r = 0.25.
    pub(crate) fn reference() -> ModelParams {
        ModelParams::new(0.05, 0.2_f64.sqrt(), 0.25).unwrap()
    }

    #[test]
    fn roots_match_vieta_for_reference_params() {
        let p = reference();
        // Sum and product of roots of 1/2 s2 k^2 + (mu - 1/2 s2) k - r.
        assert!((p.m + p.n - 0.5).abs() < 1e-12);
        assert!((p.m * p.n + 2.5).abs() < 1e-12);
    }

    #[test]
    fn reference_constants() {
        let p = reference();
        assert!((p.n - 1.850781059358212).abs() < 1e-12);
        assert!((p.m + 1.350781059358212).abs() < 1e-12);
        assert!((p.g_inf - 0.4).abs() < 1e-12);
        assert!((p.h_circ_inf - 0.259687576256715).abs() < 1e-12);
        // q_dagger is only defined through theta^{-1}(1); frozen from an
        // independent 40-digit bisection.
        assert!((p.q_dagger - 0.245289718097841).abs() < 1e-10);
        let t = p.theta(p.q_dagger).unwrap();
        assert!((t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn assumption_violations_name_the_inequality() {
        // sigma^2 = 0.2 < mu = 0.3 breaks the second condition.
        let err = ModelParams::new(0.3, 0.2_f64.sqrt(), 0.25).unwrap_err();
        match err {
            Error::AssumptionViolated(msg) => assert!(msg.contains("sigma^2 >= mu")),
            other => panic!("expected AssumptionViolated, got {other:?}"),
        }
        // sigma^2 = 0.5 >= r + mu = 0.3 breaks the first.
        let err = ModelParams::new(0.05, 0.5_f64.sqrt(), 0.25).unwrap_err();
        match err {
            Error::AssumptionViolated(msg) => assert!(msg.contains("sigma^2 < r + mu")),
            other => panic!("expected AssumptionViolated, got {other:?}"),
        }
        assert!(matches!(
            ModelParams::new(0.05, 0.2_f64.sqrt(), 0.0),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(ModelParams::new(0.05, 0.0, 0.25), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn equality_edge_sigma_sq_equals_mu_is_accepted() {
        // m + n + 1 = 0 exactly; the assumption uses ">=". Build mu from
        // the rounded square so the equality is exact in doubles.
        let sigma = 0.2_f64.sqrt();
        let p = ModelParams::new(sigma * sigma, sigma, 0.25).unwrap();
        assert!((p.m + p.n + 1.0).abs() < 1e-12);
        assert!(p.g_inf > 0.0 && p.g_inf <= 1.0 + 1e-12);
    }

    #[test]
    fn reward_examples() {
        let p = reference();
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(p.reward(0.5, ln2).unwrap(), 0.0);
        assert!((p.reward(0.25, ln2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.reward(2.0, 4.0).unwrap(), 0.0);
        assert!(p.reward(-1.0, 1.0).is_err());
        assert!(p.reward(2.0, 1.0).is_err());
    }

    #[test]
    fn g_curve_examples_and_limits() {
        let p = reference();
        let ln2 = std::f64::consts::LN_2;
        assert!((p.g_curve(ln2).unwrap() - 0.2).abs() < 1e-14);
        assert!(p.g_curve(1e-12).unwrap() < 1e-11);
        assert!((p.g_curve(60.0).unwrap() - p.g_inf).abs() < 1e-15);
        assert!(p.g_curve(0.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let p = reference();
        let ln2 = std::f64::consts::LN_2;
        assert!((p.gamma(1e-12).unwrap() - 1.0).abs() < 1e-11);
        assert!((p.gamma(ln2).unwrap() - 0.721347520444482).abs() < 1e-12);
        assert!((p.gamma(20.0).unwrap() - 0.05).abs() < 1e-8);
        assert!(p.gamma(-1.0).is_err());
    }

    #[test]
    fn theta_examples_and_round_trip() {
        let p = reference();
        assert!(p.theta(1e-12).unwrap() < 1e-10);
        assert!((p.theta(0.2).unwrap() - 0.528581680376512).abs() < 1e-12);
        assert!(p.theta(0.2).unwrap() < p.theta(0.25).unwrap());
        let q = p.invert_theta(p.theta(0.15).unwrap()).unwrap();
        assert!((q - 0.15).abs() < 1e-10);
        assert!(p.theta(p.h_circ_inf).is_err());
    }

    #[test]
    fn zeta_limits_and_frozen_values() {
        let p = reference();
        // s -> 0+: zeta -> q_dagger; s -> inf: zeta -> (m+1)/m.
        assert!((p.zeta(1e-9).unwrap() - p.q_dagger).abs() < 1e-8);
        assert!((p.zeta(1e3).unwrap() - p.h_circ_inf).abs() < 1e-9);
        // Frozen 40-digit values.
        assert!((p.zeta(0.5).unwrap() - 0.252401490793135).abs() < 1e-11);
        assert!((p.zeta(1.0).unwrap() - 0.255920887572258).abs() < 1e-11);
        assert!((p.zeta(5.0).unwrap() - 0.259590955563618).abs() < 1e-11);
    }

    #[test]
    fn zeta_splits_the_numerator_sign() {
        let p = reference();
        let num = |s: f64, q: f64| {
            let t = (p.gamma(s).unwrap() * q).powf(p.n - p.m);
            ((p.n + 1.0) / p.n - q) * t + q - p.h_circ_inf
        };
        for &s in &[0.05, 0.3, 1.0, 4.0, 15.0] {
            let z = p.zeta(s).unwrap();
            assert!(num(s, z * (1.0 - 1e-6)) < 0.0, "s = {s}");
            assert!(num(s, z * (1.0 + 1e-6)) > 0.0, "s = {s}");
        }
    }

    #[test]
    fn curve_monotonicity_on_grids() {
        let p = reference();
        let mut prev_g = 0.0;
        let mut prev_gamma = f64::INFINITY;
        let mut prev_zeta = 0.0;
        for i in 1..=60 {
            let s = 1e-3 * (30.0_f64 / 1e-3).powf(i as f64 / 60.0);
            let g = p.g_curve(s).unwrap();
            let ga = p.gamma(s).unwrap();
            let z = p.zeta(s).unwrap();
            assert!(g > prev_g && g < s);
            assert!(ga < prev_gamma);
            assert!(z >= prev_zeta);
            prev_g = g;
            prev_gamma = ga;
            prev_zeta = z;
        }
        let mut prev_t = 0.0;
        for i in 1..60 {
            let q = p.h_circ_inf * i as f64 / 60.0;
            let t = p.theta(q).unwrap();
            assert!(t > prev_t);
            prev_t = t;
        }
    }

    proptest! {
        /// Root residual and the ordering chain over random admissible
        /// parameter triples.
        #[test]
        fn root_residual_and_ordering(
            mu in -0.5_f64..1.0,
            r in 0.05_f64..1.0,
            t in 0.01_f64..0.99,
        ) {
            prop_assume!(r + mu > 0.02);
            let lo = mu.max(0.0);
            let s2 = lo + t * (r + mu - lo);
            prop_assume!(s2 > 1e-6);
            let p = ModelParams::new(mu, s2.sqrt(), r).unwrap();
            for k in [p.m, p.n] {
                let res = 0.5 * s2 * k * k + (mu - 0.5 * s2) * k - r;
                prop_assert!(res.abs() < 1e-12 * r);
            }
            prop_assert!(0.0 < p.q_dagger);
            prop_assert!(p.q_dagger < p.h_circ_inf);
            prop_assert!(p.h_circ_inf < p.g_inf);
            prop_assert!(p.g_inf <= 1.0 + 1e-12);
        }
    }
}
