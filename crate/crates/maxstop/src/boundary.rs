//! The free-boundary ODE family in the ratio coordinate `Q = H/F`.
//!
//! Smooth fit plus the diagonal Neumann condition force any candidate
//! boundary `H` to satisfy a first-order nonlinear ODE. In the variables
//! `u = ln F(s)`, `y = ln Q`, that ODE reads `dy/du = Qcal(s, Q)` with
//!
//! ```text
//! Qcal(s, q) = [((n+1)/n - q) (gamma(s) q)^(n-m) + q - (m+1)/m]
//!              / [(g_inf - q) (1 - (gamma(s) q)^(n-m))]
//! ```
//!
//! which is regular at the left end (the `F'/F` blow-up at `s -> 0` is
//! absorbed by the coordinate) and has poles only at `q = g_inf` and at
//! the diagonal wall `gamma(s) q = 1`. Solutions split into three
//! regimes: below the zero-slope curve `zeta` they decrease forever,
//! between `zeta` and `g_inf` they increase toward a finite asymptote,
//! and above `g_inf` they decrease onto the pole. A boundary with a
//! prescribed asymptote `q_inf` is realized by anchoring at a large `s`
//! where the tail mass `1 - F(s)` is below round-off and integrating
//! backward; the asymptote is re-verified by a fresh forward pass.

use crate::error::{Error, Result};
use crate::interp::hermite;
use crate::model::{f_cap, f_cap_deriv, ModelParams};
use crate::ode::{self, Halt, Node, RkControls};

/// `u = ln F(s)`; stable at both ends of `s > 0`.
#[inline]
pub(crate) fn u_of_s(s: f64) -> f64 {
    if s < 0.5 {
        // F(s) itself is exact here; its log is the stable route.
        (-f64::exp_m1(-s)).ln()
    } else {
        (-(-s).exp()).ln_1p()
    }
}

/// Inverse map, stable at both ends of `u < 0`.
#[inline]
pub(crate) fn s_of_u(u: f64) -> f64 {
    if u > -0.5 {
        // 1 - e^u loses precision through exp for tiny |u|; exp_m1 does not.
        -(-f64::exp_m1(u)).ln()
    } else {
        -(-u.exp()).ln_1p()
    }
}

/// Integration direction for [`integrate_from`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// How an integration run left (or exhausted) its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalClass {
    /// Ran into the diagonal wall `q -> 1/gamma(s)` (backward runs from
    /// above `g_inf`).
    HitsUpperWall,
    /// Ratio underflowed to zero (not reachable in theory; kept as a
    /// defensive classification).
    HitsZero,
    /// Reached the configured end of the `s`-range with the recorded
    /// finite value.
    ConvergesFinite(f64),
    /// Decreased onto the pole `q = g_inf` from above.
    HitsGInfFromAbove,
    /// Increased onto the pole `q = g_inf` from below.
    HitsGInfFromBelow,
}

/// One dense-output segment in `(u, ln q)` coordinates.
#[derive(Debug, Clone, Copy)]
struct DenseSeg {
    u0: f64,
    y0: f64,
    d0: f64,
    u1: f64,
    y1: f64,
    d1: f64,
}

/// A sampled solution of the transformed boundary ODE.
#[derive(Debug, Clone)]
pub struct QPath {
    /// `(s, q)` pairs, strictly increasing in `s`.
    pub samples: Vec<(f64, f64)>,
    /// Left endpoint of the sampled interval; `0.0` when the run
    /// exhausted the configured range (the true interval reaches 0).
    pub s_lower: f64,
    /// Right endpoint; `f64::INFINITY` when the run exhausted the
    /// configured range (the true interval is unbounded).
    pub s_upper: f64,
    pub terminal_class: TerminalClass,
    dense: Vec<DenseSeg>,
}

impl QPath {
    /// Dense-output evaluation of `q` at `s`, `None` outside the
    /// sampled range.
    pub fn q_at(&self, s: f64) -> Option<f64> {
        if self.dense.is_empty() {
            return None;
        }
        let u = u_of_s(s);
        let first = &self.dense[0];
        let last = &self.dense[self.dense.len() - 1];
        if u < first.u0 || u > last.u1 {
            return None;
        }
        let idx = self
            .dense
            .partition_point(|seg| seg.u1 < u)
            .min(self.dense.len() - 1);
        let seg = &self.dense[idx];
        Some(hermite(seg.u0, seg.y0, seg.d0, seg.u1, seg.y1, seg.d1, u).exp())
    }

    /// Sampled `s`-range.
    pub fn sample_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }
}

/// Controls for boundary construction.
#[derive(Debug, Clone, Copy)]
pub struct OdeControls {
    /// Relative tolerance of the adaptive stepper.
    pub rtol: f64,
    /// Left end of the sampled s-range.
    pub s_min: f64,
    /// Right end of the sampled s-range (also the forward halt for
    /// [`integrate_from`]).
    pub s_max: f64,
    /// Tail-mass threshold choosing the asymptote anchor: the anchor
    /// sits where `1 - F(s) < gamma_tol`, i.e. `s ~ 23` at the default.
    pub gamma_tol: f64,
    /// Tolerance of the forward re-verification of the asymptote.
    pub asymptote_tol: f64,
    /// Refuse evaluation within this distance of `q = g_inf` or of the
    /// wall `gamma(s) q = 1`.
    pub pole_guard: f64,
    /// Anchor offset for the separatrix request `q_inf = g_inf`, whose
    /// exact anchoring is ill-posed; the result carries an O(offset)
    /// bias noted in its metadata.
    pub separatrix_offset: f64,
    /// Step cap in `u`; keeps the Hermite dense output at ~1e-10 accuracy.
    pub max_step_u: f64,
    /// Start abscissa of the forward re-verification pass.
    ///
    /// The forward flow expands perturbations at a measured rate of
    /// ~1.9 per unit of `ln F`, so re-integrating from the very left end
    /// (amplification ~e^26 from s = 1e-6) cannot resolve anything in
    /// double precision; from 1e-3 the check is still amplified ~e^13
    /// and remains a sharp consistency test.
    pub reverify_from: f64,
}

impl Default for OdeControls {
    fn default() -> Self {
        OdeControls {
            rtol: 1e-10,
            s_min: 1e-6,
            s_max: 35.0,
            gamma_tol: 1e-10,
            asymptote_tol: 1e-8,
            pole_guard: 1e-12,
            separatrix_offset: 1e-7,
            max_step_u: 0.004,
            reverify_from: 1e-3,
        }
    }
}

impl OdeControls {
    fn rk(&self) -> RkControls {
        RkControls {
            rtol: self.rtol,
            atol: 1e-12,
            h_max: self.max_step_u,
            h_min: 1e-14,
            max_steps: 400_000,
            h_frac_of_u: 0.15,
        }
    }

    /// Anchor abscissa: smallest `s` with `1 - F(s) <= gamma_tol`.
    pub fn s_anchor(&self) -> f64 {
        -self.gamma_tol.ln()
    }
}

/// Slope field `Qcal(s, q)` of `d ln Q / d ln F`.
///
/// Guards against the pole at `q = g_inf` and the wall `gamma(s) q = 1`.
pub fn q_rhs(s: f64, q: f64, params: &ModelParams) -> Result<f64> {
    let gamma = params.gamma(s)?;
    if !(q > 0.0 && gamma * q < 1.0) {
        return Err(Error::DomainError(format!(
            "(s, q) = ({s}, {q}) outside 0 < q < 1/gamma(s)"
        )));
    }
    match q_rhs_raw(s, q, params, 1e-12) {
        Ok(v) => Ok(v),
        Err(Proximity::UpperWall) => Err(Error::SingularityError(format!(
            "gamma(s) q within 1e-12 of 1 at s = {s}, q = {q}"
        ))),
        Err(_) => Err(Error::SingularityError(format!(
            "q within 1e-12 of g_inf = {} at s = {s}",
            params.g_inf
        ))),
    }
}

/// Which pole an evaluation got too close to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Proximity {
    UpperWall,
    GInfFromAbove,
    GInfFromBelow,
}

#[inline]
fn q_rhs_raw(s: f64, q: f64, params: &ModelParams, guard: f64) -> std::result::Result<f64, Proximity> {
    let gamma = f_cap(s) / s;
    let w = gamma * q;
    if 1.0 - w < guard {
        return Err(Proximity::UpperWall);
    }
    let dp = params.g_inf - q;
    if dp.abs() < guard {
        return Err(if dp < 0.0 { Proximity::GInfFromAbove } else { Proximity::GInfFromBelow });
    }
    let t = w.powf(params.n - params.m);
    let num = ((params.n + 1.0) / params.n - q) * t + q - params.h_circ_inf;
    Ok(num / (dp * (1.0 - t)))
}

/// Right-hand side of the boundary ODE in the original `(s, H)` plane.
///
/// Agrees with the chain-rule transform of [`q_rhs`]:
/// `dH/ds = F'(s) q (1 + Qcal(s, q))` with `q = h/F(s)`.
pub fn h_rhs(s: f64, h: f64, params: &ModelParams) -> Result<f64> {
    if !(s > 0.0 && h > 0.0 && h < s) {
        return Err(Error::DomainError(format!(
            "h_rhs requires 0 < h < s (got h = {h}, s = {s})"
        )));
    }
    let g = params.g_curve(s)?;
    if (g - h).abs() < 1e-12 * g.max(1.0) {
        return Err(Error::SingularityError(format!("h within guard of G(s) at s = {s}")));
    }
    if s - h < 1e-12 * s {
        return Err(Error::SingularityError(format!("h within guard of the diagonal at s = {s}")));
    }
    let t = (h / s).powf(params.n - params.m);
    let num = ((params.n + 1.0) * t - (params.m + 1.0)) * h;
    let den = -params.m * params.n * (g - h) * (1.0 - t);
    Ok(f_cap_deriv(s) * num / den)
}

/// Outcome of a single directed leg.
struct Leg {
    nodes: Vec<Node>,
    end: LegEnd,
}

enum LegEnd {
    Range,
    Terminal(TerminalClass),
}

fn integrate_leg(
    params: &ModelParams,
    ctl: &OdeControls,
    u0: f64,
    y0: f64,
    u_end: f64,
) -> Result<Leg> {
    let guard = ctl.pole_guard;
    let mut hard_stop: Option<TerminalClass> = None;
    let run = ode::integrate(
        |u, y| q_rhs_raw(s_of_u(u), y.exp(), params, guard),
        u0,
        y0,
        u_end,
        &ctl.rk(),
        |u, y| {
            let s = s_of_u(u);
            let q = y.exp();
            let wall = 1.0 - f_cap(s) / s * q;
            let dp = q - params.g_inf;
            if wall <= guard {
                hard_stop = Some(TerminalClass::HitsUpperWall);
                false
            } else if dp.abs() <= guard {
                hard_stop = Some(if dp > 0.0 {
                    TerminalClass::HitsGInfFromAbove
                } else {
                    TerminalClass::HitsGInfFromBelow
                });
                false
            } else if y < -690.0 {
                hard_stop = Some(TerminalClass::HitsZero);
                false
            } else {
                true
            }
        },
    );

    let nodes = run.nodes;
    let end = match run.halt {
        Halt::ReachedEnd => match hard_stop {
            Some(class) => LegEnd::Terminal(class),
            None => LegEnd::Range,
        },
        Halt::RhsGuard(p) => LegEnd::Terminal(match p {
            Proximity::UpperWall => TerminalClass::HitsUpperWall,
            Proximity::GInfFromAbove => TerminalClass::HitsGInfFromAbove,
            Proximity::GInfFromBelow => TerminalClass::HitsGInfFromBelow,
        }),
        Halt::StepUnderflow | Halt::MaxSteps => {
            // The controller stalled; attribute it to the nearest pole if
            // one is plausibly responsible, otherwise report the stall.
            let last = nodes.last().expect("at least the initial node");
            let s = s_of_u(last.u);
            let q = last.y.exp();
            let wall = 1.0 - f_cap(s) / s * q;
            let dp = q - params.g_inf;
            if wall < 1e-4 {
                LegEnd::Terminal(TerminalClass::HitsUpperWall)
            } else if dp.abs() < 1e-4 {
                LegEnd::Terminal(if dp > 0.0 {
                    TerminalClass::HitsGInfFromAbove
                } else {
                    TerminalClass::HitsGInfFromBelow
                })
            } else if q < 1e-12 {
                LegEnd::Terminal(TerminalClass::HitsZero)
            } else {
                return Err(Error::StepFailure { s, q });
            }
        }
    };
    Ok(Leg { nodes, end })
}

/// Builds a QPath from legs whose nodes are already ascending in `u`.
fn path_from_nodes(nodes: Vec<Node>, s_lower: f64, s_upper: f64, terminal: TerminalClass) -> QPath {
    let samples: Vec<(f64, f64)> = nodes.iter().map(|n| (s_of_u(n.u), n.y.exp())).collect();
    let dense: Vec<DenseSeg> = nodes
        .windows(2)
        .map(|w| DenseSeg {
            u0: w[0].u,
            y0: w[0].y,
            d0: w[0].dy,
            u1: w[1].u,
            y1: w[1].y,
            d1: w[1].dy,
        })
        .collect();
    QPath { samples, s_lower, s_upper, terminal_class: terminal, dense }
}

/// Integrates the transformed ODE from `(s0, q0)` in one direction.
///
/// Runs in `u = ln F(s)`, halting when the configured range end is
/// reached or the solution leaves the domain by the pole guard.
pub fn integrate_from(
    s0: f64,
    q0: f64,
    direction: Direction,
    params: &ModelParams,
    controls: &OdeControls,
) -> Result<QPath> {
    if !(s0 > 0.0 && q0 > 0.0) {
        return Err(Error::DomainError(format!("start (s0, q0) = ({s0}, {q0}) not positive")));
    }
    let gamma0 = params.gamma(s0)?;
    if gamma0 * q0 >= 1.0 {
        return Err(Error::DomainError(format!(
            "start q0 = {q0} at or above the wall 1/gamma(s0) = {}",
            1.0 / gamma0
        )));
    }
    if (q0 - params.g_inf).abs() < controls.pole_guard {
        return Err(Error::SingularityError("start on the pole q = g_inf".into()));
    }

    let u0 = u_of_s(s0);
    let u_end = match direction {
        Direction::Forward => u_of_s(controls.s_max),
        Direction::Backward => u_of_s(controls.s_min),
    };
    let leg = integrate_leg(params, controls, u0, q0.ln(), u_end)?;

    let mut nodes = leg.nodes;
    if direction == Direction::Backward {
        nodes.reverse();
    }
    let terminal = match leg.end {
        LegEnd::Range => {
            let far = match direction {
                Direction::Forward => nodes.last(),
                Direction::Backward => nodes.first(),
            };
            TerminalClass::ConvergesFinite(far.expect("nonempty").y.exp())
        }
        LegEnd::Terminal(c) => c,
    };
    let s_first = s_of_u(nodes.first().expect("nonempty").u);
    let s_last = s_of_u(nodes.last().expect("nonempty").u);
    let (s_lower, s_upper) = match (direction, matches!(terminal, TerminalClass::ConvergesFinite(_))) {
        (Direction::Backward, true) => (0.0, s_last),
        (Direction::Backward, false) => (s_first, s_last),
        (Direction::Forward, true) => (s_first, f64::INFINITY),
        (Direction::Forward, false) => (s_first, s_last),
    };
    Ok(path_from_nodes(nodes, s_lower, s_upper, terminal))
}

/// A boundary candidate `H(s) = F(s) Q(s)` with a prescribed asymptote.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub q_path: QPath,
    /// `(s, H(s))` on the sample grid.
    pub h_samples: Vec<(f64, f64)>,
    /// Requested asymptote `lim H(s) = lim Q(s)`.
    pub h_inf: f64,
    /// Whether `h_inf` matches the optimal asymptote `(m+1)/m` to 1e-6.
    pub is_optimal: bool,
    /// Forward re-verification error at the anchor.
    pub reverify_error: f64,
    /// Set for the separatrix, whose anchor carries an O(offset) bias.
    pub asymptote_note: Option<String>,
}

impl BoundaryCurve {
    /// `Q` with constant continuation beyond the sampled range.
    pub fn q_at(&self, s: f64) -> f64 {
        match self.q_path.q_at(s) {
            Some(q) => q,
            None => {
                let (s_lo, _) = self.q_path.sample_range();
                if s < s_lo {
                    self.q_path.samples[0].1
                } else {
                    self.q_path.samples[self.q_path.samples.len() - 1].1
                }
            }
        }
    }

    /// `H(s)` extended by `F(s) * q` with the nearest sampled ratio
    /// outside the range (the right extension realizes the asymptote).
    pub fn h_at(&self, s: f64) -> f64 {
        f_cap(s) * self.q_at(s)
    }

    /// `H(s)` restricted to the sampled range.
    pub fn h_at_strict(&self, s: f64) -> Result<f64> {
        match self.q_path.q_at(s) {
            Some(q) => Ok(f_cap(s) * q),
            None => {
                let (lo, hi) = self.q_path.sample_range();
                Err(Error::ExtrapolationError(format!(
                    "s = {s} outside boundary sample range [{lo}, {hi}]"
                )))
            }
        }
    }

    pub fn sample_range(&self) -> (f64, f64) {
        self.q_path.sample_range()
    }

    /// Multiplies the boundary by a constant factor.
    ///
    /// The result is no longer an ODE solution; it exists so that the
    /// verification layers can demonstrate their sensitivity to
    /// non-solutions.
    pub fn scaled(&self, factor: f64) -> BoundaryCurve {
        assert!(factor > 0.0, "scale factor must be positive");
        let ln_f = factor.ln();
        let mut q_path = self.q_path.clone();
        for (_, q) in q_path.samples.iter_mut() {
            *q *= factor;
        }
        for seg in q_path.dense.iter_mut() {
            seg.y0 += ln_f;
            seg.y1 += ln_f;
        }
        BoundaryCurve {
            q_path,
            h_samples: self.h_samples.iter().map(|&(s, h)| (s, h * factor)).collect(),
            h_inf: self.h_inf * factor,
            is_optimal: false,
            reverify_error: self.reverify_error,
            asymptote_note: Some(format!("scaled by {factor}; not an ODE solution")),
        }
    }
}

/// Constructs the unique boundary with `lim_{s->inf} Q(s) = q_inf`.
///
/// Anchors at `s_anchor` (tail mass below `gamma_tol`, so the remaining
/// motion of `Q` past the anchor is below round-off), integrates backward
/// to `s_min` and forward to `s_max`, then re-verifies by an independent
/// forward pass from the left end back up to the anchor.
pub fn solve_with_asymptote(
    q_inf: f64,
    params: &ModelParams,
    controls: &OdeControls,
) -> Result<BoundaryCurve> {
    if !(q_inf > 0.0 && q_inf <= params.g_inf) {
        return Err(Error::DomainError(format!(
            "q_inf = {q_inf} outside ]0, g_inf = {}]",
            params.g_inf
        )));
    }
    let s_anchor = controls.s_anchor();
    if s_anchor >= controls.s_max {
        return Err(Error::InvalidParam(format!(
            "s_max = {} must exceed the anchor {s_anchor}",
            controls.s_max
        )));
    }

    // Exact anchoring on g_inf sits on the pole; back off by the
    // documented offset.
    let near_separatrix = params.g_inf - q_inf < controls.separatrix_offset;
    let q_anchor = if near_separatrix { params.g_inf - controls.separatrix_offset } else { q_inf };
    let u_anchor = u_of_s(s_anchor);
    let y_anchor = q_anchor.ln();

    let back = integrate_leg(params, controls, u_anchor, y_anchor, u_of_s(controls.s_min))?;
    if let LegEnd::Terminal(class) = back.end {
        return Err(Error::ShootingFailure(format!(
            "backward leg for q_inf = {q_inf} left the domain ({class:?}) at s = {:.3e}",
            s_of_u(back.nodes.last().map(|n| n.u).unwrap_or(u_anchor))
        )));
    }

    let fwd = integrate_leg(params, controls, u_anchor, y_anchor, u_of_s(controls.s_max))?;
    match fwd.end {
        LegEnd::Range | LegEnd::Terminal(TerminalClass::HitsGInfFromBelow) => {}
        LegEnd::Terminal(class) => {
            return Err(Error::ShootingFailure(format!(
                "forward continuation for q_inf = {q_inf} terminated as {class:?}"
            )));
        }
    }

    // Merge: backward nodes reversed, anchor shared, forward tail.
    let mut nodes = back.nodes;
    nodes.reverse();
    nodes.extend(fwd.nodes.into_iter().skip(1));
    let path = path_from_nodes(nodes, 0.0, f64::INFINITY, TerminalClass::ConvergesFinite(q_inf));

    // Independent forward pass checked against the constructed curve.
    // Regular members run all the way to the anchor, where the curve
    // equals `q_anchor` by construction. The separatrix instead gets a
    // mid-range consistency segment: its pole-hugging tail amplifies
    // perturbations without bound, so integrating into it proves nothing.
    let (s_rv, s_check, tol) = if near_separatrix {
        (
            controls.reverify_from.max(1.0),
            s_anchor.min(5.0),
            controls.asymptote_tol.max(10.0 * controls.separatrix_offset),
        )
    } else {
        (controls.reverify_from.max(controls.s_min), s_anchor, controls.asymptote_tol)
    };
    let y_rv = path
        .q_at(s_rv)
        .ok_or_else(|| Error::ShootingFailure(format!("re-verification start {s_rv} not sampled")))?
        .ln();
    let q_target = path
        .q_at(s_check)
        .ok_or_else(|| Error::ShootingFailure(format!("re-verification target {s_check} not sampled")))?;
    let verify = integrate_leg(params, controls, u_of_s(s_rv), y_rv, u_of_s(s_check))?;
    let reverify_error = match verify.end {
        LegEnd::Range => {
            let q_end = verify.nodes.last().expect("nonempty").y.exp();
            (q_end - q_target).abs()
        }
        LegEnd::Terminal(class) => {
            return Err(Error::ShootingFailure(format!(
                "re-verification for q_inf = {q_inf} left the domain ({class:?})"
            )));
        }
    };
    if reverify_error > tol {
        return Err(Error::ShootingFailure(format!(
            "asymptote re-verification error {reverify_error:.3e} exceeds {tol:.3e} for q_inf = {q_inf}"
        )));
    }
    let h_samples: Vec<(f64, f64)> = path.samples.iter().map(|&(s, q)| (s, f_cap(s) * q)).collect();
    let is_optimal = (q_inf - params.h_circ_inf).abs() < 1e-6;
    let asymptote_note = near_separatrix.then(|| {
        format!(
            "separatrix anchored at g_inf - {:.1e}; carries an O(offset) bias",
            controls.separatrix_offset
        )
    });
    Ok(BoundaryCurve {
        q_path: path,
        h_samples,
        h_inf: q_inf,
        is_optimal,
        reverify_error,
        asymptote_note,
    })
}

/// One member of a plotted/compared curve family.
#[derive(Debug)]
pub struct FamilyMember {
    pub curve_id: String,
    /// Prescribed asymptote for boundary members; `None` for curves
    /// started above `g_inf`.
    pub q_inf: Option<f64>,
    /// Starting point for above-`g_inf` curves.
    pub start: Option<(f64, f64)>,
    pub outcome: Result<FamilyCurve>,
}

#[derive(Debug)]
pub enum FamilyCurve {
    Boundary(BoundaryCurve),
    Path(QPath),
}

/// The full qualitative picture: asymptote-indexed boundaries plus
/// optional decreasing curves started above `g_inf`.
#[derive(Debug)]
pub struct CurveFamily {
    pub members: Vec<FamilyMember>,
}

impl CurveFamily {
    /// Successfully built boundary members, in input order.
    pub fn boundaries(&self) -> impl Iterator<Item = (&str, &BoundaryCurve)> {
        self.members.iter().filter_map(|m| match &m.outcome {
            Ok(FamilyCurve::Boundary(b)) => Some((m.curve_id.as_str(), b)),
            _ => None,
        })
    }
}

/// Builds a family of boundaries (one per `q_inf`) and, optionally,
/// decreasing curves from starts in the region above `g_inf`.
///
/// Construction failures are recorded per member and do not abort the
/// rest of the family.
pub fn curve_family(
    q_inf_list: &[f64],
    u_minus_starts: &[(f64, f64)],
    params: &ModelParams,
    controls: &OdeControls,
) -> CurveFamily {
    let mut members = Vec::new();
    for (i, &q_inf) in q_inf_list.iter().enumerate() {
        members.push(FamilyMember {
            curve_id: format!("b{i}"),
            q_inf: Some(q_inf),
            start: None,
            outcome: solve_with_asymptote(q_inf, params, controls)
                .map(FamilyCurve::Boundary),
        });
    }
    for (i, &(s0, q0)) in u_minus_starts.iter().enumerate() {
        let outcome = u_minus_curve(s0, q0, params, controls).map(FamilyCurve::Path);
        members.push(FamilyMember {
            curve_id: format!("u{i}"),
            q_inf: None,
            start: Some((s0, q0)),
            outcome,
        });
    }
    CurveFamily { members }
}

/// Like [`worst_ode_residual`] but returning the argmax location.
pub fn worst_ode_residual_at(
    curve: &BoundaryCurve,
    params: &ModelParams,
    s_lo: f64,
    s_hi: f64,
) -> (f64, f64) {
    let (c_lo, c_hi) = curve.sample_range();
    let lo = s_lo.max(c_lo * (1.0 + 1e-9));
    let hi = s_hi.min(c_hi * (1.0 - 1e-9));
    let nprobe = 4000;
    let mut worst: f64 = 0.0;
    let mut at = lo;
    for k in 0..=nprobe {
        let s = lo * (hi / lo).powf(k as f64 / nprobe as f64);
        let u = u_of_s(s);
        let du = 2.5e-4_f64.min(0.2 * u.abs());
        let (um, up) = (u - du, u + du);
        if um <= u_of_s(c_lo) || up >= u_of_s(c_hi) {
            continue;
        }
        let q = curve.q_at(s);
        let qm = curve.q_at(s_of_u(um));
        let qp = curve.q_at(s_of_u(up));
        let slope = (qp.ln() - qm.ln()) / (2.0 * du);
        if let Ok(rhs) = q_rhs(s, q, params) {
            let r = (slope - rhs).abs();
            if r > worst {
                worst = r;
                at = s;
            }
        }
    }
    (worst, at)
}

/// Verification diagnostic: worst |centered difference of ln Q minus
/// Qcal| over a refined log-spaced `s`-grid inside `[s_lo, s_hi]`.
///
/// The difference step shrinks with |u| because `u = ln F(s)` compresses
/// exponentially as `F` saturates; a fixed step would straddle decades
/// of `s` there and measure nothing. Past `s ~ 18` the increments of
/// `ln Q` drop below one ulp and the metric itself loses meaning, so
/// callers should cap `s_hi` there.
pub fn worst_ode_residual(
    curve: &BoundaryCurve,
    params: &ModelParams,
    s_lo: f64,
    s_hi: f64,
) -> f64 {
    let (c_lo, c_hi) = curve.sample_range();
    let lo = s_lo.max(c_lo * (1.0 + 1e-9));
    let hi = s_hi.min(c_hi * (1.0 - 1e-9));
    let nprobe = 4000;
    let mut worst: f64 = 0.0;
    for k in 0..=nprobe {
        let s = lo * (hi / lo).powf(k as f64 / nprobe as f64);
        let u = u_of_s(s);
        let du = 2.5e-4_f64.min(0.2 * u.abs());
        let (um, up) = (u - du, u + du);
        if um <= u_of_s(c_lo) || up >= u_of_s(c_hi) {
            continue;
        }
        let q = curve.q_at(s);
        let qm = curve.q_at(s_of_u(um));
        let qp = curve.q_at(s_of_u(up));
        let slope = (qp.ln() - qm.ln()) / (2.0 * du);
        match q_rhs(s, q, params) {
            Ok(rhs) => worst = worst.max((slope - rhs).abs()),
            Err(_) => continue,
        }
    }
    worst
}

/// Two-sided integration of a start above `g_inf`, merged into one path.
fn u_minus_curve(s0: f64, q0: f64, params: &ModelParams, controls: &OdeControls) -> Result<QPath> {
    let gamma0 = params.gamma(s0)?;
    if !(q0 > params.g_inf && q0 < 1.0 / gamma0) {
        return Err(Error::DomainError(format!(
            "start (s0, q0) = ({s0}, {q0}) not in g_inf < q < 1/gamma(s0)"
        )));
    }
    let back = integrate_from(s0, q0, Direction::Backward, params, controls)?;
    let fwd = integrate_from(s0, q0, Direction::Forward, params, controls)?;
    let mut samples = back.samples;
    samples.extend(fwd.samples.into_iter().skip(1));
    let mut dense = back.dense;
    dense.extend(fwd.dense);
    Ok(QPath {
        samples,
        s_lower: back.s_lower,
        s_upper: fwd.s_upper,
        terminal_class: fwd.terminal_class,
        dense,
    })
}
