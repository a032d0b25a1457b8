//! Scalar adaptive Runge-Kutta integration (Dormand-Prince 5(4)).
//!
//! The boundary ODE is integrated in a transformed coordinate where it is
//! regular except at interior poles, so a plain embedded-pair controller
//! with FSAL is enough. Accepted nodes carry the slope, which gives a
//! C^1 cubic-Hermite dense output between nodes.

/// Controller settings for one integration run.
#[derive(Debug, Clone, Copy)]
pub struct RkControls {
    /// Relative tolerance of the embedded error estimate.
    pub rtol: f64,
    /// Absolute tolerance floor.
    pub atol: f64,
    /// Cap on |step|; keeps the Hermite dense output at full accuracy.
    pub h_max: f64,
    /// |step| below this is treated as underflow.
    pub h_min: f64,
    /// Hard cap on attempted steps.
    pub max_steps: usize,
    /// When positive, additionally cap |step| at this fraction of the
    /// distance |u| to the origin. The boundary ODE's independent
    /// variable has a logarithmic singularity at u = 0; without the cap
    /// a single segment can span decades of the original scale and the
    /// cubic dense output degrades there.
    pub h_frac_of_u: f64,
}

impl Default for RkControls {
    fn default() -> Self {
        RkControls {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: 0.01,
            h_min: 1e-14,
            max_steps: 400_000,
            h_frac_of_u: 0.0,
        }
    }
}

/// An accepted node `(u, y, dy/du)`.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub u: f64,
    pub y: f64,
    pub dy: f64,
}

/// Why the run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Halt<E> {
    /// Reached `u_end`.
    ReachedEnd,
    /// The right-hand side refused evaluation at or next to the last
    /// accepted node.
    RhsGuard(E),
    /// The controller shrank the step below `h_min`.
    StepUnderflow,
    /// `max_steps` exceeded.
    MaxSteps,
}

/// Accepted trajectory plus the halt reason.
#[derive(Debug, Clone)]
pub struct Integration<E> {
    pub nodes: Vec<Node>,
    pub halt: Halt<E>,
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// b - b* (5th order minus embedded 4th order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Integrates `dy/du = rhs(u, y)` from `u0` to `u_end` (either direction).
///
/// The right-hand side may refuse evaluation (`Err`) near a pole; a
/// refused trial step is retried at half the size until it either fits or
/// underflows. `inspect` is called at every accepted node and may stop
/// the run early by returning `false`.
pub fn integrate<E, F, I>(
    mut rhs: F,
    u0: f64,
    y0: f64,
    u_end: f64,
    ctl: &RkControls,
    mut inspect: I,
) -> Integration<E>
where
    F: FnMut(f64, f64) -> Result<f64, E>,
    I: FnMut(f64, f64) -> bool,
{
    let mut nodes = Vec::new();
    let dir = if u_end >= u0 { 1.0 } else { -1.0 };
    let span = (u_end - u0).abs();
    if span == 0.0 {
        if let Ok(dy) = rhs(u0, y0) {
            nodes.push(Node { u: u0, y: y0, dy });
        }
        return Integration { nodes, halt: Halt::ReachedEnd };
    }

    let mut u = u0;
    let mut y = y0;
    let mut k1 = match rhs(u, y) {
        Ok(v) => v,
        Err(e) => return Integration { nodes, halt: Halt::RhsGuard(e) },
    };
    nodes.push(Node { u, y, dy: k1 });
    if !inspect(u, y) {
        return Integration { nodes, halt: Halt::ReachedEnd };
    }

    let mut h = dir * ctl.h_max.min(span / 10.0).max(ctl.h_min);
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > ctl.max_steps {
            return Integration { nodes, halt: Halt::MaxSteps };
        }
        if ctl.h_frac_of_u > 0.0 {
            let cap = (ctl.h_frac_of_u * u.abs()).max(ctl.h_min);
            if h.abs() > cap {
                h = dir * cap;
            }
        }
        // Land exactly on u_end.
        if (u + h - u_end) * dir > 0.0 {
            h = u_end - u;
        }

        let trial = try_step(&mut rhs, u, y, k1, h);
        let (y_new, k7, err_raw) = match trial {
            Ok(v) => v,
            Err(_) => {
                h *= 0.5;
                if h.abs() < ctl.h_min {
                    // Re-probe at the node itself so the caller sees the
                    // guard that blocks progress.
                    let halt = match rhs(u, y) {
                        Err(e) => Halt::RhsGuard(e),
                        Ok(_) => Halt::StepUnderflow,
                    };
                    return Integration { nodes, halt };
                }
                continue;
            }
        };

        let scale = ctl.atol + ctl.rtol * y.abs().max(y_new.abs());
        let err = (err_raw * h).abs() / scale;

        if err <= 1.0 || h.abs() <= ctl.h_min {
            u += h;
            y = y_new;
            k1 = k7;
            nodes.push(Node { u, y, dy: k1 });
            if !inspect(u, y) {
                return Integration { nodes, halt: Halt::ReachedEnd };
            }
            if (u_end - u) * dir <= 0.0 || (u_end - u).abs() < f64::EPSILON * u.abs() {
                return Integration { nodes, halt: Halt::ReachedEnd };
            }
            let factor = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
            h = (h * factor).clamp(-ctl.h_max, ctl.h_max);
            if h.abs() < ctl.h_min {
                h = dir * ctl.h_min;
            }
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
            h *= factor;
            if h.abs() < ctl.h_min {
                return Integration { nodes, halt: Halt::StepUnderflow };
            }
        }
    }
}

/// One DP5(4) trial step; returns `(y_new, k7, err_per_h)`.
fn try_step<E, F>(rhs: &mut F, u: f64, y: f64, k1: f64, h: f64) -> Result<(f64, f64, f64), E>
where
    F: FnMut(f64, f64) -> Result<f64, E>,
{
    let k2 = rhs(u + C2 * h, y + h * (A21 * k1))?;
    let k3 = rhs(u + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
    let k4 = rhs(u + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = rhs(u + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
    let k6 = rhs(u + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
    let y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    let k7 = rhs(u + h, y_new)?;
    let err = E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7;
    Ok((y_new, k7, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq)]
    struct Never;

    #[test]
    fn exponential_forward_and_backward() {
        let ctl = RkControls { h_max: 0.1, ..RkControls::default() };
        let run = integrate(|_, y| Ok::<_, Never>(y), 0.0, 1.0, 2.0, &ctl, |_, _| true);
        assert!(matches!(run.halt, Halt::ReachedEnd));
        let last = run.nodes.last().unwrap();
        assert!((last.y - 2.0_f64.exp()).abs() < 1e-9);

        let run = integrate(|_, y| Ok::<_, Never>(y), 2.0, last.y, 0.0, &ctl, |_, _| true);
        let back = run.nodes.last().unwrap();
        assert!((back.y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonautonomous_quadrature() {
        // y' = cos(u), y(0) = 0 -> y(pi) = 0.
        let ctl = RkControls::default();
        let run = integrate(
            |u: f64, _| Ok::<_, Never>(u.cos()),
            0.0,
            0.0,
            std::f64::consts::PI,
            &ctl,
            |_, _| true,
        );
        let last = run.nodes.last().unwrap();
        assert!(last.y.abs() < 1e-10);
    }

    #[test]
    fn guard_halts_with_reason() {
        // Pole at u = 1: rhs refuses beyond 0.999.
        let run = integrate(
            |u: f64, _| if u > 0.999 { Err("pole") } else { Ok(1.0 / (1.0 - u)) },
            0.0,
            0.0,
            2.0,
            &RkControls::default(),
            |_, _| true,
        );
        match run.halt {
            Halt::RhsGuard(_) | Halt::StepUnderflow => {}
            other => panic!("expected guard halt, got {other:?}"),
        }
        let last = run.nodes.last().unwrap();
        assert!(last.u < 1.0);
        assert!(last.u > 0.99);
    }

    #[test]
    fn inspector_can_stop_early() {
        let run = integrate(
            |_, y| Ok::<_, Never>(y),
            0.0,
            1.0,
            10.0,
            &RkControls { h_max: 0.05, ..RkControls::default() },
            |_, y| y < 5.0,
        );
        assert!(matches!(run.halt, Halt::ReachedEnd));
        assert!(run.nodes.last().unwrap().y >= 5.0);
        assert!(run.nodes.last().unwrap().u < 2.0);
    }
}
