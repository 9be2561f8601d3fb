//! Jerk-limited speed change profiles, used when the quintic violates the
//! planner limits.

/// Piecewise-constant-jerk profile from `(v0, a0)` to a target speed with
/// zero final acceleration; speed is held afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct JerkProfile {
    v0: f64,
    a0: f64,
    /// `(duration, jerk)` per phase.
    phases: Vec<(f64, f64)>,
}

impl JerkProfile {
    /// Time-optimal profile with acceleration bounded by `a_up` (> 0) when
    /// speeding up and `-a_down` (< 0) when slowing down, jerk by `jerk`.
    ///
    /// `a0` must lie within `[-a_down, a_up]` for the bounds to hold.
    pub fn plan(v0: f64, a0: f64, v_target: f64, a_up: f64, a_down: f64, jerk: f64) -> Self {
        let v_settle = v0 + a0 * a0.abs() / (2.0 * jerk);
        if (v_target - v_settle).abs() < 1e-12 {
            let phases = if a0 == 0.0 { vec![] } else { vec![(a0.abs() / jerk, -a0.signum() * jerk)] };
            return Self { v0, a0, phases };
        }
        let sigma = if v_target > v_settle { 1.0 } else { -1.0 };
        let limit = if sigma > 0.0 { a_up } else { a_down };
        let a0s = sigma * a0;
        let dv = sigma * (v_target - v0);

        let mut peak = limit;
        let mut t1 = (peak - a0s).abs() / jerk;
        let dv1 = 0.5 * (a0s + peak) * t1;
        let mut t3 = peak / jerk;
        let dv3 = 0.5 * peak * t3;
        let mut t2 = (dv - dv1 - dv3) / peak;
        if t2 < 0.0 {
            peak = ((2.0 * jerk * dv + a0s * a0s) / 2.0).max(0.0).sqrt();
            t1 = (peak - a0s).abs() / jerk;
            t3 = peak / jerk;
            t2 = 0.0;
        }
        let j1 = if peak >= a0s { jerk } else { -jerk };
        let phases = vec![(t1, sigma * j1), (t2, 0.0), (t3, -sigma * jerk)];
        Self { v0, a0, phases }
    }

    pub fn duration(&self) -> f64 {
        self.phases.iter().map(|p| p.0).sum()
    }

    /// Displacement, speed and acceleration at time `t` from the start.
    pub fn sample(&self, t: f64) -> (f64, f64, f64) {
        let (mut x, mut v, mut a) = (0.0, self.v0, self.a0);
        let mut remaining = t;
        for &(d, j) in &self.phases {
            let tau = remaining.min(d);
            x += v * tau + 0.5 * a * tau * tau + j * tau * tau * tau / 6.0;
            v += a * tau + 0.5 * j * tau * tau;
            a += j * tau;
            remaining -= tau;
            if remaining <= 0.0 {
                return (x, v, a);
            }
        }
        // Terminal acceleration is zero up to rounding.
        x += v * remaining;
        (x, v, 0.0)
    }
}
