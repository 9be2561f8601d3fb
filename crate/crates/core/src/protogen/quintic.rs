//! Quintic longitudinal boundary-value trajectories.

/// `x(t) = sum_i c[i] t^i` for `i` in `0..6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quintic {
    pub coeffs: [f64; 6],
}

/// Position, speed, acceleration and jerk at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub x: f64,
    pub v: f64,
    pub a: f64,
    pub j: f64,
}

impl Quintic {
    /// Matches `(x0, v0, a0)` at `t = 0` and reaches speed `v_end` with zero
    /// acceleration and zero jerk at `t = duration`. Terminal position is free.
    pub fn velocity_keeping(x0: f64, v0: f64, a0: f64, v_end: f64, duration: f64) -> Self {
        let t = duration;
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        // Rows: v(T) = v_end, a(T) = 0, j(T) = 0 for the unknowns c3, c4, c5.
        let m = [
            [3.0 * t2, 4.0 * t3, 5.0 * t4],
            [6.0 * t, 12.0 * t2, 20.0 * t3],
            [6.0, 24.0 * t, 60.0 * t2],
        ];
        let rhs = [v_end - v0 - a0 * t, -a0, 0.0];
        let [c3, c4, c5] = solve3(m, rhs);
        Self { coeffs: [x0, v0, 0.5 * a0, c3, c4, c5] }
    }

    /// Rest-to-rest displacement `d` over `duration` (zero speed, acceleration
    /// and position change at both ends except the net displacement).
    pub fn rest_to_rest(d: f64, duration: f64) -> Self {
        let t = duration;
        Self { coeffs: [0.0, 0.0, 0.0, 10.0 * d / t.powi(3), -15.0 * d / t.powi(4), 6.0 * d / t.powi(5)] }
    }

    pub fn eval(&self, t: f64) -> Kinematics {
        let c = &self.coeffs;
        let x = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let v = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let a = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        let j = 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]);
        Kinematics { x, v, a, j }
    }
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (v, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_conditions_hold() {
        let q = Quintic::velocity_keeping(5.0, 10.0, -0.7, 4.0, 3.0);
        let s = q.eval(0.0);
        assert_eq!((s.x, s.v, s.a), (5.0, 10.0, -0.7));
        let e = q.eval(3.0);
        assert!((e.v - 4.0).abs() < 1e-9);
        assert!(e.a.abs() < 1e-9);
        assert!(e.j.abs() < 1e-9);
    }

    #[test]
    fn constant_speed_is_linear() {
        let q = Quintic::velocity_keeping(0.0, 10.0, 0.0, 10.0, 3.0);
        for &c in &q.coeffs[2..] {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn rest_to_rest_endpoints() {
        let q = Quintic::rest_to_rest(1.5, 3.0);
        let e = q.eval(3.0);
        assert!((e.x - 1.5).abs() < 1e-12);
        assert!(e.v.abs() < 1e-12 && e.a.abs() < 1e-12);
    }
}
