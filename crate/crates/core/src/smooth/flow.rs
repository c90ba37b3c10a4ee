use crate::error::{check_dim, invalid, LiftedError, Result};
use crate::smooth::field::SmoothVectorField;

/// Largest RK4 step used by [`flow`].
pub const MAX_STEP: f64 = 1e-3;

/// Number of fixed RK4 steps for time `t`: `⌈|t|/h⌉`, `h = min(1e-3, |t|)`.
pub fn step_count(t: f64) -> usize {
    if t == 0.0 {
        return 0;
    }
    let h = MAX_STEP.min(t.abs());
    (t.abs() / h).ceil() as usize
}

/// Fixed-step RK4 for `ẋ = f(x)` over `[0, t]`.
pub fn rk4(f: &dyn Fn(&[f64]) -> Vec<f64>, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    let n = step_count(t);
    if n == 0 {
        return Ok(x.to_vec());
    }
    let h = t / n as f64;
    let mut y = x.to_vec();
    let axpy = |y: &[f64], a: f64, k: &[f64]| -> Vec<f64> {
        y.iter().zip(k).map(|(yi, ki)| yi + a * ki).collect()
    };
    for _ in 0..n {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, 0.5 * h, &k1));
        let k3 = f(&axpy(&y, 0.5 * h, &k2));
        let k4 = f(&axpy(&y, h, &k3));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(LiftedError::NumericFailure("non-finite state during flow integration".into()));
        }
    }
    Ok(y)
}

/// `e^{tv}(x)` by fixed-step RK4.
pub fn flow(v: &SmoothVectorField, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("flow start point", v.dim(), x.len())?;
    if !v.is_complete() {
        return Err(LiftedError::Unsupported("flow of a field not known to be complete".into()));
    }
    if !t.is_finite() {
        return Err(invalid("flow time must be finite"));
    }
    rk4(&|y| v.eval(y), t, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::smooth::field::make_bump;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn constant_field_translates() {
        let c = [0.3, -1.1];
        let v = SmoothVectorField::constant(&c);
        let x = [1.0, 2.0];
        let y = flow(&v, 0.75, &x).unwrap();
        for i in 0..2 {
            assert!((y[i] - (x[i] + 0.75 * c[i])).abs() < 1e-12);
        }
        assert_eq!(flow(&v, 0.0, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn rotation_quarter_turn() {
        let v = SmoothVectorField::linear(&[vec![0.0, -1.0], vec![1.0, 0.0]], &[0.0, 0.0]).unwrap();
        let y = flow(&v, FRAC_PI_2, &[1.0, 0.0]).unwrap();
        assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9, "{y:?}");
    }

    #[test]
    fn group_property() {
        let b = make_bump(&[0.0, 0.0], 2.0).unwrap();
        let v = SmoothVectorField::masked(&b, vec![Expr::var(1) + 0.5, -Expr::var(0) * Expr::var(0)]).unwrap();
        let x = [0.4, -0.3];
        let back = flow(&v, 0.7, &flow(&v, -0.7, &x).unwrap()).unwrap();
        assert!((back[0] - x[0]).abs() < 1e-8 && (back[1] - x[1]).abs() < 1e-8);
    }

    #[test]
    fn incomplete_fields_rejected() {
        let v = SmoothVectorField::from_exprs(vec![Expr::var(0) * Expr::var(0)], None);
        assert!(matches!(flow(&v, 1.0, &[1.0]), Err(LiftedError::Unsupported(_))));
    }

    #[test]
    fn blow_up_is_numeric_failure() {
        let v = SmoothVectorField::from_exprs(vec![Expr::var(0).powi(3)], None).assume_complete();
        assert!(matches!(flow(&v, 5.0, &[10.0]), Err(LiftedError::NumericFailure(_))));
    }

    #[test]
    fn step_counts() {
        assert_eq!(step_count(0.0), 0);
        assert_eq!(step_count(1e-4), 1);
        assert_eq!(step_count(-0.0105), 11);
    }
}
