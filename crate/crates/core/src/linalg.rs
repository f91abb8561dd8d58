//! Dense matrix exponential and an adaptive Runge-Kutta integrator.

use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Backward-error bound of the degree-13 Pade approximant in the 1-norm.
const THETA13: f64 = 5.371920351148152;

/// Induced 1-norm (max column sum).
/// Maximum that propagates NaN (`f64::max` would silently drop it).
fn nan_max(acc: f64, x: f64) -> f64 {
    if x > acc || x.is_nan() {
        x
    } else {
        acc
    }
}

/// Largest column 1-norm; NaN if any entry is NaN.
pub fn norm1(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, nan_max)
}

/// Largest entry modulus; NaN if any entry is NaN.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, nan_max)
}

/// `exp(A)` by scaling and squaring with a degree-13 Pade approximant.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::arg("expm needs a square matrix"));
    }
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::numeric("expm argument has non-finite entries"));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::new(0.5f64.powi(squarings), 0.0);
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let ident = Array2::<C64>::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u_poly = a6.dot(&u_inner) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &ident * b(1);
    let u = a.dot(&u_poly);
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&v_inner) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &ident * b(0);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom.inv()?.dot(&numer);
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numeric("expm produced non-finite entries"));
    }
    Ok(r)
}

/// Tolerances for [`dormand_prince`].
#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the autonomous linear-or-not system `dy/dt = f(y)` from `t = 0`
/// and returns the state at each of `times` (nondecreasing, `>= 0`).
pub fn dormand_prince<F>(f: F, y0: &[C64], times: &[f64], ctl: StepControl) -> Result<Vec<Array1<C64>>>
where
    F: Fn(&[C64], &mut [C64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t: f64 = 0.0;
    let mut h: f64 = 1e-3;
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); n];
    let mut y5 = vec![C64::new(0.0, 0.0); n];
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(times.len());

    f(&y, &mut k[0]);
    for &target in times {
        if target < t {
            return Err(Error::arg("output times must be nondecreasing and >= 0"));
        }
        while t < target {
            steps += 1;
            if steps > ctl.max_steps {
                return Err(Error::numeric(format!(
                    "Dormand-Prince exceeded {} steps at t = {t}",
                    ctl.max_steps
                )));
            }
            let h_try = h.min(target - t);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * (h_try * A[s][j]);
                        }
                    }
                    stage[i] = acc;
                }
                f(&stage, &mut k[s]);
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut hi = y[i];
                let mut lo = y[i];
                for s in 0..7 {
                    hi += k[s][i] * (h_try * B5[s]);
                    lo += k[s][i] * (h_try * B4[s]);
                }
                y5[i] = hi;
                let scale = ctl.atol + ctl.rtol * y[i].norm().max(hi.norm());
                err = err.max((hi - lo).norm() / scale);
            }
            if err <= 1.0 {
                t = if h_try == target - t { target } else { t + h_try };
                std::mem::swap(&mut y, &mut y5);
                // first-same-as-last: k[6] was evaluated at the accepted point
                k.swap(0, 6);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = h_try * factor;
            if !h.is_finite() || h < 1e-14 {
                return Err(Error::numeric(format!("step size collapsed at t = {t}")));
            }
        }
        out.push(Array1::from(y.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_diagonal_and_nilpotent() {
        let a = array![[c(0.0, 3.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-5.0, 0.0)]];
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]] - c(3f64.cos(), 3f64.sin())).norm() < 1e-14);
        assert!((e[[1, 1]] - c((-5f64).exp(), 0.0)).norm() < 1e-14);
        assert!(e[[0, 1]].norm() < 1e-15);

        // exp(t J) for a Jordan block with eigenvalue -1/2
        let t = 7.0;
        let j = array![[c(-0.5 * t, 0.0), c(0.0, 0.0)], [c(t, 0.0), c(-0.5 * t, 0.0)]];
        let e = expm(&j).unwrap();
        let d = (-0.5 * t).exp();
        assert!((e[[0, 0]].re - d).abs() < 1e-14);
        assert!((e[[1, 0]].re - t * d).abs() < 1e-13);
    }

    #[test]
    fn expm_large_norm_rotation() {
        // exp of 60 * [[0, 1], [-1, 0]] is a rotation by 60 rad
        let a = array![[c(0.0, 0.0), c(60.0, 0.0)], [c(-60.0, 0.0), c(0.0, 0.0)]];
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]].re - 60f64.cos()).abs() < 1e-12);
        assert!((e[[0, 1]].re - 60f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn dopri_exponential_decay() {
        let times = [0.0, 0.5, 1.0, 4.0];
        let out = dormand_prince(
            |y, dy| {
                dy[0] = y[0] * c(-1.0, 2.0);
            },
            &[c(1.0, 0.0)],
            &times,
            StepControl::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&out) {
            let want = (c(-1.0, 2.0) * *t).exp();
            assert!((y[0] - want).norm() < 1e-11, "t={t}");
        }
    }
}
