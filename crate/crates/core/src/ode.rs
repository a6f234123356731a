//! Adaptive Dormand-Prince 5(4) integrator with continuous output.
//!
//! The state type only needs `axpy`-style arithmetic and a componentwise
//! error norm, which lets the same stepper drive both the mean-field
//! amplitudes and the joint (amplitude, moment-matrix) flow.

use crate::{Error, Result, C64};
use nalgebra::SMatrix;

/// Arithmetic the stepper needs from a state.
pub trait OdeState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);

    /// Sum over components of `|err_i / (atol + rtol * max(|y0_i|, |y1_i|))|^2`,
    /// together with the number of components.
    fn error_sum(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize);

    /// A state of the same shape with every component zero.
    fn zeros_like(&self) -> Self;
}

impl<const R: usize, const C: usize> OdeState for SMatrix<C64, R, C> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (yi, xi) in self.iter_mut().zip(x.iter()) {
            *yi += xi * a;
        }
    }

    fn error_sum(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize) {
        let sum = err
            .iter()
            .zip(y0.iter().zip(y1.iter()))
            .map(|(e, (a, b))| {
                let scale = atol + rtol * a.norm().max(b.norm());
                (e.norm() / scale).powi(2)
            })
            .sum();
        (sum, R * C)
    }

    fn zeros_like(&self) -> Self {
        Self::zeros()
    }
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension (Hairer, Norsett & Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl DormandPrince {
    /// Relative tolerance `rtol`; absolute floor `1e-3 * rtol`.
    pub fn new(rtol: f64) -> Self {
        DormandPrince {
            rtol,
            atol: 1e-3 * rtol,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }

    pub fn atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrate `y' = rhs(t, y)` from `(outputs[0], y0)` and return the state at
    /// every time in `outputs` (which must be non-decreasing).
    ///
    /// `on_accept(t, y)` runs after every accepted step and may modify the state,
    /// e.g. to project it back onto a constraint; outputs falling inside the step
    /// are interpolated before the hook runs and are then passed through
    /// `on_output`.
    pub fn integrate<S, F, A, O>(
        &self,
        mut rhs: F,
        y0: S,
        outputs: &[f64],
        mut on_accept: A,
        mut on_output: O,
    ) -> Result<Vec<S>>
    where
        S: OdeState,
        F: FnMut(f64, &S) -> Result<S>,
        A: FnMut(f64, &mut S) -> Result<()>,
        O: FnMut(f64, &mut S) -> Result<()>,
    {
        if self.rtol.is_nan() || self.rtol <= 0.0 || self.atol.is_nan() || self.atol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        let Some(&t0) = outputs.first() else {
            return Ok(Vec::new());
        };
        if outputs.windows(2).any(|w| w[1].partial_cmp(&w[0]).is_none_or(|o| o.is_lt())) {
            return Err(Error::InvalidInput("output times must be non-decreasing".into()));
        }
        let t_final = *outputs.last().unwrap();

        let mut results = Vec::with_capacity(outputs.len());
        let mut next_out = 0;
        let mut t = t0;
        let mut y = y0;
        while next_out < outputs.len() && outputs[next_out] <= t {
            let mut out = y.clone();
            on_output(outputs[next_out], &mut out)?;
            results.push(out);
            next_out += 1;
        }
        if next_out == outputs.len() {
            return Ok(results);
        }

        let mut k1 = rhs(t, &y)?;
        let mut h = self.initial_step(&mut rhs, t, &y, &k1, t_final - t)?;
        let mut steps = 0usize;
        let mut rejected_last = false;

        while next_out < outputs.len() {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::StepFailure { time: t, step: h });
            }
            let remaining = t_final - t;
            let last = h >= remaining;
            if last {
                h = remaining;
            }

            let stage = |y: &S, terms: &[(f64, &S)]| {
                let mut s = y.clone();
                for (a, k) in terms {
                    s.axpy(h * a, k);
                }
                s
            };
            let k2 = rhs(t + C2 * h, &stage(&y, &[(A21, &k1)]))?;
            let k3 = rhs(t + C3 * h, &stage(&y, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = rhs(t + C4 * h, &stage(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = rhs(t + C5 * h, &stage(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = rhs(
                t + h,
                &stage(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y1 = stage(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t1 = if last { t_final } else { t + h };
            let k7 = rhs(t1, &y1)?;

            let mut err = k1.zeros_like();
            for (e, k) in [(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)] {
                err.axpy(h * e, k);
            }
            let (sum, n) = S::error_sum(&err, &y, &y1, self.rtol, self.atol);
            let err_norm = (sum / n as f64).sqrt();

            if !err_norm.is_finite() {
                h *= 0.1;
                rejected_last = true;
                if h < self.h_min {
                    return Err(Error::StepFailure { time: t, step: h });
                }
                continue;
            }

            if err_norm <= 1.0 {
                // Continuous extension on [t, t1].
                let mut ydiff = y1.clone();
                ydiff.axpy(-1.0, &y);
                let mut bspl = k1.zeros_like();
                bspl.axpy(h, &k1);
                bspl.axpy(-1.0, &ydiff);
                let mut rc4 = ydiff.clone();
                rc4.axpy(-h, &k7);
                rc4.axpy(-1.0, &bspl);
                let mut rc5 = k1.zeros_like();
                for (d, k) in [(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)] {
                    rc5.axpy(h * d, k);
                }

                while next_out < outputs.len() && outputs[next_out] <= t1 {
                    let to = outputs[next_out];
                    let mut out = if to == t1 {
                        y1.clone()
                    } else {
                        let theta = (to - t) / h;
                        let theta1 = 1.0 - theta;
                        // y0 + theta*(ydiff + theta1*(bspl + theta*(rc4 + theta1*rc5)))
                        let mut acc = rc4.clone();
                        acc.axpy(theta1, &rc5);
                        let mut acc2 = bspl.clone();
                        acc2.axpy(theta, &acc);
                        let mut acc3 = ydiff.clone();
                        acc3.axpy(theta1, &acc2);
                        let mut value = y.clone();
                        value.axpy(theta, &acc3);
                        value
                    };
                    on_output(to, &mut out)?;
                    results.push(out);
                    next_out += 1;
                }

                t = t1;
                y = y1;
                on_accept(t, &mut y)?;
                if next_out < outputs.len() {
                    k1 = rhs(t, &y)?;
                }

                let mut factor = 0.9 * err_norm.max(1e-10).powf(-0.2);
                factor = factor.clamp(0.2, 10.0);
                if rejected_last {
                    factor = factor.min(1.0);
                }
                rejected_last = false;
                if !last {
                    h = (h * factor).min(self.h_max);
                }
            } else {
                let factor = (0.9 * err_norm.powf(-0.2)).max(0.2);
                h *= factor;
                rejected_last = true;
                if h < self.h_min {
                    return Err(Error::StepFailure { time: t, step: h });
                }
            }
        }
        Ok(results)
    }

    fn initial_step<S, F>(&self, rhs: &mut F, t: f64, y: &S, f0: &S, span: f64) -> Result<f64>
    where
        S: OdeState,
        F: FnMut(f64, &S) -> Result<S>,
    {
        let scale = |v: &S| {
            let (sum, n) = S::error_sum(v, y, y, self.rtol, self.atol);
            (sum / n as f64).sqrt()
        };
        let d0 = scale(y);
        let d1 = scale(f0);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span).min(self.h_max);
        let mut y1 = y.clone();
        y1.axpy(h0, f0);
        let f1 = rhs(t + h0, &y1)?;
        let mut df = f1;
        df.axpy(-1.0, f0);
        let d2 = scale(&df) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span).min(self.h_max).max(self.h_min))
    }
}
