//! Dormand-Prince 5(4) integrator for complex vector ODEs with step-size
//! control and 4th-order dense output.

use num_complex::Complex64;

use crate::error::{Error, Result};

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

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension (Hairer, Norsett & Wanner)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

struct Workspace {
    k: [Vec<Complex64>; 7],
    ytmp: Vec<Complex64>,
    ynew: Vec<Complex64>,
    err: Vec<Complex64>,
    dense: [Vec<Complex64>; 5],
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || vec![Complex64::new(0.0, 0.0); n];
        Workspace {
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            err: z(),
            dense: [z(), z(), z(), z(), z()],
        }
    }
}

fn combine(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for i in 0..out.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

fn error_norm(err: &[Complex64], y: &[Complex64], ynew: &[Complex64], opts: &Dopri5Options) -> f64 {
    let mut sum = 0.0;
    for i in 0..err.len() {
        let scale = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
        sum += (err[i].norm() / scale).powi(2);
    }
    (sum / err.len() as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` and returns the solution at
/// each of `outputs` (sorted, inside `[t0, t_end]`) by dense interpolation.
pub fn solve<F>(
    mut rhs: F,
    t0: f64,
    y0: &[Complex64],
    t_end: f64,
    outputs: &[f64],
    opts: &Dopri5Options,
) -> Result<(Vec<Vec<Complex64>>, SolverStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    if !(t_end >= t0) {
        return Err(Error::InvalidParameter(format!("integration end {t_end} precedes start {t0}")));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0 && opts.max_step > 0.0) {
        return Err(Error::InvalidParameter("tolerances and max step must be positive".into()));
    }
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.iter().any(|&t| t < t0 || t > t_end) {
        return Err(Error::InvalidParameter("output times must be sorted and inside the span".into()));
    }

    let n = y0.len();
    let mut stats = SolverStats::default();
    let mut out = Vec::with_capacity(outputs.len());
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        out.push(y0.to_vec());
        next_out += 1;
    }
    if t_end == t0 {
        return Ok((out, stats));
    }

    let mut ws = Workspace::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;
    rhs(t, &y, &mut ws.k[0])?;
    stats.rhs_evals += 1;

    let mut h = match opts.initial_step {
        Some(h) => h,
        None => initial_step(&mut rhs, t, &y, &ws.k[0].clone(), opts, &mut stats)?,
    }
    .min(opts.max_step)
    .min(t_end - t0);

    let mut last_rejected = false;
    loop {
        let remaining = t_end - t;
        let finishing = h >= remaining;
        if finishing {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }

        let Workspace { k, ytmp, ynew, err, .. } = &mut ws;
        let [k1, k2, k3, k4, k5, k6, k7] = k;
        combine(ytmp, &y, h, &[(A21, k1)]);
        rhs(t + C2 * h, ytmp, k2)?;
        combine(ytmp, &y, h, &[(A31, k1), (A32, k2)]);
        rhs(t + C3 * h, ytmp, k3)?;
        combine(ytmp, &y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        rhs(t + C4 * h, ytmp, k4)?;
        combine(ytmp, &y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        rhs(t + C5 * h, ytmp, k5)?;
        combine(ytmp, &y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        let t_new = if finishing { t_end } else { t + h };
        rhs(t_new, ytmp, k6)?;
        combine(ynew, &y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        rhs(t_new, ynew, k7)?;
        stats.rhs_evals += 6;

        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = error_norm(err, &y, ynew, opts);
        if !e.is_finite() {
            return Err(Error::StepUnderflow { t, h });
        }

        if e <= 1.0 {
            stats.accepted += 1;
            if next_out < outputs.len() && outputs[next_out] <= t_new {
                let [r1, r2, r3, r4, r5] = &mut ws.dense;
                let (k1, k3, k4, k5, k6, k7) = (&ws.k[0], &ws.k[2], &ws.k[3], &ws.k[4], &ws.k[5], &ws.k[6]);
                for i in 0..n {
                    let diff = ws.ynew[i] - y[i];
                    let bspl = k1[i] * h - diff;
                    r1[i] = y[i];
                    r2[i] = diff;
                    r3[i] = bspl;
                    r4[i] = diff - k7[i] * h - bspl;
                    r5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                while next_out < outputs.len() && outputs[next_out] <= t_new {
                    let to = outputs[next_out];
                    if to == t_new {
                        out.push(ws.ynew.clone());
                    } else {
                        let th = (to - t) / h;
                        let th1 = 1.0 - th;
                        out.push(
                            (0..n)
                                .map(|i| r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * th1) * th) * th1) * th)
                                .collect(),
                        );
                    }
                    next_out += 1;
                }
            }
            std::mem::swap(&mut y, &mut ws.ynew);
            ws.k.swap(0, 6);
            t = t_new;
            if finishing {
                break;
            }
            let mut factor = (0.9 * e.powf(-0.2)).clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h = (h * factor).min(opts.max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
            last_rejected = true;
        }
    }
    Ok((out, stats))
}

fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[Complex64],
    f0: &[Complex64],
    opts: &Dopri5Options,
    stats: &mut SolverStats,
) -> Result<f64>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    let n = y.len() as f64;
    let scale = |v: &Complex64| opts.atol + opts.rtol * v.norm();
    let d0 = (y.iter().map(|v| (v.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(y).map(|(f, v)| (f.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.max_step);
    let y1: Vec<Complex64> = y.iter().zip(f0).map(|(v, f)| v + f * h0).collect();
    let mut f1 = vec![Complex64::new(0.0, 0.0); y.len()];
    rhs(t + h0, &y1, &mut f1)?;
    stats.rhs_evals += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), v)| ((a - b).norm() / scale(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}
