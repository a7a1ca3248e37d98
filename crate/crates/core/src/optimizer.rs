//! Closed-form design quantities and the optimized carrier frequency.
//!
//! Every perturbing level `k` attached to a selected level contributes
//!
//! * a signed strength `sigma = F0 mu / (2 (omega_ab - omega_k))`,
//! * an asymmetry `delta = (omega_ab - omega_k) / (omega_ab + omega_k)`,
//! * a normalized carrier detuning `Delta_k(t) = (omega(t) - omega_ab) / (omega_k - omega_ab)`.
//!
//! The optimized carrier is `omega(t) = omega_ab + sum_k (omega_k - omega_ab) * Delta_k(t)`,
//! where to first order `Delta_k(t) = s_k sigma_k^2 (1 - delta_k) <m^2>(t)` and
//! `<m^2>(t)` is the running mean of the squared envelope. The recurrent
//! (fixed-point) refinement divides the integrand by
//! `(1 - Delta_k)(1 - delta_k Delta_k)`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pulse::{pi_pulse_duration, EnvelopeShape, PulseSpec};
use crate::system::{LevelId, LevelSystem, Sign, TransitionPair};

pub const DEFAULT_GRID_SAMPLES: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Which selected level a perturber is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturberStrength {
    pub level: LevelId,
    pub side: Side,
    /// Signed strength; only its square enters the design formulas.
    pub sigma: f64,
    pub delta: f64,
    /// `s_ba s_bp` (beta side) or `s_ab s_aq` (alpha side).
    pub sign_product: Sign,
    /// `omega_k - omega_ab`, a.u.
    pub freq_offset: f64,
}

impl PerturberStrength {
    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// First-order coefficient of `<m^2>(t)` in `Delta_k(t)`.
    fn shift_coefficient(&self) -> f64 {
        self.sign_product.value() * self.sigma_sq() * (1.0 - self.delta)
    }
}

/// Strength and asymmetry of one perturber for peak field `amplitude`.
pub fn perturber_strength(
    amplitude: f64,
    mu: f64,
    omega_ab: f64,
    omega_k: f64,
    sign_product: Sign,
    level: LevelId,
    side: Side,
) -> Result<PerturberStrength> {
    if !(omega_ab > 0.0 && omega_k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transition frequencies must be positive (omega_ab = {omega_ab}, omega_k = {omega_k})"
        )));
    }
    let gap = omega_ab - omega_k;
    if gap == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "perturber {level} is resonant with the selected transition (omega = {omega_k})"
        )));
    }
    Ok(PerturberStrength {
        level,
        side,
        sigma: amplitude * mu / (2.0 * gap),
        delta: gap / (omega_ab + omega_k),
        sign_product,
        freq_offset: omega_k - omega_ab,
    })
}

/// Upper bound on the population of a perturbing level: `sigma^2 (1 + |delta|)^2`.
pub fn leakage_bound(s: &PerturberStrength) -> f64 {
    s.sigma_sq() * (1.0 + s.delta.abs()).powi(2)
}

/// Largest peak field keeping `sigma^2` of one perturber at `budget`.
pub fn max_drive(budget: f64, mu: f64, omega_ab: f64, omega_k: f64) -> Result<f64> {
    if !(budget > 0.0 && budget < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "leakage budget must lie in (0, 1), got {budget}"
        )));
    }
    if mu == 0.0 {
        return Err(Error::InvalidParameter("perturber dipole is zero".into()));
    }
    Ok((2.0 * (omega_ab - omega_k) / mu).abs() * budget.sqrt())
}

/// `sigma_tot^2`, summed in the order given.
pub fn sigma_tot_sq(strengths: &[PerturberStrength]) -> f64 {
    strengths.iter().map(PerturberStrength::sigma_sq).sum()
}

/// Strengths of every perturber of `pair`: alpha side first, then beta side,
/// each sorted by level id.
pub fn strengths(sys: &LevelSystem, pair: &TransitionPair, amplitude: f64) -> Result<Vec<PerturberStrength>> {
    let sets = sys.perturber_sets(pair)?;
    let ab = sys.transition(pair.alpha, pair.beta)?;
    let ba_sign = ab.sign.flip();
    let mut out = Vec::with_capacity(sets.alpha_side.len() + sets.beta_side.len());
    for &q in &sets.alpha_side {
        let aq = sys.transition(pair.alpha, q)?;
        out.push(perturber_strength(
            amplitude,
            sys.dipole(pair.alpha, q),
            ab.omega,
            aq.omega,
            ab.sign * aq.sign,
            q,
            Side::Alpha,
        )?);
    }
    for &p in &sets.beta_side {
        let bp = sys.transition(pair.beta, p)?;
        out.push(perturber_strength(
            amplitude,
            sys.dipole(pair.beta, p),
            ab.omega,
            bp.omega,
            ba_sign * bp.sign,
            p,
            Side::Beta,
        )?);
    }
    Ok(out)
}

/// Peak field at which the strongest single perturber reaches `sigma^2 = target`.
pub fn amplitude_for_sigma_sq(sys: &LevelSystem, pair: &TransitionPair, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma^2 target must be positive, got {target}")));
    }
    let unit = strengths(sys, pair, 1.0)?;
    let strongest = unit
        .iter()
        .map(|s| s.sigma.abs())
        .fold(0.0, f64::max);
    if strongest == 0.0 {
        return Err(Error::InvalidParameter(
            "the selected pair has no perturbing levels; sigma is identically zero".into(),
        ));
    }
    Ok(target.sqrt() / strongest)
}

/// Peak field at which `sigma_tot^2 = target` (all sigma scale linearly with F0).
pub fn amplitude_for_sigma_tot_sq(sys: &LevelSystem, pair: &TransitionPair, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_tot^2 target must be positive, got {target}")));
    }
    let unit = sigma_tot_sq(&strengths(sys, pair, 1.0)?);
    if unit == 0.0 {
        return Err(Error::InvalidParameter(
            "the selected pair has no perturbing levels; sigma_tot is identically zero".into(),
        ));
    }
    Ok((target / unit).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturberReport {
    #[serde(flatten)]
    pub strength: PerturberStrength,
    pub sigma_sq: f64,
    pub leakage_bound: f64,
    /// Largest peak field for which this perturber alone stays within the budget.
    pub f0_max_au: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub alpha: LevelId,
    pub beta: LevelId,
    pub f0_au: f64,
    pub omega_ab_au: f64,
    pub perturbers: Vec<PerturberReport>,
    pub sigma_tot_sq: f64,
    pub leakage_budget: f64,
    /// Peak field at which `sigma_tot^2` equals the budget.
    pub f0_max_total_au: Option<f64>,
    pub shape: String,
    /// Duration of one full population oscillation (pulse angle pi); absent at zero field.
    pub oscillation_duration_au: Option<f64>,
    /// Modelling choices that go beyond the single-perturber theory.
    pub notes: Vec<String>,
}

pub fn design_report(
    sys: &LevelSystem,
    pair: &TransitionPair,
    amplitude: f64,
    shape: &EnvelopeShape,
    budget: f64,
) -> Result<DesignReport> {
    let ab = sys.transition(pair.alpha, pair.beta)?;
    let list = strengths(sys, pair, amplitude)?;
    let mut perturbers = Vec::with_capacity(list.len());
    for s in list.iter() {
        let mu = match s.side {
            Side::Alpha => sys.dipole(pair.alpha, s.level),
            Side::Beta => sys.dipole(pair.beta, s.level),
        };
        perturbers.push(PerturberReport {
            strength: s.clone(),
            sigma_sq: s.sigma_sq(),
            leakage_bound: leakage_bound(s),
            f0_max_au: max_drive(budget, mu, ab.omega, ab.omega + s.freq_offset)?,
        });
    }
    let total = sigma_tot_sq(&list);
    let mut notes = Vec::new();
    if list.len() > 1 {
        notes.push(
            "several perturbers: the recurrent refinement iterates each detuning with its own denominator (extension)"
                .to_string(),
        );
    }
    let mut seen: Vec<LevelId> = list.iter().map(|s| s.level).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        notes.push("a level coupled to both selected levels contributes to both sums (assumption)".to_string());
    }
    let f0_max_total = if list.is_empty() {
        None
    } else {
        Some(amplitude_for_sigma_tot_sq(sys, pair, budget)?)
    };
    Ok(DesignReport {
        alpha: pair.alpha,
        beta: pair.beta,
        f0_au: amplitude,
        omega_ab_au: ab.omega,
        perturbers,
        sigma_tot_sq: total,
        leakage_budget: budget,
        f0_max_total_au: f0_max_total,
        shape: shape.name().to_string(),
        oscillation_duration_au: if amplitude > 0.0 {
            Some(pi_pulse_duration(
                amplitude,
                sys.dipole(pair.alpha, pair.beta),
                shape,
                std::f64::consts::PI,
            )?)
        } else {
            None
        },
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChirpOrder {
    FirstOrder,
    Recurrent { iterations: usize, converged: bool },
}

/// Normalized detuning samples for one perturber.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningTrack {
    pub level: LevelId,
    pub side: Side,
    pub freq_offset: f64,
    pub delta: Vec<f64>,
}

/// Sampled optimized carrier frequency on a uniform grid over `[0, D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpProfile {
    pub times: Vec<f64>,
    pub omega: Vec<f64>,
    pub tracks: Vec<DetuningTrack>,
    pub order: ChirpOrder,
    /// Sup-norm change of the detunings at each fixed-point iteration.
    pub residuals: Vec<f64>,
    step: f64,
    phase: Vec<f64>,
}

impl ChirpProfile {
    fn new(times: Vec<f64>, omega: Vec<f64>, tracks: Vec<DetuningTrack>, order: ChirpOrder, residuals: Vec<f64>) -> Self {
        let step = times[1] - times[0];
        let mut phase = vec![0.0; times.len()];
        for k in 1..times.len() {
            phase[k] = phase[k - 1] + 0.5 * (times[k] - times[k - 1]) * (omega[k] + omega[k - 1]);
        }
        ChirpProfile {
            times,
            omega,
            tracks,
            order,
            residuals,
            step,
            phase,
        }
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let end = self.end();
        let slack = 1e-12 * end;
        if !(t >= -slack && t <= end + slack) {
            return Err(Error::OutsideDomain { t, start: 0.0, end });
        }
        let t = t.clamp(0.0, end);
        let k = ((t / self.step) as usize).min(self.times.len() - 2);
        let frac = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        Ok((k, frac))
    }

    /// Linearly interpolated `omega(t)`.
    pub fn omega_at(&self, t: f64) -> Result<f64> {
        let (k, frac) = self.locate(t)?;
        Ok(self.omega[k] + frac * (self.omega[k + 1] - self.omega[k]))
    }

    /// `int_0^t omega`, exact for the interpolant.
    pub fn phase_integral_at(&self, t: f64) -> Result<f64> {
        let (k, frac) = self.locate(t)?;
        let h = self.times[k + 1] - self.times[k];
        let w_end = self.omega[k] + frac * (self.omega[k + 1] - self.omega[k]);
        Ok(self.phase[k] + 0.5 * frac * h * (self.omega[k] + w_end))
    }

    pub fn converged(&self) -> bool {
        match self.order {
            ChirpOrder::FirstOrder => true,
            ChirpOrder::Recurrent { converged, .. } => converged,
        }
    }

    /// CSV with columns `t_au,omega_au,delta_<side>_<level>...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t_au,omega_au")?;
        for tr in &self.tracks {
            let side = match tr.side {
                Side::Alpha => "alpha",
                Side::Beta => "beta",
            };
            write!(out, ",delta_{side}_{}", tr.level)?;
        }
        writeln!(out)?;
        for (k, t) in self.times.iter().enumerate() {
            write!(out, "{t:.16e},{:.16e}", self.omega[k])?;
            for tr in &self.tracks {
                write!(out, ",{:.16e}", tr.delta[k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn uniform_grid(duration: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "chirp grid needs at least two samples, got {samples}"
        )));
    }
    let last = samples - 1;
    let mut grid: Vec<f64> = (0..samples)
        .map(|k| duration * k as f64 / last as f64)
        .collect();
    grid[last] = duration;
    Ok(grid)
}

struct ChirpSetup {
    omega_ab: f64,
    strengths: Vec<PerturberStrength>,
    times: Vec<f64>,
    envelope_sq: Vec<f64>,
    mean_square: Vec<f64>,
}

impl ChirpSetup {
    fn new(sys: &LevelSystem, pair: &TransitionPair, spec: &PulseSpec, samples: usize) -> Result<Self> {
        let omega_ab = sys.transition(pair.alpha, pair.beta)?.omega;
        let strengths = strengths(sys, pair, spec.amplitude)?;
        let times = uniform_grid(spec.duration, samples)?;
        let envelope_sq = times.iter().map(|&t| spec.envelope(t).powi(2)).collect();
        let mean_square = times.iter().map(|&t| spec.mean_square(t)).collect();
        Ok(ChirpSetup {
            omega_ab,
            strengths,
            times,
            envelope_sq,
            mean_square,
        })
    }

    /// One fixed-point sweep: new carrier from the current detunings.
    fn sweep(&self, current: &[Vec<f64>], iteration: usize) -> Result<Vec<f64>> {
        let n = self.times.len();
        let mut shift = vec![0.0; n];
        let mut correction = vec![0.0; n];
        for (s, delta) in self.strengths.iter().zip(current) {
            // (1/t) int_0^t m^2 (w - 1) by cumulative trapezoid; w = 1 when Delta = 0
            let mut excess = vec![0.0; n];
            for k in 0..n {
                let d = delta[k];
                let f1 = 1.0 - d;
                let f2 = 1.0 - s.delta * d;
                if !(f1 > 0.0) || !(f2 > 0.0) {
                    return Err(Error::Divergence {
                        iteration,
                        t: self.times[k],
                        denominator: f1.min(f2),
                    });
                }
                excess[k] = self.envelope_sq[k] * (1.0 / (f1 * f2) - 1.0);
            }
            let mut acc = 0.0;
            correction[0] = excess[0];
            for k in 1..n {
                acc += 0.5 * (self.times[k] - self.times[k - 1]) * (excess[k] + excess[k - 1]);
                correction[k] = acc / self.times[k];
            }
            let coeff = s.shift_coefficient();
            for k in 0..n {
                shift[k] += s.freq_offset * coeff * (self.mean_square[k] + correction[k]);
            }
        }
        Ok(shift)
    }

    fn profile(&self, shift: Vec<f64>, order: ChirpOrder, residuals: Vec<f64>) -> ChirpProfile {
        let tracks = self
            .strengths
            .iter()
            .map(|s| DetuningTrack {
                level: s.level,
                side: s.side,
                freq_offset: s.freq_offset,
                delta: shift.iter().map(|x| x / s.freq_offset).collect(),
            })
            .collect();
        let omega = shift.iter().map(|x| self.omega_ab + x).collect();
        ChirpProfile::new(self.times.clone(), omega, tracks, order, residuals)
    }
}

/// First-order optimized carrier sampled on `samples` uniform points.
pub fn first_order_chirp(
    sys: &LevelSystem,
    pair: &TransitionPair,
    spec: &PulseSpec,
    samples: usize,
) -> Result<ChirpProfile> {
    let setup = ChirpSetup::new(sys, pair, spec, samples)?;
    let zero = vec![vec![0.0; setup.times.len()]; setup.strengths.len()];
    let shift = setup.sweep(&zero, 1)?;
    Ok(setup.profile(shift, ChirpOrder::FirstOrder, Vec::new()))
}

/// Fixed-point solution of the recurrent detuning equation, started from
/// `Delta = 0`. Each perturber keeps its own denominator; the detunings of all
/// perturbers are tied to the one shared carrier. Non-convergence is reported
/// through [`ChirpOrder::Recurrent`], not as an error.
pub fn recurrent_chirp(
    sys: &LevelSystem,
    pair: &TransitionPair,
    spec: &PulseSpec,
    samples: usize,
    tol: f64,
    max_iter: usize,
) -> Result<ChirpProfile> {
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let setup = ChirpSetup::new(sys, pair, spec, samples)?;
    let n = setup.times.len();
    let mut deltas = vec![vec![0.0; n]; setup.strengths.len()];
    let mut shift = vec![0.0; n];
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        shift = setup.sweep(&deltas, iterations)?;
        let mut change: f64 = 0.0;
        for (s, delta) in setup.strengths.iter().zip(deltas.iter_mut()) {
            for k in 0..n {
                let next = shift[k] / s.freq_offset;
                change = change.max((next - delta[k]).abs());
                delta[k] = next;
            }
        }
        residuals.push(change);
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(setup.profile(
        shift,
        ChirpOrder::Recurrent {
            iterations,
            converged,
        },
        residuals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pulse::Carrier;
    use crate::system::Level;

    const HF_GAP: f64 = 6.0e-5;

    fn hf3_pair() -> (LevelSystem, TransitionPair) {
        let sys = fixtures::hf3();
        let pair = TransitionPair::new(&sys, 0, 1).unwrap();
        (sys, pair)
    }

    fn spec(amplitude: f64, shape: EnvelopeShape, duration: f64) -> PulseSpec {
        PulseSpec::new(amplitude, shape, duration, Carrier::Fixed(0.017671)).unwrap()
    }

    #[test]
    fn sigma_two_inversion() {
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        // sigma = F0 mu / (2 gap)  =>  F0 = 2 sqrt(2) gap / mu
        let want = 2.0 * 2f64.sqrt() * HF_GAP / 0.098;
        assert!((f0 - want).abs() < 1e-9 * want, "{f0} vs {want}");
        assert!((f0 - 1.73169e-3).abs() < 1e-8);
        let s = strengths(&sys, &pair, f0).unwrap();
        assert!((s[0].sigma_sq() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn delta_hf3() {
        let s = perturber_strength(1e-3, 0.098, 0.017671, 0.017611, Sign::Minus, 2, Side::Beta).unwrap();
        let want = 6.0e-5 / 0.035282;
        assert!((s.delta - want).abs() < 1e-12);
        assert!((s.delta - 1.7006e-3).abs() < 1e-7);
    }

    #[test]
    fn zero_field_zero_sigma() {
        let s = perturber_strength(0.0, 0.098, 0.017671, 0.017611, Sign::Minus, 2, Side::Beta).unwrap();
        assert_eq!(s.sigma, 0.0);
        assert_eq!(leakage_bound(&s), 0.0);
    }

    #[test]
    fn equal_frequencies_rejected() {
        assert!(perturber_strength(1e-3, 0.1, 0.02, 0.02, Sign::Plus, 2, Side::Beta).is_err());
    }

    #[test]
    fn leakage_bound_values() {
        let mut s = perturber_strength(1.0, 1.0, 1.0, 0.5, Sign::Plus, 2, Side::Beta).unwrap();
        s.sigma = 0.2;
        s.delta = 1.7006e-3;
        assert!((leakage_bound(&s) - 0.040_136_2).abs() < 1e-7);
        s.delta = 0.0;
        assert_eq!(leakage_bound(&s), s.sigma_sq());
    }

    #[test]
    fn max_drive_values() {
        let f = max_drive(0.01, 0.098, 0.017671, 0.017611).unwrap();
        assert!((f - 1.2245e-4).abs() < 1e-8, "{f}");
        let s = perturber_strength(f, 0.098, 0.017671, 0.017611, Sign::Minus, 2, Side::Beta).unwrap();
        assert!((s.sigma_sq() - 0.01).abs() < 1e-12);
        let f4 = max_drive(0.04, 0.098, 0.017671, 0.017611).unwrap();
        assert!((f4 - 2.0 * f).abs() < 1e-15);
        assert!(max_drive(0.0, 0.098, 0.017671, 0.017611).is_err());
        assert!(max_drive(1.0, 0.098, 0.017671, 0.017611).is_err());
    }

    #[test]
    fn sigma_tot_cases() {
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        let s = strengths(&sys, &pair, f0).unwrap();
        assert!((sigma_tot_sq(&s) - 2.0).abs() < 1e-9);
        assert_eq!(sigma_tot_sq(&[]), 0.0);

        let multi = fixtures::multi12();
        let mp = TransitionPair::new(&multi, 0, 5).unwrap();
        let f0 = amplitude_for_sigma_tot_sq(&multi, &mp, 0.2).unwrap();
        assert!((sigma_tot_sq(&strengths(&multi, &mp, f0).unwrap()) - 0.2).abs() < 1e-12);
        assert!((f0 - fixtures::MULTI12_F0).abs() < 1e-12 * f0);
    }

    #[test]
    fn no_perturbers_flat_chirp() {
        let sys = fixtures::two();
        let pair = TransitionPair::new(&sys, 0, 1).unwrap();
        let p = spec(1e-3, EnvelopeShape::Sine, 1e5);
        let c = first_order_chirp(&sys, &pair, &p, 257).unwrap();
        assert!(c.omega.iter().all(|&w| w == 0.017671));
        assert!(c.tracks.is_empty());
        assert!(amplitude_for_sigma_sq(&sys, &pair, 1.0).is_err());
    }

    #[test]
    fn hf3_square_first_order_shift() {
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        let p = spec(f0, EnvelopeShape::Square, 1e5);
        let c = first_order_chirp(&sys, &pair, &p, 4096).unwrap();
        let delta = HF_GAP / 0.035282;
        let want = (-HF_GAP) * (-1.0) * 2.0 * (1.0 - delta);
        for &w in &c.omega {
            let shift = w - 0.017671;
            assert!((shift - want).abs() < 1e-9 * want);
        }
        assert!((want - 1.19796e-4).abs() < 1e-9);
        assert!((c.omega[0] - 0.0177908).abs() < 1e-7);
        // away from the perturbing line, which sits below omega_ab
        assert!(c.omega.iter().all(|&w| w > 0.017671));
    }

    #[test]
    fn sine_end_shift_is_half_square() {
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        let sq = first_order_chirp(&sys, &pair, &spec(f0, EnvelopeShape::Square, 1e5), 1025).unwrap();
        let sn = first_order_chirp(&sys, &pair, &spec(f0, EnvelopeShape::Sine, 1e5), 1025).unwrap();
        let s_sq = sq.omega.last().unwrap() - 0.017671;
        let s_sn = sn.omega.last().unwrap() - 0.017671;
        assert!((s_sn - 0.5 * s_sq).abs() < 1e-12 * s_sq);
        assert_eq!(sn.omega[0], 0.017671);
    }

    #[test]
    fn smooth_envelope_chirp_shape() {
        // running mean of m^2 rises from zero, peaks after mid-pulse and relaxes
        // to its end value (1/2 for sine, 3/8 for sine^2)
        let (sys, pair) = hf3_pair();
        for (shape, end) in [(EnvelopeShape::Sine, 0.5), (EnvelopeShape::SineSquared, 0.375)] {
            let p = spec(1e-4, shape, 1e5);
            let c = first_order_chirp(&sys, &pair, &p, 2049).unwrap();
            let shift: Vec<f64> = c.omega.iter().map(|w| w - 0.017671).collect();
            let unit = shift.last().unwrap() / end;
            let (kmax, _) = shift
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
            assert!(kmax > 1024);
            assert!(shift[..=kmax].windows(2).all(|w| w[1] >= w[0]));
            assert!(shift[kmax..].windows(2).all(|w| w[1] <= w[0]));
            assert!(shift.iter().all(|&s| s >= 0.0 && s <= unit));
        }
    }

    #[test]
    fn delta_consistent_with_omega() {
        let (sys, pair) = hf3_pair();
        let p = spec(1e-3, EnvelopeShape::SineSquared, 1e5);
        for c in [
            first_order_chirp(&sys, &pair, &p, 513).unwrap(),
            recurrent_chirp(&sys, &pair, &p, 513, 1e-12, 50).unwrap(),
        ] {
            let tr = &c.tracks[0];
            for k in 0..c.times.len() {
                let from_omega = (c.omega[k] - 0.017671) / (0.017611 - 0.017671);
                assert!((from_omega - tr.delta[k]).abs() < 1e-14 * (1.0 + from_omega.abs()).max(1.0) * 10.0);
            }
        }
    }

    #[test]
    fn zero_coupling_perturber_is_ignored() {
        let (sys, pair) = hf3_pair();
        let mut levels = sys.levels().to_vec();
        levels.push(Level {
            id: 3,
            label: "dark".into(),
            energy: 0.05,
        });
        let bigger = LevelSystem::new(levels, &[(0, 1, 0.073), (1, 2, 0.098), (1, 3, 0.0)]).unwrap();
        let p = spec(1e-3, EnvelopeShape::Sine, 1e5);
        let a = first_order_chirp(&sys, &pair, &p, 333).unwrap();
        let b = first_order_chirp(&bigger, &pair, &p, 333).unwrap();
        assert_eq!(a.omega, b.omega);
    }

    #[test]
    fn recurrent_zero_field() {
        let (sys, pair) = hf3_pair();
        let p = spec(0.0, EnvelopeShape::Square, 1e5);
        let c = recurrent_chirp(&sys, &pair, &p, 100, 1e-12, 50).unwrap();
        assert_eq!(c.order, ChirpOrder::Recurrent { iterations: 1, converged: true });
        assert!(c.omega.iter().all(|&w| w == 0.017671));
    }

    #[test]
    fn recurrent_first_iteration_is_first_order() {
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        for shape in [EnvelopeShape::Square, EnvelopeShape::Sine, EnvelopeShape::SineSquared] {
            let p = spec(f0, shape, 1e5);
            let one = recurrent_chirp(&sys, &pair, &p, 4096, 1e-12, 1).unwrap();
            let first = first_order_chirp(&sys, &pair, &p, 4096).unwrap();
            for (a, b) in one.omega.iter().zip(&first.omega) {
                assert!((a - b).abs() <= 1e-14 * b);
            }
        }
    }

    #[test]
    fn recurrent_square_fixed_point() {
        // square pulse: Delta is constant and solves Delta (1 - Delta)(1 - delta Delta) = c
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        let p = spec(f0, EnvelopeShape::Square, 1e5);
        let c = recurrent_chirp(&sys, &pair, &p, 4096, 1e-12, 50).unwrap();
        assert!(c.converged());
        let delta = HF_GAP / 0.035282;
        let coeff = -2.0 * (1.0 - delta);
        // bisection oracle on g(D) = D (1 - D)(1 - delta D) - coeff over [-1.5, 0]
        let g = |d: f64| d * (1.0 - d) * (1.0 - delta * d) - coeff;
        let (mut lo, mut hi) = (-1.5, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let first = first_order_chirp(&sys, &pair, &p, 4096).unwrap();
        for k in [0, 2048, 4095] {
            assert!((c.tracks[0].delta[k] - root).abs() < 1e-10, "{} vs {root}", c.tracks[0].delta[k]);
            // shift away from the perturber: the denominator exceeds one, so the
            // converged detuning is smaller than the first-order one
            assert!(c.tracks[0].delta[k].abs() < first.tracks[0].delta[k].abs());
        }
        // regression value of the converged detuning
        assert!((root - (-0.997_737_25)).abs() < 1e-8, "{root}");
    }

    #[test]
    fn recurrent_toward_shift_exceeds_first_order() {
        // beta lowest: s_ba = s_bp = -1, the shift is towards the perturber and
        // Delta > 0 makes (1 - Delta) < 1
        let sys = LevelSystem::new(
            vec![
                Level { id: 0, label: "a".into(), energy: 0.02 },
                Level { id: 1, label: "b".into(), energy: 0.0 },
                Level { id: 2, label: "p".into(), energy: 0.021 },
            ],
            &[(0, 1, 0.1), (1, 2, 0.1)],
        )
        .unwrap();
        let pair = TransitionPair::new(&sys, 0, 1).unwrap();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 0.2).unwrap();
        let p = spec(f0, EnvelopeShape::Square, 1e5);
        let rec = recurrent_chirp(&sys, &pair, &p, 64, 1e-12, 50).unwrap();
        let first = first_order_chirp(&sys, &pair, &p, 64).unwrap();
        assert!(rec.converged());
        assert!(first.tracks[0].delta[10] > 0.0);
        assert!(rec.tracks[0].delta[10] > first.tracks[0].delta[10]);
    }

    #[test]
    fn recurrent_divergence_reported() {
        let sys = LevelSystem::new(
            vec![
                Level { id: 0, label: "a".into(), energy: 0.02 },
                Level { id: 1, label: "b".into(), energy: 0.0 },
                Level { id: 2, label: "p".into(), energy: 0.021 },
            ],
            &[(0, 1, 0.1), (1, 2, 0.1)],
        )
        .unwrap();
        let pair = TransitionPair::new(&sys, 0, 1).unwrap();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 3.0).unwrap();
        let p = spec(f0, EnvelopeShape::Square, 1e5);
        assert!(matches!(
            recurrent_chirp(&sys, &pair, &p, 64, 1e-12, 50),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn recurrent_non_convergence_flagged() {
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        let p = spec(f0, EnvelopeShape::Square, 1e5);
        let c = recurrent_chirp(&sys, &pair, &p, 64, 1e-12, 3).unwrap();
        assert_eq!(c.order, ChirpOrder::Recurrent { iterations: 3, converged: false });
    }

    #[test]
    fn residuals_shrink() {
        let (sys, pair) = hf3_pair();
        for target in [0.04, 0.5, 2.0] {
            let f0 = amplitude_for_sigma_sq(&sys, &pair, target).unwrap();
            for shape in [EnvelopeShape::Square, EnvelopeShape::Sine, EnvelopeShape::SineSquared] {
                let p = spec(f0, shape, 1e5);
                let c = recurrent_chirp(&sys, &pair, &p, 1024, 1e-12, 50).unwrap();
                assert!(c.converged());
                assert!(c.residuals.windows(2).all(|w| w[1] < w[0]), "{:?}", c.residuals);
            }
        }
    }

    #[test]
    fn interpolation_and_domain() {
        let (sys, pair) = hf3_pair();
        let p = spec(1e-3, EnvelopeShape::Sine, 1e5);
        let c = first_order_chirp(&sys, &pair, &p, 101).unwrap();
        assert_eq!(c.omega_at(c.times[37]).unwrap(), c.omega[37]);
        let mid = 0.5 * (c.times[10] + c.times[11]);
        assert!((c.omega_at(mid).unwrap() - 0.5 * (c.omega[10] + c.omega[11])).abs() < 1e-18);
        assert!(c.omega_at(-1.0).is_err());
        assert!(c.omega_at(2e5).is_err());
        // integrated phase of a constant carrier
        let flat = first_order_chirp(&fixtures::two(), &TransitionPair::new(&fixtures::two(), 0, 1).unwrap(), &p, 11).unwrap();
        assert!((flat.phase_integral_at(3.3e4).unwrap() - 0.017671 * 3.3e4).abs() < 1e-9);
    }

    #[test]
    fn alpha_side_sign_product() {
        let multi = fixtures::multi12();
        let pair = TransitionPair::new(&multi, 0, 5).unwrap();
        let s = strengths(&multi, &pair, 1e-3).unwrap();
        // alpha-side perturbers first, each side sorted by id
        let sides: Vec<Side> = s.iter().map(|x| x.side).collect();
        let first_beta = sides.iter().position(|&x| x == Side::Beta).unwrap();
        assert!(sides[..first_beta].iter().all(|&x| x == Side::Alpha));
        assert!(sides[first_beta..].iter().all(|&x| x == Side::Beta));
        for w in s[..first_beta].windows(2) {
            assert!(w[0].level < w[1].level);
        }
        // alpha = v0j0 is the lowest level: s_ab = -1, s_aq = -1
        assert!(s[..first_beta].iter().all(|x| x.sign_product == Sign::Plus));
    }

    #[test]
    fn csv_export_header() {
        let (sys, pair) = hf3_pair();
        let p = spec(1e-3, EnvelopeShape::Square, 1e5);
        let c = first_order_chirp(&sys, &pair, &p, 3).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_au,omega_au,delta_beta_2\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn report_contents() {
        let (sys, pair) = hf3_pair();
        let f0 = amplitude_for_sigma_sq(&sys, &pair, 2.0).unwrap();
        let r = design_report(&sys, &pair, f0, &EnvelopeShape::Square, 0.01).unwrap();
        assert_eq!(r.perturbers.len(), 1);
        assert!((r.sigma_tot_sq - 2.0).abs() < 1e-9);
        assert!((r.perturbers[0].f0_max_au - 1.2245e-4).abs() < 1e-8);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"sigma_tot_sq\""));
    }
}
