//! Pulse envelopes, the driving field `F(t) = F0 m(t) cos(phase(t))`, the
//! rescaled time `tau` and pulse-area (pi-pulse) durations.
//!
//! Times are measured from the start of the pulse: the envelope window is
//! `[0, duration]`.

use std::f64::consts::PI;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::ChirpProfile;

/// Piecewise-linear envelope read from samples. Zero outside the sampled span.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    times: Vec<f64>,
    values: Vec<f64>,
    // cumulative integrals of m and m^2 at each node
    area: Vec<f64>,
    area_sq: Vec<f64>,
}

impl Tabulated {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidPulse(
                "tabulated envelope needs at least two (t, m) samples".into(),
            ));
        }
        if times[0] < 0.0 {
            return Err(Error::InvalidPulse(format!(
                "tabulated envelope starts before the pulse origin (t = {})",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidPulse(format!(
                    "tabulated times must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(m) = values.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::InvalidPulse(format!(
                "tabulated envelope value {m} is outside [0, 1]"
            )));
        }
        let mut area = vec![0.0; times.len()];
        let mut area_sq = vec![0.0; times.len()];
        for k in 1..times.len() {
            let h = times[k] - times[k - 1];
            let (a, b) = (values[k - 1], values[k]);
            area[k] = area[k - 1] + 0.5 * h * (a + b);
            area_sq[k] = area_sq[k - 1] + h * (a * a + a * b + b * b) / 3.0;
        }
        Ok(Tabulated {
            times,
            values,
            area,
            area_sq,
        })
    }

    /// Reads a two-column CSV `t_au,m` with a header row.
    pub fn from_csv<R: Read>(mut source: R) -> Result<Self> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::InvalidPulse(format!("line {}: expected two columns", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPulse(format!("line {}: {e}", lineno + 1)))
            };
            times.push(parse(cols.next())?);
            values.push(parse(cols.next())?);
        }
        Tabulated::new(times, values)
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn segment(&self, t: f64) -> Option<(usize, f64)> {
        if t < self.times[0] || t > self.end() {
            return None;
        }
        let k = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            p if p >= self.times.len() => self.times.len() - 2,
            p => p - 1,
        };
        Some((k, t - self.times[k]))
    }

    fn value(&self, t: f64) -> f64 {
        match self.segment(t) {
            None => 0.0,
            Some((k, dt)) => {
                let h = self.times[k + 1] - self.times[k];
                let (a, b) = (self.values[k], self.values[k + 1]);
                a + (b - a) * dt / h
            }
        }
    }

    // (int_0^t m, int_0^t m^2)
    fn integrals(&self, t: f64) -> (f64, f64) {
        if t <= self.times[0] {
            return (0.0, 0.0);
        }
        if t >= self.end() {
            let n = self.times.len() - 1;
            return (self.area[n], self.area_sq[n]);
        }
        let (k, dt) = self.segment(t).unwrap();
        let h = self.times[k + 1] - self.times[k];
        let a = self.values[k];
        let b = a + (self.values[k + 1] - a) * dt / h;
        (
            self.area[k] + 0.5 * dt * (a + b),
            self.area_sq[k] + dt * (a * a + a * b + b * b) / 3.0,
        )
    }
}

/// Envelope shape `m(t)` on the pulse window.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeShape {
    Square,
    /// Single arch `sin(pi t / D)`.
    Sine,
    /// `sin^2(pi t / D)`.
    SineSquared,
    Tabulated(Tabulated),
}

impl EnvelopeShape {
    pub fn name(&self) -> &'static str {
        match self {
            EnvelopeShape::Square => "square",
            EnvelopeShape::Sine => "sine",
            EnvelopeShape::SineSquared => "sine_squared",
            EnvelopeShape::Tabulated(_) => "tabulated",
        }
    }

    pub fn builtin(name: &str) -> Option<EnvelopeShape> {
        match name {
            "square" => Some(EnvelopeShape::Square),
            "sine" => Some(EnvelopeShape::Sine),
            "sine_squared" | "sine2" | "sin2" => Some(EnvelopeShape::SineSquared),
            _ => None,
        }
    }

    /// Envelope value at `t` for a pulse lasting `duration`.
    pub fn value(&self, t: f64, duration: f64) -> f64 {
        if t < 0.0 || t > duration {
            return 0.0;
        }
        let arch = PI / duration;
        match self {
            EnvelopeShape::Square => 1.0,
            EnvelopeShape::Sine => (arch * t).sin().max(0.0),
            EnvelopeShape::SineSquared => (arch * t).sin().powi(2),
            EnvelopeShape::Tabulated(tab) => tab.value(t),
        }
    }

    /// `int_0^t m` (clamped to the window).
    pub fn integral(&self, t: f64, duration: f64) -> f64 {
        let s = t.clamp(0.0, duration);
        let arch = PI / duration;
        match self {
            EnvelopeShape::Square => s,
            EnvelopeShape::Sine => 2.0 * (0.5 * arch * s).sin().powi(2) / arch,
            EnvelopeShape::SineSquared => sin2_integral(arch, s),
            EnvelopeShape::Tabulated(tab) => tab.integrals(s).0,
        }
    }

    /// `int_0^t m^2` (clamped to the window).
    pub fn square_integral(&self, t: f64, duration: f64) -> f64 {
        let s = t.clamp(0.0, duration);
        let arch = PI / duration;
        match self {
            EnvelopeShape::Square => s,
            EnvelopeShape::Sine => sin2_integral(arch, s),
            EnvelopeShape::SineSquared => {
                3.0 * s / 8.0 - (2.0 * arch * s).sin() / (4.0 * arch)
                    + (4.0 * arch * s).sin() / (32.0 * arch)
            }
            EnvelopeShape::Tabulated(tab) => tab.integrals(s).1,
        }
    }

    /// Running mean `(1/t) int_0^t m^2`, with the `t -> 0` limit `m(0)^2`.
    pub fn mean_square(&self, t: f64, duration: f64) -> f64 {
        if t <= 0.0 {
            return self.value(0.0, duration).powi(2);
        }
        let s = t.min(duration);
        // below this the closed forms lose digits to cancellation; use the series
        let small = 1e-4 * duration;
        let x = PI * s / duration;
        match self {
            EnvelopeShape::Sine if s < small => x * x / 3.0 - x.powi(4) / 15.0,
            EnvelopeShape::SineSquared if s < small => x.powi(4) / 5.0 - 2.0 * x.powi(6) / 21.0,
            _ => self.square_integral(s, duration) / t,
        }
    }

    /// Pulse length whose envelope area equals `area`, or `None` when a
    /// tabulated envelope never accumulates that much.
    pub fn duration_for_area(&self, area: f64) -> Option<f64> {
        match self {
            EnvelopeShape::Square => Some(area),
            EnvelopeShape::Sine => Some(PI * area / 2.0),
            EnvelopeShape::SineSquared => Some(2.0 * area),
            EnvelopeShape::Tabulated(tab) => {
                let end = tab.end();
                if tab.integrals(end).0 < area {
                    return None;
                }
                Some(invert_monotone(|t| tab.integrals(t).0, area, 0.0, end))
            }
        }
    }
}

fn sin2_integral(arch: f64, s: f64) -> f64 {
    s / 2.0 - (2.0 * arch * s).sin() / (4.0 * arch)
}

/// Smallest `t` in `[lo, hi]` with `f(t) >= target` for nondecreasing `f`.
fn invert_monotone<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    if f(lo) >= target {
        return lo;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// How the carrier phase is built from `omega(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// `omega(t) * t`, the convention the optimized frequency is derived for.
    #[default]
    Literal,
    /// `int_0^t omega(t') dt'`; only for sensitivity studies.
    Integrated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Carrier {
    Fixed(f64),
    Chirped(ChirpProfile),
}

impl Carrier {
    pub fn omega(&self, t: f64) -> Result<f64> {
        match self {
            Carrier::Fixed(w) => Ok(*w),
            Carrier::Chirped(p) => p.omega_at(t),
        }
    }

    pub fn phase(&self, t: f64, mode: PhaseMode) -> Result<f64> {
        match (self, mode) {
            (Carrier::Fixed(w), _) => Ok(w * t),
            (Carrier::Chirped(p), PhaseMode::Literal) => Ok(p.omega_at(t)? * t),
            (Carrier::Chirped(p), PhaseMode::Integrated) => p.phase_integral_at(t),
        }
    }

    /// Upper bound of `omega(t)` over the pulse.
    pub fn max_omega(&self) -> f64 {
        match self {
            Carrier::Fixed(w) => w.abs(),
            Carrier::Chirped(p) => p.omega.iter().fold(0.0_f64, |m, w| m.max(w.abs())),
        }
    }
}

/// Envelope, phase and instantaneous carrier frequency at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub envelope: f64,
    pub omega: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    /// Peak field `F0`, a.u.
    pub amplitude: f64,
    pub shape: EnvelopeShape,
    /// Pulse length `T - T0`, a.u.
    pub duration: f64,
    pub carrier: Carrier,
    pub phase_mode: PhaseMode,
}

impl PulseSpec {
    pub fn new(amplitude: f64, shape: EnvelopeShape, duration: f64, carrier: Carrier) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidPulse(format!(
                "amplitude must be finite and nonnegative, got {amplitude}"
            )));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidPulse(format!(
                "duration must be positive, got {duration}"
            )));
        }
        if let Carrier::Fixed(w) = carrier {
            if !w.is_finite() {
                return Err(Error::InvalidPulse("carrier frequency is not finite".into()));
            }
        }
        Ok(PulseSpec {
            amplitude,
            shape,
            duration,
            carrier,
            phase_mode: PhaseMode::Literal,
        })
    }

    pub fn with_carrier(&self, carrier: Carrier) -> PulseSpec {
        PulseSpec {
            carrier,
            ..self.clone()
        }
    }

    pub fn with_phase_mode(mut self, mode: PhaseMode) -> PulseSpec {
        self.phase_mode = mode;
        self
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.shape.value(t, self.duration)
    }

    pub fn in_window(&self, t: f64) -> bool {
        (0.0..=self.duration).contains(&t)
    }

    pub fn drive(&self, t: f64) -> Result<DriveSample> {
        if !self.in_window(t) {
            return Ok(DriveSample {
                envelope: 0.0,
                omega: 0.0,
                phase: 0.0,
            });
        }
        Ok(DriveSample {
            envelope: self.envelope(t),
            omega: self.carrier.omega(t)?,
            phase: self.carrier.phase(t, self.phase_mode)?,
        })
    }

    /// `F(t) = F0 m(t) cos(phase(t))`; zero outside the pulse window.
    pub fn field(&self, t: f64) -> Result<f64> {
        if !self.in_window(t) {
            return Ok(0.0);
        }
        let phase = self.carrier.phase(t, self.phase_mode)?;
        Ok(self.amplitude * self.envelope(t) * phase.cos())
    }

    pub fn mean_square(&self, t: f64) -> f64 {
        self.shape.mean_square(t, self.duration)
    }

    fn tau_rate(&self, mu_ab: f64) -> f64 {
        0.5 * self.amplitude * mu_ab
    }

    /// `tau(t) = (F0 mu_ab / 2) int_0^t m`.
    pub fn tau_of_t(&self, mu_ab: f64, t: f64) -> f64 {
        self.tau_rate(mu_ab) * self.shape.integral(t, self.duration)
    }

    pub fn tau_max(&self, mu_ab: f64) -> f64 {
        self.tau_of_t(mu_ab, self.duration)
    }

    /// Inverse of [`tau_of_t`](Self::tau_of_t). Where the envelope vanishes
    /// over an interval, the start of that interval is returned.
    pub fn t_of_tau(&self, mu_ab: f64, tau: f64) -> Result<f64> {
        let max = self.tau_max(mu_ab);
        if !(0.0..=max).contains(&tau) {
            return Err(Error::InvalidParameter(format!(
                "tau = {tau} is outside [0, {max}]"
            )));
        }
        Ok(invert_monotone(|t| self.tau_of_t(mu_ab, t), tau, 0.0, self.duration))
    }

    /// `x(tau) = (F0 mu_ab / 2) t(tau)`.
    pub fn scaled_time(&self, mu_ab: f64, tau: f64) -> Result<f64> {
        Ok(self.tau_rate(mu_ab) * self.t_of_tau(mu_ab, tau)?)
    }
}

/// Duration `D` with `(F0 mu_ab / 2) int_0^D m = angle`. `angle = pi` is one
/// full population oscillation; `pi / 2` is a single transfer.
pub fn pi_pulse_duration(amplitude: f64, mu_ab: f64, shape: &EnvelopeShape, angle: f64) -> Result<f64> {
    if !(amplitude > 0.0) || mu_ab == 0.0 {
        return Err(Error::InvalidParameter(
            "pulse area needs a positive amplitude and nonzero dipole".into(),
        ));
    }
    if !(angle > 0.0) {
        return Err(Error::InvalidParameter(format!("target angle must be positive, got {angle}")));
    }
    let area = 2.0 * angle / (amplitude * mu_ab.abs());
    shape.duration_for_area(area).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "tabulated envelope is too short to reach pulse angle {angle}"
        ))
    })
}
