//! Figures of merit computed from trajectories.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::optimizer::{leakage_bound, PerturberStrength};
use crate::pulse::PulseSpec;
use crate::system::{LevelId, TransitionPair};

/// Minimum rise and fall (in population) for a maximum to count as an oscillation.
pub const DEFAULT_PROMINENCE: f64 = 0.05;

/// Where `m(t) sigma_tot^2` drops below this the loss ratio is not evaluated.
pub const LOSS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelLeakage {
    pub level: LevelId,
    pub peak: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferMetrics {
    pub target: LevelId,
    /// `max_t` population of the target level.
    pub max_transfer: Extremum,
    /// `min_t` of the summed population of the selected pair.
    pub min_retained: Extremum,
    /// Peak population of every level outside the pair, by level id.
    pub peak_leakage: Vec<LevelLeakage>,
    pub oscillation_count: usize,
    pub maxima_times: Vec<f64>,
}

// Vertex of the parabola through three equally spaced samples, as an offset in
// units of the spacing and the value there.
fn parabola(y0: f64, y1: f64, y2: f64) -> Option<(f64, f64)> {
    let curv = (y0 + y2) - 2.0 * y1;
    if curv == 0.0 {
        return None;
    }
    let slope = y2 - y0;
    let offset = -0.5 * slope / curv;
    if offset.abs() > 1.0 {
        return None;
    }
    Some((offset, y1 - slope * slope / (8.0 * curv)))
}

fn extremum(times: &[f64], y: &[f64], maximum: bool) -> Extremum {
    let better = |a: f64, b: f64| if maximum { a > b } else { a < b };
    let mut k = 0;
    for i in 1..y.len() {
        if better(y[i], y[k]) {
            k = i;
        }
    }
    let mut value = y[k];
    let mut time = times[k];
    if k > 0 && k + 1 < y.len() {
        let h = 0.5 * (times[k + 1] - times[k - 1]);
        if let Some((offset, v)) = parabola(y[k - 1], y[k], y[k + 1]) {
            if better(v, value) || v == value {
                value = v;
                time = times[k] + offset * h;
            }
        }
    }
    Extremum {
        value: value.clamp(0.0, 1.0),
        time,
    }
}

/// Maxima preceded by a rise and followed by a fall of at least `prominence`.
/// A peak reached near the end of the record, without the full fall, counts too.
fn prominent_maxima(times: &[f64], y: &[f64], prominence: f64) -> Vec<f64> {
    let mut peaks = Vec::new();
    let Some(&first) = y.first() else {
        return peaks;
    };
    let (mut low, mut high, mut high_at) = (first, first, times[0]);
    let mut seeking_peak = true;
    for (&t, &v) in times.iter().zip(y) {
        if seeking_peak {
            if v > high {
                high = v;
                high_at = t;
            }
            if high - low >= prominence && high - v >= prominence {
                peaks.push(high_at);
                seeking_peak = false;
                low = v;
            } else if v < low {
                low = v;
                high = v;
                high_at = t;
            }
        } else if v < low {
            low = v;
        } else if v - low >= prominence {
            seeking_peak = true;
            high = v;
            high_at = t;
        }
    }
    if seeking_peak && high - low >= prominence {
        peaks.push(high_at);
    }
    peaks
}

fn check_coverage(traj: &Trajectory, pulse_duration: f64) -> Result<()> {
    if traj.times.len() < 2 || traj.end() < pulse_duration * (1.0 - 1e-12) {
        return Err(Error::ShortTrajectory {
            covered: traj.end(),
            required: pulse_duration,
        });
    }
    Ok(())
}

/// Metrics for a run that should move population into `target`.
pub fn transfer_metrics(
    traj: &Trajectory,
    pair: &TransitionPair,
    target: LevelId,
    pulse_duration: f64,
) -> Result<TransferMetrics> {
    check_coverage(traj, pulse_duration)?;
    if target != pair.alpha && target != pair.beta {
        return Err(Error::InvalidParameter(format!(
            "target {target} is not part of the pair ({}, {})",
            pair.alpha, pair.beta
        )));
    }
    let pops = traj.populations();
    let target_pop = &pops[target];
    let retained: Vec<f64> = pops[pair.alpha]
        .iter()
        .zip(&pops[pair.beta])
        .map(|(a, b)| a + b)
        .collect();
    let peak_leakage = (0..pops.len())
        .filter(|&k| k != pair.alpha && k != pair.beta)
        .map(|k| {
            let e = extremum(&traj.times, &pops[k], true);
            LevelLeakage {
                level: k,
                peak: e.value,
                time: e.time,
            }
        })
        .collect();
    let maxima_times = prominent_maxima(&traj.times, target_pop, DEFAULT_PROMINENCE);
    Ok(TransferMetrics {
        target,
        max_transfer: extremum(&traj.times, target_pop, true),
        min_retained: extremum(&traj.times, &retained, false),
        peak_leakage,
        oscillation_count: maxima_times.len(),
        maxima_times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossEnvelopeReport {
    pub sigma_tot_sq: f64,
    /// Samples with `m(t) sigma_tot^2` above the floor.
    pub samples_checked: usize,
    /// Samples where the loss exceeds `m(t) sigma_tot^2`.
    pub violations: usize,
    pub violation_fraction: f64,
    pub max_ratio: f64,
    pub max_ratio_time: Option<f64>,
    pub median_ratio: f64,
}

/// Compares the pair's population loss `1 - P_alpha - P_beta` with `m(t) sigma_tot^2`.
pub fn loss_envelope_check(
    traj: &Trajectory,
    pair: &TransitionPair,
    sigma_tot_sq: f64,
    spec: &PulseSpec,
) -> LossEnvelopeReport {
    let mut ratios = Vec::new();
    let mut max_ratio = 0.0;
    let mut max_ratio_time = None;
    for s in &traj.states {
        let scale = spec.envelope(s.time) * sigma_tot_sq;
        if scale <= LOSS_FLOOR {
            continue;
        }
        let loss = 1.0 - s.amplitudes[pair.alpha].norm_sqr() - s.amplitudes[pair.beta].norm_sqr();
        let r = loss / scale;
        if max_ratio_time.is_none() || r > max_ratio {
            max_ratio = r;
            max_ratio_time = Some(s.time);
        }
        ratios.push(r);
    }
    let violations = ratios.iter().filter(|&&r| r > 1.0).count();
    let median_ratio = if ratios.is_empty() {
        0.0
    } else {
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    };
    LossEnvelopeReport {
        sigma_tot_sq,
        samples_checked: ratios.len(),
        violations,
        violation_fraction: if ratios.is_empty() {
            0.0
        } else {
            violations as f64 / ratios.len() as f64
        },
        max_ratio,
        max_ratio_time,
        median_ratio,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageCheck {
    pub level: LevelId,
    pub peak: f64,
    pub bound: f64,
    pub ok: bool,
    /// `false` when the bound is at least 1 and so says nothing.
    pub informative: bool,
}

/// Peak population of each perturber against its leakage bound, allowing
/// `bound * (1 + slack)`. A level attached to both selected levels is checked
/// against the sum of its two bounds.
pub fn leakage_vs_bound(traj: &Trajectory, strengths: &[PerturberStrength], slack: f64) -> Vec<LeakageCheck> {
    let mut levels: Vec<LevelId> = strengths.iter().map(|s| s.level).collect();
    levels.sort_unstable();
    levels.dedup();
    levels
        .into_iter()
        .map(|level| {
            let bound: f64 = strengths
                .iter()
                .filter(|s| s.level == level)
                .map(leakage_bound)
                .sum();
            let peak = extremum(&traj.times, &traj.population(level), true).value;
            LeakageCheck {
                level,
                peak,
                bound,
                ok: peak <= bound * (1.0 + slack),
                informative: bound < 1.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub resonant: TransferMetrics,
    pub optimized: TransferMetrics,
    /// `optimized.max_transfer - resonant.max_transfer`.
    pub amplitude_gain: f64,
}

pub fn compare_runs(
    resonant: &Trajectory,
    optimized: &Trajectory,
    pair: &TransitionPair,
    target: LevelId,
    pulse_duration: f64,
) -> Result<ComparisonReport> {
    let r = transfer_metrics(resonant, pair, target, pulse_duration)?;
    let o = transfer_metrics(optimized, pair, target, pulse_duration)?;
    Ok(ComparisonReport {
        amplitude_gain: o.max_transfer.value - r.max_transfer.value,
        resonant: r,
        optimized: o,
    })
}

fn interpolate(times: &[f64], y: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x <= t);
    if k == 0 {
        return y[0];
    }
    if k >= times.len() {
        return *y.last().unwrap();
    }
    let (t0, t1) = (times[k - 1], times[k]);
    y[k - 1] + (y[k] - y[k - 1]) * (t - t0) / (t1 - t0)
}

/// Long-format CSV `t_au,series,value` with one series per level and run,
/// named `resonant.pop_<i>` and `optimized.pop_<i>`. The optimized run is
/// resampled onto the resonant grid when the grids differ.
pub fn write_comparison_csv<W: Write>(resonant: &Trajectory, optimized: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t_au,series,value")?;
    let same_grid = resonant.times == optimized.times;
    for (name, traj) in [("resonant", resonant), ("optimized", optimized)] {
        for (i, pop) in traj.populations().iter().enumerate() {
            for (k, &t) in resonant.times.iter().enumerate() {
                let v = if same_grid || name == "resonant" {
                    pop[k]
                } else {
                    interpolate(&traj.times, pop, t)
                };
                writeln!(out, "{t:.16e},{name}.pop_{i},{v:.16e}")?;
            }
        }
    }
    Ok(())
}
