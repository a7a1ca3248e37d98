//! Time unit conversion. Everything internal is in atomic units.

/// Seconds per atomic unit of time.
pub const AU_TIME_SECONDS: f64 = 2.418884326509e-17;

const NS_PER_AU: f64 = AU_TIME_SECONDS * 1e9;

pub fn ns_to_au(ns: f64) -> f64 {
    ns / NS_PER_AU
}

pub fn au_to_ns(au: f64) -> f64 {
    au * NS_PER_AU
}
