//! Bundled level systems.
//!
//! * `hf3`: three rovibrational levels of HF, `v0j2` (alpha), `v1j1` (beta)
//!   and the perturbing `v2j2`.
//! * `two`: the `v0j2`/`v1j1` pair alone.
//! * `multi12`: a synthetic 12-level HF-like ladder (`v = 0..2`, `j = 0..3`),
//!   generated by `fixtures/gen_multi12.py`. The driven transition is
//!   `v0j0` (id 0) to `v1j1` (id 5); [`MULTI12_F0`] gives `sigma_tot^2 = 0.2`.

use crate::system::{load_system, LevelSystem, SystemFormat};

pub const HF3_JSON: &str = include_str!("../fixtures/hf3.json");
pub const TWO_JSON: &str = include_str!("../fixtures/two.json");
pub const MULTI12_JSON: &str = include_str!("../fixtures/multi12.json");

/// Peak field (a.u.) at which the `multi12` pair (0, 5) has `sigma_tot^2 = 0.2`.
pub const MULTI12_F0: f64 = 4.045_723_467_760_708e-3;

pub const NAMES: [&str; 3] = ["hf3", "two", "multi12"];

pub fn by_name(name: &str) -> Option<LevelSystem> {
    let text = match name {
        "hf3" => HF3_JSON,
        "two" => TWO_JSON,
        "multi12" => MULTI12_JSON,
        _ => return None,
    };
    Some(load_system(text.as_bytes(), SystemFormat::Json).expect("bundled fixture is valid"))
}

pub fn hf3() -> LevelSystem {
    by_name("hf3").unwrap()
}

pub fn two() -> LevelSystem {
    by_name("two").unwrap()
}

pub fn multi12() -> LevelSystem {
    by_name("multi12").unwrap()
}
