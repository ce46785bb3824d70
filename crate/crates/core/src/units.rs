//! Linear-frequency / time conversions. Internally everything is rad/s and s.

use std::f64::consts::TAU;

/// 2π × MHz → rad/s.
pub fn mhz_to_rad(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e6
}

pub fn rad_to_mhz(w: f64) -> f64 {
    w / (TAU * 1e6)
}

pub fn ns_to_s(t_ns: f64) -> f64 {
    t_ns * 1e-9
}

pub fn s_to_ns(t: f64) -> f64 {
    t * 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((rad_to_mhz(mhz_to_rad(19.6)) - 19.6).abs() < 1e-12);
        assert!((s_to_ns(ns_to_s(38.0)) - 38.0).abs() < 1e-12);
        assert!((mhz_to_rad(1.0) - 6.283185307179586e6).abs() < 1e-6);
    }
}
