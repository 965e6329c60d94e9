//! Unit conversion constants used at the I/O boundary.

/// Metres per foot.
pub const FT: f64 = 0.3048;
/// Metres per flight level (100 ft).
pub const FL: f64 = 30.48;
/// Metres per second per knot (1852 m per nautical mile).
pub const KT: f64 = 1852.0 / 3600.0;
/// Metres per second per foot-per-minute.
pub const FPM: f64 = FT / 60.0;

#[inline]
pub fn ft_to_m(ft: f64) -> f64 {
    ft * FT
}

#[inline]
pub fn m_to_ft(m: f64) -> f64 {
    m / FT
}

#[inline]
pub fn fl_to_m(fl: f64) -> f64 {
    fl * FL
}

#[inline]
pub fn m_to_fl(m: f64) -> f64 {
    m / FL
}

#[inline]
pub fn kt_to_ms(kt: f64) -> f64 {
    kt * KT
}

#[inline]
pub fn ms_to_kt(ms: f64) -> f64 {
    ms / KT
}
