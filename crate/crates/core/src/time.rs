//! Fixed-point time.
//!
//! Travel times carry one decimal, so every timestamp is stored as an integer
//! number of ticks (tenths of an epoch). Departures always happen on epoch
//! boundaries, i.e. on multiples of [`TICKS_PER_EPOCH`].

/// Time in tenths of an epoch.
pub type Ticks = i64;

pub const TICKS_PER_EPOCH: Ticks = 10;

#[inline]
pub fn epoch_ticks(epoch: u32) -> Ticks {
    Ticks::from(epoch) * TICKS_PER_EPOCH
}

/// Smallest epoch boundary at or after `t`.
#[inline]
pub fn ceil_epoch(t: Ticks) -> Ticks {
    t.div_euclid(TICKS_PER_EPOCH) * TICKS_PER_EPOCH
        + if t.rem_euclid(TICKS_PER_EPOCH) == 0 { 0 } else { TICKS_PER_EPOCH }
}

/// Largest epoch boundary at or before `t`.
#[inline]
pub fn floor_epoch(t: Ticks) -> Ticks {
    t.div_euclid(TICKS_PER_EPOCH) * TICKS_PER_EPOCH
}

/// Epoch index of a boundary-aligned tick value.
#[inline]
pub fn to_epoch(t: Ticks) -> i64 {
    t.div_euclid(TICKS_PER_EPOCH)
}

#[inline]
pub fn to_real(t: Ticks) -> f64 {
    t as f64 / TICKS_PER_EPOCH as f64
}

/// Truncates a real duration to one decimal and converts it to ticks.
#[inline]
pub fn truncate_to_ticks(x: f64) -> Ticks {
    // the epsilon absorbs representation error such as 4.999999 for 5.0
    (x * TICKS_PER_EPOCH as f64 + 1e-9).floor() as Ticks
}

/// Converts a real that is already a multiple of 0.1 to ticks.
#[inline]
pub fn round_to_ticks(x: f64) -> Ticks {
    (x * TICKS_PER_EPOCH as f64).round() as Ticks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_boundaries() {
        assert_eq!(ceil_epoch(0), 0);
        assert_eq!(ceil_epoch(1), 10);
        assert_eq!(ceil_epoch(10), 10);
        assert_eq!(ceil_epoch(19), 20);
        assert_eq!(floor_epoch(19), 10);
        assert_eq!(floor_epoch(-1), -10);
        assert_eq!(ceil_epoch(-11), -10);
    }

    #[test]
    fn truncation_keeps_one_decimal() {
        assert_eq!(truncate_to_ticks(5.0), 50);
        assert_eq!(truncate_to_ticks(2f64.sqrt()), 14);
        assert_eq!(truncate_to_ticks(12.99), 129);
        assert_eq!(round_to_ticks(0.3), 3);
    }
}
