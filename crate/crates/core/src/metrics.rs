//! Per-instance log-loss.

/// Probabilities are clipped to `[PROBABILITY_FLOOR, 1]` before taking logs,
/// which bounds the loss by `-ln(1e-6) ≈ 13.8155`.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// `-ln(clip(p, 1e-6, 1))`.
pub fn log_loss(p_true: f64) -> f64 {
    -p_true.clamp(PROBABILITY_FLOOR, 1.0).ln()
}

/// Largest value [`log_loss`] can return.
pub fn max_log_loss() -> f64 {
    -PROBABILITY_FLOOR.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(log_loss(1.0), 0.0);
        assert!((log_loss(0.5) - 0.6931).abs() < 1e-4);
        assert!((log_loss(0.0) - 13.8155).abs() < 1e-3);
        assert_eq!(log_loss(0.0), max_log_loss());
    }

    #[test]
    fn loss_is_monotone_in_probability() {
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let l = log_loss(i as f64 / 1000.0);
            assert!(l <= prev);
            prev = l;
        }
    }
}
