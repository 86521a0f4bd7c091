//! Every threshold used by diagnostics verdicts and the acceptance suite.
//!
//! | Class | Meaning |
//! |-------|---------|
//! | exact | quantities the scheme preserves to rounding |
//! | reconstruction | quantities rebuilt from the evolved state, which carry scheme error |
//! | refinement | residuals that only vanish in the continuum; checked by observed order |

/// Relative mass drift allowed along any trajectory.
pub const MASS_REL: f64 = 1e-12;

/// Absolute upper slack on the basic-energy residual.
pub const ENERGY_UPPER: f64 = 1e-8;

/// Lower slack on the basic-energy residual, relative to the seed `E1`.
pub const ENERGY_LOWER_REL: f64 = 0.05;

/// Relative slack for `int rho w^2` being non-increasing.
pub const KE_W_MONOTONE_REL: f64 = 1e-8;

/// Floating-point slack on the transported `W` maximum per step.
pub const W_TRANSPORT_SLACK: f64 = 1e-14;

/// Slack factor for the evolved-`W` maximum principle, times `1 + |W_max(0)|`.
pub const W_TRANSPORT_TOL: f64 = 1e-10;

/// Slack factor for the reconstructed-`W` maximum principle, times `1 + |W_max(0)|`.
pub const W_RECONSTRUCTED_TOL: f64 = 5e-2;

/// Relative drift allowed for `int rho W^2` rebuilt from the state.
pub const RHO_W2_DRIFT: f64 = 5e-2;

/// Lower-bound slack, relative to the initial minimum density.
pub const LOWER_BOUND_REL: f64 = 1e-2;

/// Absolute lower-bound slack used by the sweep-wide check.
pub const LOWER_BOUND_ABS: f64 = 8e-3;

/// Minimum observed order for residuals that vanish under refinement.
pub const MIN_ORDER: f64 = 0.9;

/// Accepted band for observed orders of the first-order scheme.
pub const ORDER_BAND: (f64, f64) = (0.8, 1.3);

/// Periodicity of the discrete test function `Psi`.
pub const PSI_PERIODIC: f64 = 1e-12;

/// `|d_x Psi - (rho - <rho>)|` must stay below this multiple of `dx`.
pub const PSI_SLOPE_DX: f64 = 5.0;

/// Agreement between the solver and the dense single-step oracle.
pub const ORACLE_AGREEMENT: f64 = 1e-12;

/// Below this size an error or violation counts as zero when computing orders.
pub const NOISE_FLOOR: f64 = 1e-13;

/// `|I_plain(gamma)| <= FACTOR * |I_plain(gamma_min)|`.
pub const I_PLAIN_FACTOR: f64 = 2.0;

/// Hard-congestion trend: residual at the largest gamma vs the smallest.
pub const SWITCHING_RATIO: f64 = 0.05;

/// Allowed density excess over 1 at the largest gamma of the standard sweep.
pub const MAX_RHO_EXCESS: f64 = 0.1;

/// Order estimate from two errors at resolutions `n` and `2n`.
///
/// Returns `None` when both errors sit below [`NOISE_FLOOR`] (nothing left to
/// converge), `Some(f64::INFINITY)` when only the fine error does.
pub fn observed_order(coarse: f64, fine: f64) -> Option<f64> {
    let (c, f) = (coarse.abs(), fine.abs());
    if c <= NOISE_FLOOR && f <= NOISE_FLOOR {
        None
    } else if f <= NOISE_FLOOR {
        Some(f64::INFINITY)
    } else {
        Some((c / f).log2())
    }
}

/// Refinement-class verdict: the error has to shrink at `MIN_ORDER` or already be at noise level.
pub fn shrinks_at_order(coarse: f64, fine: f64) -> bool {
    match observed_order(coarse, fine) {
        None => true,
        Some(o) => o >= MIN_ORDER,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        assert_eq!(observed_order(0.0, 0.0), None);
        assert_eq!(observed_order(1e-3, 0.0), Some(f64::INFINITY));
        assert!((observed_order(4e-3, 1e-3).unwrap() - 2.0).abs() < 1e-14);
        assert!(shrinks_at_order(1e-3, 5e-4));
        assert!(!shrinks_at_order(1e-3, 9e-4));
    }
}
