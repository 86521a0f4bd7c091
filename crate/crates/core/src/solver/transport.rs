//! Monotone upwind integrator for the non-conservative transport `W_t + u W_x = 0`.

use crate::error::{Result, SimError};
use crate::grid::{Field, Grid};

/// One first-order upwind step.
///
/// Each new value is the convex combination
/// `(1 - c+ + c-) W_i + c+ W_{i-1} - c- W_{i+1}` with `c+ = dt u_i^+ / dx`,
/// `c- = dt u_i^- / dx`. The result is clamped to the stencil range, so the
/// discrete maximum principle also holds after rounding.
#[allow(non_snake_case)]
pub fn step_W_transport(W: &Field, u: &Field, grid: &Grid, dt: f64) -> Result<Field> {
    grid.check(W)?;
    grid.check(u)?;
    if !(dt >= 0.0) {
        return Err(SimError::Precondition(format!("dt must be non-negative, got {dt}")));
    }
    let courant = dt * u.max_abs() / grid.dx();
    if courant > 1.0 {
        return Err(SimError::Precondition(format!(
            "transport CFL number {courant} exceeds 1"
        )));
    }
    let r = dt / grid.dx();
    let w = W.values();
    let out = (0..grid.n_cells())
        .map(|i| {
            let (wl, wc, wr) = (w[grid.prev(i)], w[i], w[grid.next(i)]);
            let cp = r * u[i].max(0.0);
            let cm = r * u[i].min(0.0);
            let v = (1.0 - cp + cm) * wc + cp * wl - cm * wr;
            let lo = wl.min(wc).min(wr);
            let hi = wl.max(wc).max(wr);
            v.clamp(lo, hi)
        })
        .collect();
    Ok(Field::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants_and_rest_are_fixed_points() {
        let g = Grid::new(16).unwrap();
        let c = Field::constant(&g, 1.2345678901234);
        let u = Field::from_fn(&g, |x| (6.0 * x).sin());
        assert_eq!(step_W_transport(&c, &u, &g, 0.5 * g.dx()).unwrap(), c);
        let w = Field::from_fn(&g, |x| x * x);
        assert_eq!(step_W_transport(&w, &Field::zeros(&g), &g, 0.3).unwrap(), w);
    }

    #[test]
    fn unit_cfl_is_exact_shift() {
        let g = Grid::new(12).unwrap();
        let w = Field::from_fn(&g, |x| (7.0 * x).cos() + x);
        let shifted = step_W_transport(&w, &Field::constant(&g, 1.0), &g, g.dx()).unwrap();
        for i in 0..12 {
            assert_eq!(shifted[i], w[g.prev(i)]);
        }
        let back = step_W_transport(&w, &Field::constant(&g, -1.0), &g, g.dx()).unwrap();
        for i in 0..12 {
            assert_eq!(back[i], w[g.next(i)]);
        }
    }

    #[test]
    fn rejects_cfl_violation() {
        let g = Grid::new(8).unwrap();
        let w = Field::zeros(&g);
        let r = step_W_transport(&w, &Field::constant(&g, 2.0), &g, g.dx());
        assert!(matches!(r, Err(SimError::Precondition(_))));
    }

    proptest! {
        #[test]
        fn maximum_principle(
            data in prop::collection::vec((-3.0f64..3.0, -2.0f64..2.0), 4..64),
            frac in 0.0f64..1.0,
        ) {
            let g = Grid::new(data.len()).unwrap();
            let w = Field::new(data.iter().map(|d| d.0).collect());
            let u = Field::new(data.iter().map(|d| d.1).collect());
            let dt = frac * g.dx() / u.max_abs().max(1e-12);
            let next = step_W_transport(&w, &u, &g, dt).unwrap();
            prop_assert!(next.max() <= w.max());
            prop_assert!(next.min() >= w.min());
        }
    }
}
