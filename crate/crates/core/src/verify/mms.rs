//! Manufactured solutions `rho*(x - s t)`, `u*(x - s t)` with closed-form
//! source terms.

use crate::error::{Result, SimError};
use crate::grid::{Field, Grid};
use crate::model::{Formulation, ModelParams, State};
use crate::solver::SourceTerm;
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// `a + b sin(2 pi xi)` or `a + b cos(2 pi xi)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    Sin { a: f64, b: f64 },
    Cos { a: f64, b: f64 },
}

impl Profile {
    fn eval(&self, xi: f64) -> [f64; 3] {
        let (s, c) = (TAU * xi).sin_cos();
        match *self {
            Profile::Sin { a, b } => [a + b * s, b * TAU * c, -b * TAU * TAU * s],
            Profile::Cos { a, b } => [a + b * c, -b * TAU * s, -b * TAU * TAU * c],
        }
    }

    fn min(&self) -> f64 {
        match *self {
            Profile::Sin { a, b } | Profile::Cos { a, b } => a - b.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub gamma: f64,
    /// Translation speed `s` of both profiles.
    pub speed: f64,
    pub t_end: f64,
    rho: Profile,
    u: Profile,
}

impl ManufacturedCase {
    pub const NAMES: [&'static str; 3] = ["constant", "velocity_wave", "traveling_wave"];

    pub fn by_name(name: &str) -> Result<Self> {
        let case = match name {
            "constant" => ManufacturedCase {
                name: "constant",
                gamma: 4.0,
                speed: 0.0,
                t_end: 0.25,
                rho: Profile::Sin { a: 0.8, b: 0.0 },
                u: Profile::Sin { a: 0.3, b: 0.0 },
            },
            "velocity_wave" => ManufacturedCase {
                name: "velocity_wave",
                gamma: 4.0,
                speed: 1.0,
                t_end: 0.25,
                rho: Profile::Sin { a: 0.8, b: 0.0 },
                u: Profile::Sin { a: 0.0, b: 0.1 },
            },
            "traveling_wave" => ManufacturedCase {
                name: "traveling_wave",
                gamma: 4.0,
                speed: 1.0,
                t_end: 0.25,
                rho: Profile::Sin { a: 0.8, b: 0.1 },
                u: Profile::Cos { a: 0.5, b: 0.1 },
            },
            other => {
                return Err(SimError::Config(format!(
                    "unknown manufactured case '{other}' (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(case)
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.gamma).expect("cases use gamma > 0")
    }

    pub fn rho_min(&self) -> f64 {
        self.rho.min()
    }

    fn xi(&self, x: f64, t: f64) -> f64 {
        x - self.speed * t
    }

    pub fn exact_rho(&self, x: f64, t: f64) -> f64 {
        self.rho.eval(self.xi(x, t))[0]
    }

    pub fn exact_u(&self, x: f64, t: f64) -> f64 {
        self.u.eval(self.xi(x, t))[0]
    }

    /// `w* = u* + d_x rho*^gamma`.
    pub fn exact_w(&self, x: f64, t: f64) -> f64 {
        let [r, r1, _] = self.rho.eval(self.xi(x, t));
        let g = self.gamma;
        self.exact_u(x, t) + g * r.powf(g - 1.0) * r1
    }

    /// Exact state at time `t` sampled at cell centres.
    pub fn state(&self, grid: &Grid, t: f64, formulation: Formulation) -> Result<State> {
        let rho = Field::from_fn(grid, |x| self.exact_rho(x, t));
        let v = match formulation {
            Formulation::UForm => Field::from_fn(grid, |x| self.exact_u(x, t)),
            Formulation::WForm => Field::from_fn(grid, |x| self.exact_w(x, t)),
        };
        State::from_velocity(t, *grid, rho, &v, formulation)
    }

    /// `(S_rho, S_mom)`; `S_mom` belongs to `rho u` in the u-formulation and to
    /// `rho w` in the w-formulation.
    ///
    /// With `xi = x - s t`:
    /// `S_rho = (u - s) rho' + rho u'`,
    /// `S_rho u = u S_rho + rho (u - s) u' - lambda'(rho) rho' u' - lambda(rho) u''`,
    /// `S_rho w = w S_rho + rho (u - s) w'`,
    /// where `lambda = gamma rho^(gamma+1)`, `w = u + gamma rho^(gamma-1) rho'`.
    pub fn sources(&self, formulation: Formulation, x: f64, t: f64) -> (f64, f64) {
        let xi = self.xi(x, t);
        let [r, r1, r2] = self.rho.eval(xi);
        let [u, u1, u2] = self.u.eval(xi);
        let g = self.gamma;
        let s = self.speed;
        let s_rho = (u - s) * r1 + r * u1;
        let s_mom = match formulation {
            Formulation::UForm => {
                let lam = g * r.powf(g + 1.0);
                let dlam = g * (g + 1.0) * r.powf(g);
                u * s_rho + r * (u - s) * u1 - dlam * r1 * u1 - lam * u2
            }
            Formulation::WForm => {
                let w = u + g * r.powf(g - 1.0) * r1;
                let w1 = u1 + g * (g - 1.0) * r.powf(g - 2.0) * r1 * r1 + g * r.powf(g - 1.0) * r2;
                w * s_rho + r * (u - s) * w1
            }
        };
        (s_rho, s_mom)
    }
}

/// Source terms of a case in one formulation, for the solver.
#[derive(Debug, Clone)]
pub struct MmsSource<'a> {
    pub case: &'a ManufacturedCase,
    pub formulation: Formulation,
}

impl SourceTerm for MmsSource<'_> {
    fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        self.case.sources(self.formulation, x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fourth-order central difference.
    fn d4(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    fn fd_sources(c: &ManufacturedCase, form: Formulation, x: f64, t: f64) -> (f64, f64) {
        let h = 1e-3;
        let g = c.gamma;
        let rho = |x: f64, t: f64| c.exact_rho(x, t);
        let vel = |x: f64, t: f64| match form {
            Formulation::UForm => c.exact_u(x, t),
            Formulation::WForm => c.exact_w(x, t),
        };
        let s_rho = d4(&|tt| rho(x, tt), t, h) + d4(&|xx| rho(xx, t) * c.exact_u(xx, t), x, h);
        let mom_t = d4(&|tt| rho(x, tt) * vel(x, tt), t, h);
        let mom_x = d4(&|xx| rho(xx, t) * c.exact_u(xx, t) * vel(xx, t), x, h);
        let visc = match form {
            Formulation::UForm => {
                let flux = |xx: f64| g * rho(xx, t).powf(g + 1.0) * d4(&|y| c.exact_u(y, t), xx, h);
                d4(&flux, x, h)
            }
            Formulation::WForm => 0.0,
        };
        (s_rho, mom_t + mom_x - visc)
    }

    #[test]
    fn constant_case_needs_no_source() {
        let c = ManufacturedCase::by_name("constant").unwrap();
        for form in [Formulation::UForm, Formulation::WForm] {
            for (x, t) in [(0.1, 0.0), (0.7, 0.3)] {
                assert_eq!(c.sources(form, x, t), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn velocity_wave_mass_source() {
        let c = ManufacturedCase::by_name("velocity_wave").unwrap();
        for (x, t) in [(0.1, 0.0), (0.37, 0.21)] {
            let expect = 0.8 * 0.2 * PI * (TAU * (x - t)).cos();
            let (s, _) = c.sources(Formulation::UForm, x, t);
            assert!((s - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn sources_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ManufacturedCase::NAMES {
            let c = ManufacturedCase::by_name(name).unwrap();
            for form in [Formulation::UForm, Formulation::WForm] {
                for _ in 0..5 {
                    let (x, t) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                    let (a_rho, a_mom) = c.sources(form, x, t);
                    let (f_rho, f_mom) = fd_sources(&c, form, x, t);
                    let scale_rho = 1.0 + a_rho.abs();
                    let scale_mom = 1.0 + a_mom.abs();
                    assert!((a_rho - f_rho).abs() <= 1e-7 * scale_rho, "{name} {form}: {a_rho} vs {f_rho}");
                    assert!((a_mom - f_mom).abs() <= 1e-7 * scale_mom, "{name} {form}: {a_mom} vs {f_mom}");
                }
            }
        }
    }

    #[test]
    fn sources_are_periodic_in_time() {
        let c = ManufacturedCase::by_name("traveling_wave").unwrap();
        for form in [Formulation::UForm, Formulation::WForm] {
            let a = c.sources(form, 0.3, 0.1);
            let b = c.sources(form, 0.3, 1.1);
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_case() {
        assert!(matches!(ManufacturedCase::by_name("nope"), Err(SimError::Config(_))));
    }
}
