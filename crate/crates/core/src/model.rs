//! Constitutive functions and state containers.
//!
//! With offset `p(rho) = rho^gamma` the system carries four scalar functions of
//! density: the offset `p`, the viscosity `lambda = rho^2 p'`, the potential
//! `pi` with `pi' = rho p'`, and `H` with `H' = p`. Powers are evaluated as
//! `exp(k ln rho)` behind an explicit overflow guard.

use crate::error::{Result, SimError};
use crate::grid::{ddx_central, Field, Grid};
use serde::{Deserialize, Serialize};

/// Largest admissible exponent `k ln rho` before a power is declared saturated.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    gamma: f64,
}

impl ModelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(SimError::Config(format!(
                "gamma must be finite and positive, got {gamma}"
            )));
        }
        Ok(ModelParams { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Unknowns `(rho, rho u)`: pressureless Navier-Stokes with viscosity `lambda(rho)`.
    UForm,
    /// Unknowns `(rho, rho w)`: diffusive flux `d_x pi` in the continuity equation.
    WForm,
}

impl Formulation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Formulation::UForm => "u_form",
            Formulation::WForm => "w_form",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u_form" => Ok(Formulation::UForm),
            "w_form" => Ok(Formulation::WForm),
            other => Err(SimError::Config(format!(
                "unknown formulation '{other}' (expected u_form or w_form)"
            ))),
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Density and momentum samples at time `t`. `mom` is `rho u` or `rho w`
/// depending on `formulation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub grid: Grid,
    pub rho: Field,
    pub mom: Field,
    pub formulation: Formulation,
}

impl State {
    pub fn new(t: f64, grid: Grid, rho: Field, mom: Field, formulation: Formulation) -> Result<Self> {
        grid.check(&rho)?;
        grid.check(&mom)?;
        Ok(State {
            t,
            grid,
            rho,
            mom,
            formulation,
        })
    }

    /// Builds a state from density and a velocity field of the matching kind
    /// (`u` for the u-formulation, `w` for the w-formulation).
    pub fn from_velocity(
        t: f64,
        grid: Grid,
        rho: Field,
        velocity: &Field,
        formulation: Formulation,
    ) -> Result<Self> {
        let mom = rho.zip_map(velocity, |r, v| r * v)?;
        Self::new(t, grid, rho, mom, formulation)
    }

    /// The evolved velocity: `mom / rho`.
    pub fn velocity(&self) -> Field {
        self.mom
            .zip_map(&self.rho, |m, r| m / r)
            .expect("state fields share one grid")
    }

    pub fn u(&self, params: &ModelParams) -> Result<Field> {
        match self.formulation {
            Formulation::UForm => Ok(self.velocity()),
            Formulation::WForm => w_to_u(self, params),
        }
    }

    pub fn w(&self, params: &ModelParams) -> Result<Field> {
        match self.formulation {
            Formulation::UForm => u_to_w(self, params),
            Formulation::WForm => Ok(self.velocity()),
        }
    }

    pub fn check_positive(&self) -> Result<()> {
        match self.rho.iter().position(|&r| !(r > 0.0)) {
            Some(i) => Err(SimError::Domain(format!(
                "density must be positive, rho[{i}] = {}",
                self.rho[i]
            ))),
            None => Ok(()),
        }
    }

    /// Re-expresses the state in the other formulation.
    pub fn converted(&self, to: Formulation, params: &ModelParams) -> Result<State> {
        if to == self.formulation {
            return Ok(self.clone());
        }
        let vel = match to {
            Formulation::UForm => self.u(params)?,
            Formulation::WForm => self.w(params)?,
        };
        State::from_velocity(self.t, self.grid, self.rho.clone(), &vel, to)
    }
}

/// `rho^power` as `exp(power ln rho)` with domain and overflow checks.
pub fn checked_power(rho: f64, power: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(SimError::Domain(format!("density must be positive, got {rho}")));
    }
    let exponent = power * rho.ln();
    if exponent > OVERFLOW_EXPONENT {
        return Err(SimError::Saturation {
            rho,
            power,
            exponent,
        });
    }
    Ok(exponent.exp())
}

pub fn pressure(rho: f64, params: &ModelParams) -> Result<f64> {
    checked_power(rho, params.gamma)
}

pub fn lambda_visc(rho: f64, params: &ModelParams) -> Result<f64> {
    Ok(params.gamma * checked_power(rho, params.gamma + 1.0)?)
}

/// `dpi/drho`, the diffusion coefficient of the w-formulation.
pub fn pi_prime(rho: f64, params: &ModelParams) -> Result<f64> {
    Ok(params.gamma * checked_power(rho, params.gamma)?)
}

pub fn potential_pi(rho: f64, params: &ModelParams) -> Result<f64> {
    Ok(params.gamma * enthalpy_h(rho, params)?)
}

pub fn enthalpy_h(rho: f64, params: &ModelParams) -> Result<f64> {
    Ok(checked_power(rho, params.gamma + 1.0)? / (params.gamma + 1.0))
}

fn map_field(rho: &Field, params: &ModelParams, f: fn(f64, &ModelParams) -> Result<f64>) -> Result<Field> {
    let values = rho.iter().map(|&r| f(r, params)).collect::<Result<Vec<_>>>()?;
    Ok(Field::new(values))
}

pub fn pressure_field(rho: &Field, params: &ModelParams) -> Result<Field> {
    map_field(rho, params, pressure)
}

pub fn lambda_field(rho: &Field, params: &ModelParams) -> Result<Field> {
    map_field(rho, params, lambda_visc)
}

pub fn pi_prime_field(rho: &Field, params: &ModelParams) -> Result<Field> {
    map_field(rho, params, pi_prime)
}

pub fn pi_field(rho: &Field, params: &ModelParams) -> Result<Field> {
    map_field(rho, params, potential_pi)
}

pub fn h_field(rho: &Field, params: &ModelParams) -> Result<Field> {
    map_field(rho, params, enthalpy_h)
}

/// Offset gradient `d_x p(rho)` with the central stencil.
pub fn offset_gradient(rho: &Field, grid: &Grid, params: &ModelParams) -> Result<Field> {
    ddx_central(&pressure_field(rho, params)?, grid)
}

/// Desired velocity `w = u + d_x p(rho)` of a u-formulation state.
pub fn u_to_w(state: &State, params: &ModelParams) -> Result<Field> {
    if state.formulation != Formulation::UForm {
        return Err(SimError::Precondition("u_to_w needs a u-formulation state".into()));
    }
    state.check_positive()?;
    let dp = offset_gradient(&state.rho, &state.grid, params)?;
    state.velocity().zip_map(&dp, |u, d| u + d)
}

/// Actual velocity `u = w - d_x p(rho)` of a w-formulation state.
pub fn w_to_u(state: &State, params: &ModelParams) -> Result<Field> {
    if state.formulation != Formulation::WForm {
        return Err(SimError::Precondition("w_to_u needs a w-formulation state".into()));
    }
    state.check_positive()?;
    let dp = offset_gradient(&state.rho, &state.grid, params)?;
    state.velocity().zip_map(&dp, |w, d| w - d)
}

/// Effective-pressure potential `W = d_x w / rho`.
#[allow(non_snake_case)]
pub fn compute_W(rho: &Field, w: &Field, grid: &Grid) -> Result<Field> {
    grid.check(rho)?;
    if let Some(i) = rho.iter().position(|&r| !(r > 0.0)) {
        return Err(SimError::Domain(format!("W needs positive density, rho[{i}] = {}", rho[i])));
    }
    ddx_central(w, grid)?.zip_map(rho, |dw, r| dw / r)
}

/// Active potential `V = lambda(rho) d_x u`. Monitored only.
#[allow(non_snake_case)]
pub fn compute_V(rho: &Field, u: &Field, grid: &Grid, params: &ModelParams) -> Result<Field> {
    let lam = lambda_field(rho, params)?;
    ddx_central(u, grid)?.zip_map(&lam, |du, l| l * du)
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub p: Field,
    pub lambda: Field,
    pub pi: Field,
    pub H: Field,
    pub u: Field,
    pub w: Field,
    pub W: Field,
    pub V: Field,
}

pub fn derive_fields(state: &State, params: &ModelParams) -> Result<DerivedFields> {
    state.check_positive()?;
    let grid = &state.grid;
    let u = state.u(params)?;
    let w = state.w(params)?;
    Ok(DerivedFields {
        p: pressure_field(&state.rho, params)?,
        lambda: lambda_field(&state.rho, params)?,
        pi: pi_field(&state.rho, params)?,
        H: h_field(&state.rho, params)?,
        W: compute_W(&state.rho, &w, grid)?,
        V: compute_V(&state.rho, &u, grid, params)?,
        u,
        w,
    })
}
