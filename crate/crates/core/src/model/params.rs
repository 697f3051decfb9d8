use serde::{Deserialize, Serialize};

/// Material and model constants of the stationary FSI problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FsiParameters {
    /// Fluid density (kg/m^3).
    pub rho_f: f64,
    /// Kinematic viscosity (m^2/s).
    pub nu_f: f64,
    /// Solid density (kg/m^3).
    pub rho_s: f64,
    /// Lame parameters of the solid (Pa).
    pub mu_s: f64,
    pub lambda_s: f64,
    /// Stiffness of the harmonic mesh motion in the fluid.
    pub alpha_mesh: f64,
    /// Weight of the pressure extension into the solid.
    pub alpha_p: f64,
    pub force_f: [f64; 2],
    pub force_s: [f64; 2],
}

impl Default for FsiParameters {
    fn default() -> Self {
        FsiParameters {
            rho_f: 1.0e3,
            nu_f: 1.0e-3,
            rho_s: 1.0e3,
            mu_s: 0.5e6,
            lambda_s: 2.0e6,
            alpha_mesh: 1.0,
            alpha_p: 1.0e-8,
            force_f: [0.0; 2],
            force_s: [0.0; 2],
        }
    }
}

impl FsiParameters {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("rho_f", self.rho_f),
            ("nu_f", self.nu_f),
            ("rho_s", self.rho_s),
            ("mu_s", self.mu_s),
            ("alpha_mesh", self.alpha_mesh),
            ("alpha_p", self.alpha_p),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.lambda_s.is_nan() || self.lambda_s < 0.0 {
            return Err(format!("lambda_s must be non-negative, got {}", self.lambda_s));
        }
        Ok(())
    }
}
