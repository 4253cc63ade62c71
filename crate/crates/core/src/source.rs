//! Efficiency and pump-impurity budget of the cascaded source, in the
//! weak-excitation limit.
//!
//! Mode 1 is the even (collection) mode and mode 2 the odd (pump) mode.
//! The residual laser reaching the output is `I_res = I_l1 T_1in T_1out`
//! and the emitted photon flux is `I_ph = I_l2 T_2in β2 β1 T_1out`, so the
//! impurity `ε = I_res / I_ph = η / (β1 β2)` with `η = I_l1 T_1in / (I_l2 T_2in)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Single-interface transmission from a symmetric two-interface measurement.
pub fn single_interface_from_two_port(t_two_port: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_two_port) {
        return Err(invalid(
            "t_two_port",
            format!("must lie in [0, 1], got {t_two_port}"),
        ));
    }
    Ok(t_two_port.sqrt())
}

/// Power ratio in decibels to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `g²(0) = 2ε − ε²`.
pub fn g2_from_impurity(epsilon: f64) -> f64 {
    2.0 * epsilon - epsilon * epsilon
}

/// Odd-mode coupling needed to reach `epsilon` at extinction `eta`.
pub fn required_beta2(eta: f64, beta1: f64, epsilon: f64) -> f64 {
    eta / (epsilon * beta1)
}

fn default_half() -> f64 {
    0.5
}

/// Inputs of the budget. Field names follow the section transmissions:
/// `t_1in`/`t_2in` are the even/odd transmissions of the input mode filter,
/// `t_1out`/`t_2out` those of the output W1 section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetInputs {
    #[serde(default = "default_half")]
    pub i_l1: f64,
    #[serde(default = "default_half")]
    pub i_l2: f64,
    pub t_1in: f64,
    pub t_2in: f64,
    pub t_1out: f64,
    /// Reported only: odd-mode light at the output is taken as fully
    /// rejected by the single-mode collection optics.
    #[serde(default)]
    pub t_2out: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl BudgetInputs {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("i_l1", self.i_l1),
            ("i_l2", self.i_l2),
            ("t_1in", self.t_1in),
            ("t_2in", self.t_2in),
            ("t_1out", self.t_1out),
            ("t_2out", self.t_2out),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if (self.i_l1 + self.i_l2 - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "i_l1",
                format!("i_l1 + i_l2 must equal 1, got {}", self.i_l1 + self.i_l2),
            ));
        }
        Ok(())
    }
}

/// Derived budget. Ratios whose denominator vanishes are `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceBudget {
    pub inputs: BudgetInputs,
    pub eta: f64,
    pub eta_db: f64,
    pub i_res: f64,
    pub i_ph: f64,
    pub epsilon: f64,
    pub g2: f64,
    /// `β1 · T_1out`; ignores taper scattering.
    pub t_col_estimate: f64,
    /// `I_l2 · T_2in · β2`; a coupling-budget proxy for the dipole power
    /// ratio `P_in / P_tot`, not a field simulation of it.
    pub t_exc_estimate: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

pub fn compute_budget(inputs: BudgetInputs) -> Result<SourceBudget> {
    inputs.validate()?;
    let BudgetInputs {
        i_l1,
        i_l2,
        t_1in,
        t_2in,
        t_1out,
        beta1,
        beta2,
        ..
    } = inputs;
    let eta = ratio(i_l1 * t_1in, i_l2 * t_2in);
    let i_res = i_l1 * t_1in * t_1out;
    let i_ph = i_l2 * t_2in * beta2 * beta1 * t_1out;
    // Written through η so that T_1out cancels exactly.
    let epsilon = if eta.is_finite() {
        ratio(eta, beta1 * beta2)
    } else {
        f64::INFINITY
    };
    let g2 = if epsilon.is_finite() {
        g2_from_impurity(epsilon)
    } else {
        f64::INFINITY
    };
    Ok(SourceBudget {
        inputs,
        eta,
        eta_db: linear_to_db(eta),
        i_res,
        i_ph,
        epsilon,
        g2,
        t_col_estimate: beta1 * t_1out,
        t_exc_estimate: i_l2 * t_2in * beta2,
    })
}

impl SourceBudget {
    /// Two-column text table of the derived quantities.
    pub fn table(&self) -> String {
        let rows = [
            ("eta", self.eta),
            ("eta_db", self.eta_db),
            ("i_res", self.i_res),
            ("i_ph", self.i_ph),
            ("epsilon", self.epsilon),
            ("g2", self.g2),
            ("t_col_estimate", self.t_col_estimate),
            ("t_exc_estimate", self.t_exc_estimate),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<16} {v:>14.6e}\n"));
        }
        out
    }
}
