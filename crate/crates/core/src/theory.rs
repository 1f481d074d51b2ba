//! Sufficient-condition evaluators for clustering recovery.
//!
//! Each evaluator compares the measured subspace affinity (plus
//! dimension-dependent penalty terms) against a threshold that shrinks with
//! the number of points; the clustering guarantee applies when lhs <= rhs.
//! All logarithms are natural. The constant `c_tilde` comes from the
//! concentration inequality of the projection ensemble and is a free
//! parameter here (default 1); `tau` is a free failure-probability knob
//! with default 2 ln N. Counts are accepted as reals so the evaluators can
//! be exercised on non-integer sweeps.

use crate::error::{Error, Result};

/// Default concentration constant for condition evaluation.
pub const DEFAULT_C_TILDE: f64 = 1.0;

/// Default tau: contributes a failure term of order 1/N.
pub fn default_tau(n_points: f64) -> f64 {
    2.0 * n_points.ln()
}

/// Inputs echoed into a report; fields the condition does not use stay None.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionInputs {
    pub max_affinity: f64,
    pub n_points: f64,
    pub d_max: Option<f64>,
    pub d_min: Option<f64>,
    pub p: Option<f64>,
    pub num_subspaces: Option<f64>,
    pub rho_min: Option<f64>,
    pub sigma: Option<f64>,
    pub c_tilde: Option<f64>,
    pub tau: Option<f64>,
}

/// Outcome of one condition evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub lhs: f64,
    pub rhs: f64,
    /// rhs - lhs; nonnegative exactly when the condition is satisfied.
    pub margin: f64,
    pub satisfied: bool,
    pub inputs: ConditionInputs,
}

fn report(lhs: f64, rhs: f64, inputs: ConditionInputs) -> ConditionReport {
    ConditionReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        satisfied: lhs <= rhs,
        inputs,
    }
}

fn check_common(max_aff: f64, n_points: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&max_aff) {
        return Err(Error::Domain(format!(
            "max affinity {max_aff} outside [0, 1]"
        )));
    }
    if n_points < 3.0 {
        return Err(Error::Domain(format!(
            "N = {n_points} too small; the thresholds assume N >= 3"
        )));
    }
    Ok(())
}

fn check_positive(value: f64, name: &str) -> Result<()> {
    if !(value > 0.0) {
        return Err(Error::Domain(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

fn check_rho(rho_min: f64) -> Result<()> {
    if !(rho_min > 1.0) {
        return Err(Error::Domain(format!(
            "rho_min must exceed 1 (points per dimension), got {rho_min}"
        )));
    }
    Ok(())
}

/// Nearest-neighbor selection condition:
/// lhs = max_aff + sqrt(11/(3 c~)) * sqrt(d_max/p), rhs = 1/(15 ln N).
pub fn tsc_condition(
    max_aff: f64,
    d_max: f64,
    p: f64,
    n_points: f64,
    c_tilde: f64,
) -> Result<ConditionReport> {
    check_common(max_aff, n_points)?;
    check_positive(d_max, "d_max")?;
    check_positive(p, "p")?;
    check_positive(c_tilde, "c_tilde")?;
    let lhs = max_aff + (11.0 / (3.0 * c_tilde)).sqrt() * (d_max / p).sqrt();
    let rhs = 1.0 / (15.0 * n_points.ln());
    Ok(report(
        lhs,
        rhs,
        ConditionInputs {
            max_affinity: max_aff,
            n_points,
            d_max: Some(d_max),
            p: Some(p),
            c_tilde: Some(c_tilde),
            ..Default::default()
        },
    ))
}

/// l1-representation condition:
/// lhs = max_aff + sqrt((28 d_max + 8 ln L + 2 tau)/(3 c~ p)),
/// rhs = sqrt(ln rho_min)/(65 ln N).
pub fn ssc_condition(
    max_aff: f64,
    d_max: f64,
    p: f64,
    n_points: f64,
    num_subspaces: f64,
    rho_min: f64,
    tau: f64,
    c_tilde: f64,
) -> Result<ConditionReport> {
    check_common(max_aff, n_points)?;
    check_positive(d_max, "d_max")?;
    check_positive(p, "p")?;
    check_positive(c_tilde, "c_tilde")?;
    check_positive(tau, "tau")?;
    check_positive(num_subspaces, "L")?;
    check_rho(rho_min)?;
    let lhs = max_aff
        + ((28.0 * d_max + 8.0 * num_subspaces.ln() + 2.0 * tau) / (3.0 * c_tilde * p)).sqrt();
    let rhs = rho_min.ln().sqrt() / (65.0 * n_points.ln());
    Ok(report(
        lhs,
        rhs,
        ConditionInputs {
            max_affinity: max_aff,
            n_points,
            d_max: Some(d_max),
            p: Some(p),
            num_subspaces: Some(num_subspaces),
            rho_min: Some(rho_min),
            c_tilde: Some(c_tilde),
            tau: Some(tau),
            ..Default::default()
        },
    ))
}

/// Greedy-representation condition:
/// lhs = max_aff + sqrt((28 d_max + 8 ln L + 2 tau)/(12 c~ p)) * sqrt(d_max/d_min),
/// rhs = (3/200) sqrt(ln rho_min)/ln N.
pub fn sscomp_condition(
    max_aff: f64,
    d_max: f64,
    d_min: f64,
    p: f64,
    n_points: f64,
    num_subspaces: f64,
    rho_min: f64,
    tau: f64,
    c_tilde: f64,
) -> Result<ConditionReport> {
    check_common(max_aff, n_points)?;
    check_positive(d_max, "d_max")?;
    check_positive(d_min, "d_min")?;
    if d_min > d_max {
        return Err(Error::Domain(format!(
            "d_min {d_min} exceeds d_max {d_max}"
        )));
    }
    check_positive(p, "p")?;
    check_positive(c_tilde, "c_tilde")?;
    check_positive(tau, "tau")?;
    check_positive(num_subspaces, "L")?;
    check_rho(rho_min)?;
    let lhs = max_aff
        + ((28.0 * d_max + 8.0 * num_subspaces.ln() + 2.0 * tau) / (12.0 * c_tilde * p)).sqrt()
            * (d_max / d_min).sqrt();
    let rhs = 3.0 / 200.0 * rho_min.ln().sqrt() / n_points.ln();
    Ok(report(
        lhs,
        rhs,
        ConditionInputs {
            max_affinity: max_aff,
            n_points,
            d_max: Some(d_max),
            d_min: Some(d_min),
            p: Some(p),
            num_subspaces: Some(num_subspaces),
            rho_min: Some(rho_min),
            c_tilde: Some(c_tilde),
            tau: Some(tau),
            ..Default::default()
        },
    ))
}

/// Additive penalty the noise model contributes to the nearest-neighbor
/// condition, as a function of ln N; kept separate so the arithmetic can be
/// checked at arbitrary ln N.
fn tsc_noise_term(sigma: f64, d_max: f64, p: f64, c_tilde: f64, ln_n: f64) -> f64 {
    let c_bar = c_tilde.min(6.0);
    sigma * (1.0 + sigma) * 6.0f64.sqrt() / (c_bar * ln_n).sqrt() * (d_max / p).sqrt()
}

/// Noisy nearest-neighbor condition: the noiseless lhs plus
/// sigma (1 + sigma) sqrt(6)/sqrt(min(6, c~) ln N) * sqrt(d_max/p).
/// At sigma = 0 the report coincides with `tsc_condition` field by field.
pub fn tsc_noisy_condition(
    max_aff: f64,
    d_max: f64,
    p: f64,
    n_points: f64,
    sigma: f64,
    c_tilde: f64,
) -> Result<ConditionReport> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    let base = tsc_condition(max_aff, d_max, p, n_points, c_tilde)?;
    let lhs = base.lhs + tsc_noise_term(sigma, d_max, p, c_tilde, n_points.ln());
    let mut inputs = base.inputs;
    inputs.sigma = Some(sigma);
    Ok(report(lhs, base.rhs, inputs))
}

/// Condition for greedy representations on the unprojected data:
/// lhs = max_aff, rhs = sqrt(ln rho_min)/(64 ln N).
pub fn sscomp_ambient_condition(
    max_aff: f64,
    n_points: f64,
    rho_min: f64,
) -> Result<ConditionReport> {
    check_common(max_aff, n_points)?;
    check_rho(rho_min)?;
    let rhs = rho_min.ln().sqrt() / (64.0 * n_points.ln());
    Ok(report(
        max_aff,
        rhs,
        ConditionInputs {
            max_affinity: max_aff,
            n_points,
            rho_min: Some(rho_min),
            ..Default::default()
        },
    ))
}

/// Noise level at which the empirical phase boundary
/// sqrt(d/p) (c1 + sigma (c2 + sigma)) = c3 crosses the given
/// dimension ratio; None when no nonnegative root exists.
pub fn phase_sigma_star(d: f64, p: f64, c1: f64, c2: f64, c3: f64) -> Option<f64> {
    if d < 1.0 || p < 1.0 || c1 < 0.0 || c2 < 0.0 || c3 < 0.0 {
        return None;
    }
    let x = (d / p).sqrt();
    let disc = c2 * c2 - 4.0 * (c1 - c3 / x);
    if disc < 0.0 {
        return None;
    }
    let root = (-c2 + disc.sqrt()) / 2.0;
    if root >= 0.0 {
        Some(root)
    } else {
        None
    }
}
