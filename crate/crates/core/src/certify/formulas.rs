//! Closed-form contraction and growth constants.

use super::CertifyError;

fn positive(name: &'static str, value: f64) -> Result<f64, CertifyError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CertifyError::NonPositive { name, value })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<f64, CertifyError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CertifyError::Negative { name, value })
    }
}

/// `k·c(1 + 4C²T²M²) / (m + k·c(1 + 4C²T²M²))`
fn contraction(k: f64, c: f64, embed: f64, t: f64, big_m: f64, m: f64) -> f64 {
    let q = k * c * (1.0 + 4.0 * embed * embed * t * t * big_m * big_m);
    q / (m + q)
}

/// Certified ratio `E(t_{2n+1}) / E(t_{2n})` across an active interval.
pub fn contraction_cn(c: f64, embed: f64, t: f64, big_m: f64, m: f64) -> Result<f64, CertifyError> {
    positive("c", c)?;
    positive("C", embed)?;
    positive("T_2n", t)?;
    positive("M_2n", big_m)?;
    positive("m_2n", m)?;
    Ok(contraction(4.0, c, embed, t, big_m, m))
}

/// Certified ratio `E_S(t_{2n+1}) / E_S(t_{2n})`.
pub fn contraction_cn_hat(c: f64, embed1: f64, t: f64, big_m: f64, m: f64) -> Result<f64, CertifyError> {
    positive("c", c)?;
    positive("C1", embed1)?;
    positive("T_2n", t)?;
    positive("M_2n", big_m)?;
    positive("m_2n", m)?;
    Ok(contraction(2.0, c, embed1, t, big_m, m))
}

/// `d / (d + 1)`
pub fn contraction_dn_hat(d: f64) -> Result<f64, CertifyError> {
    positive("d_n", d)?;
    Ok(d / (d + 1.0))
}

/// Damped observability constant of the boundary-damped string from the
/// quasi-observability constants.
pub fn boundary_dn(
    alphas: [f64; 3],
    big_m: f64,
    m: f64,
    t: f64,
    t_bar: f64,
) -> Result<f64, CertifyError> {
    nonnegative("alpha1", alphas[0])?;
    nonnegative("alpha2", alphas[1])?;
    nonnegative("alpha3", alphas[2])?;
    positive("M_2n", big_m)?;
    positive("m_2n", m)?;
    if !(t > t_bar) {
        return Err(CertifyError::ShortInterval { t, t_bar });
    }
    let num = alphas[0] * big_m * m + alphas[1] * m + alphas[2];
    positive("alpha1·M·m + alpha2·m + alpha3", num)?;
    Ok(num / (m * (t - t_bar)))
}

/// Worst-case growth `e^{C(ξ + 1/ξ)M_odd T_odd}` of `E` over a delayed interval.
pub fn growth_factor_e(embed: f64, xi: f64, m_odd: f64, t_odd: f64) -> Result<f64, CertifyError> {
    positive("xi", xi)?;
    nonnegative("C", embed)?;
    nonnegative("M_odd", m_odd)?;
    nonnegative("T_odd", t_odd)?;
    Ok((embed * (xi + 1.0 / xi) * m_odd * t_odd).exp())
}

/// Cycle bound `e^{C₂M_odd T_odd}·ĉ + e^{C₂M_odd T_odd} − 1` on `E_S(t_{2n+2})/E_S(t_{2n})`.
pub fn cycle_bound_es(embed2: f64, m_odd: f64, t_odd: f64, c_hat: f64) -> Result<f64, CertifyError> {
    nonnegative("C2", embed2)?;
    nonnegative("M_odd", m_odd)?;
    nonnegative("T_odd", t_odd)?;
    nonnegative("c_hat", c_hat)?;
    let g = (embed2 * m_odd * t_odd).exp();
    Ok(g * c_hat + g - 1.0)
}

/// Largest `M_odd` with `e^{C·M_odd·T̃} < 2/(d̂ + 1)`, the small-gain form of
/// the exponential condition for a uniform `d̂`.
pub fn small_gain_threshold(d_hat: f64, embed: f64, t_tilde: f64) -> Result<f64, CertifyError> {
    positive("d_hat", d_hat)?;
    positive("C", embed)?;
    positive("T_tilde", t_tilde)?;
    if d_hat >= 1.0 {
        return Err(CertifyError::NotContractive(d_hat));
    }
    Ok((2.0 / (d_hat + 1.0)).ln() / (embed * t_tilde))
}
