use super::BudgetError;
use crate::device::DeviceParams;

/// `C = 4g²/(κ_e κ_o)`.
pub fn cooperativity(g: f64, p: &DeviceParams) -> f64 {
    4.0 * g * g / (p.eo.kappa * p.optical.kappa)
}

/// Pump-enhanced coupling reaching cooperativity `c`.
pub fn coupling_for_cooperativity(c: f64, p: &DeviceParams) -> f64 {
    (c.max(0.0) * p.eo.kappa * p.optical.kappa).sqrt() / 2.0
}

/// `η_eo = η_e η_o 4C/(1 + C)²`.
pub fn conversion_efficiency(c: f64, eta_e: f64, eta_o: f64) -> Result<f64, BudgetError> {
    if !(c >= 0.0) {
        return Err(BudgetError::Invalid(format!(
            "cooperativity must be >= 0, got {c}"
        )));
    }
    for (name, eta) in [("eta_e", eta_e), ("eta_o", eta_o)] {
        if !(0.0..=1.0).contains(&eta) {
            return Err(BudgetError::Invalid(format!(
                "{name} = {eta} outside [0, 1]"
            )));
        }
    }
    Ok(eta_e * eta_o * 4.0 * c / (1.0 + c).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_round_trip() {
        let p = DeviceParams::reference(6.251);
        assert_eq!(cooperativity(0.0, &p), 0.0);
        for c in [1e-4, 0.00393, 1.0] {
            let g = coupling_for_cooperativity(c, &p);
            assert!((cooperativity(g, &p) / c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn impedance_matched_peak() {
        assert!((conversion_efficiency(1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(conversion_efficiency(0.0, 0.4, 0.5).unwrap(), 0.0);
        assert!(conversion_efficiency(-1.0, 0.4, 0.5).is_err());
        assert!(conversion_efficiency(1.0, 1.4, 0.5).is_err());
    }
}
