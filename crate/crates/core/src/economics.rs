//! Cost and revenue of the edge-computing instance.
//!
//! Money is in dollars, capacity in vcores, time in hours and loads in
//! requests per slot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prices, horizon and per-SP revenue coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    /// One-off price per vcore, `d`.
    pub capacity_price: f64,
    /// Maintenance price per vcore and hour, `d'`.
    pub maintenance_price: f64,
    pub investment_hours: f64,
    pub slot_hours: f64,
    /// Revenue per request, one entry per SP.
    pub benefit: Vec<f64>,
    /// Diminishing-return rate `xi`, per vcore.
    pub saturation: f64,
}

impl EconomicParams {
    pub fn validate(&self) -> Result<()> {
        nonneg("capacity_price", self.capacity_price)?;
        nonneg("maintenance_price", self.maintenance_price)?;
        positive("investment_hours", self.investment_hours)?;
        positive("slot_hours", self.slot_hours)?;
        positive("saturation", self.saturation)?;
        for (i, b) in self.benefit.iter().enumerate() {
            nonneg(&format!("benefit[{i}]"), *b)?;
        }
        let slots = self.investment_hours / self.slot_hours;
        if (slots - slots.round()).abs() > 1e-9 * slots.max(1.0) || slots.round() < 1.0 {
            return Err(Error::invalid(
                "investment_hours",
                format!("{} h is not a whole number of {} h slots", self.investment_hours, self.slot_hours),
            ));
        }
        if self.marginal_price() <= 0.0 {
            return Err(Error::invalid(
                "capacity_price",
                "capacity_price + maintenance_price * investment_hours must be positive",
            ));
        }
        Ok(())
    }

    /// Number of slots in the investment period.
    pub fn horizon(&self) -> usize {
        (self.investment_hours / self.slot_hours).round() as usize
    }

    /// Cost of one extra vcore over the whole period, `d + d' I`.
    pub fn marginal_price(&self) -> f64 {
        self.capacity_price + self.maintenance_price * self.investment_hours
    }

    pub fn sps(&self) -> usize {
        self.benefit.len()
    }

    /// Same prices over a different investment period.
    pub fn with_investment_hours(&self, hours: f64) -> Self {
        Self { investment_hours: hours, ..self.clone() }
    }
}

fn nonneg(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and >= 0, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

/// `d C + d' I C`; exactly zero for `C = 0`.
pub fn cost(params: &EconomicParams, capacity: f64) -> Result<f64> {
    if !(capacity >= 0.0) {
        return Err(Error::invalid("capacity", format!("must be >= 0, got {capacity}")));
    }
    if capacity == 0.0 {
        return Ok(0.0);
    }
    Ok(params.capacity_price * capacity + params.maintenance_price * params.investment_hours * capacity)
}

/// `beta l (1 - e^{-xi h})`.
pub fn utility(benefit: f64, saturation: f64, load: f64, share: f64) -> Result<f64> {
    for (name, v) in [("benefit", benefit), ("saturation", saturation), ("load", load), ("share", share)] {
        if !(v >= 0.0) {
            return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
        }
    }
    Ok(utility_unchecked(benefit, saturation, load, share))
}

#[inline]
pub(crate) fn utility_unchecked(benefit: f64, saturation: f64, load: f64, share: f64) -> f64 {
    benefit * load * -(-saturation * share).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table2(hours: f64) -> EconomicParams {
        EconomicParams {
            capacity_price: 10.94,
            maintenance_price: 16.25,
            investment_hours: hours,
            slot_hours: 1.0,
            benefit: vec![6e-6],
            saturation: 0.03,
        }
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost(&table2(43_800.0), 0.0).unwrap(), 0.0);
        assert_relative_eq!(cost(&table2(1.0), 1.0).unwrap(), 27.19, max_relative = 1e-14);
        assert_relative_eq!(cost(&table2(43_800.0), 10.0).unwrap(), 7_117_609.4, max_relative = 1e-14);
        assert!(cost(&table2(1.0), -1.0).is_err());
    }

    #[test]
    fn utility_examples() {
        assert_eq!(utility(6e-6, 0.03, 7.2e6, 0.0).unwrap(), 0.0);
        assert_relative_eq!(utility(6e-6, 0.03, 7.2e6, 1e6).unwrap(), 43.2, max_relative = 1e-14);
        assert_relative_eq!(utility(6e-6, 0.03, 7.2e6, 100.0).unwrap(), 41.049_198_646_508_28, max_relative = 1e-13);
        assert!(utility(6e-6, 0.03, -1.0, 1.0).is_err());
    }

    #[test]
    fn validation_names_fields() {
        let mut p = table2(10.0);
        p.saturation = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { field, .. }) if field == "saturation"));
        let mut p = table2(10.5);
        assert!(p.validate().is_err());
        p.investment_hours = 10.0;
        p.capacity_price = 0.0;
        p.maintenance_price = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { field, .. }) if field == "capacity_price"));
        assert_eq!(table2(43_800.0).horizon(), 43_800);
    }

    proptest! {
        #[test]
        fn utility_is_increasing_and_concave(l in 1.0..1e7f64, h in 0.0..500.0f64, dh in 0.01..50.0f64) {
            let u = |h| utility(6e-6, 0.03, l, h).unwrap();
            prop_assert!(u(h + dh) > u(h));
            prop_assert!(u(h + 2.0 * dh) - 2.0 * u(h + dh) + u(h) <= 1e-12 * u(h + 2.0 * dh));
        }

        #[test]
        fn utility_is_linear_in_load(l in 0.0..1e7f64, h in 0.0..500.0f64) {
            let a = utility(6e-6, 0.03, 2.0 * l, h).unwrap();
            let b = 2.0 * utility(6e-6, 0.03, l, h).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * a.abs());
        }

        #[test]
        fn cost_is_linear(c1 in 0.0..1e4f64, c2 in 0.0..1e4f64) {
            let p = table2(43_800.0);
            let lhs = cost(&p, c1 + c2).unwrap();
            let rhs = cost(&p, c1).unwrap() + cost(&p, c2).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }
}
