//! Separative-work physics for uranium enrichment.
//!
//! Standard ideal-cascade SWU accounting: the value function
//! `V(x) = (2x - 1) ln(x / (1 - x))` and the separative work
//! `P·V(x_p) + T·V(x_t) - F·V(x_f)` under the mass balances
//! `F = P (x_p - x_t) / (x_f - x_t)` and `T = F - P`.
//!
//! With natural feed at 0.711% and tails at 0.30% this reproduces the
//! NFCSS energy figures the simulator is built around (3.43 / 4.35 / 5.29
//! MTSWU per ton of 3 / 3.5 / 4% LEU, 0.1934 MTSWU per kg of 90% HEU) to
//! within 1%. Those two assay defaults are a fit to the published outputs,
//! not published inputs.

use thiserror::Error;

/// kg-SWU per MTSWU.
pub const KG_SWU_PER_MTSWU: f64 = 1000.0;

/// Default feed assay (natural uranium, mass fraction U-235).
pub const DEFAULT_FEED_ASSAY: f64 = 0.00711;

/// Default tails assay (mass fraction U-235).
pub const DEFAULT_TAILS_ASSAY: f64 = 0.003;

#[derive(Debug, Error, PartialEq)]
pub enum EnrichmentError {
    #[error("{name} assay must lie strictly inside (0, 1), got {value}")]
    AssayOutOfRange { name: &'static str, value: f64 },
    #[error("assays must satisfy tails < feed < product, got tails {tails}, feed {feed}, product {product}")]
    AssayOrder { feed: f64, product: f64, tails: f64 },
    #[error("product mass must be strictly positive, got {0}")]
    NonPositiveMass(f64),
    #[error("power must be strictly positive, got {0}")]
    NonPositivePower(f64),
}

/// One enrichment job: assays plus the product mass to deliver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnrichmentSpec {
    pub feed_assay: f64,
    pub product_assay: f64,
    pub tails_assay: f64,
    pub product_mass_kg: f64,
}

impl EnrichmentSpec {
    pub fn new(
        feed_assay: f64,
        product_assay: f64,
        tails_assay: f64,
        product_mass_kg: f64,
    ) -> Result<Self, EnrichmentError> {
        for (name, value) in [
            ("feed", feed_assay),
            ("product", product_assay),
            ("tails", tails_assay),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(EnrichmentError::AssayOutOfRange { name, value });
            }
        }
        if !(tails_assay < feed_assay && feed_assay < product_assay) {
            return Err(EnrichmentError::AssayOrder {
                feed: feed_assay,
                product: product_assay,
                tails: tails_assay,
            });
        }
        if !(product_mass_kg > 0.0 && product_mass_kg.is_finite()) {
            return Err(EnrichmentError::NonPositiveMass(product_mass_kg));
        }
        Ok(Self {
            feed_assay,
            product_assay,
            tails_assay,
            product_mass_kg,
        })
    }

    /// Feed mass required, from the U-235 mass balance.
    pub fn feed_mass_kg(&self) -> f64 {
        self.product_mass_kg * (self.product_assay - self.tails_assay)
            / (self.feed_assay - self.tails_assay)
    }

    /// Tails mass, `F - P`.
    pub fn tails_mass_kg(&self) -> f64 {
        self.feed_mass_kg() - self.product_mass_kg
    }
}

/// Separative potential `V(x) = (2x - 1) ln(x / (1 - x))`.
///
/// Symmetric about 1/2 and zero there.
pub fn value_function(x: f64) -> Result<f64, EnrichmentError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(EnrichmentError::AssayOutOfRange {
            name: "value_function argument",
            value: x,
        });
    }
    Ok((2.0 * x - 1.0) * (x / (1.0 - x)).ln())
}

/// Separative work in kg-SWU for the given job.
pub fn separative_work(spec: &EnrichmentSpec) -> Result<f64, EnrichmentError> {
    let feed = spec.feed_mass_kg();
    let tails = spec.tails_mass_kg();
    let swu = spec.product_mass_kg * value_function(spec.product_assay)?
        + tails * value_function(spec.tails_assay)?
        - feed * value_function(spec.feed_assay)?;
    Ok(swu)
}

/// Days needed to deliver `energy` MTSWU at `power` MTSWU/day.
pub fn production_duration(energy_mtswu: f64, power_mtswu_per_day: f64) -> Result<f64, EnrichmentError> {
    if !(power_mtswu_per_day > 0.0) {
        return Err(EnrichmentError::NonPositivePower(power_mtswu_per_day));
    }
    Ok(energy_mtswu / power_mtswu_per_day)
}
