//! A structural model `(Γ, ν)` seen through the one quantity the statistic
//! needs: the latent mass `ν(Γ(A))` of the image of an observable set.

use crate::correspondence::{
    Carrier, FiniteCorrespondence, IntervalCorrespondence, IntervalValuedCorrespondence, ObsSet,
};
use crate::measure::{DiscreteMeasure, LatentLaw};
use crate::{Error, Result};

pub trait StructuralModel: Send + Sync {
    /// The observable space.
    fn carrier(&self) -> Carrier;

    /// `ν(Γ(A))`.
    fn image_mass(&self, a: &ObsSet) -> Result<f64>;

    /// Whether `Γ` has non-decreasing lower and upper envelopes along the
    /// order of the carrier, which makes the cells core determining.
    fn monotone_envelopes(&self) -> bool;
}

/// Finite `Γ` with a discrete latent law.
#[derive(Clone, Debug)]
pub struct FiniteModel {
    corr: FiniteCorrespondence,
    nu: DiscreteMeasure,
}

impl FiniteModel {
    pub fn new(corr: FiniteCorrespondence, nu: DiscreteMeasure) -> Result<Self> {
        if nu.len() != corr.u_len() {
            return Err(Error::CarrierMismatch(format!(
                "ν has {} atoms but Γ has {} latent atoms",
                nu.len(),
                corr.u_len()
            )));
        }
        Ok(Self { corr, nu })
    }

    pub fn correspondence(&self) -> &FiniteCorrespondence {
        &self.corr
    }

    pub fn nu(&self) -> &DiscreteMeasure {
        &self.nu
    }
}

impl StructuralModel for FiniteModel {
    fn carrier(&self) -> Carrier {
        Carrier::Finite { size: self.corr.y_len() }
    }

    fn image_mass(&self, a: &ObsSet) -> Result<f64> {
        self.nu.mass(&self.corr.image(a.as_finite()?)?)
    }

    fn monotone_envelopes(&self) -> bool {
        // envelopes are only defined for ordered latent spaces
        false
    }
}

/// Real observable `y` with `Γ(y) = [l(y), u(y)]` and an atomless latent law.
#[derive(Clone, Debug)]
pub struct IntervalModel {
    corr: IntervalCorrespondence,
    law: LatentLaw,
}

impl IntervalModel {
    pub fn new(corr: IntervalCorrespondence, law: LatentLaw) -> Self {
        Self { corr, law }
    }

    /// `Γ(y) = {y}` on `[lo, hi]` with `ν` uniform there: the complete model
    /// under which the statistic is the classical Kolmogorov–Smirnov one.
    pub fn uniform_bijection(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self::new(IntervalCorrespondence::linear_bijection(lo, hi, lo, hi)?, LatentLaw::uniform(lo, hi)?))
    }

    pub fn correspondence(&self) -> &IntervalCorrespondence {
        &self.corr
    }

    pub fn law(&self) -> &LatentLaw {
        &self.law
    }
}

impl StructuralModel for IntervalModel {
    fn carrier(&self) -> Carrier {
        let (lo, hi) = self.corr.domain();
        Carrier::Real { lo, hi }
    }

    fn image_mass(&self, a: &ObsSet) -> Result<f64> {
        Ok(self.law.union_mass(&self.corr.image(a.as_real()?)?))
    }

    fn monotone_envelopes(&self) -> bool {
        self.corr.has_monotone_envelopes()
    }
}

/// Finite observable atoms with interval images and an atomless latent law.
#[derive(Clone, Debug)]
pub struct IntervalValuedModel {
    corr: IntervalValuedCorrespondence,
    law: LatentLaw,
}

impl IntervalValuedModel {
    pub fn new(corr: IntervalValuedCorrespondence, law: LatentLaw) -> Self {
        Self { corr, law }
    }

    pub fn correspondence(&self) -> &IntervalValuedCorrespondence {
        &self.corr
    }

    pub fn law(&self) -> &LatentLaw {
        &self.law
    }
}

impl StructuralModel for IntervalValuedModel {
    fn carrier(&self) -> Carrier {
        Carrier::Finite { size: self.corr.y_len() }
    }

    fn image_mass(&self, a: &ObsSet) -> Result<f64> {
        Ok(self.law.union_mass(&self.corr.image(a.as_finite()?)?))
    }

    fn monotone_envelopes(&self) -> bool {
        self.corr.has_monotone_envelopes()
    }
}
