//! Hand-written evaluators for `R`, `R̂`, `Z⁰`, `B`, `Z¹`, `Z²` and the t-model term.
//!
//! Every term is a short sum of masked bilinear products of `û` and
//! previously computed terms; intermediates are evaluated on `F ∪ G` when a
//! later term needs them at `G` wavenumbers.

use crate::error::{Error, Result};
use crate::spectral::{BilinearPair, Convolver, RangeMask, SpectralField, WavenumberGrid};

const F: RangeMask = RangeMask::F;
const G: RangeMask = RangeMask::G;
const FG: RangeMask = RangeMask::FG;

/// A model term together with the range it was computed on.
#[derive(Clone, Debug)]
pub struct TermOutput {
    pub field: SpectralField,
    pub support: RangeMask,
}

/// Resolved right-hand side and memory integrands `Z⁰..Z^n` restricted to `F`.
#[derive(Clone, Debug)]
pub struct ModelTerms {
    pub r_hat: SpectralField,
    pub z: Vec<SpectralField>,
}

pub struct TermEvaluator {
    conv: Convolver,
}

impl TermEvaluator {
    pub fn new(grid: &WavenumberGrid) -> Self {
        TermEvaluator {
            conv: Convolver::new(grid),
        }
    }

    pub fn grid(&self) -> &WavenumberGrid {
        self.conv.grid()
    }

    pub fn convolver(&mut self) -> &mut Convolver {
        &mut self.conv
    }

    fn check_resolved(&self, u: &SpectralField) -> Result<()> {
        u.check_grid(self.grid())?;
        let g = u.max_abs(self.grid(), G);
        if g > 0.0 {
            return Err(Error::UnresolvedSupport(g));
        }
        Ok(())
    }

    fn sum(&mut self, pairs: &[BilinearPair<'_>], out: RangeMask) -> Result<SpectralField> {
        self.conv.bilinear_sum(pairs, out)
    }

    /// `R(u)` with every mode of `F ∪ G` active.
    pub fn rhs_full(&mut self, u: &SpectralField) -> Result<TermOutput> {
        let field = self.conv.bilinear(u, FG, u, FG, FG)?;
        Ok(TermOutput { field, support: FG })
    }

    /// `R̂(û) = R(û, 0)` on all of `F ∪ G`.
    pub fn rhs_resolved(&mut self, u: &SpectralField) -> Result<TermOutput> {
        self.check_resolved(u)?;
        let field = self.r_hat_on(u, FG)?;
        Ok(TermOutput { field, support: FG })
    }

    fn r_hat_on(&mut self, u: &SpectralField, out: RangeMask) -> Result<SpectralField> {
        self.conv.bilinear(u, F, u, F, out)
    }

    fn z0_on(&mut self, u: &SpectralField, r: &SpectralField, out: RangeMask) -> Result<SpectralField> {
        self.sum(
            &[
                BilinearPair::new(r, G, u, F),
                BilinearPair::new(u, F, r, G),
            ],
            out,
        )
    }

    fn b_on(&mut self, u: &SpectralField, r: &SpectralField, out: RangeMask) -> Result<SpectralField> {
        self.sum(
            &[
                BilinearPair::new(r, F, u, F),
                BilinearPair::new(u, F, r, F),
            ],
            out,
        )
    }

    fn z1_on(
        &mut self,
        u: &SpectralField,
        r: &SpectralField,
        z0: &SpectralField,
        out: RangeMask,
    ) -> Result<SpectralField> {
        self.sum(
            &[
                BilinearPair::new(r, FG, r, G),
                BilinearPair::new(r, G, r, FG),
                BilinearPair::new(z0, G, u, F),
                BilinearPair::new(u, F, z0, G),
            ],
            out,
        )
    }

    fn z2_on(
        &mut self,
        u: &SpectralField,
        r: &SpectralField,
        z0: &SpectralField,
        b: &SpectralField,
        z1: &SpectralField,
        out: RangeMask,
    ) -> Result<SpectralField> {
        self.sum(
            &[
                BilinearPair::new(z0, FG, r, G),
                BilinearPair::new(r, G, z0, FG),
                BilinearPair::new(b, FG, r, G),
                BilinearPair::new(r, G, b, FG),
                BilinearPair::new(z0, G, r, F),
                BilinearPair::new(r, F, z0, G),
                BilinearPair::new(z0, FG, r, G),
                BilinearPair::new(r, G, z0, FG),
                BilinearPair::new(z0, G, r, FG),
                BilinearPair::new(r, FG, z0, G),
                BilinearPair::new(z1, G, u, F),
                BilinearPair::new(u, F, z1, G),
            ],
            out,
        )
    }

    /// `Z⁰ = P L Q L u` on `F ∪ G`.
    pub fn z0(&mut self, u: &SpectralField) -> Result<TermOutput> {
        self.check_resolved(u)?;
        let r = self.r_hat_on(u, FG)?;
        let field = self.z0_on(u, &r, FG)?;
        Ok(TermOutput { field, support: FG })
    }

    /// `B = P L P L u`, the part of `P L R̂` not in `Z⁰`.
    pub fn b_term(&mut self, u: &SpectralField) -> Result<TermOutput> {
        self.check_resolved(u)?;
        let r = self.r_hat_on(u, FG)?;
        let field = self.b_on(u, &r, FG)?;
        Ok(TermOutput { field, support: FG })
    }

    /// `Z¹ = P L Q L Q L u` on `F ∪ G`.
    pub fn z1(&mut self, u: &SpectralField) -> Result<TermOutput> {
        self.check_resolved(u)?;
        let r = self.r_hat_on(u, FG)?;
        let z0 = self.z0_on(u, &r, FG)?;
        let field = self.z1_on(u, &r, &z0, FG)?;
        Ok(TermOutput { field, support: FG })
    }

    /// `Z² = P L (Q L)² Q L u` on `F`, as twelve bilinear sums.
    pub fn z2(&mut self, u: &SpectralField) -> Result<TermOutput> {
        self.check_resolved(u)?;
        let r = self.r_hat_on(u, FG)?;
        let z0 = self.z0_on(u, &r, FG)?;
        let b = self.b_on(u, &r, FG)?;
        let z1 = self.z1_on(u, &r, &z0, FG)?;
        let field = self.z2_on(u, &r, &z0, &b, &z1, F)?;
        Ok(TermOutput { field, support: F })
    }

    /// `t Z⁰(û)` on `F`.
    pub fn tmodel_term(&mut self, u: &SpectralField, t: f64) -> Result<TermOutput> {
        self.check_resolved(u)?;
        let r = self.r_hat_on(u, FG)?;
        let mut field = self.z0_on(u, &r, F)?;
        field.scale(t);
        Ok(TermOutput { field, support: F })
    }

    /// `R̂|F` and `Z⁰|F .. Z^order|F`, computing each intermediate only on the
    /// range its consumers need.
    pub fn model_terms(&mut self, u: &SpectralField, order: Option<usize>) -> Result<ModelTerms> {
        self.check_resolved(u)?;
        let Some(order) = order else {
            let r_hat = self.r_hat_on(u, F)?;
            return Ok(ModelTerms { r_hat, z: Vec::new() });
        };
        if order > 2 {
            return Err(Error::OrderBound {
                requested: order,
                bound: 2,
            });
        }
        let grid = self.grid().clone();
        let r = self.r_hat_on(u, FG)?;
        let r_hat = r.restricted(&grid, F);
        let z = match order {
            0 => vec![self.z0_on(u, &r, F)?],
            1 => {
                let z0 = self.z0_on(u, &r, FG)?;
                let z1 = self.z1_on(u, &r, &z0, F)?;
                vec![z0.restricted(&grid, F), z1]
            }
            _ => {
                let z0 = self.z0_on(u, &r, FG)?;
                let b = self.b_on(u, &r, FG)?;
                let z1 = self.z1_on(u, &r, &z0, FG)?;
                let z2 = self.z2_on(u, &r, &z0, &b, &z1, F)?;
                vec![z0.restricted(&grid, F), z1.restricted(&grid, F), z2]
            }
        };
        Ok(ModelTerms { r_hat, z })
    }
}
