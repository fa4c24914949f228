use pcyl_core::spectral::Characteristic;
use pcyl_core::transfer::CharacteristicValue;
use pcyl_core::{Complex64, Result};
use rayon::prelude::*;

/// Evaluates batches of contour points on the rayon pool. Results keep input order.
#[derive(Clone, Debug)]
pub struct Parallel<C>(pub C);

impl<C: Characteristic + Sync> Characteristic for Parallel<C> {
    fn n_modes(&self) -> usize {
        self.0.n_modes()
    }

    fn evaluate(&self, lambda: Complex64) -> Result<CharacteristicValue> {
        self.0.evaluate(lambda)
    }

    fn evaluate_many(&self, lambdas: &[Complex64]) -> Vec<Result<CharacteristicValue>> {
        lambdas.par_iter().map(|l| self.0.evaluate(*l)).collect()
    }
}
