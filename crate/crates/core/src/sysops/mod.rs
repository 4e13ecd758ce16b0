//! System-level operations: transfer functions, companion realizations, the
//! closed-form zero-pole residue, deflation of the zero mode, and H2 /
//! H-infinity norms.

mod deflate;
mod modal;
mod norms;
mod residue;
mod system;

pub use deflate::{deflate_zero_mode, SpectralSplit, StateSpace};
pub use modal::ModalSystem;
pub use norms::{
    block_diag_error, h2_norm_error, h2_norm_quadrature, h2_norm_split, h2_norm_stable,
    hinf_error_norm, hinf_norm, peak_gain, FreqGrid, PeakGain, SplitDiff,
};
pub use residue::{
    model_zero_residue, residue_deviation, system_zero_residue, zero_residue, ResidueData,
};
pub use system::{
    companion_form, eval_transfer, realize, CoeffMatrix, FirstOrderRealization,
    SecondOrderSystem, TransferDiff, TransferEval,
};

/// Deflate the full model at a parameter (companion + closed-form residue).
pub fn deflate_model<T: crate::scalar::Real>(
    model: &crate::netmodel::SecondOrderModel<T>,
    p: &[T],
) -> crate::error::Result<SpectralSplit<T>> {
    let real = companion_form(model, p)?;
    let res = model_zero_residue(model, p)?;
    deflate_zero_mode(&real, &res)
}

#[cfg(test)]
mod tests;
