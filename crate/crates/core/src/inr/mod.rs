//! Single-series implicit neural representations: a network mapping the
//! time coordinate to the series value(s).

mod fit;
mod mlp;
mod persist;

pub use fit::{
    compare_activations, fit, fit_regularized, reconstruction_mse, sample_indices, ActivationComparison,
    ActivationRow, CompareOptions, FitOptions, FitResult, Regularizer,
};
pub use mlp::{
    evaluate, evaluate_rows, forward_on_tape, forward_with_derivative_on_tape, init_params, sine_layer,
    Activation, LayerLayout, MlpSpec, ParamVector, DEFAULT_OMEGA0, INR_HIDDEN,
};
pub use persist::{InrModel, INR_MAGIC};
pub(crate) use persist::{write_f64s, write_scales, write_spec, Reader};
