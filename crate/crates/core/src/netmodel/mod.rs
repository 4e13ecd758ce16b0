//! Parametric second-order network models: graph construction, MATPOWER
//! import, random generation and the JSON model format.

mod generate;
mod io;
mod matpower;
mod types;

pub use generate::{generate_network, CoefficientRanges, GeneratorConfig, NetworkKind};
pub use io::{load_model, model_from_json, model_to_json, save_model, sha256_hex, ModelFile, ParamBox};
pub use matpower::{parse_matpower_case, to_matpower_case, BusOverride, MatpowerDefaults};
pub use types::{
    build_laplacian, null_residual, IoMap, NetworkModel, ParameterSpace, SecondOrderModel,
    DEFAULT_BOX_HALF_WIDTH,
};

#[cfg(test)]
pub(crate) mod tests;
