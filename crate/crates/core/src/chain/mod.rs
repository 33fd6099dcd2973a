//! Background chain: generator validation, stationary quantities and exact
//! path sampling.

mod generator;
mod occupation;
mod path;
mod statics;

pub use generator::{validate_generator, Convention, Generator};
pub use occupation::OccupationSampler;
pub use path::{sample_chain_path, ChainPath, InitialState};
pub use statics::{deviation_matrix, ergodic_variance, stationary, ChainStatics, IdentityResiduals};
