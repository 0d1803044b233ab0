pub mod asymptotics;
pub mod environment;
pub mod error;
pub mod lindblad;
pub mod matkernel;
pub mod mixing;
pub mod rng;
pub mod stats;
pub mod states;
pub mod superop;
pub mod tolerance;

pub use error::{Error, Result};
pub use matkernel::{ComplexMatrix, C64};
pub use states::DensityMatrix;
pub use superop::SuperOp;
pub use tolerance::Tolerances;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/states.md")]
    struct States;
    #[doc = include_str!("../../../book/src/superop.md")]
    struct Superop;
    #[doc = include_str!("../../../book/src/lindblad.md")]
    struct Lindblad;
    #[doc = include_str!("../../../book/src/environment.md")]
    struct Environment;
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    struct Asymptotics;
    #[doc = include_str!("../../../book/src/mixing.md")]
    struct Mixing;
}
