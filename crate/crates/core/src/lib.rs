pub mod error;
pub mod hill;
pub mod invariant_eqs;
pub mod jet;
pub mod linearize;
pub mod oracle;
pub mod projective;
pub mod reduce;
pub mod symmetry;
pub mod timefn;

pub use error::{Error, Result};
pub use jet::{Dual3, Jet};
pub use timefn::TimeFn;
