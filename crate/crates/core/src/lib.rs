pub mod ando;
pub mod error;
pub mod gns;
pub mod linalg;
pub mod monoid;
pub mod regularity;
pub mod representation;
#[cfg(feature = "sampling")]
pub mod sample;
pub mod verify;

pub use error::{Error, Result};
pub use monoid::{Element, MonoidSpec};
pub use representation::Representation;
