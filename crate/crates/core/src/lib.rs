pub mod error;
pub mod group;
pub mod space;
pub mod special;
pub mod transforms;
pub mod verify;
pub mod watson;

pub use error::{Error, Result};
