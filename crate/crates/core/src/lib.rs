pub mod cli;
pub mod cxmat;
pub mod error;
pub mod implosion;
pub mod io;
pub mod normal_form;
pub mod quiver;
pub mod random;
pub mod report;
pub mod sl2;
pub mod steinberg;

pub use cxmat::{CMatrix, Complex};
pub use error::{Error, Result};
