pub mod error;
pub mod puiseux;
pub mod cpoly;
pub mod ppoly;
pub mod newton;
pub mod berkovich;
pub mod family;
pub mod pl;
pub mod tree;
pub mod hyperbolic;
