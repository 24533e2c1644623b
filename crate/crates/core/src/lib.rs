pub mod syntax;
pub mod model;
pub mod distill;
pub mod detect;
