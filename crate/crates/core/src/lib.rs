pub mod bench;
pub mod bnb;
pub mod conic;
pub mod lp;
pub mod model;
pub mod portfolio;
pub mod reform;
pub mod relax;
