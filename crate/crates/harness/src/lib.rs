pub mod error;
pub mod method;
pub mod output;
pub mod plan;
pub mod runners;
pub mod trial;
