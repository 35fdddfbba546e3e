pub mod caption;
pub mod concepts;
pub mod dataset;
pub mod diversity;
pub mod generate;
pub mod project;
pub mod protocol;
pub mod score;
pub mod solve;
pub mod tiles;
