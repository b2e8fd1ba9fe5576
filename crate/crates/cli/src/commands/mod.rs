pub mod baseline;
pub mod dataset;
pub mod render;
pub mod score;
pub mod simulate;
