pub mod cli;
pub mod corpus;
pub mod embed;
pub mod eval;
pub mod fsio;
pub mod heatmap;
pub mod model;
pub mod tensor;
pub mod text;
pub mod train;
