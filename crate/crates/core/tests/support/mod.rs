pub mod oracles;
pub mod strategies;
