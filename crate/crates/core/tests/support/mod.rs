pub mod oracles;
pub mod gen;
