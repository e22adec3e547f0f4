pub mod allocation;
pub mod cli;
pub mod economics;
pub mod error;
pub mod game;
pub mod montecarlo;
pub mod scenario;
pub mod seed;
pub mod traffic;

#[cfg(test)]
mod testing;
