pub mod error;
pub mod extension;
pub mod hasse;
pub mod normal;
pub mod order;
pub mod protocol;
pub mod tally;
pub mod sim;
