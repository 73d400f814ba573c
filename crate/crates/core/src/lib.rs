pub mod engine;
pub mod field;
pub mod ic;
pub mod msp;
pub mod mult;
pub mod simnet;
pub mod structures;
pub mod vss;
pub mod wss;
