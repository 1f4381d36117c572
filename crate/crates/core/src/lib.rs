pub mod check;
pub mod cli;
pub mod expo;
pub mod model;
pub mod poly;
pub mod rational;
pub mod report;
pub mod sdp;
pub mod sim;
pub mod synth;
pub mod vcgen;
