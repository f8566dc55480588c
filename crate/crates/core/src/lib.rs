pub mod bloch;
pub mod channels;
pub mod error;
pub mod linalg;
pub mod network;
pub mod tolerance;
pub mod criteria;
pub mod oracle;
pub mod cli;
