pub mod corpus;
pub mod experiment;
pub mod extract;
pub mod gateway;
pub mod letter;
pub mod relevance;
pub mod report;
pub mod sparse;
pub mod stats;
pub mod text;

pub use letter::Letter;
