pub mod annotation;
pub mod booking;
pub mod corpus;
pub mod detection;
pub mod embodied;
pub mod goal;
pub mod llm;
pub mod report;
pub mod satisfaction;
pub mod stats;
pub mod taxonomy;
