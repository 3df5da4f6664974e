pub mod autopilot;
pub mod fixtures;
pub mod genomics;
pub mod llm;
pub mod planner;
pub mod qa;
pub mod safety;
pub mod template;
pub mod tools;
pub mod workflow;
