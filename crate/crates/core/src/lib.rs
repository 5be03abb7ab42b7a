pub mod animator;
pub mod ast;
pub mod checker;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod obligations;
pub mod parser;
pub mod project;
pub mod semantics;
pub mod service;
pub mod trace;
