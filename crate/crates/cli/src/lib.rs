pub mod cache;
pub mod config;
pub mod output;
pub mod plot;
pub mod run;
