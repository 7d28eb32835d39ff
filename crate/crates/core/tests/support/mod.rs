//! Test-only oracles and generators shared by the integration suites.
#![allow(dead_code)]

pub mod lda_corpus;
pub mod path_oracle;
pub mod programs;
pub mod quantile_oracle;
