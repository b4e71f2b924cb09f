pub mod compare;
pub mod gen_env;
pub mod ingest;
pub mod report;
pub mod train;
