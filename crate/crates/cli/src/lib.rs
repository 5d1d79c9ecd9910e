//! Library side of the pipeline driver: the journal, the worker pool, the
//! directory lock, and the stage implementations. The `allowlistforge`
//! binary is a thin argument layer over this.

pub mod journal;
pub mod lock;
pub mod pool;
pub mod stages;
