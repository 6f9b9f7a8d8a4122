//! Weighted coflow scheduling on multi-core optical circuit switched fabrics.
//!
//! A fabric has `K` parallel switching cores over the same `N` ports; core
//! `k` runs at rate `r_k` and every new circuit costs a reconfiguration
//! delay `delta` on its two ports only (not-all-stop). The pipeline in
//! [`scheduler::run`] orders coflows by weight over lower bound, places each
//! flow on the core that keeps the prefix lower bound smallest, and list
//! schedules every core independently. [`bounds::audit`] checks the
//! resulting schedule against the analytical guarantees.

pub mod baselines;
pub mod bounds;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod scheduler;
pub mod workload;
