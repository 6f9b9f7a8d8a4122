//! Receiver-level records to a flow-level trace and back.
//!
//!     cargo run --example trace_ingest

use coflow_ocs::model::NetworkConfig;
use coflow_ocs::scheduler;
use coflow_ocs::workload::{expand_receivers, read_trace, write_trace, ReceiverRecord};
use coflow_ocs::model::{CoflowSpec, Workload};

fn main() -> anyhow::Result<()> {
    // coflow 1: receiver 0 got 100 bytes from senders 1 and 2; receiver 3
    // got 40 bytes from sender 1. coflow 2: receiver 2 got 60 bytes from 0.
    let records = vec![
        ReceiverRecord { coflow_id: 1, receiver: 0, bytes: 100.0, senders: vec![1, 2] },
        ReceiverRecord { coflow_id: 1, receiver: 3, bytes: 40.0, senders: vec![1] },
        ReceiverRecord { coflow_id: 2, receiver: 2, bytes: 60.0, senders: vec![0] },
    ];
    let config = NetworkConfig::ocs(4, vec![10.0, 20.0], 2.0)?;
    let demands = expand_receivers(&records, config.n(), 0.1, 7)?;
    let specs = demands.into_iter().map(|(id, d)| CoflowSpec::new(id, id as f64, d)).collect();
    let workload = Workload::new(config.clone(), specs)?;

    let mut csv = Vec::new();
    write_trace(&workload, &mut csv)?;
    print!("{}", String::from_utf8(csv.clone())?);

    let back = read_trace(csv.as_slice(), &config)?;
    assert_eq!(back, workload);
    let out = scheduler::run(&back)?;
    println!("completion times {:?}", out.schedule.completion_times()?);
    Ok(())
}
