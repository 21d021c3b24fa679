//! Generates a skewed sim pool, balances it with the HASS preset and
//! writes the curated records to a temporary directory.

use sim2real::curation::{
    balance_report, max_feasible_size, read_jsonl, stratified_sample, write_jsonl, Provenance,
    StratumQuota,
};
use sim2real::pipeline::{generate_dataset, DomainConfig, FamilyCounts};

fn main() {
    let counts = FamilyCounts { e2d_common: 300, h2d_environmental: 300, long_tail: 5 };
    let pool = generate_dataset(&DomainConfig::sim(), Provenance::Sim, &counts, 3, 5.5, 0.5).unwrap();
    println!("pool ({} records, {} dropped)\n{}", pool.records.len(), pool.dropped, balance_report(&pool.records));

    let quota = StratumQuota::preset("HASS").unwrap();
    let n = max_feasible_size(&pool.records, &quota);
    let sample = stratified_sample(&pool.records, &quota, n, 3).unwrap();
    println!("curated ({n} records)\n{}", balance_report(&sample.records));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curated.jsonl");
    write_jsonl(&path, &sample.records).unwrap();
    assert_eq!(read_jsonl(&path).unwrap(), sample.records);
    println!("round trip through {} ok", path.display());
}
