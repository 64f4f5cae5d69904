//! System documents and decomposition reports as JSON.

use lqss_kalman::document::{to_json, DecompositionReport, SystemDocument};
use lqss_kalman::factorization::FactorizationMode;
use lqss_kalman::kalman::{kalman_decompose, verify_decomposition};
use lqss_kalman::optomech::OptomechParams;

fn main() -> lqss_kalman::Result<()> {
    let params = OptomechParams::new(1.5, 0.5, 1.0)?;
    let doc = SystemDocument::example(&params);
    let text = to_json(&doc);
    println!("{text}");

    let sys = SystemDocument::parse(&text)?.to_system()?;
    let policy = doc.policy()?;
    let dec = kalman_decompose(&sys, &policy, FactorizationMode::Strict)?;
    let report_text = to_json(&DecompositionReport::new(&dec, None));
    let report = DecompositionReport::parse(&report_text)?;
    println!("report dims {:?}, labels {:?}", report.dims, report.labels);
    println!("re-serialized identically: {}", to_json(&report) == report_text);

    let stored = report.stored()?;
    println!("stored report verifies: {}", verify_decomposition(&sys, &stored, 1e-8).passed());
    Ok(())
}
