//! Runs the shipped scenario end to end and prints the metrics table.
//!
//! cargo run --release -p climbgen --example experiment [seed] [scenario.toml]

use climbgen::eval::report::{report_csv, ReportConfig};
use climbgen::performance::PerformanceCatalog;
use climbgen::pipeline::simulate::Scenario;
use climbgen::workflow::end_to_end;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let scenario = match args.next() {
        Some(p) => Scenario::load(p.as_ref())?,
        None => Scenario::shipped(),
    };
    let cfg = ReportConfig { seed, ..ReportConfig::default() };
    let start = std::time::Instant::now();
    let exp = end_to_end(&PerformanceCatalog::shipped(), &scenario, seed, &cfg)?;
    for (ty, t) in &exp.training {
        let head: Vec<String> = t.spectrum.iter().take(6).map(|f| format!("{f:.4}")).collect();
        println!(
            "{ty}: {} flights, {} modes, spectrum [{}]",
            t.flights_used,
            exp.models[ty].n_modes(),
            head.join(", ")
        );
    }
    print!("{}", report_csv(&exp.report.rows));
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
