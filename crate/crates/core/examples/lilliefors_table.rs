//! Regenerates `data/lilliefors_table.csv`.
//!
//!     cargo run --release -p sunqp-core --example lilliefors_table [replicates] > data/lilliefors_table.csv

use sunqp::stats::lilliefors::{LillieforsTable, GRID, SHIPPED_REPLICATES, SHIPPED_SEED};
use sunqp::Execution;

fn main() {
    let replicates = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("replicates must be an integer"))
        .unwrap_or(SHIPPED_REPLICATES);
    let table = LillieforsTable::simulate(&GRID, replicates, SHIPPED_SEED, Execution::default());
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    use std::io::Write;
    writeln!(
        out,
        "# quantiles of sqrt(n)*D under normality; {replicates} replicates per n, ChaCha8 seed {SHIPPED_SEED:#x}"
    )
    .unwrap();
    table.write_csv(&mut out).unwrap();
}
