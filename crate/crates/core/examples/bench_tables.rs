//! Runs a benchmark suite and prints the records as a markdown table. The
//! default is a one-seed version of the interior-point / greedy table on the
//! smallest ladder size; pass `table1` or `table2` for the presets, or a
//! path to a suite JSON file.
//!
//! `cargo run --release --example bench_tables -- [table1|table2|suite.json]`

use sparsebench::bench::{emit_table, run_suite, SuiteSpec, TableFormat, SIZE_LADDER};

fn main() -> sparsebench::Result<()> {
    let spec = match std::env::args().nth(1) {
        Some(arg) if arg.ends_with(".json") => SuiteSpec::from_json(&std::fs::read_to_string(arg)?)?,
        Some(arg) => SuiteSpec::preset(&arg)?,
        None => SuiteSpec {
            sizes: vec![SIZE_LADDER[0]],
            ..SuiteSpec::table1()
        },
    };
    let records = run_suite(&spec)?;
    print!("{}", emit_table(&records, TableFormat::Markdown)?);
    Ok(())
}
