//! Closed-form parameter counts for the detection probe, as a table.

use clap::Args;
use counting_tricks::toy::{probe_param_count, ProbeParams, ProbeSpec};

use crate::CliError;

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Comma-separated backbone channel widths feeding the probe.
    #[arg(long = "c-in", default_value = "1024,2048", value_delimiter = ',')]
    pub c_in: Vec<usize>,
}

pub fn run(args: &ProbeArgs) -> Result<i32, CliError> {
    if args.c_in.is_empty() {
        return Err(CliError::Invalid("--c-in needs at least one width".into()));
    }
    // Validate the whole list before printing anything.
    let rows: Vec<(usize, ProbeParams)> = args
        .c_in
        .iter()
        .map(|&c_in| {
            probe_param_count(&ProbeSpec::new(c_in))
                .map(|params| (c_in, params))
                .map_err(|e| CliError::Invalid(format!("--c-in {c_in}: {e}")))
        })
        .collect::<Result<_, _>>()?;

    println!("{:>8}  {:>12}  {:>12}  {:>12}", "c_in", "bottleneck", "head", "total");
    for (c_in, p) in rows {
        println!(
            "{c_in:>8}  {:>12}  {:>12}  {:>12}",
            p.bottleneck_params, p.head_params, p.total
        );
    }
    Ok(0)
}
