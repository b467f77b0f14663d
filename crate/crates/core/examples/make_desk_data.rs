//! Regenerates `data/desk_banks.csv`.

use bankcf_core::dataset::csv_io::save_csv;
use bankcf_core::dataset::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/desk_banks.csv");
    let table = generate(&SynthConfig::default());
    save_csv(&table, path)?;
    println!("wrote {} rows to {path}", table.len());
    Ok(())
}
