//! Desk-scale synthetic bank panel.
//!
//! Produces a quarterly panel over all catalog indicators, 2008–2023, with
//! roughly 5% positive rows after one-year lag labeling. Failed banks drift
//! from a healthy profile toward a distressed one over the eight quarters
//! before failure; a minority of surviving banks go through transient stress
//! so the classes overlap. `data/desk_banks.csv` is this generator's output
//! for [`DESK_SEED`].

use chrono::{Datelike, Months, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::schema::{indicator_catalog, FeatureSpec};
use super::table::{quarter_end, BankQuarterRecord, DataTable};
use crate::rng;

pub const DESK_SEED: u64 = 20_240_611;

/// The bundled desk dataset, all catalog indicators, raw (pre-lag) labels.
pub const DESK_CSV: &str = include_str!("../../data/desk_banks.csv");

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub surviving_banks: usize,
    pub failing_pre_2014: usize,
    pub failing_post_2014: usize,
    pub quarters_per_bank: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: DESK_SEED,
            surviving_banks: 100,
            failing_pre_2014: 17,
            failing_post_2014: 8,
            quarters_per_bank: 16,
        }
    }
}

/// (healthy mean, distressed mean, noise sd) per catalog indicator.
const PROFILE: [(&str, f64, f64, f64); 12] = [
    ("TICRC", 0.095, 0.025, 0.022),
    ("PLLL", 0.08, 0.65, 0.12),
    ("TIE", 0.26, 0.46, 0.07),
    ("EQR", 10.6, 5.4, 1.9),
    ("NIMY", 3.7, 3.0, 0.55),
    ("INTEXPYQ", 1.1, 2.1, 0.45),
    ("RBCIAAJ", 10.4, 5.6, 1.8),
    ("ROE", 8.5, -32.0, 9.0),
    ("NIMYQ", 3.7, 2.9, 0.6),
    ("LNATRESR", 1.4, 3.4, 0.5),
    ("NONIXAYQ", 0.75, 1.05, 0.12),
    ("ROAQ", 0.9, -2.4, 0.6),
];

fn qe(y: i32, m: u32) -> NaiveDate {
    quarter_end(NaiveDate::from_ymd_opt(y, m, 1).expect("date"))
}

fn add_quarters(d: NaiveDate, q: i32) -> NaiveDate {
    let first = NaiveDate::from_ymd_opt(d.year(), d.month(), 1).expect("date");
    let shifted = if q >= 0 {
        first.checked_add_months(Months::new(3 * q as u32))
    } else {
        first.checked_sub_months(Months::new(3 * (-q) as u32))
    };
    quarter_end(shifted.expect("in range"))
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    (v * p).round() / p
}

fn decimals_for(name: &str) -> i32 {
    match name {
        "TICRC" => 6,
        "ROE" => 2,
        _ => 4,
    }
}

struct BankProfile {
    offsets: Vec<f64>,
    severity: f64,
}

fn draw_profile(r: &mut rng::Rng) -> BankProfile {
    let unit = Normal::new(0.0, 1.0).expect("normal");
    BankProfile {
        offsets: PROFILE.iter().map(|p| 0.6 * p.3 * unit.sample(r)).collect(),
        severity: r.random_range(0.7..1.15),
    }
}

fn row_values(profile: &BankProfile, distress: f64, era_post_2014: bool, r: &mut rng::Rng, specs: &[FeatureSpec]) -> Vec<f64> {
    let unit = Normal::new(0.0, 1.0).expect("normal");
    PROFILE
        .iter()
        .zip(&profile.offsets)
        .zip(specs)
        .map(|(((name, healthy, distressed, sd), off), spec)| {
            let mut healthy = *healthy;
            if era_post_2014 && (*name == "INTEXPYQ" || *name == "TIE") {
                healthy *= 0.55;
            }
            let mean = healthy + (distressed - healthy) * distress;
            let v = mean + off + sd * (1.0 + distress) * unit.sample(r);
            let range = spec.valid_range.expect("catalog ranges");
            round_to(range.clamp(v), decimals_for(name))
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> DataTable {
    let specs = indicator_catalog();
    debug_assert!(specs.iter().zip(PROFILE.iter()).all(|(s, p)| s.name == p.0));
    let mut r = rng::seeded(cfg.seed);
    let first = qe(2008, 3);
    let last = qe(2023, 12);
    let boundary = NaiveDate::from_ymd_opt(2014, 1, 1).expect("date");
    let span = cfg.quarters_per_bank as i32;
    let mut rows = Vec::new();
    let mut next_id = 10_001u32;

    let mut push_bank = |r: &mut rng::Rng, end: NaiveDate, failure: Option<NaiveDate>, stress: Option<(i32, f64)>| {
        let id = next_id.to_string();
        next_id += 1;
        let profile = draw_profile(r);
        for k in 0..span {
            let date = add_quarters(end, k - span + 1);
            if date < first {
                continue;
            }
            let to_end = span - 1 - k;
            let distress = match (failure, stress) {
                (Some(_), _) => (profile.severity * (1.0 - to_end as f64 / 8.0)).clamp(0.0, 1.0),
                (None, Some((peak, height))) => (height * (1.0 - ((k - peak).abs() as f64) / 3.0)).max(0.0),
                _ => 0.0,
            };
            let values = row_values(&profile, distress, date >= boundary, r, &specs);
            rows.push(BankQuarterRecord {
                bank_id: id.clone(),
                report_date: date,
                indicators: values,
                failed_label: u8::from(failure.is_some()),
                failure_date: failure,
            });
        }
        // Some failed banks file one more report after closing; lag labeling drops it.
        if let Some(fd) = failure {
            if r.random_bool(0.3) {
                let values = row_values(&profile, 1.0, fd >= boundary, r, &specs);
                rows.push(BankQuarterRecord {
                    bank_id: id,
                    report_date: add_quarters(end, 1),
                    indicators: values,
                    failed_label: 1,
                    failure_date: failure,
                });
            }
        }
    };

    let failure_date = |r: &mut rng::Rng, first_year: i32, last_year: i32| {
        let y = r.random_range(first_year..=last_year);
        let m = r.random_range(1..=12u32);
        let d = r.random_range(1..=28u32);
        NaiveDate::from_ymd_opt(y, m, d).expect("date")
    };

    for _ in 0..cfg.failing_pre_2014 {
        let fd = failure_date(&mut r, 2009, 2012);
        // last quarter end strictly before the failure date
        let end = add_quarters(quarter_end(fd), -1);
        push_bank(&mut r, end, Some(fd), None);
    }
    for _ in 0..cfg.failing_post_2014 {
        let fd = failure_date(&mut r, 2015, 2020);
        let end = add_quarters(quarter_end(fd), -1);
        push_bank(&mut r, end, Some(fd), None);
    }
    for _ in 0..cfg.surviving_banks {
        // Bias towards the training era: 60% of windows end before 2014.
        let end = if r.random_bool(0.6) {
            add_quarters(qe(2011, 3), r.random_range(0..=11))
        } else {
            add_quarters(qe(2015, 3), r.random_range(0..=35)).min(last)
        };
        let stress = r.random_bool(0.15).then(|| (r.random_range(2..span - 2), r.random_range(0.3..0.7)));
        push_bank(&mut r, end, None, stress);
    }

    rows.sort_by(|a, b| a.report_date.cmp(&b.report_date).then_with(|| a.bank_id.cmp(&b.bank_id)));
    DataTable::new(specs, rows).expect("generator produces a valid table")
}

/// The bundled dataset parsed with the full catalog schema.
pub fn desk_table() -> DataTable {
    let (t, _) = super::csv_io::read_csv(DESK_CSV.as_bytes(), &indicator_catalog()).expect("bundled csv parses");
    t
}
