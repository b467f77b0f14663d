use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Schema(format!("interval lower bound {lo} exceeds upper bound {hi}")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// One indicator column of the bank panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Validation bounds (numeric only).
    pub valid_range: Option<Interval>,
    /// Range seen in the training data; distance denominators use its width.
    pub observed_range: Option<Interval>,
    pub mutable_in_cf: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl FeatureSpec {
    pub fn numeric(name: &str, lo: f64, hi: f64) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            valid_range: Some(Interval { lo, hi }),
            observed_range: None,
            mutable_in_cf: true,
            description: None,
        }
    }

    pub fn categorical(name: &str) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            valid_range: None,
            observed_range: None,
            mutable_in_cf: true,
            description: None,
        }
    }

    fn described(mut self, text: &str) -> Self {
        self.description = Some(text.to_string());
        self
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == FeatureKind::Numeric
    }

    /// Width of the observed range, falling back to the valid range.
    pub fn range_width(&self) -> f64 {
        self.observed_range
            .or(self.valid_range)
            .map(|r| r.width())
            .unwrap_or(0.0)
    }
}

/// The twelve CAMELS-style indicators with their validation ranges.
pub fn indicator_catalog() -> Vec<FeatureSpec> {
    vec![
        FeatureSpec::numeric("TICRC", -0.01, 0.19).described("Tier 1 Risk-Based Capital Ratio / Total Assets"),
        FeatureSpec::numeric("PLLL", -3.0, 10.0)
            .described("Provisions for Loan & Lease Losses / Total Interest Income"),
        FeatureSpec::numeric("TIE", 0.0, 2.2).described("Total Interest Expense / Total Interest Income"),
        FeatureSpec::numeric("EQR", -20.0, 100.0).described("Equity Capital Ratio"),
        FeatureSpec::numeric("NIMY", -4.0, 26.0).described("Net Interest Margin"),
        FeatureSpec::numeric("INTEXPYQ", -0.5, 5.5).described("Cost of Funding Earning Assets Quarterly"),
        FeatureSpec::numeric("RBCIAAJ", -20.0, 200.0).described("Leverage Ratio"),
        FeatureSpec::numeric("ROE", -12000.0, 1000.0).described("Return on Equity"),
        FeatureSpec::numeric("NIMYQ", -4.0, 26.0).described("Net Interest Margin Quarterly"),
        FeatureSpec::numeric("LNATRESR", 0.0, 26.0).described("Loan Loss Reserve / Gross Loan & Lease"),
        FeatureSpec::numeric("NONIXAYQ", -20.0, 300.0)
            .described("Noninterest Expenses / Average Assets Quarterly"),
        FeatureSpec::numeric("ROAQ", -100.0, 350.0).described("Quarterly Return on Assets"),
    ]
}

pub fn catalog_spec(name: &str) -> Option<FeatureSpec> {
    indicator_catalog().into_iter().find(|s| s.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredictorGroup {
    I,
    II,
    III,
}

impl PredictorGroup {
    pub const ALL: [PredictorGroup; 3] = [PredictorGroup::I, PredictorGroup::II, PredictorGroup::III];

    pub fn features(self) -> &'static [&'static str] {
        match self {
            PredictorGroup::I => &["TICRC", "PLLL", "TIE", "EQR"],
            PredictorGroup::II => &["TICRC", "NIMY", "INTEXPYQ", "RBCIAAJ", "ROE"],
            PredictorGroup::III => &["NIMYQ", "LNATRESR", "NONIXAYQ", "ROAQ"],
        }
    }

    pub fn specs(self) -> Vec<FeatureSpec> {
        self.features()
            .iter()
            .map(|n| catalog_spec(n).expect("group features are in the catalog"))
            .collect()
    }
}

impl fmt::Display for PredictorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PredictorGroup::I => "I",
            PredictorGroup::II => "II",
            PredictorGroup::III => "III",
        };
        f.write_str(s)
    }
}

impl FromStr for PredictorGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(PredictorGroup::I),
            "II" | "2" => Ok(PredictorGroup::II),
            "III" | "3" => Ok(PredictorGroup::III),
            other => Err(Error::Config(format!("unknown predictor group `{other}`"))),
        }
    }
}
