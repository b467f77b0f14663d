//! Paginated client for the FDIC BankFind financials API.
//!
//! Financial records are pulled page by page (offset/limit) and converted to
//! [`BankQuarterRecord`]s as they arrive, so callers that only need a running
//! aggregate can use [`for_each_financials_page`] without holding the corpus.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::csv_io::parse_date;
use super::schema::{catalog_spec, FeatureSpec};
use super::table::{quarter_end, BankQuarterRecord, DataTable};
use crate::{Error, Result};

pub const ENV_BASE_URL: &str = "BANKCF_FDIC_BASE_URL";
pub const ENV_PAGE_SIZE: &str = "BANKCF_FDIC_PAGE_SIZE";
pub const ENV_RETRIES: &str = "BANKCF_FDIC_RETRIES";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdicConfig {
    pub base_url: String,
    pub fields: Vec<String>,
    /// Inclusive report-date filter.
    pub date_from: NaiveDate,
    pub date_to: NaiveDate,
    pub page_size: usize,
    pub retries: u32,
    pub timeout_secs: u64,
}

impl Default for FdicConfig {
    fn default() -> Self {
        FdicConfig {
            base_url: "https://banks.data.fdic.gov/api".into(),
            fields: super::schema::PredictorGroup::II
                .features()
                .iter()
                .map(|s| s.to_string())
                .collect(),
            date_from: NaiveDate::from_ymd_opt(2008, 1, 1).expect("date"),
            date_to: NaiveDate::from_ymd_opt(2023, 12, 31).expect("date"),
            page_size: 10_000,
            retries: 3,
            timeout_secs: 60,
        }
    }
}

impl FdicConfig {
    /// Reads a TOML file (all keys optional) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
            }
            None => FdicConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = get(ENV_BASE_URL) {
            self.base_url = v;
        }
        if let Some(v) = get(ENV_PAGE_SIZE) {
            self.page_size = v
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_PAGE_SIZE}=`{v}` is not a count")))?;
        }
        if let Some(v) = get(ENV_RETRIES) {
            self.retries = v
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_RETRIES}=`{v}` is not a count")))?;
        }
        if self.page_size == 0 {
            return Err(Error::Config("page_size must be positive".into()));
        }
        Ok(())
    }

    fn schema(&self) -> Result<Vec<FeatureSpec>> {
        self.fields
            .iter()
            .map(|f| catalog_spec(f).ok_or_else(|| Error::Config(format!("unknown FDIC indicator `{f}`"))))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct Page {
    #[serde(default)]
    data: Vec<Envelope>,
}

#[derive(Debug, Deserialize)]
struct Envelope {
    data: HashMap<String, Value>,
}

struct Client {
    agent: ureq::Agent,
    cfg: FdicConfig,
}

impl Client {
    fn new(cfg: &FdicConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .build()
            .new_agent();
        Client { agent, cfg: cfg.clone() }
    }

    fn page(&self, endpoint: &str, params: &[(&str, String)], offset: usize) -> Result<Vec<HashMap<String, Value>>> {
        let url = format!("{}/{}", self.cfg.base_url.trim_end_matches('/'), endpoint);
        let mut last_err = String::new();
        for attempt in 0..=self.cfg.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(200 * u64::from(attempt)));
            }
            let mut req = self
                .agent
                .get(&url)
                .query("limit", self.cfg.page_size.to_string())
                .query("offset", offset.to_string())
                .query("format", "json");
            for (k, v) in params {
                req = req.query(*k, v);
            }
            match req.call() {
                Ok(mut resp) => {
                    let body = resp
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| Error::Transport(e.to_string()))?;
                    let page: Page = serde_json::from_str(&body)?;
                    return Ok(page.data.into_iter().map(|e| e.data).collect());
                }
                Err(e) => {
                    log::warn!("FDIC request {url} offset {offset} failed (attempt {}): {e}", attempt + 1);
                    last_err = e.to_string();
                }
            }
        }
        Err(Error::Transport(format!("{url}: {last_err}")))
    }

    fn paginate(
        &self,
        endpoint: &str,
        params: &[(&str, String)],
        mut on_page: impl FnMut(Vec<HashMap<String, Value>>) -> Result<()>,
    ) -> Result<()> {
        let mut offset = 0;
        loop {
            let page = self.page(endpoint, params, offset)?;
            let n = page.len();
            if n > 0 {
                on_page(page)?;
            }
            if n < self.cfg.page_size {
                return Ok(());
            }
            offset += n;
        }
    }
}

fn as_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Failed-bank registry: certificate number to failure date.
fn failure_registry(client: &Client) -> Result<HashMap<String, NaiveDate>> {
    let mut out = HashMap::new();
    let params = [("fields", "CERT,FAILDATE".to_string())];
    client.paginate("failures", &params, |page| {
        for rec in page {
            let cert = rec.get("CERT").and_then(as_string);
            let date = rec.get("FAILDATE").and_then(as_string).and_then(|s| parse_date(&s));
            if let (Some(c), Some(d)) = (cert, date) {
                out.insert(c, d);
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Streams financials pages as converted rows. Returns the number of records
/// dropped because an indicator was null.
pub fn for_each_financials_page(
    cfg: &FdicConfig,
    mut on_rows: impl FnMut(Vec<BankQuarterRecord>) -> Result<()>,
) -> Result<usize> {
    let schema = cfg.schema()?;
    let client = Client::new(cfg);
    let failures = failure_registry(&client)?;
    let mut fields = vec!["CERT".to_string(), "REPDTE".to_string()];
    fields.extend(cfg.fields.iter().cloned());
    let params = [
        (
            "filters",
            format!(
                "REPDTE:[{} TO {}]",
                cfg.date_from.format("%Y%m%d"),
                cfg.date_to.format("%Y%m%d")
            ),
        ),
        ("fields", fields.join(",")),
        ("sort_by", "REPDTE".to_string()),
        ("sort_order", "ASC".to_string()),
    ];
    let mut dropped = 0;
    client.paginate("financials", &params, |page| {
        let mut rows = Vec::with_capacity(page.len());
        for rec in page {
            let field = |name: &str| rec.get(name).ok_or_else(|| Error::MissingFeature(name.to_string()));
            let bank_id = as_string(field("CERT")?).ok_or_else(|| Error::Schema("CERT is not a scalar".into()))?;
            let report_date = as_string(field("REPDTE")?)
                .and_then(|s| parse_date(&s))
                .map(quarter_end)
                .ok_or_else(|| Error::Schema("unparseable REPDTE".into()))?;
            let mut indicators = Vec::with_capacity(schema.len());
            for spec in &schema {
                match as_f64(field(&spec.name)?) {
                    Some(v) if v.is_finite() => indicators.push(v),
                    _ => break,
                }
            }
            if indicators.len() < schema.len() {
                dropped += 1;
                continue;
            }
            let failure_date = failures.get(&bank_id).copied();
            rows.push(BankQuarterRecord {
                bank_id,
                report_date,
                indicators,
                failed_label: u8::from(failure_date.is_some()),
                failure_date,
            });
        }
        on_rows(rows)
    })?;
    Ok(dropped)
}

/// Pulls the configured snapshot into a table. An empty result is a warning.
pub fn fetch_fdic_snapshot(cfg: &FdicConfig) -> Result<DataTable> {
    let mut rows = Vec::new();
    let dropped = for_each_financials_page(cfg, |page| {
        rows.extend(page);
        Ok(())
    })?;
    if dropped > 0 {
        log::warn!("dropped {dropped} FDIC records with missing indicators");
    }
    if rows.is_empty() {
        log::warn!("FDIC query matched no records; returning an empty table");
    }
    DataTable::new(cfg.schema()?, rows)
}
