//! Machine-readable run reports.
//!
//! Field names are stable and mirrored by `schema/report.schema.json`.
//! Exact rationals are always written as integer `numerator`/`denominator`
//! pairs.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackStrategy;
use crate::analysis::{self, EmpiricalCaseReport, ExactCaseReport};
use crate::protocol::{CaseClass, ProtocolConfig, ProtocolResult, Variant};
use crate::qstate::SourceState;

/// Agreement between sampled and exact rates, in binomial standard errors.
pub const CONCORDANCE_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Analyze,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: i64,
    pub denominator: i64,
}

impl From<Rational64> for Fraction {
    fn from(r: Rational64) -> Self {
        Fraction {
            numerator: *r.numer(),
            denominator: *r.denom(),
        }
    }
}

impl From<Fraction> for Rational64 {
    fn from(f: Fraction) -> Self {
        Rational64::new(f.numerator, f.denominator)
    }
}

/// A sampled rate or an exact one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Exact(Fraction),
    Sampled(f64),
}

impl Rate {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Rate::Exact(f) => analysis::rational_to_f64(f.into()),
            Rate::Sampled(x) => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerCase<T> {
    #[serde(rename = "I")]
    pub i: T,
    #[serde(rename = "II")]
    pub ii: T,
    #[serde(rename = "III")]
    pub iii: T,
    #[serde(rename = "IV")]
    pub iv: T,
}

impl<T: Clone> PerCase<T> {
    fn from_map(map: &BTreeMap<CaseClass, T>) -> Self {
        PerCase {
            i: map[&CaseClass::I].clone(),
            ii: map[&CaseClass::II].clone(),
            iii: map[&CaseClass::III].clone(),
            iv: map[&CaseClass::IV].clone(),
        }
    }

    pub fn get(&self, case: CaseClass) -> &T {
        match case {
            CaseClass::I => &self.i,
            CaseClass::II => &self.ii,
            CaseClass::III => &self.iii,
            CaseClass::IV => &self.iv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSection {
    pub per_case_rates: PerCase<Fraction>,
    pub average_rate: Fraction,
    #[serde(rename = "leakage_case_I")]
    pub leakage_case_i: Fraction,
}

impl From<&ExactCaseReport> for ExactSection {
    fn from(e: &ExactCaseReport) -> Self {
        let fr: BTreeMap<_, _> = e.per_case.iter().map(|(&c, &r)| (c, Fraction::from(r))).collect();
        ExactSection {
            per_case_rates: PerCase::from_map(&fr),
            average_rate: e.average.into(),
            leakage_case_i: e.leakage_case_i.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: Mode,
    pub seed: Option<u64>,
    pub source: SourceState,
    pub variant: Option<Variant>,
    pub attack: AttackStrategy,
    pub n_rounds: Option<usize>,
    pub per_case_rates: PerCase<Option<Rate>>,
    pub standard_errors: PerCase<Option<f64>>,
    pub average_rate: Option<Rate>,
    pub aborted: Option<bool>,
    pub abort_reason: Option<String>,
    pub key_length: Option<usize>,
    pub key_xor_consistent: Option<bool>,
    #[serde(rename = "leakage_case_I")]
    pub leakage_case_i: Option<Rate>,
    pub check_fraction: Option<f64>,
    pub threshold: Option<f64>,
    pub exact: Option<ExactSection>,
    pub concordance: Option<PerCase<Option<bool>>>,
    pub notes: Vec<String>,
}

fn sampled(map: &BTreeMap<CaseClass, Option<f64>>) -> PerCase<Option<Rate>> {
    let m: BTreeMap<_, _> = map.iter().map(|(&c, r)| (c, r.map(Rate::Sampled))).collect();
    PerCase::from_map(&m)
}

fn protocol_fields(mode: Mode, cfg: &ProtocolConfig, result: &ProtocolResult) -> Report {
    let empirical = EmpiricalCaseReport::from_result(result);
    Report {
        mode,
        seed: Some(cfg.seed),
        source: cfg.source,
        variant: Some(cfg.variant),
        attack: result.attack,
        n_rounds: Some(cfg.n_rounds),
        per_case_rates: sampled(&result.case_error_rates),
        standard_errors: PerCase::from_map(&BTreeMap::from_iter(CaseClass::ALL.map(|c| (c, None)))),
        average_rate: None,
        aborted: Some(result.aborted()),
        abort_reason: result.abort.as_ref().map(ToString::to_string),
        key_length: Some(result.key_len()),
        key_xor_consistent: Some(result.key_xor_consistent()),
        leakage_case_i: empirical.leakage_case_i.rate().map(Rate::Sampled),
        check_fraction: Some(cfg.check_fraction),
        threshold: Some(cfg.error_threshold),
        exact: None,
        concordance: None,
        notes: Vec::new(),
    }
}

/// What the protocol participants observe: case I is scored on the check
/// subset only.
pub fn simulate_report(result: &ProtocolResult) -> Report {
    let mut r = protocol_fields(Mode::Simulate, &result.config, result);
    let rates: Option<Vec<f64>> = result.case_error_rates.values().copied().collect();
    r.average_rate = rates.map(|v| Rate::Sampled(v.iter().sum::<f64>() / 4.0));
    r.notes
        .push("case I rate is measured on the sacrificed check subset".into());
    r
}

/// Sampled rates over every round of each case, compared with the exact
/// oracle.
pub fn analyze_report(result: &ProtocolResult) -> Report {
    let mut r = protocol_fields(Mode::Analyze, &result.config, result);
    let empirical = EmpiricalCaseReport::from_result(result);
    let exact = analysis::exact_case_rates(result.attack, result.config.source);
    r.per_case_rates = sampled(&empirical.rates());
    r.standard_errors = PerCase::from_map(&empirical.per_case.iter().map(|(&c, e)| (c, e.std_error())).collect());
    r.average_rate = empirical.average().map(Rate::Sampled);
    r.concordance = Some(PerCase::from_map(&empirical.concordance(&exact, CONCORDANCE_SIGMAS)));
    r.exact = Some(ExactSection::from(&exact));
    r.notes
        .push("case I rate counts disagreements over all case I rounds".into());
    r.notes.push(format!(
        "concordance: sampled rate within {CONCORDANCE_SIGMAS} binomial standard errors of the exact rate"
    ));
    r.notes.push(analysis::ATTACKER_RESENDS_FAITHFULLY.into());
    r
}

/// Exact rates by branch enumeration; no rounds are run.
pub fn verify_report(exact: &ExactCaseReport) -> Report {
    let section = ExactSection::from(exact);
    let rates: BTreeMap<_, _> = exact
        .per_case
        .iter()
        .map(|(&c, &p)| (c, Some(Rate::Exact(p.into()))))
        .collect();
    Report {
        mode: Mode::Verify,
        seed: None,
        source: exact.source,
        variant: None,
        attack: exact.strategy,
        n_rounds: None,
        per_case_rates: PerCase::from_map(&rates),
        standard_errors: PerCase::from_map(&BTreeMap::from_iter(CaseClass::ALL.map(|c| (c, None)))),
        average_rate: Some(Rate::Exact(section.average_rate)),
        aborted: None,
        abort_reason: None,
        key_length: None,
        key_xor_consistent: None,
        leakage_case_i: Some(Rate::Exact(section.leakage_case_i)),
        check_fraction: None,
        threshold: None,
        exact: Some(section),
        concordance: None,
        notes: vec![analysis::ATTACKER_RESENDS_FAITHFULLY.into()],
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("JSON encoding failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV encoding failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// One flattened CSV line.
#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    mode: Mode,
    seed: Option<u64>,
    source: SourceState,
    variant: Option<Variant>,
    attack: &'a str,
    n_rounds: Option<usize>,
    quantity: &'static str,
    case: Option<CaseClass>,
    value: Option<f64>,
    numerator: Option<i64>,
    denominator: Option<i64>,
    std_error: Option<f64>,
    concordant: Option<bool>,
}

fn csv_rows(r: &Report) -> Vec<CsvRow<'_>> {
    let row = |quantity, case, rate: Option<Rate>, std_error, concordant| {
        let exact = match rate {
            Some(Rate::Exact(f)) => Some(f),
            _ => None,
        };
        CsvRow {
            mode: r.mode,
            seed: r.seed,
            source: r.source,
            variant: r.variant,
            attack: r.attack.name(),
            n_rounds: r.n_rounds,
            quantity,
            case,
            value: rate.map(|x| x.as_f64()),
            numerator: exact.map(|f| f.numerator),
            denominator: exact.map(|f| f.denominator),
            std_error,
            concordant,
        }
    };
    let mut rows: Vec<CsvRow<'_>> = CaseClass::ALL
        .iter()
        .map(|&c| {
            let conc = r.concordance.as_ref().and_then(|p| *p.get(c));
            row(
                "rate",
                Some(c),
                *r.per_case_rates.get(c),
                *r.standard_errors.get(c),
                conc,
            )
        })
        .collect();
    rows.push(row("average", None, r.average_rate, None, None));
    rows.push(row("leakage_case_I", None, r.leakage_case_i, None, None));
    if let Some(exact) = &r.exact {
        if r.mode != Mode::Verify {
            for c in CaseClass::ALL {
                rows.push(row(
                    "exact_rate",
                    Some(c),
                    Some(Rate::Exact(*exact.per_case_rates.get(c))),
                    None,
                    None,
                ));
            }
            rows.push(row(
                "exact_average",
                None,
                Some(Rate::Exact(exact.average_rate)),
                None,
                None,
            ));
            rows.push(row(
                "exact_leakage_case_I",
                None,
                Some(Rate::Exact(exact.leakage_case_i)),
                None,
                None,
            ));
        }
    }
    rows
}

/// Serializes one report, or an array of them when `reports.len() != 1`.
pub fn emit_report(reports: &[Report], format: Format) -> Result<Vec<u8>, ReportError> {
    match format {
        Format::Json => {
            let mut out = match reports {
                [one] => serde_json::to_vec_pretty(one)?,
                many => serde_json::to_vec_pretty(many)?,
            };
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in reports {
                for row in csv_rows(r) {
                    w.serialize(row)?;
                }
            }
            w.flush()?;
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
    }
}

/// Short human-readable digest, one line per report.
pub fn summary(reports: &[Report], mut out: impl Write) -> std::io::Result<()> {
    let show = |r: Option<Rate>| match r {
        Some(Rate::Exact(f)) => format!("{}/{}", f.numerator, f.denominator),
        Some(Rate::Sampled(x)) => format!("{x:.4}"),
        None => "-".into(),
    };
    for r in reports {
        let rates: Vec<String> = CaseClass::ALL.iter().map(|&c| show(*r.per_case_rates.get(c))).collect();
        write!(
            out,
            "{:<8} {:<4} source={} rates=({}) average={} leakage={}",
            format!("{:?}", r.mode).to_lowercase(),
            r.attack.name(),
            r.source,
            rates.join(", "),
            show(r.average_rate),
            show(r.leakage_case_i),
        )?;
        match (r.aborted, &r.abort_reason) {
            (Some(true), Some(reason)) => write!(out, " ABORTED: {reason}")?,
            (Some(false), _) => write!(out, " key_length={}", r.key_length.unwrap_or(0))?,
            _ => {}
        }
        writeln!(out)?;
    }
    Ok(())
}
