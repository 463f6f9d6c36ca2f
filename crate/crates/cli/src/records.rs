//! CSV rows. Column sets are fixed; numbers are exact decimals where the
//! value has one, `p/q` otherwise. List-valued cells join entries with `;`
//! in buyer-id order.

use std::io::Write;

use netauction::analysis::{revenue_report, welfare_report, AnalysisError};
use netauction::{format_value, AuctionInstance, Outcome, Value};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub mechanism: String,
    pub instance: String,
    pub n: usize,
    pub k: usize,
    pub allocation: String,
    pub net_payments: String,
    pub achieved_welfare: String,
    pub optimal_welfare: String,
    pub ratio: String,
    pub revenue: String,
    /// `1 + revenue / ((n - 1) v*)`; empty without a cap or with one buyer.
    pub normalized_revenue: String,
}

impl RunRecord {
    pub fn new(
        mechanism: String,
        instance_id: String,
        instance: &AuctionInstance,
        outcome: &Outcome,
    ) -> Result<Self, AnalysisError> {
        let welfare = welfare_report(instance, outcome)?;
        let revenue = revenue_report(instance, outcome);
        Ok(RunRecord {
            mechanism,
            instance: instance_id,
            n: instance.n(),
            k: instance.k(),
            allocation: join(outcome.allocation().iter().map(usize::to_string)),
            net_payments: join(outcome.net_payments().iter().map(format_value)),
            achieved_welfare: format_value(&welfare.achieved),
            optimal_welfare: format_value(&welfare.optimal),
            ratio: format_value(&welfare.ratio),
            revenue: format_value(&revenue.revenue),
            normalized_revenue: revenue.normalized.as_ref().map(format_value).unwrap_or_default(),
        })
    }
}

/// One audited instance from `verify`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyRecord {
    pub mechanism: String,
    pub instance: String,
    pub n: usize,
    pub k: usize,
    pub deviations: usize,
    /// Empty when no profitable deviation exists.
    pub sp_violation_buyer: String,
    pub gain: String,
    pub ir_violation_buyer: String,
}

/// One parameter value from `sweep`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRecord {
    pub mechanism: String,
    pub parameter: String,
    pub value: String,
    pub instances: usize,
    pub empirical_efficiency: String,
    pub empirical_beta: String,
}

pub fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(";")
}

pub fn exact(v: &Value) -> String {
    format_value(v)
}

/// Writes rows with a header line.
pub fn write_csv<R: Serialize>(out: impl Write, rows: &[R]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_rows() {
        let row = SweepRecord {
            mechanism: "gapg".into(),
            parameter: "k".into(),
            value: "4".into(),
            instances: 3,
            empirical_efficiency: "1/2".into(),
            empirical_beta: "0.8".into(),
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "mechanism,parameter,value,instances,empirical_efficiency,empirical_beta\ngapg,k,4,3,1/2,0.8\n"
        );
    }
}
