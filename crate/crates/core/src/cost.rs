//! Leasing cost of VNF deployments and the multi-site SD-WAN scenario.

use std::ops::Range;

use chrono::Duration;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureWindowConfig};
use crate::labeling::{decision_steps, label, trace_days, LabelKind, VnfDeployment};
use crate::learners::{predict_ma, MovingAverageParams, TrainedModel};
use crate::scalar::Scalar;
use crate::simulate::{degraded_qos, replay, VirtualizationProfile};
use crate::trace::{TrafficTrace, SECONDS_PER_DAY};

pub const SECONDS_PER_MONTH: f64 = 30.0 * 86_400.0;

/// Pay-per-use prices, all per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeasingRates<T = f64> {
    /// Per VNF instance.
    pub c_v: T,
    /// Per Gbps of leased bandwidth.
    pub c_n: T,
    /// Per second of degraded QoS.
    pub c_q: T,
}

impl<T: Scalar> LeasingRates<T> {
    /// $0.01 per VM-second, $70 per Gbps-month (30-day month), $1 per 10
    /// degraded minutes.
    pub fn sdwan_defaults() -> Self {
        Self {
            c_v: T::from_f64_lossy(0.01),
            c_n: T::from_f64_lossy(70.0 / SECONDS_PER_MONTH),
            c_q: T::from_f64_lossy(1.0 / 600.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("c_v", self.c_v), ("c_n", self.c_n), ("c_q", self.c_q)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{what} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for LeasingRates<T> {
    fn default() -> Self {
        Self::sdwan_defaults()
    }
}

/// Line-rate capacity for `decision` VNFs, each carrying `q_prime` bits/s.
pub fn bandwidth_for<T: Scalar>(decision: u32, q_prime: T) -> T {
    T::from_f64_lossy(decision as f64) * q_prime
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown<T = f64> {
    pub vnf_cost: T,
    pub network_cost: T,
    pub degradation_cost: T,
}

impl<T: Scalar> CostBreakdown<T> {
    pub fn total(&self) -> T {
        self.vnf_cost + self.network_cost + self.degradation_cost
    }
}

pub fn leasing_breakdown<T: Scalar>(
    vnf_seconds: T,
    gbps_seconds: T,
    degraded_seconds: T,
    rates: &LeasingRates<T>,
) -> CostBreakdown<T> {
    CostBreakdown {
        vnf_cost: rates.c_v * vnf_seconds,
        network_cost: rates.c_n * gbps_seconds,
        degradation_cost: rates.c_q * degraded_seconds,
    }
}

pub fn leasing_cost<T: Scalar>(vnf_seconds: T, gbps_seconds: T, degraded_seconds: T, rates: &LeasingRates<T>) -> T {
    leasing_breakdown(vnf_seconds, gbps_seconds, degraded_seconds, rates).total()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyScope {
    /// Every (site, service) deployment pays for its own degraded time.
    #[default]
    PerDeployment,
    /// A site pays once for the time any of its services is degraded.
    PerSite,
}

impl std::str::FromStr for PenaltyScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-deployment" | "deployment" => Ok(PenaltyScope::PerDeployment),
            "per-site" | "site" => Ok(PenaltyScope::PerSite),
            other => Err(Error::InvalidConfig(format!("unknown penalty scope `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub name: String,
    pub services: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdWanScenario {
    pub sites: Vec<Site>,
    pub deployment: VnfDeployment,
    pub rates: LeasingRates<f64>,
    pub penalty_scope: PenaltyScope,
}

impl Default for SdWanScenario {
    fn default() -> Self {
        let services: Vec<String> = ["firewall", "router", "pbx"].iter().map(|s| s.to_string()).collect();
        let sites = ["hq", "branch-1", "branch-2", "branch-3"]
            .iter()
            .map(|n| Site {
                name: n.to_string(),
                services: services.clone(),
            })
            .collect();
        Self {
            sites,
            deployment: VnfDeployment::default(),
            rates: LeasingRates::sdwan_defaults(),
            penalty_scope: PenaltyScope::PerDeployment,
        }
    }
}

impl SdWanScenario {
    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() {
            return Err(Error::InvalidConfig("scenario needs at least one site".into()));
        }
        if let Some(s) = self.sites.iter().find(|s| s.services.is_empty()) {
            return Err(Error::InvalidConfig(format!("site `{}` has no services", s.name)));
        }
        self.deployment.validate()?;
        self.rates.validate()
    }
}

/// Where scaling decisions come from.
#[derive(Debug, Clone, Copy)]
pub enum DecisionSource<'a, T: Scalar> {
    Model {
        model: &'a TrainedModel<T>,
        window: &'a FeatureWindowConfig,
    },
    MovingAverage(&'a MovingAverageParams),
    /// Ground-truth labels of the evaluated trace.
    Labels(LabelKind),
}

impl<T: Scalar> DecisionSource<'_, T> {
    fn lookback(&self, trace: &TrafficTrace) -> Result<usize> {
        match self {
            DecisionSource::Model { window, .. } => window.lookback_samples(trace.interval_secs()),
            DecisionSource::MovingAverage(p) => Ok(p.window.saturating_sub(1)),
            DecisionSource::Labels(_) => Ok(0),
        }
    }

    /// Decisions for every step in `steps`.
    pub fn decide(&self, trace: &TrafficTrace, steps: Range<usize>, deployment: &VnfDeployment) -> Result<Vec<u32>> {
        let stride = deployment.stride(trace.interval_secs())?;
        steps
            .map(|step| match self {
                DecisionSource::Model { model, window } => {
                    let x = extract_features::<T>(trace, step * stride, window)?;
                    model.predict(&x.values)
                }
                DecisionSource::MovingAverage(p) => predict_ma(trace, step, p, deployment),
                DecisionSource::Labels(kind) => label(trace, step, deployment, *kind),
            })
            .collect()
    }
}

/// Decision steps a source can serve, optionally restricted to the last
/// `test_days` whole days of the trace.
pub fn evaluation_steps<T: Scalar>(
    trace: &TrafficTrace,
    source: &DecisionSource<'_, T>,
    deployment: &VnfDeployment,
    test_days: Option<u32>,
) -> Result<Range<usize>> {
    let mut steps = decision_steps(trace, deployment, source.lookback(trace)?)?;
    if let Some(days) = test_days {
        let total = trace_days(trace);
        if days == 0 || days > total {
            return Err(Error::NotEnoughDays {
                requested: days,
                available: total,
            });
        }
        let from = trace.start_time() + Duration::seconds((total - days) as i64 * SECONDS_PER_DAY);
        let stride = deployment.stride(trace.interval_secs())?;
        while steps.start < steps.end && trace.timestamp(steps.start * stride) < from {
            steps.start += 1;
        }
    }
    if steps.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub site: String,
    pub service: String,
    pub vnf_seconds: f64,
    pub gbps_seconds: f64,
    pub degraded_seconds: f64,
    pub vnf_cost: f64,
    pub network_cost: f64,
    pub degradation_cost: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTotal {
    pub site: String,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub method: String,
    pub profile: VirtualizationProfile,
    pub rates: LeasingRates<f64>,
    pub penalty_scope: PenaltyScope,
    pub rows: Vec<CostRow>,
    pub site_totals: Vec<SiteTotal>,
    pub total: f64,
}

impl CostReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,site,service,vnf_cost,network_cost,degradation_cost,total\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.method, r.site, r.service, r.vnf_cost, r.network_cost, r.degradation_cost, r.total
            ));
        }
        out
    }
}

/// Costs one deployment: decisions are billed as provisioned (VNF-seconds and
/// line-rate Gbps-seconds of the decided count); degraded seconds come from
/// replaying them under `profile`.
pub fn deployment_cost(
    trace: &TrafficTrace,
    first_step: usize,
    decisions: &[u32],
    deployment: &VnfDeployment,
    profile: &VirtualizationProfile,
    rates: &LeasingRates<f64>,
) -> Result<(f64, f64, f64, CostBreakdown<f64>)> {
    let timeline = replay(trace, first_step, decisions, deployment, profile)?;
    let q = degraded_qos(trace, &timeline, deployment);
    let vnf_seconds = timeline.decided_vnf_seconds();
    let gbps_seconds = bandwidth_for(1, deployment.per_vnf_capacity_bps / 1e9) * vnf_seconds;
    let degraded_seconds = q.degraded_minutes_total * 60.0;
    let b = leasing_breakdown(vnf_seconds, gbps_seconds, degraded_seconds, rates);
    Ok((vnf_seconds, gbps_seconds, degraded_seconds, b))
}

/// Evaluates the scenario with `traces[i]` assigned to `scenario.sites[i]`.
/// Every service at a site sees the site's traffic. With `test_days`, only the
/// last whole days of each trace are billed.
pub fn run_sdwan<T: Scalar>(
    scenario: &SdWanScenario,
    traces: &[&TrafficTrace],
    method: &str,
    source: &DecisionSource<'_, T>,
    profile: &VirtualizationProfile,
    test_days: Option<u32>,
) -> Result<CostReport> {
    scenario.validate()?;
    profile.validate()?;
    if traces.len() != scenario.sites.len() {
        return Err(Error::Missing(format!(
            "{} site traces for {} sites",
            traces.len(),
            scenario.sites.len()
        )));
    }
    let dep = &scenario.deployment;
    let per_site: Vec<Vec<CostRow>> = scenario
        .sites
        .par_iter()
        .zip(traces.par_iter())
        .map(|(site, trace)| -> Result<Vec<CostRow>> {
            let steps = evaluation_steps(trace, source, dep, test_days)?;
            let first = steps.start;
            let decisions = source.decide(trace, steps, dep)?;
            let (vnf_s, gbps_s, degraded_s, mut b) =
                deployment_cost(trace, first, &decisions, dep, profile, &scenario.rates)?;
            if scenario.penalty_scope == PenaltyScope::PerSite {
                // Services share the site's traffic and decisions, so they
                // degrade together; the site pays once, split evenly.
                b.degradation_cost /= site.services.len() as f64;
            }
            Ok(site
                .services
                .iter()
                .map(|service| CostRow {
                    site: site.name.clone(),
                    service: service.clone(),
                    vnf_seconds: vnf_s,
                    gbps_seconds: gbps_s,
                    degraded_seconds: degraded_s,
                    vnf_cost: b.vnf_cost,
                    network_cost: b.network_cost,
                    degradation_cost: b.degradation_cost,
                    total: b.total(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let site_totals: Vec<SiteTotal> = scenario
        .sites
        .iter()
        .zip(&per_site)
        .map(|(site, rows)| SiteTotal {
            site: site.name.clone(),
            total: rows.iter().map(|r| r.total).sum(),
        })
        .collect();
    let total = site_totals.iter().map(|s| s.total).sum();
    Ok(CostReport {
        method: method.to_string(),
        profile: profile.clone(),
        rates: scenario.rates,
        penalty_scope: scenario.penalty_scope,
        rows: per_site.into_iter().flatten().collect(),
        site_totals,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::Technology;
    use chrono::{TimeZone, Utc};

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth_for(2, 1e9), 2e9);
        assert_eq!(bandwidth_for(0, 1e9), 0.0);
        assert_eq!(bandwidth_for(10, 1e9), 1e10);
    }

    #[test]
    fn worked_leasing_example() {
        let rates = LeasingRates::<f64>::sdwan_defaults();
        let c = leasing_cost(2.0 * 600.0, 2.0 * 600.0, 0.0, &rates);
        let expected = 0.01 * 1200.0 + 70.0 / 2_592_000.0 * 1200.0;
        assert!((c - expected).abs() < 1e-12);
        assert!((c - 12.0324).abs() < 1e-4);
        assert_eq!(leasing_cost(0.0, 0.0, 0.0, &rates), 0.0);
        let d = leasing_breakdown(0.0, 0.0, 1200.0, &rates).degradation_cost;
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rates_rejected() {
        let r = LeasingRates {
            c_v: -1.0,
            c_n: 0.0,
            c_q: 0.0,
        };
        assert!(r.validate().is_err());
    }

    fn constant_trace(gbps: f64, samples: usize) -> TrafficTrace {
        TrafficTrace::new(
            Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            300,
            vec![gbps * 1e9 * 300.0; samples],
        )
        .unwrap()
    }

    #[test]
    fn single_site_constant_trace_is_closed_form() {
        let trace = constant_trace(2.5, 25);
        let scenario = SdWanScenario {
            sites: vec![Site {
                name: "hq".into(),
                services: vec!["firewall".into()],
            }],
            ..Default::default()
        };
        let p = VirtualizationProfile::builtin(Technology::Custom);
        let r = run_sdwan::<f64>(&scenario, &[&trace], "qml", &DecisionSource::Labels(LabelKind::Qml), &p, None)
            .unwrap();
        // 12 steps of 600 s at 3 VNFs.
        let secs = 12.0 * 600.0;
        let expected = leasing_cost(3.0 * secs, 3.0 * secs, 0.0, &scenario.rates);
        assert!((r.total - expected).abs() < 1e-9);
        assert_eq!(r.rows.len(), 1);
    }

    #[test]
    fn shared_trace_scales_with_deployments() {
        let trace = constant_trace(1.2, 25);
        let p = VirtualizationProfile::builtin(Technology::Docker);
        let src = DecisionSource::<f64>::Labels(LabelKind::Cml);
        let full = SdWanScenario::default();
        let one = SdWanScenario {
            sites: vec![Site {
                name: "hq".into(),
                services: vec!["firewall".into()],
            }],
            ..full.clone()
        };
        let traces = vec![&trace; 4];
        let r12 = run_sdwan(&full, &traces, "cml", &src, &p, None).unwrap();
        let r1 = run_sdwan(&one, &[&trace], "cml", &src, &p, None).unwrap();
        assert!((r12.total - 12.0 * r1.total).abs() < 1e-9 * r12.total);
        assert_eq!(r12.total, r12.site_totals.iter().map(|s| s.total).sum::<f64>());
        assert!(r12.to_csv().starts_with("method,site,service,vnf_cost,network_cost,degradation_cost,total\n"));
    }

    #[test]
    fn missing_trace_assignment() {
        let trace = constant_trace(1.0, 25);
        let p = VirtualizationProfile::builtin(Technology::Xen);
        let r = run_sdwan::<f64>(
            &SdWanScenario::default(),
            &[&trace],
            "ma",
            &DecisionSource::Labels(LabelKind::Qml),
            &p,
            None,
        );
        assert!(matches!(r, Err(Error::Missing(_))));
    }
}
