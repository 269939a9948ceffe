//! Replays scaling decisions against measured traffic.
//!
//! Scale-up at `tau(n)` launches instances that become serviceable after the
//! virtualization start-up delay; pending launches carry across decision
//! steps. Scale-down removes the most recently launched instances first and
//! takes effect immediately. Before the first step the deployment is warm: the
//! first decision's instances are already running.
//!
//! Required capacity is piecewise constant on the trace's sample grid. A
//! moment is degraded when available instances fall below the requirement; it
//! counts as start-up degradation if the decision itself was sufficient and
//! as low provisioning otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{qos_required, VnfDeployment};
use crate::scalar::Scalar;
use crate::trace::TrafficTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technology {
    Xen,
    Kvm,
    Docker,
    Lxc,
    Custom,
}

/// Start-up, teardown and per-instance power of one virtualization technology.
///
/// The per-instance power figures shipped in [`VirtualizationProfile::builtin`]
/// are illustrative configuration values ordered container < hypervisor; they
/// are not measurements. Override them from the config file for real studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualizationProfile {
    pub name: Technology,
    pub startup_seconds: f64,
    pub per_instance_power_watts: f64,
    #[serde(default)]
    pub teardown_seconds: f64,
}

pub const HYPERVISOR_STARTUP_SECS: f64 = 100.0;
pub const CONTAINER_STARTUP_SECS: f64 = 0.4;

impl VirtualizationProfile {
    pub fn builtin(name: Technology) -> Self {
        let (startup_seconds, per_instance_power_watts) = match name {
            Technology::Xen => (HYPERVISOR_STARTUP_SECS, 12.0),
            Technology::Kvm => (HYPERVISOR_STARTUP_SECS, 11.0),
            Technology::Docker => (CONTAINER_STARTUP_SECS, 6.0),
            Technology::Lxc => (CONTAINER_STARTUP_SECS, 7.0),
            Technology::Custom => (0.0, 0.0),
        };
        Self {
            name,
            startup_seconds,
            per_instance_power_watts,
            teardown_seconds: 0.0,
        }
    }

    pub fn all_builtin() -> Vec<Self> {
        [Technology::Xen, Technology::Kvm, Technology::Docker, Technology::Lxc]
            .into_iter()
            .map(Self::builtin)
            .collect()
    }

    pub fn label(&self) -> &'static str {
        match self.name {
            Technology::Xen => "xen",
            Technology::Kvm => "kvm",
            Technology::Docker => "docker",
            Technology::Lxc => "lxc",
            Technology::Custom => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("startup_seconds", self.startup_seconds),
            ("per_instance_power_watts", self.per_instance_power_watts),
            ("teardown_seconds", self.teardown_seconds),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{what} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xen" => Ok(Technology::Xen),
            "kvm" => Ok(Technology::Kvm),
            "docker" => Ok(Technology::Docker),
            "lxc" => Ok(Technology::Lxc),
            "custom" => Ok(Technology::Custom),
            other => Err(Error::InvalidConfig(format!("unknown virtualization profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerPowerParams<T = f64> {
    pub p_idle_watts: T,
    pub p_peak_watts: T,
    pub vnfs_per_server: u32,
}

impl<T: Scalar> Default for ServerPowerParams<T> {
    fn default() -> Self {
        Self {
            p_idle_watts: T::from_f64_lossy(100.0),
            p_peak_watts: T::from_f64_lossy(200.0),
            vnfs_per_server: 10,
        }
    }
}

/// Constant-availability piece of a timeline. Times are seconds from the trace start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineSegment {
    pub start: f64,
    pub end: f64,
    pub step: usize,
    pub decided: u32,
    pub available: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Teardown {
    pub at: f64,
    pub instances: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTimeline {
    pub first_step: usize,
    pub segments: Vec<TimelineSegment>,
    pub teardowns: Vec<Teardown>,
}

impl ScalingTimeline {
    pub fn start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.start)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Available instances at time `t` (seconds from trace start).
    pub fn available_at(&self, t: f64) -> Option<u32> {
        self.segments
            .iter()
            .find(|s| s.start <= t && t < s.end)
            .map(|s| s.available)
    }

    /// Integral of available instances over time, in VNF-seconds.
    pub fn vnf_seconds(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.available as f64 * (s.end - s.start))
            .sum()
    }

    /// Integral of decided instances over time, in VNF-seconds.
    pub fn decided_vnf_seconds(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.decided as f64 * (s.end - s.start))
            .sum()
    }
}

/// Builds the availability timeline for `decisions[i]` taking effect at step
/// `first_step + i`.
pub fn replay(
    trace: &TrafficTrace,
    first_step: usize,
    decisions: &[u32],
    deployment: &VnfDeployment,
    profile: &VirtualizationProfile,
) -> Result<ScalingTimeline> {
    deployment.validate()?;
    profile.validate()?;
    let stride = deployment.stride(trace.interval_secs())?;
    if decisions.is_empty() {
        return Err(Error::DecisionCount { expected: 1, found: 0 });
    }
    // Every step's window [tau(n), tau(n+1)) must be covered by samples.
    let max_steps = (trace.len() / stride).saturating_sub(first_step);
    if decisions.len() > max_steps {
        return Err(Error::DecisionCount {
            expected: max_steps,
            found: decisions.len(),
        });
    }
    if let Some(&bad) = decisions
        .iter()
        .find(|&&d| d < deployment.v_min || d > deployment.v_max)
    {
        return Err(Error::InvalidConfig(format!(
            "decision {bad} outside {}..={}",
            deployment.v_min, deployment.v_max
        )));
    }

    let step_secs = deployment.decision_interval_secs as f64;
    // Ready times of live instances, in launch order (non-decreasing).
    let mut ready: Vec<f64> = vec![f64::NEG_INFINITY; decisions[0] as usize];
    let mut segments = Vec::new();
    let mut teardowns = Vec::new();

    for (i, &d) in decisions.iter().enumerate() {
        let step = first_step + i;
        let t0 = step as f64 * step_secs;
        let t1 = t0 + step_secs;
        let target = d as usize;
        if target > ready.len() {
            let at = t0 + profile.startup_seconds;
            ready.resize(target, at);
        } else if target < ready.len() {
            let removed = ready.split_off(target);
            let torn = removed.iter().filter(|&&r| r <= t0).count() as u32;
            if torn > 0 {
                teardowns.push(Teardown { at: t0, instances: torn });
            }
        }

        let mut cuts: Vec<f64> = ready.iter().copied().filter(|&r| r > t0 && r < t1).collect();
        cuts.dedup();
        let mut start = t0;
        for end in cuts.into_iter().chain(std::iter::once(t1)) {
            let available = ready.iter().filter(|&&r| r <= start).count() as u32;
            segments.push(TimelineSegment {
                start,
                end,
                step,
                decided: d,
                available,
            });
            start = end;
        }
    }
    Ok(ScalingTimeline {
        first_step,
        segments,
        teardowns,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QosReport {
    pub degraded_minutes_total: f64,
    pub degraded_minutes_low_provisioning: f64,
    pub degraded_minutes_startup: f64,
    pub overprovisioned_vnf_minutes: f64,
    pub served_vnf_minutes: f64,
    pub provisioned_vnf_minutes: f64,
}

/// Visits the timeline intersected with the sample grid:
/// `(start, end, step, decided, available, required)`.
pub fn for_each_piece(
    trace: &TrafficTrace,
    timeline: &ScalingTimeline,
    deployment: &VnfDeployment,
    mut f: impl FnMut(f64, f64, usize, u32, u32, u32),
) {
    let dt = trace.interval_secs() as f64;
    for seg in &timeline.segments {
        let mut a = seg.start;
        while a < seg.end {
            let i = ((a / dt).floor() as usize).min(trace.len() - 1);
            let b = (((i + 1) as f64) * dt).min(seg.end);
            let b = if b <= a { seg.end } else { b };
            let required = qos_required(trace.rate_bps(i), deployment);
            f(a, b, seg.step, seg.decided, seg.available, required);
            a = b;
        }
    }
}

pub fn degraded_qos(trace: &TrafficTrace, timeline: &ScalingTimeline, deployment: &VnfDeployment) -> QosReport {
    let mut r = QosReport::default();
    for_each_piece(trace, timeline, deployment, |a, b, _, decided, available, required| {
        let minutes = (b - a) / 60.0;
        if available < required {
            if decided >= required {
                r.degraded_minutes_startup += minutes;
            } else {
                r.degraded_minutes_low_provisioning += minutes;
            }
        }
        r.overprovisioned_vnf_minutes += available.saturating_sub(required) as f64 * minutes;
        r.served_vnf_minutes += available.min(required) as f64 * minutes;
        r.provisioned_vnf_minutes += available as f64 * minutes;
    });
    r.degraded_minutes_total = r.degraded_minutes_low_provisioning + r.degraded_minutes_startup;
    r
}

/// Instantaneous power draw with `available` instances.
pub fn power_watts<T: Scalar>(available: u32, profile: &VirtualizationProfile, server: &ServerPowerParams<T>) -> T {
    let k = server.vnfs_per_server.max(1);
    let servers = available.div_ceil(k).max(1);
    let t = |v: f64| T::from_f64_lossy(v);
    // Full servers run at u = 1; the last one at its occupied fraction.
    let utilization_sum = t(available as f64) / t(k as f64);
    t(servers as f64) * server.p_idle_watts
        + server.p_peak_watts * utilization_sum
        + t(profile.per_instance_power_watts) * t(available as f64)
}

/// Energy in joules over the timeline, including teardown tails.
pub fn energy<T: Scalar>(
    timeline: &ScalingTimeline,
    profile: &VirtualizationProfile,
    server: &ServerPowerParams<T>,
) -> Result<T> {
    if server.vnfs_per_server < 1 {
        return Err(Error::InvalidConfig("vnfs_per_server must be >= 1".into()));
    }
    let t = |v: f64| T::from_f64_lossy(v);
    let mut joules = T::zero();
    for seg in &timeline.segments {
        joules = joules + power_watts(seg.available, profile, server) * t(seg.end - seg.start);
    }
    for td in &timeline.teardowns {
        joules = joules + t(profile.per_instance_power_watts * profile.teardown_seconds * td.instances as f64);
    }
    Ok(joules)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub profile: VirtualizationProfile,
    pub server: ServerPowerParams<f64>,
    pub decisions: usize,
    pub degraded_minutes_total: f64,
    pub degraded_minutes_low_provisioning: f64,
    pub degraded_minutes_startup: f64,
    pub energy_joules: f64,
    pub overprovisioned_vnf_minutes: f64,
    pub vnf_seconds: f64,
}

pub fn simulate(
    trace: &TrafficTrace,
    first_step: usize,
    decisions: &[u32],
    deployment: &VnfDeployment,
    profile: &VirtualizationProfile,
    server: &ServerPowerParams<f64>,
) -> Result<(ScalingTimeline, SimulationReport)> {
    let timeline = replay(trace, first_step, decisions, deployment, profile)?;
    let q = degraded_qos(trace, &timeline, deployment);
    let report = SimulationReport {
        profile: profile.clone(),
        server: *server,
        decisions: decisions.len(),
        degraded_minutes_total: q.degraded_minutes_total,
        degraded_minutes_low_provisioning: q.degraded_minutes_low_provisioning,
        degraded_minutes_startup: q.degraded_minutes_startup,
        energy_joules: energy(&timeline, profile, server)?,
        overprovisioned_vnf_minutes: q.overprovisioned_vnf_minutes,
        vnf_seconds: timeline.vnf_seconds(),
    };
    Ok((timeline, report))
}

/// Per-piece timeline CSV (timeline segments split on the sample grid).
pub fn timeline_csv(trace: &TrafficTrace, timeline: &ScalingTimeline, deployment: &VnfDeployment) -> String {
    let mut out = String::from("start_s,end_s,step,decided,available,required\n");
    for_each_piece(trace, timeline, deployment, |a, b, step, d, av, req| {
        out.push_str(&format!("{a},{b},{step},{d},{av},{req}\n"));
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    const G: f64 = 1e9;

    fn trace_gbps(rates: &[f64]) -> TrafficTrace {
        TrafficTrace::new(
            Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            300,
            rates.iter().map(|r| r * G * 300.0).collect(),
        )
        .unwrap()
    }

    fn profile(startup: f64) -> VirtualizationProfile {
        VirtualizationProfile {
            name: Technology::Custom,
            startup_seconds: startup,
            per_instance_power_watts: 5.0,
            teardown_seconds: 0.0,
        }
    }

    #[test]
    fn constant_decisions_have_no_transitions() {
        let tr = trace_gbps(&[2.5; 12]);
        let tl = replay(&tr, 0, &[3; 5], &VnfDeployment::default(), &profile(100.0)).unwrap();
        assert!(tl.segments.iter().all(|s| s.available == 3));
        assert_eq!(tl.segments.len(), 5);
    }

    #[test]
    fn scale_up_waits_for_startup() {
        let tr = trace_gbps(&[1.5; 12]);
        let d = VnfDeployment::default();
        let tl = replay(&tr, 0, &[2, 4], &d, &profile(100.0)).unwrap();
        assert_eq!(tl.available_at(600.0), Some(2));
        assert_eq!(tl.available_at(699.9), Some(2));
        assert_eq!(tl.available_at(700.0), Some(4));

        let tl = replay(&tr, 0, &[2, 4], &d, &profile(0.4)).unwrap();
        assert_eq!(tl.available_at(600.3), Some(2));
        assert_eq!(tl.available_at(600.4), Some(4));
    }

    #[test]
    fn startup_lag_carries_across_steps() {
        let tr = trace_gbps(&[1.0; 12]);
        let d = VnfDeployment {
            decision_interval_secs: 300,
            ..Default::default()
        };
        let tl = replay(&tr, 0, &[1, 3, 3], &d, &profile(450.0)).unwrap();
        assert_eq!(tl.available_at(500.0), Some(1));
        assert_eq!(tl.available_at(749.0), Some(1));
        assert_eq!(tl.available_at(750.0), Some(3));
    }

    #[test]
    fn scale_down_is_immediate_and_never_degrades() {
        let tr = trace_gbps(&[0.5; 12]);
        let d = VnfDeployment::default();
        let tl = replay(&tr, 0, &[5, 2], &d, &profile(100.0)).unwrap();
        assert_eq!(tl.available_at(600.0), Some(2));
        assert_eq!(tl.teardowns, vec![Teardown { at: 600.0, instances: 3 }]);
        assert_eq!(degraded_qos(&tr, &tl, &d).degraded_minutes_total, 0.0);
    }

    #[test]
    fn startup_attribution() {
        // Load jumps to 3.5 Gbps at the second step; decision 4 is sufficient
        // but takes 100 s to come up.
        let tr = trace_gbps(&[1.5, 1.5, 3.5, 3.5, 3.5]);
        let d = VnfDeployment::default();
        let tl = replay(&tr, 0, &[2, 4], &d, &profile(100.0)).unwrap();
        let q = degraded_qos(&tr, &tl, &d);
        assert!((q.degraded_minutes_startup - 100.0 / 60.0).abs() < 1e-12);
        assert_eq!(q.degraded_minutes_low_provisioning, 0.0);

        let tl = replay(&tr, 0, &[2, 3], &d, &profile(0.0)).unwrap();
        let q = degraded_qos(&tr, &tl, &d);
        assert!((q.degraded_minutes_low_provisioning - 10.0).abs() < 1e-12);
    }

    #[test]
    fn decision_count_checked() {
        let tr = trace_gbps(&[1.0; 6]);
        let d = VnfDeployment::default();
        assert!(matches!(
            replay(&tr, 0, &[1; 4], &d, &profile(0.0)),
            Err(Error::DecisionCount { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn energy_boundaries() {
        let server = ServerPowerParams {
            p_idle_watts: 100.0,
            p_peak_watts: 200.0,
            vnfs_per_server: 10,
        };
        let mut p = profile(0.0);
        p.per_instance_power_watts = 0.0;
        assert_eq!(power_watts(0, &p, &server), 100.0);
        assert_eq!(power_watts(10, &p, &server), 300.0);
        assert_eq!(power_watts(20, &p, &server), 600.0);
        assert_eq!(power_watts(11, &p, &server), 2.0 * 100.0 + 200.0 * 1.1);
        let bad = ServerPowerParams {
            vnfs_per_server: 0,
            ..server
        };
        let tl = ScalingTimeline {
            first_step: 0,
            segments: vec![],
            teardowns: vec![],
        };
        assert!(energy(&tl, &p, &bad).is_err());
    }

    #[test]
    fn teardown_energy_tail() {
        let tr = trace_gbps(&[0.5; 12]);
        let d = VnfDeployment::default();
        let mut p = profile(0.0);
        p.teardown_seconds = 30.0;
        let server = ServerPowerParams::<f64>::default();
        let tl = replay(&tr, 0, &[5, 2], &d, &p).unwrap();
        let mut no_tail = p.clone();
        no_tail.teardown_seconds = 0.0;
        let e = energy(&tl, &p, &server).unwrap() - energy(&tl, &no_tail, &server).unwrap();
        assert!((e - 3.0 * 5.0 * 30.0).abs() < 1e-9);
    }
}
