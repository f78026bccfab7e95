//! Replicator dynamics of the publishing choice.
//!
//! A population of researchers chooses between two strategies: cooperate
//! (publish open access) or defect (publish in legacy journals). With payoff
//! difference `λ − k·ω` between the strategies, the cooperator fraction ω
//! evolves by
//!
//! ```text
//! dω/dt = ω (1 − ω) (λ − k ω)
//! ```
//!
//! `λ` models external support for open access, `k > 0` diminishing returns
//! as cooperation saturates. The module finds the fixed points of this flow,
//! classifies their stability from the analytic linearization, integrates
//! trajectories with a fixed-step 4th-order Runge-Kutta scheme, scans λ for
//! bifurcations, and synthesizes bimodal ratio samples from a population
//! state.
//!
//! Note on stability: the sign analysis of the linearization is what this
//! module reports. For `0 < λ < k` that yields ω=0 unstable (f′(0)=λ>0),
//! ω=λ/k stable, and ω=1 unstable — a stable interior coexistence rather
//! than bistable boundaries. Verbal accounts of this model sometimes label
//! the boundary points stable instead; the derivative field on each
//! [`Equilibrium`] lets callers audit the classification directly.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the replicator model.
#[derive(Debug, Error)]
pub enum ReplicatorError {
    /// An input lies outside its mathematical domain.
    #[error("domain error: {0}")]
    DomainError(String),
    /// A structural parameter is invalid (k ≤ 0, step ≤ 0, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Failed to write an export.
    #[error("export failed: {0}")]
    Export(#[from] std::io::Error),
}

/// The one-dimensional replicator system `dω/dt = ω(1−ω)(λ − kω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicatorSystem {
    /// Policy-support parameter λ.
    pub lambda: f64,
    /// Diminishing-returns constant k, strictly positive.
    pub k: f64,
}

impl ReplicatorSystem {
    pub fn new(lambda: f64, k: f64) -> Result<Self, ReplicatorError> {
        if !lambda.is_finite() {
            return Err(ReplicatorError::InvalidParameter(format!(
                "lambda must be finite, got {lambda}"
            )));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(ReplicatorError::InvalidParameter(format!(
                "k must be finite and > 0, got {k}"
            )));
        }
        Ok(Self { lambda, k })
    }
}

/// Stability of a fixed point, classified by the sign of the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    NonHyperbolic,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::NonHyperbolic => "non_hyperbolic",
        };
        f.write_str(s)
    }
}

/// A fixed point of the replicator flow together with its linearization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    /// Cooperator fraction at the fixed point.
    pub omega: f64,
    pub stability: Stability,
    /// Value of d/dω [ω(1−ω)(λ−kω)] at the fixed point.
    pub derivative: f64,
}

/// A sampled point of an integrated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub omega: f64,
}

/// A fixed-step trajectory of the cooperator fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectoryPoint>,
    pub system: ReplicatorSystem,
    pub step: f64,
}

impl Trajectory {
    /// Final cooperator fraction of the trajectory.
    pub fn final_omega(&self) -> f64 {
        self.samples.last().map(|p| p.omega).expect("non-empty")
    }
}

/// One λ grid point of a bifurcation scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub lambda: f64,
    pub equilibria: Vec<Equilibrium>,
}

fn check_omega(omega: f64) -> Result<(), ReplicatorError> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(ReplicatorError::DomainError(format!(
            "omega must lie in [0,1], got {omega}"
        )));
    }
    Ok(())
}

/// Payoff difference `π_cooperate − π_defect = λ − k·ω`.
pub fn payoff_difference(omega: f64, system: &ReplicatorSystem) -> Result<f64, ReplicatorError> {
    check_omega(omega)?;
    Ok(system.lambda - system.k * omega)
}

/// Right-hand side of the replicator equation, `ω(1−ω)(λ−kω)`.
pub fn replicator_rhs(omega: f64, system: &ReplicatorSystem) -> Result<f64, ReplicatorError> {
    check_omega(omega)?;
    Ok(rhs_unchecked(omega, system))
}

// RK4 substeps may transiently leave [0,1]; the flow formula itself is
// defined for any real ω.
fn rhs_unchecked(omega: f64, system: &ReplicatorSystem) -> f64 {
    omega * (1.0 - omega) * (system.lambda - system.k * omega)
}

fn classify(derivative: f64) -> Stability {
    if derivative < 0.0 {
        Stability::Stable
    } else if derivative > 0.0 {
        Stability::Unstable
    } else {
        Stability::NonHyperbolic
    }
}

/// All fixed points of the flow in [0,1], sorted by ω.
///
/// ω=0 and ω=1 are always fixed; the interior point ω=λ/k is included iff it
/// lies strictly inside (0,1). Each point carries the analytic derivative
/// f′(0)=λ, f′(1)=k−λ, f′(λ/k)=(λ/k)(1−λ/k)(−k) and the stability implied by
/// its sign.
pub fn find_equilibria(system: &ReplicatorSystem) -> Vec<Equilibrium> {
    let ReplicatorSystem { lambda, k } = *system;
    let mut points = vec![Equilibrium {
        omega: 0.0,
        derivative: lambda,
        stability: classify(lambda),
    }];
    let interior = lambda / k;
    if interior > 0.0 && interior < 1.0 {
        let d = interior * (1.0 - interior) * (-k);
        points.push(Equilibrium {
            omega: interior,
            derivative: d,
            stability: classify(d),
        });
    }
    let d1 = k - lambda;
    points.push(Equilibrium {
        omega: 1.0,
        derivative: d1,
        stability: classify(d1),
    });
    points
}

/// Integrate the flow from `omega0` with classical fixed-step RK4.
///
/// Samples are recorded at every step boundary, starting at t=0. The state is
/// clamped to [0,1] after each full step; the flow leaves [0,1] forward
/// invariant, so the clamp only absorbs rounding.
pub fn integrate(
    omega0: f64,
    system: &ReplicatorSystem,
    t_end: f64,
    step: f64,
) -> Result<Trajectory, ReplicatorError> {
    check_omega(omega0)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(ReplicatorError::InvalidParameter(format!(
            "step must be > 0, got {step}"
        )));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(ReplicatorError::InvalidParameter(format!(
            "t_end must be > 0, got {t_end}"
        )));
    }

    let mut samples = Vec::with_capacity((t_end / step) as usize + 2);
    let mut omega = omega0;
    let mut t = 0.0;
    samples.push(TrajectoryPoint { t, omega });
    while t < t_end {
        let h = step.min(t_end - t);
        omega = rk4_step(omega, h, system).clamp(0.0, 1.0);
        t += h;
        samples.push(TrajectoryPoint { t, omega });
    }
    Ok(Trajectory {
        samples,
        system: *system,
        step,
    })
}

fn rk4_step(y: f64, h: f64, system: &ReplicatorSystem) -> f64 {
    let k1 = rhs_unchecked(y, system);
    let k2 = rhs_unchecked(y + 0.5 * h * k1, system);
    let k3 = rhs_unchecked(y + 0.5 * h * k2, system);
    let k4 = rhs_unchecked(y + h * k3, system);
    y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
}

/// Classified equilibria on an evenly spaced λ grid with fixed k.
///
/// The set of interior fixed points changes exactly where λ crosses 0 or k.
pub fn bifurcation_scan(
    lambda_min: f64,
    lambda_max: f64,
    steps: usize,
    k: f64,
) -> Result<Vec<BifurcationPoint>, ReplicatorError> {
    if !(lambda_min.is_finite() && lambda_max.is_finite() && lambda_min < lambda_max) {
        return Err(ReplicatorError::InvalidParameter(format!(
            "need lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]"
        )));
    }
    if steps < 2 {
        return Err(ReplicatorError::InvalidParameter(format!(
            "need at least 2 grid points, got {steps}"
        )));
    }
    let spacing = (lambda_max - lambda_min) / (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            let lambda = lambda_min + i as f64 * spacing;
            let system = ReplicatorSystem::new(lambda, k)?;
            Ok(BifurcationPoint {
                lambda,
                equilibria: find_equilibria(&system),
            })
        })
        .collect()
}

/// Draw `n` ratio samples from a two-peak population state.
///
/// Each draw comes from the high peak with probability `omega_coop`
/// (cooperators publish open access and sit in the high-ratio peak) and from
/// the low peak otherwise. Peaks are given as `(mean, standard deviation)`;
/// draws are clamped to [0,1]. Deterministic for a given seed.
pub fn synthesize_rho_samples(
    omega_coop: f64,
    low_peak: (f64, f64),
    high_peak: (f64, f64),
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, ReplicatorError> {
    check_omega(omega_coop)?;
    for (name, (_, sigma)) in [("low_peak", low_peak), ("high_peak", high_peak)] {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(ReplicatorError::InvalidParameter(format!(
                "{name} sigma must be > 0, got {sigma}"
            )));
        }
    }
    if n == 0 {
        return Err(ReplicatorError::InvalidParameter(
            "need at least one sample".into(),
        ));
    }
    let low = Normal::new(low_peak.0, low_peak.1)
        .map_err(|e| ReplicatorError::InvalidParameter(e.to_string()))?;
    let high = Normal::new(high_peak.0, high_peak.1)
        .map_err(|e| ReplicatorError::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let coin: f64 = rand::Rng::random(&mut rng);
        let draw = if coin < omega_coop {
            high.sample(&mut rng)
        } else {
            low.sample(&mut rng)
        };
        samples.push(draw.clamp(0.0, 1.0));
    }
    Ok(samples)
}

/// Write a trajectory as CSV with header `t,omega`.
pub fn write_trajectory_csv<W: Write>(
    trajectory: &Trajectory,
    mut w: W,
) -> Result<(), ReplicatorError> {
    writeln!(w, "t,omega")?;
    for p in &trajectory.samples {
        writeln!(w, "{},{}", p.t, p.omega)?;
    }
    Ok(())
}

/// Write a bifurcation scan as CSV with header `lambda,omega,stability`,
/// one row per equilibrium.
pub fn write_bifurcation_csv<W: Write>(
    points: &[BifurcationPoint],
    mut w: W,
) -> Result<(), ReplicatorError> {
    writeln!(w, "lambda,omega,stability")?;
    for point in points {
        for eq in &point.equilibria {
            writeln!(w, "{},{},{}", point.lambda, eq.omega, eq.stability)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn system(lambda: f64, k: f64) -> ReplicatorSystem {
        ReplicatorSystem::new(lambda, k).unwrap()
    }

    #[test]
    fn payoff_difference_cases() {
        let s = system(0.3, 1.0);
        assert_eq!(payoff_difference(0.0, &s).unwrap(), 0.3);
        assert_eq!(payoff_difference(0.3, &s).unwrap(), 0.0);
        let s = system(1.0, 1.0);
        assert_eq!(payoff_difference(1.0, &s).unwrap(), 0.0);
        assert!(payoff_difference(1.2, &s).is_err());
    }

    #[test]
    fn rhs_boundary_and_interior() {
        let s = system(0.3, 1.0);
        assert_eq!(replicator_rhs(0.0, &s).unwrap(), 0.0);
        assert_eq!(replicator_rhs(1.0, &s).unwrap(), 0.0);
        assert_relative_eq!(replicator_rhs(0.5, &s).unwrap(), -0.05, epsilon = 1e-15);
        assert!(replicator_rhs(-0.1, &s).is_err());
    }

    #[test]
    fn equilibria_supercritical() {
        // λ > k: the interior point leaves (0,1) and ω=1 is the only stable
        // equilibrium.
        let eqs = find_equilibria(&system(1.5, 1.0));
        assert_eq!(eqs.len(), 2);
        assert_eq!(eqs[0].omega, 0.0);
        assert_eq!(eqs[0].stability, Stability::Unstable);
        assert_relative_eq!(eqs[0].derivative, 1.5);
        assert_eq!(eqs[1].omega, 1.0);
        assert_eq!(eqs[1].stability, Stability::Stable);
        assert_relative_eq!(eqs[1].derivative, -0.5);
    }

    #[test]
    fn equilibria_subcritical_interior_stable() {
        let eqs = find_equilibria(&system(0.3, 1.0));
        assert_eq!(eqs.len(), 3);
        assert_eq!(eqs[0].stability, Stability::Unstable);
        assert_relative_eq!(eqs[0].derivative, 0.3);
        assert_relative_eq!(eqs[1].omega, 0.3);
        assert_eq!(eqs[1].stability, Stability::Stable);
        assert_relative_eq!(eqs[1].derivative, -0.21, epsilon = 1e-15);
        assert_eq!(eqs[2].stability, Stability::Unstable);
        assert_relative_eq!(eqs[2].derivative, 0.7);
    }

    #[test]
    fn equilibria_critical_double_root() {
        // λ = k: the interior point collides with ω=1.
        let eqs = find_equilibria(&system(1.0, 1.0));
        assert_eq!(eqs.len(), 2);
        assert_eq!(eqs[1].omega, 1.0);
        assert_eq!(eqs[1].derivative, 0.0);
        assert_eq!(eqs[1].stability, Stability::NonHyperbolic);
    }

    #[test]
    fn boundary_fixed_points_are_exact() {
        for omega0 in [0.0, 1.0] {
            let traj = integrate(omega0, &system(0.7, 1.3), 50.0, 0.05).unwrap();
            assert!(traj.samples.iter().all(|p| p.omega == omega0));
        }
    }

    #[test]
    fn interior_start_converges_to_mixed_equilibrium() {
        let traj = integrate(0.5, &system(0.3, 1.0), 200.0, 0.01).unwrap();
        assert!((traj.final_omega() - 0.3).abs() < 1e-3);
        // Halved step must agree.
        let traj2 = integrate(0.5, &system(0.3, 1.0), 200.0, 0.005).unwrap();
        assert!((traj.final_omega() - traj2.final_omega()).abs() < 1e-6);
    }

    #[test]
    fn trajectory_times_strictly_increase_and_stay_in_unit_interval() {
        let traj = integrate(0.9, &system(2.0, 0.5), 30.0, 0.07).unwrap();
        for pair in traj.samples.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
        assert!(traj
            .samples
            .iter()
            .all(|p| (0.0..=1.0).contains(&p.omega)));
        // last sample lands exactly on t_end
        assert_relative_eq!(traj.samples.last().unwrap().t, 30.0, epsilon = 1e-9);
    }

    #[test]
    fn scan_interior_presence_tracks_threshold() {
        let scan = bifurcation_scan(0.1, 2.0, 39, 1.0).unwrap();
        for point in &scan {
            let has_interior = point.equilibria.len() == 3;
            assert_eq!(has_interior, point.lambda < 1.0, "λ={}", point.lambda);
        }
        let scan = bifurcation_scan(1.1, 2.0, 10, 1.0).unwrap();
        assert!(scan.iter().all(|p| p.equilibria.len() == 2));
    }

    #[test]
    fn scan_with_k_two_transitions_at_two() {
        let scan = bifurcation_scan(1.5, 2.5, 11, 2.0).unwrap();
        for point in &scan {
            assert_eq!(point.equilibria.len() == 3, point.lambda < 2.0);
        }
    }

    #[test]
    fn synthesis_extremes() {
        let low = synthesize_rho_samples(0.0, (0.1, 0.01), (0.8, 0.01), 500, 7).unwrap();
        assert!(low.iter().all(|&x| x < 0.4));
        let high = synthesize_rho_samples(1.0, (0.1, 0.01), (0.8, 0.01), 500, 7).unwrap();
        assert!(high.iter().all(|&x| x > 0.4));
    }

    #[test]
    fn synthesis_is_seed_deterministic() {
        let a = synthesize_rho_samples(0.4, (0.1, 0.03), (0.3, 0.05), 100, 11).unwrap();
        let b = synthesize_rho_samples(0.4, (0.1, 0.03), (0.3, 0.05), 100, 11).unwrap();
        assert_eq!(a, b);
        let c = synthesize_rho_samples(0.4, (0.1, 0.03), (0.3, 0.05), 100, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn csv_exports() {
        let traj = integrate(0.5, &system(0.3, 1.0), 0.02, 0.01).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,omega\n0,0.5\n"));

        let scan = bifurcation_scan(0.5, 1.5, 2, 1.0).unwrap();
        let mut buf = Vec::new();
        write_bifurcation_csv(&scan, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,omega,stability\n"));
        assert!(text.contains("0.5,0.5,stable"));
    }
}
