//! Random-walk simulation on a generated multigraph: cover times, hitting
//! times, exact return profiles, and no-visit tail estimation.
//!
//! A step from `y` picks a uniform index into the multiplicity-expanded
//! out-slice, which realizes the kernel m(y,x)/d_y+ with one draw. Trials
//! run in parallel on per-trial ChaCha8 streams, so results are identical
//! for any worker count.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dcm::MultiDigraph;
use crate::rng::{stream_rng, SALT_WALK};
use crate::stationary::Transition;
use crate::util::{ksum, linear_fit, mean_var_ci, Kahan};

/// Default trial cap: 50 n log^2 n, generous against the n log^gamma n scale.
pub fn default_step_cap(n: usize) -> u64 {
    let ln = (n as f64).ln();
    (50.0 * n as f64 * ln * ln).ceil() as u64
}

/// Monte Carlo cover-time record for one starting vertex.
#[derive(Clone, Debug, Serialize)]
pub struct WalkStats {
    pub start: u32,
    pub seed: u64,
    pub step_cap: u64,
    /// Per-trial cover times; None marks a censored trial (cap reached).
    pub cover_times: Vec<Option<u64>>,
    pub censored: u32,
    /// Statistics over uncensored trials.
    pub mean: f64,
    pub variance: f64,
    pub ci95: f64,
}

impl WalkStats {
    pub fn uncensored(&self) -> impl Iterator<Item = u64> + '_ {
        self.cover_times.iter().filter_map(|t| *t)
    }

    /// CSV export: trial,start,tau_cov,censored.
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "trial,start,tau_cov,censored")?;
        for (i, t) in self.cover_times.iter().enumerate() {
            match t {
                Some(tau) => writeln!(w, "{i},{},{tau},0", self.start)?,
                None => writeln!(w, "{i},{},,1", self.start)?,
            }
        }
        Ok(())
    }
}

fn one_cover_trial(g: &MultiDigraph, start: u32, seed: u64, stream: u64, cap: u64) -> Option<u64> {
    let n = g.n();
    let mut rng = stream_rng(seed, SALT_WALK, stream);
    let mut visited = vec![0u64; n.div_ceil(64)];
    let mut remaining = n - 1;
    visited[start as usize / 64] |= 1 << (start as usize % 64);
    let mut x = start;
    let mut t = 0u64;
    while remaining > 0 {
        if t == cap {
            return None;
        }
        let out = g.out(x);
        x = out[rng.random_range(0..out.len())];
        t += 1;
        let (w, b) = (x as usize / 64, x as usize % 64);
        if visited[w] & (1 << b) == 0 {
            visited[w] |= 1 << b;
            remaining -= 1;
        }
    }
    debug_assert!(t >= n as u64 - 1);
    Some(t)
}

fn cover_with_streams(
    g: &MultiDigraph,
    start: u32,
    trials: u32,
    seed: u64,
    step_cap: u64,
    stream_base: u64,
) -> WalkStats {
    let cover_times: Vec<Option<u64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| one_cover_trial(g, start, seed, stream_base + i, step_cap))
        .collect();
    let censored = cover_times.iter().filter(|t| t.is_none()).count() as u32;
    let xs: Vec<f64> = cover_times.iter().flatten().map(|&t| t as f64).collect();
    let (mean, variance, ci95) = mean_var_ci(&xs);
    WalkStats {
        start,
        seed,
        step_cap,
        cover_times,
        censored,
        mean,
        variance,
        ci95,
    }
}

/// Cover times from `start`: each trial walks until every vertex has been
/// visited or the cap censors it. Caller asserts strong connectivity.
pub fn simulate_cover(
    g: &MultiDigraph,
    start: u32,
    trials: u32,
    seed: u64,
    step_cap: u64,
) -> WalkStats {
    cover_with_streams(g, start, trials, seed, step_cap, 0)
}

/// Cover-time estimate maximized over starting points.
#[derive(Clone, Debug, Serialize)]
pub struct TcovEstimate {
    pub per_start: Vec<WalkStats>,
    /// max over starts of the mean cover time.
    pub tcov_hat: f64,
    pub censored_total: u32,
}

/// Mean cover time per start, maximized. Each start gets its own disjoint
/// block of trial streams.
pub fn estimate_tcov(
    g: &MultiDigraph,
    starts: &[u32],
    trials: u32,
    seed: u64,
    step_cap: u64,
) -> TcovEstimate {
    let per_start: Vec<WalkStats> = starts
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            cover_with_streams(g, s, trials, seed, step_cap, i as u64 * trials as u64)
        })
        .collect();
    let tcov_hat = per_start.iter().map(|w| w.mean).fold(f64::NEG_INFINITY, f64::max);
    let censored_total = per_start.iter().map(|w| w.censored).sum();
    TcovEstimate {
        per_start,
        tcov_hat,
        censored_total,
    }
}

/// Monte Carlo hitting-time summary.
#[derive(Clone, Debug, Serialize)]
pub struct HittingSummary {
    pub start: u32,
    pub target: u32,
    pub trials: u32,
    pub censored: u32,
    pub samples: Vec<Option<u64>>,
    pub mean: f64,
    pub variance: f64,
    pub ci95: f64,
}

/// First passage time H = inf{t >= 0 : X_t = target} from `start`; zero when
/// they coincide.
pub fn hitting_time(
    g: &MultiDigraph,
    start: u32,
    target: u32,
    trials: u32,
    seed: u64,
    step_cap: u64,
) -> HittingSummary {
    let samples: Vec<Option<u64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            if start == target {
                return Some(0);
            }
            let mut rng = stream_rng(seed, SALT_WALK, i);
            let mut x = start;
            let mut t = 0u64;
            loop {
                if t == step_cap {
                    return None;
                }
                let out = g.out(x);
                x = out[rng.random_range(0..out.len())];
                t += 1;
                if x == target {
                    return Some(t);
                }
            }
        })
        .collect();
    let censored = samples.iter().filter(|t| t.is_none()).count() as u32;
    let xs: Vec<f64> = samples.iter().flatten().map(|&t| t as f64).collect();
    let (mean, variance, ci95) = mean_var_ci(&xs);
    HittingSummary {
        start,
        target,
        trials,
        censored,
        samples,
        mean,
        variance,
        ci95,
    }
}

/// Exact per-step return probabilities P^t(y,y) for t = 0..=horizon, and
/// their sum r1 (the expected number of visits to y in [0, horizon] started
/// at y).
#[derive(Clone, Debug, Serialize)]
pub struct ReturnProfile {
    pub y: u32,
    pub horizon: usize,
    pub per_step: Vec<f64>,
    pub r1: f64,
}

impl ReturnProfile {
    /// CSV export: t,p_return.
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "t,p_return")?;
        for (t, p) in self.per_step.iter().enumerate() {
            writeln!(w, "{t},{p:.16e}")?;
        }
        Ok(())
    }
}

/// Computed by sparse operator powers, not Monte Carlo.
pub fn return_profile(g: &MultiDigraph, y: u32, horizon: usize) -> ReturnProfile {
    assert!(horizon <= 10_000, "horizon costs one sparse step each");
    let op = Transition::new(g);
    let mut mu = op.delta(y);
    let mut per_step = Vec::with_capacity(horizon + 1);
    per_step.push(1.0);
    for _ in 0..horizon {
        mu = op.step_row(&mu);
        per_step.push(mu[y as usize]);
    }
    ReturnProfile {
        y,
        horizon,
        r1: ksum(&per_step),
        per_step,
    }
}

/// Empirical tail of the no-visit event: the walk (uniform random start)
/// avoids `y` during the window [T, t].
#[derive(Clone, Debug, Serialize)]
pub struct NoVisitTail {
    pub y: u32,
    pub t_start: u64,
    /// Grid points kept after truncation.
    pub t_grid: Vec<u64>,
    /// Empirical probability of no visit in [T, t] per grid point.
    pub survival: Vec<f64>,
    /// True when low-survivor grid points were dropped.
    pub truncated: bool,
    /// Fitted exponential decay rate of the survival curve.
    pub p_hat: f64,
    pub fit_r2: f64,
    /// r1 = expected returns within [0, T] from y.
    pub r1: f64,
    /// pi(y) / r1 when pi(y) was supplied.
    pub expected_rate: Option<f64>,
}

const MIN_SURVIVORS: u64 = 30;

/// Estimate P(no visit to y in [T, t]) on a time grid and fit the log-linear
/// decay rate; compares against pi(y) / r1 when pi(y) is given. At t = T the
/// event reduces to the single constraint X_T != y.
pub fn no_visit_tail(
    g: &MultiDigraph,
    y: u32,
    t_start: u64,
    t_grid: &[u64],
    trials: u32,
    seed: u64,
    pi_y: Option<f64>,
) -> NoVisitTail {
    assert!(!t_grid.is_empty());
    assert!(t_grid.windows(2).all(|w| w[0] < w[1]), "grid must increase");
    assert!(t_grid[0] >= t_start, "grid starts at T");
    let t_max = *t_grid.last().unwrap();

    // First visit to y at or after T (censored at t_max).
    let first_visits: Vec<u64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, SALT_WALK, i);
            let mut x = rng.random_range(0..g.n() as u32);
            let mut t = 0u64;
            loop {
                if t >= t_start && x == y {
                    return t;
                }
                if t == t_max {
                    return u64::MAX;
                }
                let out = g.out(x);
                x = out[rng.random_range(0..out.len())];
                t += 1;
            }
        })
        .collect();

    let mut kept = Vec::new();
    let mut survival = Vec::new();
    let mut truncated = false;
    for &t in t_grid {
        let alive = first_visits.iter().filter(|&&v| v > t).count() as u64;
        if alive < MIN_SURVIVORS {
            truncated = true;
            break;
        }
        kept.push(t);
        survival.push(alive as f64 / trials as f64);
    }

    let (p_hat, fit_r2) = if kept.len() >= 2 {
        let xs: Vec<f64> = kept.iter().map(|&t| t as f64).collect();
        let ys: Vec<f64> = survival.iter().map(|&s| s.ln()).collect();
        let (_, slope, r2) = linear_fit(&xs, &ys);
        (-slope, r2)
    } else {
        (f64::NAN, f64::NAN)
    };

    let r1 = return_profile(g, y, t_start as usize).r1;
    NoVisitTail {
        y,
        t_start,
        t_grid: kept,
        survival,
        truncated,
        p_hat,
        fit_r2,
        r1,
        expected_rate: pi_y.map(|p| p / r1),
    }
}

/// Spot-check that simulated steps only use existing edges.
pub fn trajectory_is_valid(g: &MultiDigraph, start: u32, steps: u64, seed: u64) -> bool {
    let mut rng = stream_rng(seed, SALT_WALK, 0);
    let mut x = start;
    for _ in 0..steps {
        let out = g.out(x);
        let next = out[rng.random_range(0..out.len())];
        if g.multiplicity(x, next) == 0 {
            return false;
        }
        x = next;
    }
    true
}

/// Sum of P^t(y,y) via dense matrix powers; slow oracle for small n.
pub fn dense_return_sum(g: &MultiDigraph, y: u32, horizon: usize) -> f64 {
    let n = g.n();
    let mut p = vec![vec![0.0f64; n]; n];
    for v in 0..n as u32 {
        let w = 1.0 / g.out_degree(v) as f64;
        for &x in g.out(v) {
            p[v as usize][x as usize] += w;
        }
    }
    // row vector e_y * P^t, accumulated.
    let mut row = vec![0.0f64; n];
    row[y as usize] = 1.0;
    let mut acc = Kahan::default();
    acc.add(1.0);
    for _ in 0..horizon {
        let mut next = vec![0.0f64; n];
        for (i, &ri) in row.iter().enumerate() {
            if ri != 0.0 {
                for (j, pij) in p[i].iter().enumerate() {
                    next[j] += ri * pij;
                }
            }
        }
        row = next;
        acc.add(row[y as usize]);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcm::generate;
    use crate::degseq::{materialize, BalanceMode, DegreeModel};
    use crate::digraph::fixtures::{complete_digraph, directed_cycle};
    use crate::oracle;
    use crate::stationary::direct_solve;

    fn two_three(n: usize, seed: u64) -> MultiDigraph {
        let seq = materialize(&DegreeModel::two_three(), n, BalanceMode::Reject)
            .unwrap()
            .sequence;
        generate(&seq, seed)
    }

    #[test]
    fn cycle_cover_is_deterministic() {
        let g = directed_cycle(40);
        let stats = simulate_cover(&g, 3, 20, 1, default_step_cap(40));
        assert_eq!(stats.censored, 0);
        assert!(stats.uncensored().all(|t| t == 39));
        assert_eq!(stats.variance, 0.0);
    }

    #[test]
    fn complete_k3_cover_matches_absorption_oracle() {
        let g = complete_digraph(3);
        let exact = oracle::expected_cover_time(&g, 0);
        assert!((exact - 3.0).abs() < 1e-12, "exact {exact}");
        let stats = simulate_cover(&g, 0, 4000, 9, 10_000);
        assert_eq!(stats.censored, 0);
        let sd = (stats.variance / 4000.0).sqrt();
        assert!((stats.mean - exact).abs() < 4.0 * sd, "mean {}", stats.mean);
    }

    #[test]
    fn cover_lower_bound_holds() {
        let g = two_three(256, 3);
        let stats = simulate_cover(&g, 0, 50, 4, default_step_cap(256));
        for t in stats.uncensored() {
            assert!(t >= 255);
        }
    }

    #[test]
    fn censoring_is_flagged() {
        let g = two_three(256, 3);
        let stats = simulate_cover(&g, 0, 10, 4, 100);
        assert_eq!(stats.censored, 10);
        assert!(stats.cover_times.iter().all(|t| t.is_none()));
    }

    #[test]
    fn tcov_on_cycle_is_start_free() {
        let g = directed_cycle(30);
        let est = estimate_tcov(&g, &[0, 7, 21], 5, 2, 10_000);
        for w in &est.per_start {
            assert_eq!(w.mean, 29.0);
        }
        assert_eq!(est.tcov_hat, 29.0);
    }

    #[test]
    fn tcov_pocket_fixture_depends_on_start() {
        // A 12-cycle with a pocket vertex reachable only through vertex 0:
        // starts inside the pocket finish sooner on average than starts just
        // past the branch.
        let mut edges: Vec<(u32, u32)> = (0..12u32).map(|v| (v, (v + 1) % 12)).collect();
        edges.push((0, 12));
        edges.push((12, 1));
        let g = MultiDigraph::from_edges(13, &edges, 0);
        let starts: Vec<u32> = vec![1, 5, 12];
        let est = estimate_tcov(&g, &starts, 400, 11, 1_000_000);
        assert_eq!(est.censored_total, 0);
        let means: Vec<f64> = est.per_start.iter().map(|w| w.mean).collect();
        let avg = means.iter().sum::<f64>() / means.len() as f64;
        assert!(est.tcov_hat > avg, "max {} vs avg {avg}", est.tcov_hat);
    }

    #[test]
    fn hitting_fixtures() {
        let g = directed_cycle(20);
        let h = hitting_time(&g, 2, 9, 10, 5, 1000);
        assert_eq!(h.mean, 7.0);
        assert_eq!(h.variance, 0.0);
        let same = hitting_time(&g, 4, 4, 10, 5, 1000);
        assert_eq!(same.mean, 0.0);
    }

    #[test]
    fn hitting_matches_absorption_oracle() {
        // 20 fixtures up to n = 200, each within 4 sigma of the dense solve.
        for i in 0..20u64 {
            let n = (40 + (i as usize * 29) % 161) & !1;
            let g = two_three(n, 15 + i);
            let target = (i * 13 % n as u64) as u32;
            let start = (target + 7) % g.n() as u32;
            let exact = oracle::expected_hitting_times(&g, target);
            let mc = hitting_time(&g, start, target, 600, 8 + i, 2_000_000);
            assert_eq!(mc.censored, 0);
            let sd = (mc.variance / 600.0).sqrt();
            assert!(
                (mc.mean - exact[start as usize]).abs() <= 4.0 * sd,
                "fixture {i}: mc {} vs exact {}",
                mc.mean,
                exact[start as usize]
            );
        }
    }

    #[test]
    fn return_profile_fixtures() {
        // No return is possible on a cycle within T < n.
        let g = directed_cycle(50);
        let r = return_profile(&g, 10, 30);
        assert_eq!(r.r1, 1.0);
        assert!(r.per_step[1..].iter().all(|&p| p == 0.0));
        // A doubled self-loop returns every step.
        let loops = MultiDigraph::from_edges(1, &[(0, 0), (0, 0)], 0);
        let r = return_profile(&loops, 0, 25);
        assert_eq!(r.r1, 26.0);
    }

    #[test]
    fn return_profile_matches_dense_powers() {
        let g = two_three(80, 19);
        for y in [0u32, 11, 42] {
            let sparse = return_profile(&g, y, 60).r1;
            let dense = dense_return_sum(&g, y, 60);
            assert!((sparse - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn no_visit_boundary_and_rate() {
        let g = two_three(200, 23);
        let pi = direct_solve(&g).unwrap();
        let y = 7u32;
        let t_start = 40u64;
        let grid: Vec<u64> = (0..30).map(|k| t_start + k * 400).collect();
        let tail = no_visit_tail(&g, y, t_start, &grid, 6000, 31, Some(pi.pi[y as usize]));
        // At t = T the constraint is the single event X_T != y.
        assert!(tail.survival[0] > 0.9);
        assert!(tail.survival[0] <= 1.0);
        // Quasi-stationary decay rate from the absorption oracle.
        let rho = oracle::quasi_stationary_rate(&g, y, 4000);
        let exact_rate = -rho.ln();
        assert!(
            (tail.p_hat - exact_rate).abs() <= 0.25 * exact_rate,
            "fitted {} vs exact {}",
            tail.p_hat,
            exact_rate
        );
        assert!(tail.expected_rate.is_some());
    }

    #[test]
    fn no_visit_rate_tracks_pi_at_scale() {
        use crate::digraph::{is_ltl, theta_depth};
        use crate::stationary::{solve, SolveOptions};
        let n = 10_000usize;
        let g = two_three(n, 1);
        let pi = solve(&g, &SolveOptions::default()).unwrap();
        let theta = theta_depth(n);
        let y = (0..n as u32).find(|&v| is_ltl(&g, v, theta)).unwrap();
        let t_start = 200u64;
        let grid: Vec<u64> = (0..10).map(|k| t_start + k * 3000).collect();
        let tail = no_visit_tail(&g, y, t_start, &grid, 4000, 3, Some(pi.pi[y as usize]));
        let ratio = tail.p_hat / pi.pi[y as usize];
        assert!(
            (0.8..=1.25).contains(&ratio),
            "p_hat/pi = {ratio:.3} (r1 = {:.4})",
            tail.r1
        );
    }

    #[test]
    fn tcov_is_homogeneous_across_starts() {
        let g = two_three(512, 6);
        let starts = [0u32, 100, 200, 300, 400];
        let est = estimate_tcov(&g, &starts, 50, 2, default_step_cap(512));
        assert_eq!(est.censored_total, 0);
        let means: Vec<f64> = est.per_start.iter().map(|w| w.mean).collect();
        let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo <= 1.5, "start means spread {:.3}", hi / lo);
    }

    #[test]
    fn trajectories_only_use_edges() {
        let g = two_three(500, 27);
        assert!(trajectory_is_valid(&g, 0, 5000, 99));
    }

    #[test]
    fn walk_streams_are_deterministic() {
        let g = two_three(128, 1);
        let a = simulate_cover(&g, 5, 8, 77, default_step_cap(128));
        let b = simulate_cover(&g, 5, 8, 77, default_step_cap(128));
        assert_eq!(a.cover_times, b.cover_times);
    }

    #[test]
    fn cover_csv_export() {
        let g = directed_cycle(6);
        let stats = simulate_cover(&g, 0, 3, 1, 100);
        let mut buf = Vec::new();
        stats.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial,start,tau_cov,censored\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
