//! Maximization dynamics: simultaneous projected online gradient ascent
//! (the no-regret play whose time average lands in an approximate CCE),
//! the offline Frank-Wolfe baseline, and two reference oracles (random
//! sampling and exhaustive grid search) for calibrating solution quality.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::functions::SocialFunction;
use crate::games::{ContinuousGame, EmpiricalDistribution};
use crate::vectorspace::{BudgetPolytope, JointProfile, Vector};
use crate::{Error, Real, Result};

/// Number of hit-and-run samples used to estimate per-player gradient
/// magnitudes for the online step size.
pub const GRADIENT_ESTIMATE_SAMPLES: usize = 100;

/// Hard cap on exhaustive grid evaluations.
pub const GRID_LIMIT: u64 = 10_000_000;

/// Step-size schedule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Frank-Wolfe convex-combination steps of size `1/K`.
    FwOneOverK,
    /// Online gradient ascent with constant step `D_i / (G_i sqrt(K))`.
    OgaOneOverSqrtK,
}

/// Run parameters shared by the dynamics.
#[derive(Debug, Clone)]
pub struct RunConfig<T> {
    pub iterations: usize,
    pub seed: u64,
    pub step_rule: StepRule,
    /// Multiplier on the schedule's base step; 1 reproduces the reference runs.
    pub step_scale: T,
}

impl<T: Real> RunConfig<T> {
    pub fn new(iterations: usize, seed: u64, step_rule: StepRule) -> Self {
        RunConfig { iterations, seed, step_rule, step_scale: T::one() }
    }
}

/// Per-iteration record of a dynamics run.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    profiles: Vec<JointProfile<T>>,
    gammas: Vec<T>,
    payoffs: Vec<Vec<T>>,
    /// Cumulative wall time in milliseconds at the end of each iteration.
    times_ms: Vec<f64>,
}

impl<T: Real> Trace<T> {
    fn with_capacity(k: usize) -> Self {
        Trace {
            profiles: Vec::with_capacity(k),
            gammas: Vec::with_capacity(k),
            payoffs: Vec::with_capacity(k),
            times_ms: Vec::with_capacity(k),
        }
    }

    fn push(&mut self, profile: JointProfile<T>, gamma: T, payoffs: Vec<T>, elapsed_ms: f64) {
        self.profiles.push(profile);
        self.gammas.push(gamma);
        self.payoffs.push(payoffs);
        self.times_ms.push(elapsed_ms);
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[JointProfile<T>] {
        &self.profiles
    }

    pub fn gammas(&self) -> &[T] {
        &self.gammas
    }

    pub fn payoffs(&self) -> &[Vec<T>] {
        &self.payoffs
    }

    pub fn times_ms(&self) -> &[f64] {
        &self.times_ms
    }

    pub fn final_profile(&self) -> &JointProfile<T> {
        self.profiles.last().expect("trace is never empty")
    }

    pub fn final_gamma(&self) -> T {
        *self.gammas.last().expect("trace is never empty")
    }

    pub fn mean_gamma(&self) -> T {
        let sum = self.gammas.iter().fold(T::zero(), |a, &b| a + b);
        sum / T::of(self.len() as f64)
    }

    /// Coordinate-wise average of the iterates.
    pub fn average_profile(&self) -> JointProfile<T> {
        let mut flat = Vector::zeros(self.profiles[0].flat().dim());
        for p in &self.profiles {
            flat = flat.add(&p.flat());
        }
        let scaled = flat.scale(T::one() / T::of(self.len() as f64));
        JointProfile::from_flat(&scaled, self.profiles[0].players()).expect("dims consistent")
    }

    pub fn total_time_ms(&self) -> f64 {
        self.times_ms.last().copied().unwrap_or(0.0)
    }

    /// CSV dump: `iter,gamma,payoff_1..payoff_N,time_ms`, one row per iteration.
    pub fn to_csv(&self) -> String {
        let players = self.payoffs.first().map_or(0, |p| p.len());
        let mut out = String::from("iter,gamma");
        for i in 1..=players {
            out.push_str(&format!(",payoff_{i}"));
        }
        out.push_str(",time_ms\n");
        for k in 0..self.len() {
            out.push_str(&format!("{},{}", k + 1, self.gammas[k].to_f64_lossy()));
            for &p in &self.payoffs[k] {
                out.push_str(&format!(",{}", p.to_f64_lossy()));
            }
            out.push_str(&format!(",{}\n", self.times_ms[k]));
        }
        out
    }
}

/// Uniform empirical distribution over the trace iterates.
pub fn to_distribution<T: Real>(trace: &Trace<T>) -> Result<EmpiricalDistribution<T>> {
    EmpiricalDistribution::uniform(trace.profiles().to_vec())
}

fn record_iteration<T: Real>(
    game: &ContinuousGame<T>,
    trace: &mut Trace<T>,
    profile: JointProfile<T>,
    start: &Instant,
) {
    let gamma = game.social().eval(&profile.flat());
    let payoffs = (0..game.players()).map(|i| game.payoff(i, &profile)).collect();
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    trace.push(profile, gamma, payoffs, elapsed);
}

/// Simultaneous projected online gradient ascent on the players' own
/// payoffs. All players start at 0 and update together:
/// `s_i <- project(s_i + step_i * grad_i pi_i(s))` with the constant step
/// `step_scale * D_i / (G_i sqrt(K))`, where `D_i` is the norm of player
/// `i`'s upper bound and `G_i` the largest own-gradient norm observed on
/// [`GRADIENT_ESTIMATE_SAMPLES`] hit-and-run profiles.
///
/// Requires the game to carry an own-block payoff gradient.
pub fn d_no_regret<T: Real>(
    game: &ContinuousGame<T>,
    config: &RunConfig<T>,
) -> Result<Trace<T>> {
    if !game.has_own_gradient() {
        return Err(Error::UnsupportedGame);
    }
    if config.iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be positive".into()));
    }
    let n = game.players();
    let sqrt_k = T::of(config.iterations as f64).sqrt();
    let probe = game.sample_profiles(GRADIENT_ESTIMATE_SAMPLES, config.seed);
    let mut steps = Vec::with_capacity(n);
    for i in 0..n {
        let diameter = game.set(i).upper().norm();
        let mut g_max = T::zero();
        for s in &probe {
            g_max = g_max.max(game.own_gradient(i, s)?.norm());
        }
        let g_max = g_max.max(T::of(1e-12));
        steps.push(config.step_scale * diameter / (g_max * sqrt_k));
    }

    let start = Instant::now();
    let mut trace = Trace::with_capacity(config.iterations);
    let mut current = JointProfile::zeros(n, game.block_dim());
    for _ in 0..config.iterations {
        let mut next_blocks = Vec::with_capacity(n);
        for i in 0..n {
            let g = game.own_gradient(i, &current)?;
            let moved = current.block(i).add(&g.scale(steps[i]));
            next_blocks.push(game.set(i).project(&moved)?);
        }
        current = JointProfile::new(next_blocks);
        record_iteration(game, &mut trace, current.clone(), &start);
    }
    Ok(trace)
}

/// Offline Frank-Wolfe on the social function: starting from 0, each
/// iteration adds `1/K` of the per-block linear maximizer of the social
/// gradient (negative coordinates clamped to zero before the oracle call).
/// The final iterate is a convex combination of feasible points.
pub fn frank_wolfe<T: Real>(
    game: &ContinuousGame<T>,
    config: &RunConfig<T>,
) -> Result<Trace<T>> {
    if config.iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be positive".into()));
    }
    let n = game.players();
    let d = game.block_dim();
    let step = T::one() / T::of(config.iterations as f64);
    let start = Instant::now();
    let mut trace = Trace::with_capacity(config.iterations);
    let mut current = JointProfile::zeros(n, d);
    for _ in 0..config.iterations {
        let g = game.social().grad(&current.flat());
        let mut blocks = Vec::with_capacity(n);
        for i in 0..n {
            let mut block_g = Vector::zeros(d);
            for r in 0..d {
                block_g[r] = g[i * d + r].max(T::zero());
            }
            let v = game.set(i).lmo(&block_g)?;
            blocks.push(current.block(i).add(&v.scale(step)));
        }
        current = JointProfile::new(blocks);
        record_iteration(game, &mut trace, current.clone(), &start);
    }
    Ok(trace)
}

/// Best of `n` uniform hit-and-run profiles under the social function.
pub fn random_baseline<T: Real>(
    gamma: &SocialFunction<T>,
    sets: &[BudgetPolytope<T>],
    n: usize,
    seed: u64,
) -> Result<(JointProfile<T>, T)> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_player: Vec<Vec<Vector<T>>> = Vec::with_capacity(sets.len());
    for p in sets {
        per_player.push(p.hit_and_run_with(n, &mut rng).points);
    }
    let mut best: Option<(JointProfile<T>, T)> = None;
    for k in 0..n {
        let profile =
            JointProfile::new(per_player.iter().map(|pts| pts[k].clone()).collect());
        let value = gamma.eval(&profile.flat());
        let better = best.as_ref().map_or(true, |(_, b)| value > *b);
        if better {
            best = Some((profile, value));
        }
    }
    Ok(best.expect("n > 0"))
}

/// Exhaustive search over the per-coordinate grid with `resolution` levels
/// per axis in `[0, ubar]`, restricted to feasible points. Errors when the
/// grid would exceed [`GRID_LIMIT`] evaluations.
pub fn grid_max<T: Real>(
    gamma: &SocialFunction<T>,
    sets: &[BudgetPolytope<T>],
    resolution: usize,
) -> Result<(JointProfile<T>, T)> {
    if resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    let dims: usize = sets.iter().map(|p| p.dim()).sum();
    let mut total: u64 = 1;
    for _ in 0..dims {
        total = total
            .checked_mul(resolution as u64)
            .ok_or(Error::GridTooLarge(u64::MAX))?;
        if total > GRID_LIMIT {
            return Err(Error::GridTooLarge(total));
        }
    }

    // Per-flat-coordinate grid levels and the owning polytope.
    let mut levels: Vec<Vec<T>> = Vec::with_capacity(dims);
    let mut owner: Vec<usize> = Vec::with_capacity(dims);
    for (i, p) in sets.iter().enumerate() {
        for r in 0..p.dim() {
            let hi = p.upper()[r];
            let vals = (0..resolution)
                .map(|k| hi * T::of(k as f64) / T::of((resolution - 1) as f64))
                .collect();
            levels.push(vals);
            owner.push(i);
        }
    }

    let feas_tol = T::of(crate::vectorspace::PROJECT_TOL);
    let mut idx = vec![0usize; dims];
    let mut best: Option<(JointProfile<T>, T)> = None;
    loop {
        let flat =
            Vector::new((0..dims).map(|c| levels[c][idx[c]]).collect());
        let profile = split_profile(&flat, sets);
        let feasible = profile
            .blocks()
            .iter()
            .zip(sets)
            .all(|(b, p)| p.contains(b, feas_tol));
        if feasible {
            let value = gamma.eval(&flat);
            // Ties resolve to the lexicographically largest grid point, so
            // symmetric objectives report the upper corner of a flat maximum.
            let better = best.as_ref().map_or(true, |(_, b)| value >= *b);
            if better {
                best = Some((profile, value));
            }
        }
        let _ = owner; // per-coordinate ownership folded into split_profile
        // Odometer increment.
        let mut c = 0;
        loop {
            if c == dims {
                return best.ok_or_else(|| {
                    Error::InvalidParameter("no feasible grid point".into())
                });
            }
            idx[c] += 1;
            if idx[c] < resolution {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

fn split_profile<T: Real>(flat: &Vector<T>, sets: &[BudgetPolytope<T>]) -> JointProfile<T> {
    let mut blocks = Vec::with_capacity(sets.len());
    let mut off = 0;
    for p in sets {
        let d = p.dim();
        blocks.push(Vector::new(flat.coords()[off..off + d].to_vec()));
        off += d;
    }
    JointProfile::new(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::marginal_game;
    use crate::instances::random_sensor;

    fn tiny_game() -> ContinuousGame<f64> {
        // gamma(x, y) = x + y - xy on [0,1]^2: monotone DR, maximum 1 at (1,1).
        let f = SocialFunction::with_gradient(
            2,
            |x: &Vector<f64>| x[0] + x[1] - x[0] * x[1],
            |x: &Vector<f64>| Vector::new(vec![1.0 - x[1], 1.0 - x[0]]),
        );
        let sets = vec![BudgetPolytope::unit_box(1, 1.0), BudgetPolytope::unit_box(1, 1.0)];
        marginal_game(f, sets).unwrap()
    }

    #[test]
    fn frank_wolfe_reaches_optimum_tiny() {
        let game = tiny_game();
        let trace = frank_wolfe(&game, &RunConfig::new(50, 0, StepRule::FwOneOverK)).unwrap();
        assert!((trace.final_gamma() - 1.0).abs() < 1e-9);
        let flat = trace.final_profile().flat();
        assert!((flat[0] - 1.0).abs() < 1e-9 && (flat[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn frank_wolfe_gamma_monotone() {
        let sc = random_sensor::<f64>(3, 4, 0.2, 5).unwrap();
        let game = sc.game();
        let trace = frank_wolfe(&game, &RunConfig::new(40, 0, StepRule::FwOneOverK)).unwrap();
        for w in trace.gammas().windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn frank_wolfe_iterates_feasible() {
        let sc = random_sensor::<f64>(2, 3, 0.3, 8).unwrap();
        let game = sc.game();
        let trace = frank_wolfe(&game, &RunConfig::new(25, 0, StepRule::FwOneOverK)).unwrap();
        for p in trace.profiles() {
            for (b, set) in p.blocks().iter().zip(game.sets()) {
                assert!(set.contains(b, 1e-9));
            }
        }
    }

    #[test]
    fn d_no_regret_improves_and_stays_feasible() {
        let sc = random_sensor::<f64>(3, 4, 0.2, 17).unwrap();
        let game = sc.game();
        let trace =
            d_no_regret(&game, &RunConfig::new(200, 1, StepRule::OgaOneOverSqrtK)).unwrap();
        for p in trace.profiles() {
            for (b, set) in p.blocks().iter().zip(game.sets()) {
                assert!(set.contains(b, 1e-9));
            }
        }
        let early = trace.gammas()[..10].iter().sum::<f64>() / 10.0;
        let late = trace.gammas()[190..].iter().sum::<f64>() / 10.0;
        assert!(late > early, "late {late} vs early {early}");
    }

    #[test]
    fn d_no_regret_deterministic() {
        let sc = random_sensor::<f64>(2, 3, 0.2, 23).unwrap();
        let game = sc.game();
        let cfg = RunConfig::new(50, 9, StepRule::OgaOneOverSqrtK);
        let a = d_no_regret(&game, &cfg).unwrap();
        let b = d_no_regret(&game, &cfg).unwrap();
        assert_eq!(a.gammas(), b.gammas());
        for (p, q) in a.profiles().iter().zip(b.profiles()) {
            assert_eq!(p.flat().coords(), q.flat().coords());
        }
    }

    #[test]
    fn d_no_regret_requires_gradient() {
        let f = SocialFunction::new(2, |x: &Vector<f64>| x[0] + x[1]);
        let game = ContinuousGame::new(
            vec![BudgetPolytope::unit_box(1, 1.0), BudgetPolytope::unit_box(1, 1.0)],
            f,
            |_, s: &JointProfile<f64>| s.block(0)[0],
        )
        .unwrap();
        assert!(matches!(
            d_no_regret(&game, &RunConfig::new(10, 0, StepRule::OgaOneOverSqrtK)),
            Err(Error::UnsupportedGame)
        ));
    }

    #[test]
    fn random_baseline_deterministic_and_feasible() {
        let sc = random_sensor::<f64>(2, 3, 0.2, 31).unwrap();
        let f = sc.social_function();
        let (p1, v1) = random_baseline(&f, &sc.sets, 200, 4).unwrap();
        let (p2, v2) = random_baseline(&f, &sc.sets, 200, 4).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(p1.flat().coords(), p2.flat().coords());
        for (b, set) in p1.blocks().iter().zip(&sc.sets) {
            assert!(set.contains(b, 1e-9));
        }
    }

    #[test]
    fn grid_max_tiny_game() {
        let game = tiny_game();
        // The maximum value 1 is attained on the whole edge x = 1 (or y = 1);
        // ties resolve to the upper corner.
        let (p, v) = grid_max(game.social(), game.sets(), 11).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let flat = p.flat();
        assert!((flat[0] - 1.0).abs() < 1e-12 && (flat[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_max_respects_budget() {
        // Budget 1 with cost (1,1): feasible grid points satisfy x + y <= 1.
        let f = SocialFunction::new(2, |x: &Vector<f64>| x[0] + 2.0 * x[1]);
        let sets = vec![BudgetPolytope::new(
            Vector::new(vec![1.0, 1.0]),
            1.0,
            Vector::new(vec![1.0, 1.0]),
        )
        .unwrap()];
        let (p, v) = grid_max(&f, &sets, 21).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!((p.block(0)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_max_enforces_limit() {
        let f = SocialFunction::new(30, |_: &Vector<f64>| 0.0);
        let sets = vec![BudgetPolytope::unit_box(30, 30.0)];
        assert!(matches!(grid_max(&f, &sets, 10), Err(Error::GridTooLarge(_))));
    }

    #[test]
    fn trace_csv_and_distribution() {
        let game = tiny_game();
        let trace = frank_wolfe(&game, &RunConfig::new(5, 0, StepRule::FwOneOverK)).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,gamma,payoff_1,payoff_2,time_ms");
        assert_eq!(csv.lines().count(), 6);
        let dist = to_distribution(&trace).unwrap();
        assert_eq!(dist.len(), 5);
        let mean = dist.expected_social(game.social());
        assert!((mean - trace.mean_gamma()).abs() < 1e-12);
    }

    #[test]
    fn average_profile_midpoint() {
        let game = tiny_game();
        let trace = frank_wolfe(&game, &RunConfig::new(4, 0, StepRule::FwOneOverK)).unwrap();
        // Iterates are k/4 * (1,1); average is (1+2+3+4)/16 = 0.625 per coord.
        let avg = trace.average_profile().flat();
        assert!((avg[0] - 0.625).abs() < 1e-12);
        assert!((avg[1] - 0.625).abs() < 1e-12);
    }
}
