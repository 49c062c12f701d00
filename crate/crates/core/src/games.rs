//! Continuous-game model, valid-utility-game validation, marginal-contribution
//! game construction, smoothness and CCE-regret checks, and the
//! price-of-anarchy bound calculators.

use std::fmt;
use std::sync::Arc;

use crate::functions::{
    check_dr, check_monotone, BoxRegion, PropertyReport, SocialFunction, Witness, CHECK_TOL,
};
use crate::vectorspace::{BudgetPolytope, JointProfile, Vector};
use crate::{Error, Real, Result};

type PayoffFn<T> = Arc<dyn Fn(usize, &JointProfile<T>) -> T + Send + Sync>;
type OwnGradFn<T> = Arc<dyn Fn(usize, &JointProfile<T>) -> Vector<T> + Send + Sync>;

/// `N`-player continuous game with per-player budget-polytope strategy sets,
/// payoff oracles, and a social function on the joint space.
#[derive(Clone)]
pub struct ContinuousGame<T> {
    sets: Vec<BudgetPolytope<T>>,
    payoff: PayoffFn<T>,
    /// Gradient of `πᵢ` with respect to player `i`'s own block, when known.
    own_gradient: Option<OwnGradFn<T>>,
    social: SocialFunction<T>,
}

impl<T: Real> ContinuousGame<T> {
    pub fn new(
        sets: Vec<BudgetPolytope<T>>,
        social: SocialFunction<T>,
        payoff: impl Fn(usize, &JointProfile<T>) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        let total: usize = sets.iter().map(BudgetPolytope::dim).sum();
        if total != social.dim() {
            return Err(Error::DimensionMismatch { expected: social.dim(), got: total });
        }
        Ok(ContinuousGame { sets, payoff: Arc::new(payoff), own_gradient: None, social })
    }

    pub fn with_own_gradient(
        mut self,
        grad: impl Fn(usize, &JointProfile<T>) -> Vector<T> + Send + Sync + 'static,
    ) -> Self {
        self.own_gradient = Some(Arc::new(grad));
        self
    }

    pub fn players(&self) -> usize {
        self.sets.len()
    }

    pub fn block_dim(&self) -> usize {
        self.sets.first().map_or(0, BudgetPolytope::dim)
    }

    pub fn sets(&self) -> &[BudgetPolytope<T>] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &BudgetPolytope<T> {
        &self.sets[i]
    }

    pub fn social(&self) -> &SocialFunction<T> {
        &self.social
    }

    pub fn payoff(&self, i: usize, s: &JointProfile<T>) -> T {
        (self.payoff)(i, s)
    }

    pub fn has_own_gradient(&self) -> bool {
        self.own_gradient.is_some()
    }

    /// Gradient of `πᵢ` in player `i`'s own block.
    pub fn own_gradient(&self, i: usize, s: &JointProfile<T>) -> Result<Vector<T>> {
        match &self.own_gradient {
            Some(g) => Ok(g(i, s)),
            None => Err(Error::UnsupportedGame),
        }
    }

    /// `S̃`: the box `0 ≤ x ≤ 2·(x̄₁,…,x̄_N)` containing every sum of two
    /// feasible profiles.
    pub fn s_tilde(&self) -> BoxRegion<T> {
        let mut coords = Vec::new();
        for p in &self.sets {
            coords.extend(p.upper().coords().iter().map(|&u| u + u));
        }
        BoxRegion::new(Vector::new(coords))
    }

    /// `m` random feasible joint profiles, deterministic per seed.
    pub fn sample_profiles(&self, m: usize, seed: u64) -> Vec<JointProfile<T>> {
        let per_player: Vec<Vec<Vector<T>>> = self
            .sets
            .iter()
            .enumerate()
            .map(|(i, p)| p.hit_and_run(m, seed.wrapping_add(i as u64).wrapping_mul(0x100_0193)).points)
            .collect();
        (0..m)
            .map(|k| JointProfile::new(per_player.iter().map(|s| s[k].clone()).collect()))
            .collect()
    }
}

impl<T> fmt::Debug for ContinuousGame<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousGame")
            .field("players", &self.sets.len())
            .field("own_gradient", &self.own_gradient.is_some())
            .finish()
    }
}

/// Marginal-contribution game: payoffs `π̂ᵢ(s) = γ(s) − γ(0, s₋ᵢ)` on the
/// given strategy sets. The own-block gradient of `π̂ᵢ` equals the own-block
/// gradient of `γ`.
pub fn marginal_game<T: Real>(
    gamma: SocialFunction<T>,
    sets: Vec<BudgetPolytope<T>>,
) -> Result<ContinuousGame<T>> {
    let d = sets.first().map_or(0, BudgetPolytope::dim);
    let g_pay = gamma.clone();
    let g_grad = gamma.clone();
    let game = ContinuousGame::new(sets, gamma, move |i, s: &JointProfile<T>| {
        g_pay.eval(&s.flat()) - g_pay.eval(&s.zero_block(i).flat())
    })?;
    Ok(game.with_own_gradient(move |i, s: &JointProfile<T>| {
        let full = g_grad.grad(&s.flat());
        Vector::new(full.coords()[i * d..(i + 1) * d].to_vec())
    }))
}

/// Per-condition verdicts of the valid-utility-game definition.
#[derive(Debug, Clone)]
pub struct ValidUtilityReport<T> {
    /// Condition i, part 1: social function monotone on `S̃`.
    pub monotone: PropertyReport<T>,
    /// Condition i, part 2: social function DR-submodular on `S̃`.
    pub dr: PropertyReport<T>,
    /// Condition ii: `πᵢ(s) ≥ γ(s) − γ(0, s₋ᵢ)`.
    pub payoff_dominates_marginal: PropertyReport<T>,
    /// Condition iii: `γ(s) ≥ Σᵢ πᵢ(s)`.
    pub social_dominates_sum: PropertyReport<T>,
}

impl<T: Real> ValidUtilityReport<T> {
    pub fn holds(&self) -> bool {
        self.monotone.holds
            && self.dr.holds
            && self.payoff_dominates_marginal.holds
            && self.social_dominates_sum.holds
    }

    pub fn reports(&self) -> [&PropertyReport<T>; 4] {
        [
            &self.monotone,
            &self.dr,
            &self.payoff_dominates_marginal,
            &self.social_dominates_sum,
        ]
    }
}

/// Checks the three valid-utility-game conditions on `m` sampled profiles;
/// condition i is checked over `S̃`.
pub fn validate_valid_utility<T: Real>(
    game: &ContinuousGame<T>,
    m: usize,
    seed: u64,
) -> ValidUtilityReport<T> {
    let region = game.s_tilde();
    let monotone = check_monotone(game.social(), &region, m, seed);
    let dr = check_dr(game.social(), &region, m, seed.wrapping_add(1));
    let tol = T::of(CHECK_TOL);
    let gamma = game.social();

    let profiles = game.sample_profiles(m, seed.wrapping_add(2));
    let mut payoff_dominates_marginal = PropertyReport {
        name: "payoff_dominates_marginal".into(),
        holds: true,
        witness: None,
        samples_used: m,
    };
    'outer: for s in &profiles {
        for i in 0..game.players() {
            let marginal = gamma.eval(&s.flat()) - gamma.eval(&s.zero_block(i).flat());
            let margin = game.payoff(i, s) - marginal;
            if margin < -tol {
                payoff_dominates_marginal.holds = false;
                payoff_dominates_marginal.witness = Some(Witness {
                    points: vec![("s".into(), s.flat())],
                    margin,
                    detail: format!("player {i}: pi_i(s) < gamma(s) - gamma(0, s_-i)"),
                });
                break 'outer;
            }
        }
    }

    let mut social_dominates_sum = PropertyReport {
        name: "social_dominates_sum".into(),
        holds: true,
        witness: None,
        samples_used: m,
    };
    for s in &profiles {
        let sum = (0..game.players()).fold(T::zero(), |acc, i| acc + game.payoff(i, s));
        let margin = gamma.eval(&s.flat()) - sum;
        if margin < -tol {
            social_dominates_sum.holds = false;
            social_dominates_sum.witness = Some(Witness {
                points: vec![("s".into(), s.flat())],
                margin,
                detail: "sum of payoffs exceeds gamma(s)".into(),
            });
            break;
        }
    }

    ValidUtilityReport { monotone, dr, payoff_dominates_marginal, social_dominates_sum }
}

/// `(λ, μ)`-smoothness: `Σᵢ πᵢ(sᵢ*, s₋ᵢ) ≥ λ·γ(s*) − μ·γ(s)` on `m` sampled
/// profile pairs.
pub fn smoothness_check<T: Real>(
    game: &ContinuousGame<T>,
    lambda: T,
    mu: T,
    m: usize,
    seed: u64,
) -> PropertyReport<T> {
    let tol = T::of(CHECK_TOL);
    let gamma = game.social();
    let base = game.sample_profiles(m, seed);
    let stars = game.sample_profiles(m, seed.wrapping_add(0x51ed_270b));
    for (s, s_star) in base.iter().zip(&stars) {
        let mut lhs = T::zero();
        for i in 0..game.players() {
            lhs = lhs + game.payoff(i, &s.replace_block(i, s_star.block(i).clone()));
        }
        let rhs = lambda * gamma.eval(&s_star.flat()) - mu * gamma.eval(&s.flat());
        let margin = lhs - rhs;
        if margin < -tol {
            return PropertyReport {
                name: "smoothness".into(),
                holds: false,
                witness: Some(Witness {
                    points: vec![("s".into(), s.flat()), ("s_star".into(), s_star.flat())],
                    margin,
                    detail: format!("lambda={lambda} mu={mu}"),
                }),
                samples_used: m,
            };
        }
    }
    PropertyReport { name: "smoothness".into(), holds: true, witness: None, samples_used: m }
}

/// Weighted list of joint profiles standing in for a CCE produced by dynamics.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution<T> {
    profiles: Vec<JointProfile<T>>,
    weights: Vec<T>,
}

impl<T: Real> EmpiricalDistribution<T> {
    pub fn new(profiles: Vec<JointProfile<T>>, weights: Vec<T>) -> Result<Self> {
        if profiles.len() != weights.len() || profiles.is_empty() {
            return Err(Error::InvalidParameter("profiles and weights must match and be nonempty".into()));
        }
        let sum = weights.iter().fold(T::zero(), |a, &w| a + w);
        if (sum - T::one()).abs() > T::of(1e-12) || weights.iter().any(|&w| w < T::zero()) {
            return Err(Error::InvalidParameter("weights must be nonnegative and sum to 1".into()));
        }
        Ok(EmpiricalDistribution { profiles, weights })
    }

    pub fn uniform(profiles: Vec<JointProfile<T>>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidParameter("empty distribution".into()));
        }
        let w = T::one() / T::of(profiles.len() as f64);
        let mut weights = vec![w; profiles.len()];
        // Absorb rounding so the sum is exactly 1.
        let sum: T = weights.iter().fold(T::zero(), |a, &x| a + x);
        let last = weights.len() - 1;
        weights[last] = weights[last] + (T::one() - sum);
        EmpiricalDistribution::new(profiles, weights)
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

    pub fn expect<F: Fn(&JointProfile<T>) -> T>(&self, f: F) -> T {
        self.profiles
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (s, &w)| acc + w * f(s))
    }

    pub fn expected_social(&self, gamma: &SocialFunction<T>) -> T {
        self.expect(|s| gamma.eval(&s.flat()))
    }
}

/// Largest expected unilateral deviation gain against a finite candidate set
/// (hit-and-run samples plus LMO vertices on coordinate directions).
///
/// A certified lower bound on the true deviation gain `ε`; `ε ≤ tol`
/// certifies the distribution as an approximate CCE against the tested set.
pub fn cce_epsilon<T: Real>(
    game: &ContinuousGame<T>,
    dist: &EmpiricalDistribution<T>,
    deviations_per_player: usize,
    seed: u64,
) -> T {
    let d = game.block_dim();
    let mut eps = T::zero();
    for i in 0..game.players() {
        let set = game.set(i);
        let mut candidates =
            set.hit_and_run(deviations_per_player, seed.wrapping_add(i as u64)).points;
        for j in 0..d {
            if let Ok(v) = set.lmo(&Vector::unit(d, j, T::one())) {
                candidates.push(v);
            }
        }
        let on_path = dist.expect(|s| game.payoff(i, s));
        for cand in candidates {
            let deviated = dist.expect(|s| game.payoff(i, &s.replace_block(i, cand.clone())));
            eps = eps.max(deviated - on_path);
        }
    }
    eps
}

/// Which price-of-anarchy bound is being reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoaKind {
    /// `1 + α` from the curvature of a DR-submodular social function.
    Curvature,
    /// The generic bound of 2 for any valid utility game.
    Generic,
    /// `(1 + η)/η` from the generalized submodularity ratio.
    Ratio,
    /// `(1 + η/2)/(η/2)` for the affine-weight relaxation of condition iii.
    RatioHalf,
}

impl PoaKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PoaKind::Curvature => "curvature",
            PoaKind::Generic => "generic",
            PoaKind::Ratio => "ratio",
            PoaKind::RatioHalf => "ratio_half",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoaBoundReport<T> {
    pub kind: PoaKind,
    pub parameter: T,
    pub bound: T,
}

impl<T: Real> PoaBoundReport<T> {
    /// CSV row `kind, parameter, bound`.
    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.kind.as_str(), self.parameter, self.bound)
    }
}

/// Price-of-anarchy bound for the given parameter (`α` or `η` in `[0, 1]`).
pub fn poa_bound<T: Real>(kind: PoaKind, parameter: T) -> Result<PoaBoundReport<T>> {
    if parameter < T::zero() || parameter > T::one() {
        return Err(Error::InvalidParameter(format!("parameter {parameter} outside [0, 1]")));
    }
    let bound = match kind {
        PoaKind::Curvature => T::one() + parameter,
        PoaKind::Generic => T::of(2.0),
        PoaKind::Ratio => {
            if parameter <= T::zero() {
                return Err(Error::UndefinedBound("ratio bound requires eta > 0".into()));
            }
            (T::one() + parameter) / parameter
        }
        PoaKind::RatioHalf => {
            if parameter <= T::zero() {
                return Err(Error::UndefinedBound("ratio_half bound requires eta > 0".into()));
            }
            let half = parameter * T::of(0.5);
            (T::one() + half) / half
        }
    };
    Ok(PoaBoundReport { kind, parameter, bound })
}
