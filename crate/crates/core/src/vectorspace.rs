//! Nonnegative vector arithmetic and feasible-set geometry for
//! box-plus-budget polytopes: Euclidean projection, linear maximization,
//! and approximately-uniform hit-and-run sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Real, Result};

/// Feasibility and root-finding tolerance for projections.
pub const PROJECT_TOL: f64 = 1e-10;
const PROJECT_MAX_BISECT: usize = 200;
const HIT_AND_RUN_BURN_IN: usize = 100;
const HIT_AND_RUN_THIN: usize = 10;

/// Dense real vector with checked dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T> {
    coords: Vec<T>,
}

impl<T: Real> Vector<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Vector { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector { coords: vec![T::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [T] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::new(self.coords.iter().zip(&other.coords).map(|(&a, &b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::new(self.coords.iter().zip(&other.coords).map(|(&a, &b)| a - b).collect())
    }

    pub fn scale(&self, k: T) -> Self {
        Vector::new(self.coords.iter().map(|&a| a * k).collect())
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// Coordinatewise `x ≤ y`.
    pub fn leq(&self, other: &Self) -> bool {
        self.coords.iter().zip(&other.coords).all(|(&a, &b)| a <= b)
    }

    /// Clamp each coordinate into `[lo_i, hi_i]`.
    pub fn clip(&self, lo: &Self, hi: &Self) -> Self {
        debug_assert_eq!(self.dim(), lo.dim());
        debug_assert_eq!(self.dim(), hi.dim());
        Vector::new(
            self.coords
                .iter()
                .zip(&lo.coords)
                .zip(&hi.coords)
                .map(|((&x, &l), &h)| x.max(l).min(h))
                .collect(),
        )
    }

    pub fn min(&self, other: &Self) -> Self {
        Vector::new(self.coords.iter().zip(&other.coords).map(|(&a, &b)| a.min(b)).collect())
    }

    pub fn max(&self, other: &Self) -> Self {
        Vector::new(self.coords.iter().zip(&other.coords).map(|(&a, &b)| a.max(b)).collect())
    }

    /// `i`-th unit vector scaled by `k`.
    pub fn unit(dim: usize, i: usize, k: T) -> Self {
        let mut v = Self::zeros(dim);
        v.coords[i] = k;
        v
    }
}

impl<T: Real> std::ops::Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

impl<T: Real> std::ops::IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.coords[i]
    }
}

/// Feasible set `{x : cᵀx ≤ b, 0 ≤ x ≤ ubar}` — the strategy-set shape used
/// throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetPolytope<T> {
    cost: Vector<T>,
    budget: T,
    upper: Vector<T>,
}

/// Output of [`BudgetPolytope::hit_and_run`]. `degenerate` is set when the
/// polytope has no interior (`ubar = 0`) and the samples are all zero.
#[derive(Debug, Clone)]
pub struct Samples<T> {
    pub points: Vec<Vector<T>>,
    pub degenerate: bool,
}

impl<T: Real> BudgetPolytope<T> {
    pub fn new(cost: Vector<T>, budget: T, upper: Vector<T>) -> Result<Self> {
        cost.check_dim(&upper)?;
        if budget <= T::zero() {
            return Err(Error::InvalidParameter("budget must be positive".into()));
        }
        if cost.coords().iter().any(|&c| c < T::zero()) {
            return Err(Error::InvalidParameter("cost weights must be nonnegative".into()));
        }
        if upper.coords().iter().any(|&u| u < T::zero()) {
            return Err(Error::InvalidParameter("upper bounds must be nonnegative".into()));
        }
        Ok(BudgetPolytope { cost, budget, upper })
    }

    /// Unit box `[0,1]^dim` with `cᵀ = 1` and the given budget.
    pub fn unit_box(dim: usize, budget: T) -> Self {
        BudgetPolytope {
            cost: Vector::new(vec![T::one(); dim]),
            budget,
            upper: Vector::new(vec![T::one(); dim]),
        }
    }

    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    pub fn cost(&self) -> &Vector<T> {
        &self.cost
    }

    pub fn budget(&self) -> T {
        self.budget
    }

    pub fn upper(&self) -> &Vector<T> {
        &self.upper
    }

    pub fn contains(&self, x: &Vector<T>, tol: T) -> bool {
        x.dim() == self.dim()
            && x.coords().iter().all(|&v| v >= -tol)
            && x.coords().iter().zip(self.upper.coords()).all(|(&v, &u)| v <= u + tol)
            && self.cost.dot(x) <= self.budget + tol
    }

    fn clip_box(&self, x: &Vector<T>) -> Vector<T> {
        x.clip(&Vector::zeros(self.dim()), &self.upper)
    }

    /// Euclidean projection onto the polytope.
    ///
    /// Clips to the box first; if the budget still binds, bisects on the
    /// multiplier `λ ≥ 0` of the budget face until
    /// `cᵀ clip(x − λc, 0, ubar) = b` to `1e-10`.
    pub fn project(&self, x: &Vector<T>) -> Result<Vector<T>> {
        x.check_dim(&self.cost)?;
        let clipped = self.clip_box(x);
        if self.cost.dot(&clipped) <= self.budget {
            return Ok(clipped);
        }
        let tol = T::of(PROJECT_TOL);
        let spent = |lambda: T| {
            let shifted = x.sub(&self.cost.scale(lambda));
            self.cost.dot(&self.clip_box(&shifted))
        };
        // Bracket: spent(0) > b, and spent(λ) → cᵀ·clip_at_0 ≤ b for λ large.
        let mut hi = T::one();
        let mut grow = 0;
        while spent(hi) > self.budget {
            hi = hi + hi;
            grow += 1;
            if grow > PROJECT_MAX_BISECT {
                return Err(Error::NonConvergence(PROJECT_MAX_BISECT));
            }
        }
        let mut lo = T::zero();
        for _ in 0..PROJECT_MAX_BISECT {
            let mid = (lo + hi) * T::of(0.5);
            let s = spent(mid);
            if (s - self.budget).abs() <= tol {
                let shifted = x.sub(&self.cost.scale(mid));
                return Ok(self.clip_box(&shifted));
            }
            if s > self.budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let shifted = x.sub(&self.cost.scale(hi));
        let result = self.clip_box(&shifted);
        if self.cost.dot(&result) <= self.budget + tol {
            Ok(result)
        } else {
            Err(Error::NonConvergence(PROJECT_MAX_BISECT))
        }
    }

    /// Linear maximization oracle: `argmax { gᵀv : v ∈ P }` for `g ≥ 0`.
    ///
    /// Greedy fractional knapsack: zero-cost coordinates filled to their upper
    /// bound first, then coordinates by `gᵢ/cᵢ` descending; ties broken by
    /// lower index.
    pub fn lmo(&self, g: &Vector<T>) -> Result<Vector<T>> {
        g.check_dim(&self.cost)?;
        if let Some(i) = g.coords().iter().position(|&v| v < T::zero()) {
            return Err(Error::NegativeGradient { index: i });
        }
        let mut v = Vector::zeros(self.dim());
        let mut remaining = self.budget;
        let mut order: Vec<usize> = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            if self.cost[i] == T::zero() {
                v[i] = self.upper[i];
            } else {
                order.push(i);
            }
        }
        // Sort by density descending; stable sort keeps lower indices first on ties.
        order.sort_by(|&a, &b| {
            let da = g[a] / self.cost[a];
            let db = g[b] / self.cost[b];
            db.partial_cmp(&da).unwrap_or(std::cmp::Ordering::Equal)
        });
        for i in order {
            if remaining <= T::zero() {
                break;
            }
            let take = self.upper[i].min(remaining / self.cost[i]);
            v[i] = take;
            remaining = remaining - take * self.cost[i];
        }
        Ok(v)
    }

    /// `n` approximately-uniform feasible points, deterministic per seed.
    ///
    /// Hit-and-run with burn-in 100 and thinning 10. A degenerate polytope
    /// (`ubar = 0`) yields `n` copies of the origin with the warning flag set.
    pub fn hit_and_run(&self, n: usize, seed: u64) -> Samples<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.hit_and_run_with(n, &mut rng)
    }

    /// Same as [`Self::hit_and_run`] but drawing from a caller-owned stream.
    pub fn hit_and_run_with(&self, n: usize, rng: &mut ChaCha8Rng) -> Samples<T> {
        let dim = self.dim();
        if self.upper.coords().iter().all(|&u| u == T::zero()) {
            return Samples { points: vec![Vector::zeros(dim); n], degenerate: true };
        }
        // Interior-ish start: shrink ubar toward 0 until strictly inside the budget.
        let cu = self.cost.dot(&self.upper);
        let scale = if cu > T::zero() {
            (self.budget / cu).min(T::one()) * T::of(0.5)
        } else {
            T::of(0.5)
        };
        let mut x = self.upper.scale(scale);
        let mut points = Vec::with_capacity(n);
        let total = HIT_AND_RUN_BURN_IN + n * HIT_AND_RUN_THIN;
        for step in 0..total {
            let dir = random_direction::<T>(dim, rng);
            let (lo, hi) = self.chord(&x, &dir);
            if hi > lo {
                let t = lo + (hi - lo) * T::of(rng.random::<f64>());
                x = self.clip_box(&x.add(&dir.scale(t)));
            }
            if step >= HIT_AND_RUN_BURN_IN && (step - HIT_AND_RUN_BURN_IN) % HIT_AND_RUN_THIN == 0 {
                points.push(x.clone());
            }
        }
        points.truncate(n);
        Samples { points, degenerate: false }
    }

    /// Range of `t` keeping `x + t·dir` feasible.
    fn chord(&self, x: &Vector<T>, dir: &Vector<T>) -> (T, T) {
        let mut lo = T::neg_infinity();
        let mut hi = T::infinity();
        for i in 0..self.dim() {
            let d = dir[i];
            if d.abs() <= T::of(1e-14) {
                continue;
            }
            let to_zero = -x[i] / d;
            let to_upper = (self.upper[i] - x[i]) / d;
            let (a, b) = if d > T::zero() { (to_zero, to_upper) } else { (to_upper, to_zero) };
            lo = lo.max(a);
            hi = hi.min(b);
        }
        let cd = self.cost.dot(dir);
        if cd.abs() > T::of(1e-14) {
            let t_budget = (self.budget - self.cost.dot(x)) / cd;
            if cd > T::zero() {
                hi = hi.min(t_budget);
            } else {
                lo = lo.max(t_budget);
            }
        }
        (lo, hi)
    }
}

/// Unit direction drawn via normalized Gaussians (Box-Muller from a shared
/// f64 stream so the draw sequence is identical for every scalar type).
fn random_direction<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> Vector<T> {
    loop {
        let mut v = Vector::zeros(dim);
        for i in 0..dim {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            let g = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            v[i] = T::of(g);
        }
        let norm = v.norm();
        if norm > T::of(1e-12) {
            return v.scale(T::one() / norm);
        }
    }
}

/// Joint strategy profile: `N` blocks of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProfile<T> {
    blocks: Vec<Vector<T>>,
}

impl<T: Real> JointProfile<T> {
    pub fn new(blocks: Vec<Vector<T>>) -> Self {
        JointProfile { blocks }
    }

    pub fn zeros(players: usize, d: usize) -> Self {
        JointProfile { blocks: vec![Vector::zeros(d); players] }
    }

    /// Split a flat `N·d` vector into `N` blocks.
    pub fn from_flat(flat: &Vector<T>, players: usize) -> Result<Self> {
        if players == 0 || flat.dim() % players != 0 {
            return Err(Error::DimensionMismatch { expected: players, got: flat.dim() });
        }
        let d = flat.dim() / players;
        let blocks = (0..players)
            .map(|i| Vector::new(flat.coords()[i * d..(i + 1) * d].to_vec()))
            .collect();
        Ok(JointProfile { blocks })
    }

    pub fn players(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks.first().map_or(0, Vector::dim)
    }

    pub fn block(&self, i: usize) -> &Vector<T> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[Vector<T>] {
        &self.blocks
    }

    /// Concatenation as one `N·d` vector.
    pub fn flat(&self) -> Vector<T> {
        let mut coords = Vec::with_capacity(self.players() * self.block_dim());
        for b in &self.blocks {
            coords.extend_from_slice(b.coords());
        }
        Vector::new(coords)
    }

    /// The `(sᵢ′, s₋ᵢ)` construction.
    pub fn replace_block(&self, i: usize, block: Vector<T>) -> Self {
        let mut blocks = self.blocks.clone();
        blocks[i] = block;
        JointProfile { blocks }
    }

    /// The `(0, s₋ᵢ)` construction.
    pub fn zero_block(&self, i: usize) -> Self {
        self.replace_block(i, Vector::zeros(self.block_dim()))
    }
}
