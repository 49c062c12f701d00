//! Social-function abstraction and the submodularity, curvature, and
//! submodularity-ratio machinery.
//!
//! Checkers are sampling-based: they test the defining inequality on `m`
//! random points or pairs drawn from a seeded stream and report a witness on
//! failure. Ratio estimators return sampled upper estimates of the true
//! infimum; closed forms, where an instance has one, live in
//! [`crate::instances`] and take precedence over estimates.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::games::ContinuousGame;
use crate::vectorspace::{JointProfile, Vector};
use crate::{Error, Real, Result};

/// Absolute tolerance on all sampled inequality checks.
pub const CHECK_TOL: f64 = 1e-9;
/// Central finite-difference step for gradients.
pub const FD_STEP: f64 = 1e-6;
/// Tolerance on finite-difference Hessian entries.
pub const HESSIAN_TOL: f64 = 1e-7;
/// Step for the forward Hessian stencil; large enough that cancellation
/// noise (about `4 eps |f| / h^2`) stays below [`HESSIAN_TOL`].
const HESSIAN_STEP: f64 = 1e-3;
const DENOM_GUARD: f64 = 1e-12;

type ValueFn<T> = Arc<dyn Fn(&Vector<T>) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>;

/// Evaluable, differentiable map `γ: ℝ₊ⁿ → ℝ₊` with `γ(0) = 0`.
///
/// The gradient is analytic when supplied, otherwise central finite
/// differences with step `1e-6`.
#[derive(Clone)]
pub struct SocialFunction<T> {
    dim: usize,
    value: ValueFn<T>,
    gradient: Option<GradFn<T>>,
}

impl<T: Real> SocialFunction<T> {
    pub fn new(dim: usize, value: impl Fn(&Vector<T>) -> T + Send + Sync + 'static) -> Self {
        SocialFunction { dim, value: Arc::new(value), gradient: None }
    }

    pub fn with_gradient(
        dim: usize,
        value: impl Fn(&Vector<T>) -> T + Send + Sync + 'static,
        gradient: impl Fn(&Vector<T>) -> Vector<T> + Send + Sync + 'static,
    ) -> Self {
        SocialFunction { dim, value: Arc::new(value), gradient: Some(Arc::new(gradient)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn eval(&self, x: &Vector<T>) -> T {
        debug_assert_eq!(x.dim(), self.dim);
        (self.value)(x)
    }

    pub fn grad(&self, x: &Vector<T>) -> Vector<T> {
        match &self.gradient {
            Some(g) => g(x),
            None => self.fd_grad(x),
        }
    }

    /// Central finite-difference gradient, step `1e-6`.
    pub fn fd_grad(&self, x: &Vector<T>) -> Vector<T> {
        let h = T::of(FD_STEP);
        let mut g = Vector::zeros(self.dim);
        for i in 0..self.dim {
            let fp = self.eval(&x.add(&Vector::unit(self.dim, i, h)));
            let fm = self.eval(&x.sub(&Vector::unit(self.dim, i, h)));
            g[i] = (fp - fm) / (h + h);
        }
        g
    }

    /// Finite-difference second derivative `∂²f/∂xᵢ∂xⱼ` at `x` (forward stencil).
    pub fn fd_hessian_entry(&self, x: &Vector<T>, i: usize, j: usize) -> T {
        let h = T::of(HESSIAN_STEP);
        let ei = Vector::unit(self.dim, i, h);
        let ej = Vector::unit(self.dim, j, h);
        let f00 = self.eval(x);
        let f10 = self.eval(&x.add(&ei));
        let f01 = self.eval(&x.add(&ej));
        let f11 = self.eval(&x.add(&ei).add(&ej));
        (f11 - f10 - f01 + f00) / (h * h)
    }
}

impl<T> fmt::Debug for SocialFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SocialFunction")
            .field("dim", &self.dim)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

/// Axis-aligned region `{x : 0 ≤ x ≤ zmax}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion<T> {
    zmax: Vector<T>,
}

impl<T: Real> BoxRegion<T> {
    pub fn new(zmax: Vector<T>) -> Self {
        BoxRegion { zmax }
    }

    pub fn dim(&self) -> usize {
        self.zmax.dim()
    }

    pub fn zmax(&self) -> &Vector<T> {
        &self.zmax
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vector<T> {
        let mut x = Vector::zeros(self.dim());
        for i in 0..self.dim() {
            x[i] = self.zmax[i] * T::of(rng.random::<f64>());
        }
        x
    }

    /// Random ordered pair `x ≤ y`, both in the region.
    fn sample_ordered_pair(&self, rng: &mut ChaCha8Rng) -> (Vector<T>, Vector<T>) {
        let y = self.sample(rng);
        let mut x = Vector::zeros(self.dim());
        for i in 0..self.dim() {
            x[i] = y[i] * T::of(rng.random::<f64>());
        }
        (x, y)
    }
}

/// A failing sample of a checked inequality: the evaluation points and the
/// (negative) margin `lhs − rhs` observed there.
#[derive(Debug, Clone)]
pub struct Witness<T> {
    pub points: Vec<(String, Vector<T>)>,
    pub margin: T,
    pub detail: String,
}

/// Outcome of a sampled property check.
#[derive(Debug, Clone)]
pub struct PropertyReport<T> {
    pub name: String,
    pub holds: bool,
    pub witness: Option<Witness<T>>,
    pub samples_used: usize,
}

impl<T: Real> PropertyReport<T> {
    fn pass(name: &str, samples: usize) -> Self {
        PropertyReport { name: name.into(), holds: true, witness: None, samples_used: samples }
    }

    fn fail(name: &str, samples: usize, witness: Witness<T>) -> Self {
        PropertyReport {
            name: name.into(),
            holds: false,
            witness: Some(witness),
            samples_used: samples,
        }
    }

    /// Flat text record consumed by the CLI.
    pub fn record(&self) -> String {
        let verdict = if self.holds { "pass" } else { "fail" };
        match &self.witness {
            None => format!("{} {} samples={}", self.name, verdict, self.samples_used),
            Some(w) => {
                let pts: Vec<String> = w
                    .points
                    .iter()
                    .map(|(label, p)| {
                        let coords: Vec<String> =
                            p.coords().iter().map(|c| format!("{c}")).collect();
                        format!("{}=({})", label, coords.join(","))
                    })
                    .collect();
                format!(
                    "{} {} samples={} margin={} {} [{}]",
                    self.name,
                    verdict,
                    self.samples_used,
                    w.margin,
                    pts.join(" "),
                    w.detail
                )
            }
        }
    }
}

fn witness1<T: Real>(label: &str, p: Vector<T>, margin: T, detail: &str) -> Witness<T> {
    Witness { points: vec![(label.into(), p)], margin, detail: detail.into() }
}

fn witness2<T: Real>(
    (la, a): (&str, Vector<T>),
    (lb, b): (&str, Vector<T>),
    margin: T,
    detail: &str,
) -> Witness<T> {
    Witness { points: vec![(la.into(), a), (lb.into(), b)], margin, detail: detail.into() }
}

/// Monotonicity: `f(x) ≤ f(y)` for sampled `x ≤ y` in `Z`.
pub fn check_monotone<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    m: usize,
    seed: u64,
) -> PropertyReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = T::of(CHECK_TOL);
    for _ in 0..m {
        let (x, y) = region.sample_ordered_pair(&mut rng);
        let margin = f.eval(&y) - f.eval(&x);
        if margin < -tol {
            return PropertyReport::fail(
                "monotone",
                m,
                witness2(("x", x), ("y", y), margin, "f(y) - f(x) < 0 for x <= y"),
            );
        }
    }
    PropertyReport::pass("monotone", m)
}

/// DR-submodularity: coordinate diminishing returns on sampled
/// `(x ≤ y, i, k)` tuples plus a finite-difference Hessian spot check
/// (all entries ≤ 0 up to noise).
pub fn check_dr<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    m: usize,
    seed: u64,
) -> PropertyReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = T::of(CHECK_TOL);
    let n = region.dim();
    for _ in 0..m {
        let (x, y) = region.sample_ordered_pair(&mut rng);
        let i = rng.random_range(0..n);
        let head = region.zmax()[i] - y[i];
        let k = head * T::of(rng.random::<f64>());
        let bump = Vector::unit(n, i, k);
        let lhs = f.eval(&x.add(&bump)) - f.eval(&x);
        let rhs = f.eval(&y.add(&bump)) - f.eval(&y);
        let margin = lhs - rhs;
        if margin < -tol {
            return PropertyReport::fail(
                "dr_submodular",
                m,
                witness2(("x", x), ("y", y), margin, &format!("coordinate i={i} k={k}")),
            );
        }
    }
    if let Some(w) = hessian_violation(f, region, m, &mut rng, None) {
        return PropertyReport::fail("dr_submodular", m, w);
    }
    PropertyReport::pass("dr_submodular", m)
}

/// Finds a finite-difference Hessian entry above the noise tolerance, if any.
/// `pair_filter` restricts which (i, j) pairs are tested.
fn hessian_violation<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    m: usize,
    rng: &mut ChaCha8Rng,
    pair_filter: Option<&dyn Fn(usize, usize) -> bool>,
) -> Option<Witness<T>> {
    let n = region.dim();
    let tol = T::of(HESSIAN_TOL);
    let h2 = T::of(2.0 * HESSIAN_STEP);
    for _ in 0..m {
        // Keep the forward stencil inside the region.
        let mut x = Vector::zeros(n);
        for i in 0..n {
            let head = (region.zmax()[i] - h2).max(T::zero());
            x[i] = head * T::of(rng.random::<f64>());
        }
        for i in 0..n {
            for j in 0..n {
                if let Some(filter) = pair_filter {
                    if !filter(i, j) {
                        continue;
                    }
                }
                let entry = f.fd_hessian_entry(&x, i, j);
                if entry > tol {
                    return Some(witness1(
                        "x",
                        x,
                        -entry,
                        &format!("hessian entry ({i},{j}) = {entry} > 0"),
                    ));
                }
            }
        }
    }
    None
}

/// Weak DR-submodularity: diminishing returns only along coordinates where
/// `x` and `y` agree, plus the group form on `(x, y, z)` triples.
pub fn check_weak_dr<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    m: usize,
    seed: u64,
) -> PropertyReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = T::of(CHECK_TOL);
    let n = region.dim();
    for _ in 0..m {
        let (mut x, y) = region.sample_ordered_pair(&mut rng);
        let i = rng.random_range(0..n);
        x[i] = y[i];
        let head = region.zmax()[i] - y[i];
        let k = head * T::of(rng.random::<f64>());
        let bump = Vector::unit(n, i, k);
        let lhs = f.eval(&x.add(&bump)) - f.eval(&x);
        let rhs = f.eval(&y.add(&bump)) - f.eval(&y);
        let margin = lhs - rhs;
        if margin < -tol {
            return PropertyReport::fail(
                "weak_dr_submodular",
                m,
                witness2(("x", x), ("y", y), margin, &format!("coordinate i={i} k={k}")),
            );
        }
    }
    // Group form: z vanishes on coordinates where y > x.
    for _ in 0..m {
        let (mut x, y) = region.sample_ordered_pair(&mut rng);
        let mut z = Vector::zeros(n);
        for i in 0..n {
            // Force agreement on a random subset so z has somewhere to act.
            if rng.random::<f64>() < 0.5 {
                x[i] = y[i];
                let head = region.zmax()[i] - y[i];
                z[i] = head * T::of(rng.random::<f64>());
            }
        }
        let lhs = f.eval(&x.add(&z)) - f.eval(&x);
        let rhs = f.eval(&y.add(&z)) - f.eval(&y);
        let margin = lhs - rhs;
        if margin < -tol {
            return PropertyReport::fail(
                "weak_dr_submodular",
                m,
                witness2(("x", x), ("y", y), margin, "group form with z on agreeing coords"),
            );
        }
    }
    PropertyReport::pass("weak_dr_submodular", m)
}

/// Group DR characterization: `f(x+z) − f(x) ≥ f(y+z) − f(y)` for sampled
/// `x ≤ y` and `z ≥ 0` with `y + z` in the region.
pub fn check_group_dr<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    m: usize,
    seed: u64,
) -> PropertyReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = T::of(CHECK_TOL);
    let n = region.dim();
    for _ in 0..m {
        let (x, y) = region.sample_ordered_pair(&mut rng);
        let mut z = Vector::zeros(n);
        for i in 0..n {
            let head = region.zmax()[i] - y[i];
            z[i] = head * T::of(rng.random::<f64>());
        }
        let lhs = f.eval(&x.add(&z)) - f.eval(&x);
        let rhs = f.eval(&y.add(&z)) - f.eval(&y);
        let margin = lhs - rhs;
        if margin < -tol {
            return PropertyReport::fail(
                "group_dr",
                m,
                witness2(("x", x), ("y", y), margin, "group increment z"),
            );
        }
    }
    PropertyReport::pass("group_dr", m)
}

/// Curvature of a monotone DR-submodular `f` over the box region.
///
/// The gradient of a DR-submodular function is antitone, so the infimum of
/// `[∇f(x)]ᵢ / [∇f(0)]ᵢ` over the region is attained at `zmax`; only the two
/// endpoint gradients are evaluated. Coordinates with `[∇f(0)]ᵢ` below the
/// denominator guard are skipped; if all coordinates are skipped the
/// curvature is undefined.
pub fn curvature<T: Real>(f: &SocialFunction<T>, region: &BoxRegion<T>) -> Result<T> {
    let g0 = f.grad(&Vector::zeros(f.dim()));
    let gz = f.grad(region.zmax());
    let guard = T::of(DENOM_GUARD);
    let mut min_ratio: Option<T> = None;
    for i in 0..f.dim() {
        if g0[i] <= guard {
            continue;
        }
        let r = gz[i] / g0[i];
        min_ratio = Some(match min_ratio {
            None => r,
            Some(m) => m.min(r),
        });
    }
    match min_ratio {
        Some(r) => Ok((T::one() - r).max(T::zero()).min(T::one())),
        None => Err(Error::UndefinedCoordinate { index: 0 }),
    }
}

/// Brute-force curvature oracle: finite-`k` infimum of the defining ratio
/// over a grid of the region. Only for small dimensions.
pub fn curvature_grid<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    grid_step: T,
    k_small: T,
) -> Result<T> {
    let n = region.dim();
    if n > 4 {
        return Err(Error::InvalidParameter("curvature_grid is an oracle for dim <= 4".into()));
    }
    let guard = T::of(DENOM_GUARD);
    let zero = Vector::zeros(n);
    let f0 = f.eval(&zero);
    let steps: Vec<usize> = (0..n)
        .map(|i| (region.zmax()[i] / grid_step).to_f64_lossy().floor() as usize)
        .collect();
    let mut idx = vec![0usize; n];
    let mut min_ratio: Option<T> = None;
    loop {
        let mut x = Vector::zeros(n);
        for i in 0..n {
            x[i] = grid_step * T::of(idx[i] as f64);
        }
        for i in 0..n {
            let bump = Vector::unit(n, i, k_small);
            let denom = f.eval(&bump) - f0;
            if denom.abs() < guard {
                continue;
            }
            // Pull the base point down so x + k stays inside the region;
            // this keeps the boundary (where the infimum tends to live)
            // reachable instead of stopping one grid cell short.
            let mut base = x.clone();
            base[i] = base[i].min(region.zmax()[i] - k_small).max(T::zero());
            let r = (f.eval(&base.add(&bump)) - f.eval(&base)) / denom;
            min_ratio = Some(match min_ratio {
                None => r,
                Some(m) => m.min(r),
            });
        }
        // Odometer over the grid.
        let mut carry = 0;
        while carry < n {
            idx[carry] += 1;
            if idx[carry] <= steps[carry] {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
        if carry == n {
            break;
        }
    }
    match min_ratio {
        Some(r) => Ok((T::one() - r).max(T::zero()).min(T::one())),
        None => Err(Error::UndefinedCoordinate { index: 0 }),
    }
}

/// Sampled upper estimate of the submodularity ratio of a monotone `f`:
/// the empirical infimum over `m` random pairs `(x, y)` with `x + y ∈ Z` of
/// `[Σᵢ f(x+yᵢeᵢ) − f(x)] / [f(x+y) − f(x)]`, clamped to `[0, 1]`.
pub fn submodularity_ratio<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    m: usize,
    seed: u64,
) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let guard = T::of(DENOM_GUARD);
    let n = region.dim();
    let mut inf = T::one();
    for _ in 0..m {
        // x + y in Z: sample the sum, then split it randomly.
        let total = region.sample(&mut rng);
        let mut x = Vector::zeros(n);
        for i in 0..n {
            x[i] = total[i] * T::of(rng.random::<f64>());
        }
        let y = total.sub(&x);
        let fx = f.eval(&x);
        let denom = f.eval(&total) - fx;
        if denom.abs() < guard {
            continue;
        }
        let mut numer = T::zero();
        for i in 0..n {
            numer = numer + f.eval(&x.add(&Vector::unit(n, i, y[i]))) - fx;
        }
        inf = inf.min(numer / denom);
    }
    inf.max(T::zero()).min(T::one())
}

/// Sampled upper estimate of the generalized (player-block) submodularity
/// ratio of a game's social function: the empirical infimum over `m` random
/// outcome pairs `(s, s′)` of
/// `[Σᵢ γ(sᵢ+sᵢ′, s₋ᵢ) − γ(s)] / [γ(s+s′) − γ(s)]`.
pub fn generalized_submodularity_ratio<T: Real>(
    game: &ContinuousGame<T>,
    m: usize,
    seed: u64,
) -> T {
    let guard = T::of(DENOM_GUARD);
    let gamma = game.social();
    let mut inf = T::one();
    let profiles_a = game.sample_profiles(m, seed);
    let profiles_b = game.sample_profiles(m, seed.wrapping_add(0x9e37_79b9));
    for (s, s_prime) in profiles_a.iter().zip(&profiles_b) {
        let gs = gamma.eval(&s.flat());
        let sum_flat = JointProfile::new(
            s.blocks().iter().zip(s_prime.blocks()).map(|(a, b)| a.add(b)).collect(),
        )
        .flat();
        let denom = gamma.eval(&sum_flat) - gs;
        if denom.abs() < guard {
            continue;
        }
        let mut numer = T::zero();
        for i in 0..game.players() {
            let deviated = s.replace_block(i, s.block(i).add(s_prime.block(i)));
            numer = numer + gamma.eval(&deviated.flat()) - gs;
        }
        inf = inf.min(numer / denom);
    }
    inf.max(T::zero()).min(T::one())
}

/// Playerwise DR-submodularity: for each player block, the within-block
/// finite-difference Hessian entries are non-positive at sampled points.
pub fn check_playerwise_dr<T: Real>(
    f: &SocialFunction<T>,
    players: usize,
    d: usize,
    region: &BoxRegion<T>,
    m: usize,
    seed: u64,
) -> PropertyReport<T> {
    debug_assert_eq!(players * d, f.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for player in 0..players {
        let lo = player * d;
        let hi = lo + d;
        let filter = move |i: usize, j: usize| (lo..hi).contains(&i) && (lo..hi).contains(&j);
        if let Some(w) = hessian_violation(f, region, m, &mut rng, Some(&filter)) {
            return PropertyReport::fail("playerwise_dr", m, w);
        }
    }
    PropertyReport::pass("playerwise_dr", m)
}

/// Curvature inequality `f(x+y) − f(x) ≥ (1−α)[f(y) − f(0)]` on sampled
/// `(x, y)` with `x + y` in the region.
pub fn check_curvature_inequality<T: Real>(
    f: &SocialFunction<T>,
    region: &BoxRegion<T>,
    alpha: T,
    m: usize,
    seed: u64,
) -> PropertyReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = T::of(CHECK_TOL);
    let n = region.dim();
    let f0 = f.eval(&Vector::zeros(n));
    for _ in 0..m {
        let total = region.sample(&mut rng);
        let mut x = Vector::zeros(n);
        for i in 0..n {
            x[i] = total[i] * T::of(rng.random::<f64>());
        }
        let y = total.sub(&x);
        let lhs = f.eval(&total) - f.eval(&x);
        let rhs = (T::one() - alpha) * (f.eval(&y) - f0);
        let margin = lhs - rhs;
        if margin < -tol {
            return PropertyReport::fail(
                "curvature_inequality",
                m,
                witness2(("x", x), ("y", y), margin, &format!("alpha={alpha}")),
            );
        }
    }
    PropertyReport::pass("curvature_inequality", m)
}
