//! Concrete game instances: the continuous budget-allocation market and the
//! sensor-coverage problem (constant and affine location weights), with
//! analytic gradients, closed-form curvature/ratio parameters, seeded random
//! generators, and a plain-text serialization format.
//!
//! All products of `(1-p)^s` terms are computed in log-space; `ln(1-p)` is
//! precomputed per edge. Edges with `p = 1` short-circuit: activation is
//! certain as soon as any mass is allocated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functions::SocialFunction;
use crate::games::{marginal_game, ContinuousGame};
use crate::vectorspace::{BudgetPolytope, JointProfile, Vector};
use crate::{Error, Real, Result};

/// One market edge `(r, t)` with per-advertiser activation probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub channel: usize,
    /// `p_i(r, t)` for each advertiser `i`.
    pub probs: Vec<T>,
    /// Precomputed `ln(1 - p_i(r, t))`; `-inf` when `p = 1`.
    log1m: Vec<T>,
}

/// Bipartite advertising market: channels on the left, customers on the
/// right, one [`Edge`] per connected `(channel, customer)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Market<T> {
    advertisers: usize,
    channels: usize,
    /// `customers[t]` lists the edges incident to customer `t`.
    customers: Vec<Vec<Edge<T>>>,
}

impl<T: Real> Market<T> {
    pub fn new(
        advertisers: usize,
        channels: usize,
        mut customers: Vec<Vec<Edge<T>>>,
    ) -> Result<Self> {
        for edges in &mut customers {
            // Canonical channel order so serialization round-trips compare equal.
            edges.sort_by_key(|e| e.channel);
        }
        for edges in &customers {
            for e in edges {
                if e.channel >= channels {
                    return Err(Error::InvalidParameter(format!(
                        "edge channel {} out of range",
                        e.channel
                    )));
                }
                if e.probs.len() != advertisers {
                    return Err(Error::DimensionMismatch {
                        expected: advertisers,
                        got: e.probs.len(),
                    });
                }
            }
        }
        Ok(Market { advertisers, channels, customers })
    }

    pub fn edge(channel: usize, probs: Vec<T>) -> Edge<T> {
        let log1m = probs.iter().map(|&p| (T::one() - p).ln()).collect();
        Edge { channel, probs, log1m }
    }

    pub fn advertisers(&self) -> usize {
        self.advertisers
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn customer_count(&self) -> usize {
        self.customers.len()
    }

    pub fn customers(&self) -> &[Vec<Edge<T>>] {
        &self.customers
    }

    /// `P_i(s_i, t)`: probability that advertiser `i` alone activates
    /// customer `t` under allocation `s_i`.
    pub fn activation_prob(&self, i: usize, s_i: &Vector<T>, t: usize) -> T {
        T::one() - self.survival(i, s_i, t)
    }

    /// `1 - P_i(s_i, t)` in log-space, with the `p = 1` short-circuit.
    fn survival(&self, i: usize, s_i: &Vector<T>, t: usize) -> T {
        let mut log_q = T::zero();
        for e in &self.customers[t] {
            let s = s_i[e.channel];
            if s <= T::zero() {
                continue;
            }
            if e.probs[i] >= T::one() {
                return T::zero();
            }
            log_q = log_q + s * e.log1m[i];
        }
        log_q.exp()
    }

    /// Per-advertiser survivals `q_i = 1 - P_i(s_i, t)` for one customer.
    fn survivals(&self, s: &JointProfile<T>, t: usize) -> Vec<T> {
        (0..self.advertisers).map(|i| self.survival(i, s.block(i), t)).collect()
    }

    /// Social value: expected number of activated customers.
    pub fn social_value(&self, s: &JointProfile<T>) -> T {
        let mut total = T::zero();
        for t in 0..self.customers.len() {
            let q: T = self.survivals(s, t).iter().fold(T::one(), |a, &b| a * b);
            total = total + (T::one() - q);
        }
        total
    }

    /// Exact payoff of advertiser `i`: the permutation average computed per
    /// customer through elementary symmetric polynomials in O(N²) instead of
    /// N! enumeration. With `q_j = 1 - P_j`, the average over orders of
    /// `Π_{j before i} q_j` is `(1/N)·Σ_k e_k(q_{-i})/C(N-1, k)`.
    pub fn payoff(&self, i: usize, s: &JointProfile<T>) -> T {
        let n = self.advertisers;
        let mut total = T::zero();
        for t in 0..self.customers.len() {
            let q = self.survivals(s, t);
            let p_i = T::one() - q[i];
            if p_i == T::zero() {
                continue;
            }
            let others: Vec<T> =
                (0..n).filter(|&j| j != i).map(|j| q[j]).collect();
            let e = elementary_symmetric(&others);
            let mut avg = T::zero();
            let mut binom = T::one(); // C(N-1, k)
            for (k, &ek) in e.iter().enumerate() {
                avg = avg + ek / binom;
                binom = binom * T::of((n - 1 - k) as f64) / T::of((k + 1) as f64);
            }
            avg = avg / T::of(n as f64);
            total = total + p_i * avg;
        }
        total
    }

    /// Social function on the flat `N·d` space with the analytic gradient.
    pub fn social_function(&self) -> SocialFunction<T> {
        let value = self.clone();
        let grad = self.clone();
        let n = self.advertisers;
        SocialFunction::with_gradient(
            n * self.channels,
            move |x: &Vector<T>| {
                let s = JointProfile::from_flat(x, value.advertisers).expect("dim checked");
                value.social_value(&s)
            },
            move |x: &Vector<T>| grad.social_gradient_flat(x),
        )
    }

    fn social_gradient_flat(&self, x: &Vector<T>) -> Vector<T> {
        let s = JointProfile::from_flat(x, self.advertisers).expect("dim checked");
        let d = self.channels;
        let mut g = Vector::zeros(self.advertisers * d);
        for t in 0..self.customers.len() {
            let q = self.survivals(&s, t);
            let prod: T = q.iter().fold(T::one(), |a, &b| a * b);
            if prod == T::zero() {
                continue;
            }
            for e in &self.customers[t] {
                for j in 0..self.advertisers {
                    let coeff = -e.log1m[j] * prod;
                    g[j * d + e.channel] = g[j * d + e.channel] + coeff;
                }
            }
        }
        g
    }

    /// Closed-form curvature parameter of the budget-allocation social
    /// function over `S̃`, given the per-advertiser upper bounds.
    ///
    /// Errors when every `(i, r)` pair has an empty or zero-probability
    /// customer sum (all denominators vanish).
    pub fn curvature_bound(&self, uppers: &[Vector<T>]) -> Result<T> {
        let n = self.advertisers;
        if uppers.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: uppers.len() });
        }
        // Survival of each advertiser at the doubled upper bounds, per customer.
        let doubled = JointProfile::new(uppers.iter().map(|u| u.scale(T::of(2.0))).collect());
        let mut min_ratio: Option<T> = None;
        for i in 0..n {
            let mut numer = vec![T::zero(); self.channels];
            let mut denom = vec![T::zero(); self.channels];
            for t in 0..self.customers.len() {
                let prod: T =
                    self.survivals(&doubled, t).iter().fold(T::one(), |a, &b| a * b);
                for e in &self.customers[t] {
                    let l = e.log1m[i];
                    if l == T::zero() {
                        continue;
                    }
                    numer[e.channel] = numer[e.channel] + l * prod;
                    denom[e.channel] = denom[e.channel] + l;
                }
            }
            for r in 0..self.channels {
                if denom[r].abs() < T::of(1e-300) {
                    continue;
                }
                let ratio = numer[r] / denom[r];
                min_ratio = Some(match min_ratio {
                    None => ratio,
                    Some(m) => m.min(ratio),
                });
            }
        }
        match min_ratio {
            Some(r) => Ok(T::one() - r),
            None => Err(Error::UndefinedBound(
                "all activation probabilities are zero; curvature denominators vanish".into(),
            )),
        }
    }
}

/// `e_0..e_n` elementary symmetric polynomials of the given values.
fn elementary_symmetric<T: Real>(values: &[T]) -> Vec<T> {
    let mut e = vec![T::zero(); values.len() + 1];
    e[0] = T::one();
    for (count, &v) in values.iter().enumerate() {
        for k in (1..=count + 1).rev() {
            e[k] = e[k] + e[k - 1] * v;
        }
    }
    e
}

/// Budget-allocation game: the market with its strategy polytopes, exposed
/// as a [`ContinuousGame`] with the exact closed-form payoffs.
#[derive(Debug, Clone)]
pub struct BudgetAllocationGame<T> {
    pub market: Market<T>,
    pub sets: Vec<BudgetPolytope<T>>,
}

impl<T: Real> BudgetAllocationGame<T> {
    pub fn new(market: Market<T>, sets: Vec<BudgetPolytope<T>>) -> Result<Self> {
        if sets.len() != market.advertisers() {
            return Err(Error::DimensionMismatch {
                expected: market.advertisers(),
                got: sets.len(),
            });
        }
        if sets.iter().any(|p| p.dim() != market.channels()) {
            return Err(Error::InvalidParameter("polytope dim must equal channel count".into()));
        }
        Ok(BudgetAllocationGame { market, sets })
    }

    pub fn game(&self) -> ContinuousGame<T> {
        let market = self.market.clone();
        ContinuousGame::new(self.sets.clone(), self.market.social_function(), move |i, s| {
            market.payoff(i, s)
        })
        .expect("dimensions checked in constructor")
    }

    /// Closed-form curvature parameter over `S̃`.
    pub fn curvature_bound(&self) -> Result<T> {
        let uppers: Vec<Vector<T>> = self.sets.iter().map(|p| p.upper().clone()).collect();
        self.market.curvature_bound(&uppers)
    }
}

/// Sensor-coverage problem with constant location weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorCoverage<T> {
    /// `detect[i][r]`: detection probability of sensor `i` at location `r`, in `[0, 1)`.
    pub detect: Vec<Vec<T>>,
    /// A-priori event weights `w_r ≥ 0`.
    pub weights: Vec<T>,
    pub sets: Vec<BudgetPolytope<T>>,
}

impl<T: Real> SensorCoverage<T> {
    pub fn new(
        detect: Vec<Vec<T>>,
        weights: Vec<T>,
        sets: Vec<BudgetPolytope<T>>,
    ) -> Result<Self> {
        let n = detect.len();
        if sets.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sets.len() });
        }
        let d = weights.len();
        if detect.iter().any(|row| row.len() != d) || sets.iter().any(|p| p.dim() != d) {
            return Err(Error::InvalidParameter("detect rows and polytopes must have dim d".into()));
        }
        if detect.iter().flatten().any(|&p| p < T::zero() || p >= T::one()) {
            return Err(Error::InvalidParameter("detection probabilities must lie in [0, 1)".into()));
        }
        Ok(SensorCoverage { detect, weights, sets })
    }

    pub fn sensors(&self) -> usize {
        self.detect.len()
    }

    pub fn locations(&self) -> usize {
        self.weights.len()
    }

    /// Joint detection probability `P(r, x) = 1 - Π_i (1-p_i^r)^{[x_i]_r}`.
    pub fn detection_prob(&self, r: usize, x: &JointProfile<T>) -> T {
        let mut log_q = T::zero();
        for (i, row) in self.detect.iter().enumerate() {
            log_q = log_q + x.block(i)[r] * (T::one() - row[r]).ln();
        }
        T::one() - log_q.exp()
    }

    pub fn social_value(&self, x: &JointProfile<T>) -> T {
        (0..self.locations())
            .fold(T::zero(), |acc, r| acc + self.weights[r] * self.detection_prob(r, x))
    }

    pub fn social_function(&self) -> SocialFunction<T> {
        let value = self.clone();
        let grad = self.clone();
        let n = self.sensors();
        let d = self.locations();
        SocialFunction::with_gradient(
            n * d,
            move |flat: &Vector<T>| {
                let x = JointProfile::from_flat(flat, value.sensors()).expect("dim checked");
                value.social_value(&x)
            },
            move |flat: &Vector<T>| {
                let x = JointProfile::from_flat(flat, grad.sensors()).expect("dim checked");
                let mut g = Vector::zeros(grad.sensors() * d);
                for r in 0..d {
                    let survive = T::one() - grad.detection_prob(r, &x);
                    for l in 0..grad.sensors() {
                        let log1m = (T::one() - grad.detect[l][r]).ln();
                        g[l * d + r] = -grad.weights[r] * log1m * survive;
                    }
                }
                g
            },
        )
    }

    /// Closed-form curvature parameter `α = max_r P(r, 2x̄)`.
    pub fn alpha(&self) -> T {
        let doubled =
            JointProfile::new(self.sets.iter().map(|p| p.upper().scale(T::of(2.0))).collect());
        (0..self.locations())
            .map(|r| self.detection_prob(r, &doubled))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Marginal-contribution game on this objective.
    pub fn game(&self) -> ContinuousGame<T> {
        marginal_game(self.social_function(), self.sets.clone())
            .expect("dimensions checked in constructor")
    }
}

/// Sensor coverage with affine location weights
/// `w_r(x) = a_r·(Σᵢ[xᵢ]_r)/N + b_r`; not DR-submodular in general.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineWeightSensorCoverage<T> {
    pub detect: Vec<Vec<T>>,
    pub weight_slope: Vec<T>,
    pub weight_base: Vec<T>,
    pub sets: Vec<BudgetPolytope<T>>,
}

impl<T: Real> AffineWeightSensorCoverage<T> {
    pub fn new(
        detect: Vec<Vec<T>>,
        weight_slope: Vec<T>,
        weight_base: Vec<T>,
        sets: Vec<BudgetPolytope<T>>,
    ) -> Result<Self> {
        let d = weight_slope.len();
        if weight_base.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: weight_base.len() });
        }
        if weight_base.iter().any(|&b| b <= T::zero()) {
            return Err(Error::InvalidParameter("affine weight bases b_r must be positive".into()));
        }
        if weight_slope.iter().any(|&a| a < T::zero()) {
            return Err(Error::InvalidParameter("affine weight slopes a_r must be nonnegative".into()));
        }
        // Reuse the base-instance validation for detect/sets shapes.
        SensorCoverage::new(detect.clone(), vec![T::zero(); d], sets.clone())?;
        Ok(AffineWeightSensorCoverage { detect, weight_slope, weight_base, sets })
    }

    pub fn sensors(&self) -> usize {
        self.detect.len()
    }

    pub fn locations(&self) -> usize {
        self.weight_slope.len()
    }

    fn base(&self) -> SensorCoverage<T> {
        SensorCoverage {
            detect: self.detect.clone(),
            weights: vec![T::zero(); self.locations()],
            sets: self.sets.clone(),
        }
    }

    pub fn weight(&self, r: usize, x: &JointProfile<T>) -> T {
        let sum = (0..self.sensors()).fold(T::zero(), |acc, i| acc + x.block(i)[r]);
        self.weight_slope[r] * sum / T::of(self.sensors() as f64) + self.weight_base[r]
    }

    pub fn social_value(&self, x: &JointProfile<T>) -> T {
        let base = self.base();
        (0..self.locations())
            .fold(T::zero(), |acc, r| acc + self.weight(r, x) * base.detection_prob(r, x))
    }

    pub fn social_function(&self) -> SocialFunction<T> {
        let value = self.clone();
        let grad = self.clone();
        let n = self.sensors();
        let d = self.locations();
        SocialFunction::with_gradient(
            n * d,
            move |flat: &Vector<T>| {
                let x = JointProfile::from_flat(flat, value.sensors()).expect("dim checked");
                value.social_value(&x)
            },
            move |flat: &Vector<T>| {
                let x = JointProfile::from_flat(flat, grad.sensors()).expect("dim checked");
                let base = grad.base();
                let n_t = T::of(grad.sensors() as f64);
                let mut g = Vector::zeros(grad.sensors() * d);
                for r in 0..d {
                    let p = base.detection_prob(r, &x);
                    let survive = T::one() - p;
                    let w = grad.weight(r, &x);
                    for l in 0..grad.sensors() {
                        let log1m = (T::one() - grad.detect[l][r]).ln();
                        g[l * d + r] = grad.weight_slope[r] / n_t * p - w * log1m * survive;
                    }
                }
                g
            },
        )
    }

    /// Closed-form lower bound on the generalized submodularity ratio:
    /// `min_r minᵢ b_r / (b_r + Σ_{j≠i} (a_r/N)·[x̄ⱼ]_r)`; the infimum over
    /// strategies is attained at the upper corner.
    pub fn eta(&self) -> T {
        let n = self.sensors();
        let n_t = T::of(n as f64);
        let mut eta = T::one();
        for r in 0..self.locations() {
            for i in 0..n {
                let mut others = T::zero();
                for (j, p) in self.sets.iter().enumerate() {
                    if j != i {
                        others = others + self.weight_slope[r] / n_t * p.upper()[r];
                    }
                }
                eta = eta.min(self.weight_base[r] / (self.weight_base[r] + others));
            }
        }
        eta
    }

    pub fn game(&self) -> ContinuousGame<T> {
        marginal_game(self.social_function(), self.sets.clone())
            .expect("dimensions checked in constructor")
    }
}

/// Random market matching the reference experiment distributions: each
/// customer gets `edges_per_customer` distinct random channels, probabilities
/// uniform in `[0.8·p_max, p_max]`, cost entries uniform in `[0, 1]`,
/// budget 1, upper bounds 1.
pub fn random_market<T: Real>(
    advertisers: usize,
    channels: usize,
    customers: usize,
    edges_per_customer: usize,
    p_max: f64,
    seed: u64,
) -> Result<BudgetAllocationGame<T>> {
    if edges_per_customer > channels {
        return Err(Error::InvalidParameter("edges_per_customer exceeds channel count".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut customer_edges = Vec::with_capacity(customers);
    let mut pool: Vec<usize> = (0..channels).collect();
    for _ in 0..customers {
        // Partial Fisher-Yates for distinct channels.
        for k in 0..edges_per_customer {
            let j = rng.random_range(k..channels);
            pool.swap(k, j);
        }
        let mut edges = Vec::with_capacity(edges_per_customer);
        for &r in &pool[..edges_per_customer] {
            let probs: Vec<T> = (0..advertisers)
                .map(|_| T::of((0.8 + 0.2 * rng.random::<f64>()) * p_max))
                .collect();
            edges.push(Market::edge(r, probs));
        }
        customer_edges.push(edges);
    }
    let market = Market::new(advertisers, channels, customer_edges)?;
    let sets = (0..advertisers)
        .map(|_| {
            let cost = Vector::new((0..channels).map(|_| T::of(rng.random::<f64>())).collect());
            BudgetPolytope::new(cost, T::one(), Vector::new(vec![T::one(); channels]))
        })
        .collect::<Result<Vec<_>>>()?;
    BudgetAllocationGame::new(market, sets)
}

/// Random sensor-coverage instance: cost entries uniform in `(1/d)·[1, 3]`,
/// budget 1, upper bounds 1, constant detection probability `p`, weights
/// uniform in `[0, 1]` normalized to sum 1.
pub fn random_sensor<T: Real>(
    sensors: usize,
    locations: usize,
    p: f64,
    seed: u64,
) -> Result<SensorCoverage<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = (0..sensors)
        .map(|_| {
            let cost = Vector::new(
                (0..locations)
                    .map(|_| T::of((1.0 + 2.0 * rng.random::<f64>()) / locations as f64))
                    .collect(),
            );
            BudgetPolytope::new(cost, T::one(), Vector::new(vec![T::one(); locations]))
        })
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = (0..locations).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|&w| T::of(w / total)).collect();
    let detect = vec![vec![T::of(p); locations]; sensors];
    SensorCoverage::new(detect, weights, sets)
}

// ---------------------------------------------------------------------------
// Plain-text instance format.
//
//   cuga-instance v1 market          cuga-instance v1 sensor
//   N <n> d <d> T <t>                N <n> d <d>
//   polytope <i> c <..> b <b> ubar <..>
//   edge <t> <r> <i> <p>             detect <i> <p..>
//                                    weights <w..>
// ---------------------------------------------------------------------------

fn write_polytope<T: Real>(out: &mut String, i: usize, p: &BudgetPolytope<T>) {
    out.push_str(&format!("polytope {i} c"));
    for &c in p.cost().coords() {
        out.push_str(&format!(" {}", c.to_f64_lossy()));
    }
    out.push_str(&format!(" b {}", p.budget().to_f64_lossy()));
    out.push_str(" ubar");
    for &u in p.upper().coords() {
        out.push_str(&format!(" {}", u.to_f64_lossy()));
    }
    out.push('\n');
}

fn parse_f64s(tokens: &[&str]) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {t}: {e}"))))
        .collect()
}

fn parse_polytope<T: Real>(line: &str, dim: usize) -> Result<(usize, BudgetPolytope<T>)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    // polytope <i> c <dim floats> b <float> ubar <dim floats>
    let expected = 2 + 1 + dim + 2 + 1 + dim;
    if tokens.len() != expected || tokens[0] != "polytope" {
        return Err(Error::Parse(format!("malformed polytope line: {line}")));
    }
    let i: usize =
        tokens[1].parse().map_err(|_| Error::Parse(format!("bad polytope index: {line}")))?;
    if tokens[2] != "c" || tokens[3 + dim] != "b" || tokens[5 + dim] != "ubar" {
        return Err(Error::Parse(format!("malformed polytope line: {line}")));
    }
    let cost = parse_f64s(&tokens[3..3 + dim])?;
    let b: f64 = tokens[4 + dim].parse().map_err(|_| Error::Parse("bad budget".into()))?;
    let upper = parse_f64s(&tokens[6 + dim..6 + 2 * dim])?;
    let p = BudgetPolytope::new(
        Vector::new(cost.into_iter().map(T::of).collect()),
        T::of(b),
        Vector::new(upper.into_iter().map(T::of).collect()),
    )?;
    Ok((i, p))
}

impl<T: Real> BudgetAllocationGame<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::from("cuga-instance v1 market\n");
        out.push_str(&format!(
            "N {} d {} T {}\n",
            self.market.advertisers(),
            self.market.channels(),
            self.market.customer_count()
        ));
        for (i, p) in self.sets.iter().enumerate() {
            write_polytope(&mut out, i, p);
        }
        for (t, edges) in self.market.customers().iter().enumerate() {
            for e in edges {
                for (i, &p) in e.probs.iter().enumerate() {
                    out.push_str(&format!("edge {t} {} {i} {}\n", e.channel, p.to_f64_lossy()));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty instance".into()))?;
        if header.trim() != "cuga-instance v1 market" {
            return Err(Error::Parse(format!("unexpected header: {header}")));
        }
        let dims = lines.next().ok_or_else(|| Error::Parse("missing dims line".into()))?;
        let tok: Vec<&str> = dims.split_whitespace().collect();
        if tok.len() != 6 || tok[0] != "N" || tok[2] != "d" || tok[4] != "T" {
            return Err(Error::Parse(format!("malformed dims line: {dims}")));
        }
        let n: usize = tok[1].parse().map_err(|_| Error::Parse("bad N".into()))?;
        let d: usize = tok[3].parse().map_err(|_| Error::Parse("bad d".into()))?;
        let t_count: usize = tok[5].parse().map_err(|_| Error::Parse("bad T".into()))?;
        let mut sets: Vec<Option<BudgetPolytope<T>>> = vec![None; n];
        // probs[t] maps channel -> per-advertiser probabilities.
        let mut probs: Vec<std::collections::BTreeMap<usize, Vec<f64>>> =
            vec![std::collections::BTreeMap::new(); t_count];
        for line in lines {
            let line = line.trim();
            if line.starts_with("polytope") {
                let (i, p) = parse_polytope::<T>(line, d)?;
                if i >= n {
                    return Err(Error::Parse(format!("polytope index {i} out of range")));
                }
                sets[i] = Some(p);
            } else if let Some(rest) = line.strip_prefix("edge ") {
                let tok: Vec<&str> = rest.split_whitespace().collect();
                if tok.len() != 4 {
                    return Err(Error::Parse(format!("malformed edge line: {line}")));
                }
                let t: usize = tok[0].parse().map_err(|_| Error::Parse("bad t".into()))?;
                let r: usize = tok[1].parse().map_err(|_| Error::Parse("bad r".into()))?;
                let i: usize = tok[2].parse().map_err(|_| Error::Parse("bad i".into()))?;
                let p: f64 = tok[3].parse().map_err(|_| Error::Parse("bad p".into()))?;
                if t >= t_count || i >= n {
                    return Err(Error::Parse(format!("edge index out of range: {line}")));
                }
                let entry = probs[t].entry(r).or_insert_with(|| vec![0.0; n]);
                entry[i] = p;
            } else {
                return Err(Error::Parse(format!("unrecognized line: {line}")));
            }
        }
        let customers: Vec<Vec<Edge<T>>> = probs
            .into_iter()
            .map(|by_channel| {
                by_channel
                    .into_iter()
                    .map(|(r, p)| Market::edge(r, p.into_iter().map(T::of).collect()))
                    .collect()
            })
            .collect();
        let market = Market::new(n, d, customers)?;
        let sets = sets
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::Parse(format!("missing polytope {i}"))))
            .collect::<Result<Vec<_>>>()?;
        BudgetAllocationGame::new(market, sets)
    }
}

impl<T: Real> SensorCoverage<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::from("cuga-instance v1 sensor\n");
        out.push_str(&format!("N {} d {}\n", self.sensors(), self.locations()));
        for (i, p) in self.sets.iter().enumerate() {
            write_polytope(&mut out, i, p);
        }
        for (i, row) in self.detect.iter().enumerate() {
            out.push_str(&format!("detect {i}"));
            for &p in row {
                out.push_str(&format!(" {}", p.to_f64_lossy()));
            }
            out.push('\n');
        }
        out.push_str("weights");
        for &w in &self.weights {
            out.push_str(&format!(" {}", w.to_f64_lossy()));
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty instance".into()))?;
        if header.trim() != "cuga-instance v1 sensor" {
            return Err(Error::Parse(format!("unexpected header: {header}")));
        }
        let dims = lines.next().ok_or_else(|| Error::Parse("missing dims line".into()))?;
        let tok: Vec<&str> = dims.split_whitespace().collect();
        if tok.len() != 4 || tok[0] != "N" || tok[2] != "d" {
            return Err(Error::Parse(format!("malformed dims line: {dims}")));
        }
        let n: usize = tok[1].parse().map_err(|_| Error::Parse("bad N".into()))?;
        let d: usize = tok[3].parse().map_err(|_| Error::Parse("bad d".into()))?;
        let mut sets: Vec<Option<BudgetPolytope<T>>> = vec![None; n];
        let mut detect: Vec<Option<Vec<T>>> = vec![None; n];
        let mut weights: Option<Vec<T>> = None;
        for line in lines {
            let line = line.trim();
            if line.starts_with("polytope") {
                let (i, p) = parse_polytope::<T>(line, d)?;
                if i >= n {
                    return Err(Error::Parse(format!("polytope index {i} out of range")));
                }
                sets[i] = Some(p);
            } else if let Some(rest) = line.strip_prefix("detect ") {
                let tok: Vec<&str> = rest.split_whitespace().collect();
                if tok.len() != d + 1 {
                    return Err(Error::Parse(format!("malformed detect line: {line}")));
                }
                let i: usize = tok[0].parse().map_err(|_| Error::Parse("bad index".into()))?;
                if i >= n {
                    return Err(Error::Parse(format!("detect index {i} out of range")));
                }
                detect[i] = Some(parse_f64s(&tok[1..])?.into_iter().map(T::of).collect());
            } else if let Some(rest) = line.strip_prefix("weights") {
                let vals = parse_f64s(&rest.split_whitespace().collect::<Vec<_>>())?;
                if vals.len() != d {
                    return Err(Error::Parse("weights length mismatch".into()));
                }
                weights = Some(vals.into_iter().map(T::of).collect());
            } else {
                return Err(Error::Parse(format!("unrecognized line: {line}")));
            }
        }
        let sets = sets
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::Parse(format!("missing polytope {i}"))))
            .collect::<Result<Vec<_>>>()?;
        let detect = detect
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| Error::Parse(format!("missing detect row {i}"))))
            .collect::<Result<Vec<_>>>()?;
        let weights = weights.ok_or_else(|| Error::Parse("missing weights line".into()))?;
        SensorCoverage::new(detect, weights, sets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector<f64> {
        Vector::new(c.to_vec())
    }

    fn one_customer_market(n: usize, p: f64) -> Market<f64> {
        // Single channel, single customer, probability p for every advertiser.
        Market::new(n, 1, vec![vec![Market::edge(0, vec![p; n])]]).unwrap()
    }

    #[test]
    fn activation_prob_examples() {
        let m = one_customer_market(1, 0.5);
        assert!((m.activation_prob(0, &v(&[2.0]), 0) - 0.75).abs() < 1e-12);
        assert!(m.activation_prob(0, &v(&[0.0]), 0).abs() < 1e-12);
        let two = Market::new(
            1,
            2,
            vec![vec![Market::edge(0, vec![0.5]), Market::edge(1, vec![0.5])]],
        )
        .unwrap();
        assert!((two.activation_prob(0, &v(&[1.0, 1.0]), 0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn activation_prob_certain_edge() {
        let m = one_customer_market(1, 1.0);
        assert_eq!(m.activation_prob(0, &v(&[0.5]), 0), 1.0);
        assert_eq!(m.activation_prob(0, &v(&[0.0]), 0), 0.0);
    }

    #[test]
    fn social_value_two_advertisers() {
        let m = one_customer_market(2, 0.5);
        let s = JointProfile::new(vec![v(&[1.0]), v(&[1.0])]);
        // P1 = P2 = 0.5 -> gamma = 1 - 0.25.
        assert!((m.social_value(&s) - 0.75).abs() < 1e-12);
        assert!(m.social_value(&JointProfile::zeros(2, 1)).abs() < 1e-12);
    }

    #[test]
    fn payoff_two_advertisers() {
        let m = one_customer_market(2, 0.5);
        let s = JointProfile::new(vec![v(&[1.0]), v(&[1.0])]);
        // pi_1 = (0.5 + 0.5*0.5)/2 = 0.375 by enumerating both orders.
        assert!((m.payoff(0, &s) - 0.375).abs() < 1e-12);
        assert!((m.payoff(1, &s) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn payoffs_sum_to_social() {
        let game = random_market::<f64>(4, 6, 20, 3, 0.3, 42).unwrap();
        let g = game.game();
        for s in g.sample_profiles(10, 1) {
            let sum: f64 = (0..4).map(|i| game.market.payoff(i, &s)).sum();
            assert!((sum - game.market.social_value(&s)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_advertiser_payoff_is_social() {
        let game = random_market::<f64>(1, 4, 10, 2, 0.5, 7).unwrap();
        let g = game.game();
        for s in g.sample_profiles(5, 2) {
            assert!((game.market.payoff(0, &s) - game.market.social_value(&s)).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_gradient_matches_finite_differences() {
        let game = random_market::<f64>(3, 4, 15, 2, 0.4, 11).unwrap();
        let f = game.market.social_function();
        let g = game.game();
        for s in g.sample_profiles(5, 3) {
            let x = s.flat();
            let a = f.grad(&x);
            let n = f.fd_grad(&x);
            for i in 0..x.dim() {
                let rel = (a[i] - n[i]).abs() / a[i].abs().max(1e-8);
                assert!(rel < 1e-5, "coord {i}: analytic {} fd {}", a[i], n[i]);
            }
        }
    }

    #[test]
    fn curvature_bound_single_advertiser() {
        // N=1, one channel, one customer, p=0.5, ubar=1:
        // alpha = 1 - (1 - P(2)) = P(2) = 0.75.
        let m = one_customer_market(1, 0.5);
        let alpha = m.curvature_bound(&[v(&[1.0])]).unwrap();
        assert!((alpha - 0.75).abs() < 1e-12);
    }

    #[test]
    fn curvature_bound_degenerate() {
        let m = one_customer_market(2, 0.0);
        assert!(m.curvature_bound(&[v(&[1.0]), v(&[1.0])]).is_err());
    }

    #[test]
    fn curvature_bound_small_probs_near_zero() {
        let game = random_market::<f64>(3, 5, 30, 2, 1e-6, 5).unwrap();
        let alpha = game.curvature_bound().unwrap();
        assert!(alpha < 1e-3, "alpha = {alpha}");
        assert!(alpha >= 0.0);
    }

    #[test]
    fn curvature_bound_below_two() {
        let game = random_market::<f64>(3, 8, 50, 3, 0.1, 9).unwrap();
        let alpha = game.curvature_bound().unwrap();
        assert!(alpha > 0.0 && alpha < 1.0);
    }

    #[test]
    fn sensor_social_examples() {
        let sc = SensorCoverage::new(
            vec![vec![0.5]],
            vec![1.0],
            vec![BudgetPolytope::unit_box(1, 1.0)],
        )
        .unwrap();
        let x = JointProfile::new(vec![v(&[1.0])]);
        assert!((sc.social_value(&x) - 0.5).abs() < 1e-12);
        assert!(sc.social_value(&JointProfile::zeros(1, 1)).abs() < 1e-12);
    }

    #[test]
    fn sensor_alpha_reference_value() {
        let sc = random_sensor::<f64>(5, 30, 0.05, 123).unwrap();
        let expected = 1.0 - 0.95f64.powi(10);
        assert!((sc.alpha() - expected).abs() < 1e-9);
        // Agrees with the generic curvature evaluation over S~.
        let game = sc.game();
        let alpha = crate::functions::curvature(&sc.social_function(), &game.s_tilde()).unwrap();
        assert!((alpha - expected).abs() < 1e-9);
    }

    #[test]
    fn sensor_alpha_zero_probability() {
        let sc = SensorCoverage::new(
            vec![vec![0.0, 0.0]],
            vec![0.5, 0.5],
            vec![BudgetPolytope::unit_box(2, 1.0)],
        )
        .unwrap();
        assert_eq!(sc.alpha(), 0.0);
    }

    #[test]
    fn sensor_gradient_matches_finite_differences() {
        let sc = random_sensor::<f64>(2, 3, 0.2, 77).unwrap();
        let f = sc.social_function();
        let g = sc.game();
        for s in g.sample_profiles(5, 4) {
            let x = s.flat();
            let a = f.grad(&x);
            let n = f.fd_grad(&x);
            for i in 0..x.dim() {
                let rel = (a[i] - n[i]).abs() / a[i].abs().max(1e-8);
                assert!(rel < 1e-5);
            }
        }
    }

    #[test]
    fn affine_sensor_eta_reference() {
        // d=1, N=2, a=1, b=1, ubar=1: eta = 1/(1 + 0.5) = 2/3.
        let asc = AffineWeightSensorCoverage::<f64>::new(
            vec![vec![0.5], vec![0.5]],
            vec![1.0],
            vec![1.0],
            vec![BudgetPolytope::unit_box(1, 1.0), BudgetPolytope::unit_box(1, 1.0)],
        )
        .unwrap();
        assert!((asc.eta() - 2.0 / 3.0).abs() < 1e-12);
        // a = 0 reduces to constant weights: eta = 1.
        let constant = AffineWeightSensorCoverage::new(
            vec![vec![0.5], vec![0.5]],
            vec![0.0],
            vec![1.0],
            vec![BudgetPolytope::unit_box(1, 1.0), BudgetPolytope::unit_box(1, 1.0)],
        )
        .unwrap();
        assert_eq!(constant.eta(), 1.0);
    }

    #[test]
    fn affine_sensor_rejects_nonpositive_base() {
        assert!(AffineWeightSensorCoverage::new(
            vec![vec![0.5]],
            vec![1.0],
            vec![0.0],
            vec![BudgetPolytope::unit_box(1, 1.0)],
        )
        .is_err());
    }

    #[test]
    fn affine_sensor_gradient_matches_finite_differences() {
        let asc = AffineWeightSensorCoverage::<f64>::new(
            vec![vec![0.3, 0.6], vec![0.2, 0.4]],
            vec![0.5, 1.5],
            vec![1.0, 0.5],
            vec![BudgetPolytope::unit_box(2, 1.0), BudgetPolytope::unit_box(2, 1.0)],
        )
        .unwrap();
        let f = asc.social_function();
        let g = asc.game();
        for s in g.sample_profiles(5, 6) {
            let x = s.flat();
            let a = f.grad(&x);
            let n = f.fd_grad(&x);
            for i in 0..x.dim() {
                let rel = (a[i] - n[i]).abs() / a[i].abs().max(1e-8);
                assert!(rel < 1e-5, "coord {i}: {} vs {}", a[i], n[i]);
            }
        }
    }

    #[test]
    fn random_generators_deterministic() {
        let a = random_market::<f64>(3, 5, 10, 2, 0.1, 99).unwrap();
        let b = random_market::<f64>(3, 5, 10, 2, 0.1, 99).unwrap();
        assert_eq!(a.market, b.market);
        let s1 = random_sensor::<f64>(2, 4, 0.05, 7).unwrap();
        let s2 = random_sensor::<f64>(2, 4, 0.05, 7).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn random_sensor_weights_normalized() {
        let sc = random_sensor::<f64>(5, 30, 0.05, 3).unwrap();
        let sum: f64 = sc.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_market_rejects_too_many_edges() {
        assert!(random_market::<f64>(2, 3, 5, 4, 0.1, 0).is_err());
    }

    #[test]
    fn market_text_round_trip() {
        let game = random_market::<f64>(2, 3, 4, 2, 0.3, 21).unwrap();
        let text = game.to_text();
        let back = BudgetAllocationGame::<f64>::from_text(&text).unwrap();
        assert_eq!(game.market, back.market);
        assert_eq!(game.sets, back.sets);
    }

    #[test]
    fn sensor_text_round_trip() {
        let sc = random_sensor::<f64>(3, 4, 0.05, 13).unwrap();
        let text = sc.to_text();
        let back = SensorCoverage::<f64>::from_text(&text).unwrap();
        assert_eq!(sc, back);
    }
}
