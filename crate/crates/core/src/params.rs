//! RMAT parameter-space geometry.
//!
//! For a given edge count `E` the feasible region is the nested box
//!
//! ```text
//! N in [n_min, E + 1],   n_min = smallest N with N (N - 1) >= 20 E
//! a in [1/4, 1]
//! b in [max(0, 1 - 3a), min(a, 1 - a)]
//! c in [max(0, 1 - 2a - b), min(a, 1 - a - b)]
//! d = 1 - a - b - c
//! ```
//!
//! Every point of the box is a valid RMAT configuration with `a` dominant.
//! Each coordinate is mapped affinely from its (possibly `a`-dependent)
//! interval onto `[0, 1]`; grids, Beta distributions and CDFs all live on
//! these unit coordinates, which makes the per-dimension product of CDF
//! differences an exact cell probability.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::rmat::RmatParams;

/// Upper bound on each Beta shape parameter.
pub const BETA_PARAM_MAX: f64 = 100.0;

/// Number of optimized parameters: `N`, `a`, `b`, `c` in that order.
pub const DIMS: usize = 4;

pub const DIM_NAMES: [&str; DIMS] = ["n", "a", "b", "c"];

/// Smallest `N` with `2E / (N (N - 1)) <= 1/10`.
pub fn n_min_for_edges(e: u64) -> u64 {
    let target = 20 * e as u128;
    let mut n = ((1.0 + (1.0 + 80.0 * e as f64).sqrt()) / 2.0).ceil() as u128;
    while n * (n - 1) < target {
        n += 1;
    }
    while n > 2 && (n - 1) * (n - 2) >= target {
        n -= 1;
    }
    n as u64
}

/// Feasible `N` range for one edge count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamBounds {
    pub e: u64,
    pub n_min: u64,
    pub n_max: u64,
}

pub fn b_range(a: f64) -> (f64, f64) {
    ((1.0 - 3.0 * a).max(0.0), a.min(1.0 - a))
}

pub fn c_range(a: f64, b: f64) -> (f64, f64) {
    ((1.0 - 2.0 * a - b).max(0.0), a.min(1.0 - a - b))
}

fn to_unit_interval(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn from_unit_interval(u: f64, (lo, hi): (f64, f64)) -> f64 {
    (lo + u * (hi - lo)).clamp(lo, hi)
}

impl ParamBounds {
    pub fn for_edges(e: u64) -> Result<Self> {
        let n_min = n_min_for_edges(e);
        let n_max = e + 1;
        if n_min > n_max {
            return Err(Error::InvalidParams(format!(
                "E = {e} admits no N with density <= 0.1 that can still be connected"
            )));
        }
        Ok(ParamBounds { e, n_min, n_max })
    }

    fn n_span(&self) -> u64 {
        self.n_max - self.n_min
    }

    pub fn unit_n(&self, n: u64) -> f64 {
        if self.n_span() == 0 {
            0.0
        } else {
            (n.saturating_sub(self.n_min) as f64 / self.n_span() as f64).clamp(0.0, 1.0)
        }
    }

    /// Inverse of [`ParamBounds::unit_n`] on grid points; a uniform `u`
    /// maps to a uniform integer on `[n_min, n_max]`.
    pub fn n_from_unit(&self, u: f64) -> u64 {
        let span = self.n_span();
        let k = (u.clamp(0.0, 1.0) * (span + 1) as f64).floor() as u64;
        self.n_min + k.min(span)
    }

    pub fn to_unit(&self, p: &RmatParams) -> UnitPoint {
        let [a, b, c, _] = p.r;
        UnitPoint([
            self.unit_n(p.n_param),
            to_unit_interval(a, (0.25, 1.0)),
            to_unit_interval(b, b_range(a)),
            to_unit_interval(c, c_range(a, b)),
        ])
    }

    pub fn from_unit(&self, u: &UnitPoint) -> RmatParams {
        let [un, ua, ub, uc] = u.0;
        let a = from_unit_interval(ua, (0.25, 1.0));
        let b = from_unit_interval(ub, b_range(a));
        let c = from_unit_interval(uc, c_range(a, b));
        let d = (1.0 - a - b - c).max(0.0);
        RmatParams {
            n_param: self.n_from_unit(un),
            e_param: self.e,
            r: [a, b, c, d],
        }
    }
}

/// Unit-normalized coordinates `(u_N, u_a, u_b, u_c)`, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitPoint(pub [f64; DIMS]);

impl UnitPoint {
    pub fn of(p: &RmatParams) -> Result<Self> {
        Ok(ParamBounds::for_edges(p.e_param)?.to_unit(p))
    }
}

/// Shape parameters of a Beta distribution on `[0, 1]`, both in `(0, 100]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaSpec {
    pub const UNIFORM: BetaSpec = BetaSpec { alpha: 1.0, beta: 1.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x <= BETA_PARAM_MAX;
        if !ok(alpha) || !ok(beta) {
            return Err(Error::InvalidParams(format!(
                "Beta({alpha}, {beta}) outside (0, {BETA_PARAM_MAX}]"
            )));
        }
        Ok(BetaSpec { alpha, beta })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        beta_cdf(x, *self)
    }

    fn sampler(&self) -> Beta<f64> {
        Beta::new(self.alpha, self.beta).expect("validated Beta parameters")
    }
}

/// One [`BetaSpec`] per optimized parameter, ordered `N, a, b, c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QVector(pub [BetaSpec; DIMS]);

impl QVector {
    pub const UNIFORM: QVector = QVector([BetaSpec::UNIFORM; DIMS]);

    /// Distributions reported for the full-scale optimization run.
    pub fn reference_result() -> Self {
        QVector([
            BetaSpec { alpha: 0.35, beta: 1.16 },
            BetaSpec { alpha: 1.35, beta: 0.98 },
            BetaSpec { alpha: 1.46, beta: 0.23 },
            BetaSpec { alpha: 1.06, beta: 0.91 },
        ])
    }

    /// Flat `[alpha_n, beta_n, alpha_a, beta_a, ...]`.
    pub fn to_array(&self) -> [f64; 2 * DIMS] {
        let mut out = [0.0; 2 * DIMS];
        for (k, s) in self.0.iter().enumerate() {
            out[2 * k] = s.alpha;
            out[2 * k + 1] = s.beta;
        }
        out
    }

    pub fn from_array(x: &[f64; 2 * DIMS]) -> Result<Self> {
        let mut specs = [BetaSpec::UNIFORM; DIMS];
        for (k, s) in specs.iter_mut().enumerate() {
            *s = BetaSpec::new(x[2 * k], x[2 * k + 1])?;
        }
        Ok(QVector(specs))
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.0 {
            BetaSpec::new(s.alpha, s.beta)?;
        }
        Ok(())
    }

    /// Key names used by the `key=value` file format, parallel to [`QVector::to_array`].
    pub fn keys() -> [String; 2 * DIMS] {
        std::array::from_fn(|i| {
            let kind = if i % 2 == 0 { "alpha" } else { "beta" };
            format!("{kind}_{}", DIM_NAMES[i / 2])
        })
    }
}

fn check_edge_range(e_min: u64, e_max: u64) -> Result<()> {
    if e_min < 10 || e_max <= e_min {
        return Err(Error::InvalidConfig(format!(
            "edge range [{e_min}, {e_max}] needs e_min >= 10 and e_max > e_min"
        )));
    }
    ParamBounds::for_edges(e_min)?;
    Ok(())
}

/// Naive baseline draw: every parameter uniform on its feasible interval,
/// sampled in the order `E, N, a, b, c`.
pub fn sample_baseline<R: Rng + ?Sized>(e_min: u64, e_max: u64, rng: &mut R) -> Result<RmatParams> {
    check_edge_range(e_min, e_max)?;
    let e = rng.random_range(e_min..=e_max);
    let bounds = ParamBounds::for_edges(e)?;
    let n = rng.random_range(bounds.n_min..=bounds.n_max);
    let a = rng.random_range(0.25..1.0);
    let b = uniform_in(rng, b_range(a));
    let c = uniform_in(rng, c_range(a, b));
    let d = (1.0 - a - b - c).max(0.0);
    Ok(RmatParams { n_param: n, e_param: e, r: [a, b, c, d] })
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draw with `E` uniform and each unit coordinate Beta-distributed per `q`.
pub fn sample_from_q<R: Rng + ?Sized>(
    q: &QVector,
    e_min: u64,
    e_max: u64,
    rng: &mut R,
) -> Result<RmatParams> {
    check_edge_range(e_min, e_max)?;
    q.validate()?;
    let e = rng.random_range(e_min..=e_max);
    let bounds = ParamBounds::for_edges(e)?;
    let mut u = [0.0; DIMS];
    for (k, spec) in q.0.iter().enumerate() {
        u[k] = spec.sampler().sample(rng);
    }
    Ok(bounds.from_unit(&UnitPoint(u)))
}

/// Axis-aligned box in the unit hypercube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamCell {
    pub lo: [f64; DIMS],
    pub hi: [f64; DIMS],
}

impl ParamCell {
    pub const FULL: ParamCell = ParamCell { lo: [0.0; DIMS], hi: [1.0; DIMS] };
}

/// Probability that a draw from `q` lands in `cell`: the product over
/// dimensions of CDF differences.
pub fn cell_probability(q: &QVector, cell: &ParamCell) -> Result<f64> {
    let mut p = 1.0;
    for k in 0..DIMS {
        let spec = q.0[k];
        let mass = beta_cdf(cell.hi[k], spec)? - beta_cdf(cell.lo[k], spec)?;
        p *= mass.max(0.0);
    }
    Ok(p.min(1.0))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, reflection below 1/2).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(alpha, beta)`.
pub fn beta_cdf(x: f64, spec: BetaSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta_cdf argument {x} outside [0, 1]")));
    }
    let BetaSpec { alpha: a, beta: b } = spec;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("Beta({a}, {b}) shape must be positive")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let front = ln_front.exp();
    // the fraction converges fast on the side below the mean
    let v = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    };
    Ok(v.clamp(0.0, 1.0))
}
