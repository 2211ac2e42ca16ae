//! Special-function and L-function numerics: the Legendre function of
//! the second kind by tanh-sinh quadrature, Dirichlet L(s,ε) and its
//! logarithmic derivative at 1 by accelerated character sums, ζ′/ζ(2)
//! by Euler–Maclaurin, and Euler's constant γ.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::arith::kronecker;
use crate::error::{Error, Result};
use crate::quadfield::FundamentalDiscriminant;

/// Whether an error bound comes with a proof or from self-consistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorFlag {
    Rigorous,
    Heuristic,
}

impl ErrorFlag {
    pub fn combine(self, other: ErrorFlag) -> ErrorFlag {
        if self == ErrorFlag::Rigorous && other == ErrorFlag::Rigorous {
            ErrorFlag::Rigorous
        } else {
            ErrorFlag::Heuristic
        }
    }
}

/// A real value together with an absolute error bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RealWithError {
    pub value: f64,
    pub abs_error: f64,
    pub flag: ErrorFlag,
}

impl RealWithError {
    pub fn new(value: f64, abs_error: f64, flag: ErrorFlag) -> Self {
        RealWithError {
            value,
            abs_error,
            flag,
        }
    }

    pub fn exact(value: f64) -> Self {
        RealWithError::new(value, 0.0, ErrorFlag::Rigorous)
    }

    pub fn add(self, other: RealWithError) -> RealWithError {
        RealWithError::new(
            self.value + other.value,
            self.abs_error + other.abs_error,
            self.flag.combine(other.flag),
        )
    }

    pub fn scale(self, k: f64) -> RealWithError {
        RealWithError::new(self.value * k, self.abs_error * k.abs(), self.flag)
    }
}

// ---------------------------------------------------------------------
// tanh-sinh quadrature on (0,1)

const TS_TMAX: f64 = 3.9;
const TS_MAX_LEVEL: usize = 12;

fn ts_nodes() -> &'static Vec<Vec<(f64, f64)>> {
    static NODES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    NODES.get_or_init(|| {
        // levels[l] holds the nodes new at step size h = 2^-l (level 0:
        // all nodes at h = 1, later levels only the odd multiples).
        let mut levels = Vec::with_capacity(TS_MAX_LEVEL + 1);
        for l in 0..=TS_MAX_LEVEL {
            let h = 0.5f64.powi(l as i32);
            let mut nodes = Vec::new();
            let kmax = (TS_TMAX / h) as i64;
            for k in -kmax..=kmax {
                if l > 0 && k % 2 == 0 {
                    continue;
                }
                let t = k as f64 * h;
                let sh = (PI / 2.0) * t.sinh();
                // x = (1 + tanh(sh))/2 in a form accurate near x = 0
                let x = 1.0 / (1.0 + (-2.0 * sh).exp());
                let w = (PI / 4.0) * t.cosh() / sh.cosh().powi(2);
                if w.is_finite() && w > 0.0 && x > 0.0 && x < 1.0 {
                    nodes.push((x, w));
                }
            }
            levels.push(nodes);
        }
        levels
    })
}

/// Adaptive tanh-sinh quadrature of f over (0,1). Handles integrable
/// endpoint singularities. Returns (value, error estimate).
pub fn tanh_sinh_01(f: impl Fn(f64) -> f64, rel_tol: f64) -> Result<(f64, f64)> {
    let levels = ts_nodes();
    let mut acc = 0.0f64;
    let mut prev = f64::NAN;
    for (l, nodes) in levels.iter().enumerate() {
        let h = 0.5f64.powi(l as i32);
        for &(x, w) in nodes {
            let fx = f(x);
            if fx.is_finite() {
                acc += w * fx;
            }
        }
        let val = acc * h;
        if l >= 3 {
            let diff = (val - prev).abs();
            if diff <= rel_tol * val.abs().max(f64::MIN_POSITIVE) {
                return Ok((val, diff));
            }
        }
        prev = val;
        // acc carries Σ w·f over all nodes seen so far; halving h next
        // level reuses it since new nodes are exactly the odd multiples.
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh did not reach relative tolerance {rel_tol}"
    )))
}

/// Default quadrature tolerance used throughout (also part of the
/// spectral cache key).
pub const Q_TOL: f64 = 1e-10;

/// Legendre function of the second kind Q_{s-1}(t) for s > 0, t > 1,
/// via the integral ∫₀^∞ du/(t + √(t²−1)·cosh u)^s after the
/// substitution v = e^{−u}.
pub fn legendre_q(s: f64, t: f64) -> Result<RealWithError> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("legendre_q requires s > 0, got {s}")));
    }
    if !(t > 1.0) {
        return Err(Error::InvalidInput(format!("legendre_q requires t > 1, got {t}")));
    }
    let w = (t * t - 1.0).sqrt();
    let two_s = 2f64.powf(s);
    let (val, err) = tanh_sinh_01(
        |v| two_s * v.powf(s - 1.0) / (w * v * v + 2.0 * t * v + w).powf(s),
        Q_TOL,
    )?;
    Ok(RealWithError::new(val, err, ErrorFlag::Heuristic))
}

// ---------------------------------------------------------------------
// Accelerated periodic character sums

fn neumaier_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in terms {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Σ_{n≥1} c(n)·f(n) for a periodic coefficient sequence with zero
/// period sum and an eventually completely monotone f: direct sum to m,
/// then iterated Abel summation of the tail. The partial sums of c are
/// periodic, so each Abel step splits off a boundary term and leaves a
/// new zero-mean periodic sequence against the forward difference of f.
/// Returns (value, tail bound).
fn accelerated_periodic_sum(
    cvals: &[f64],
    f: impl Fn(f64) -> f64,
    m: usize,
    levels: usize,
) -> (f64, f64) {
    let p = cvals.len();
    let direct = neumaier_sum((1..=m).map(|n| cvals[(n - 1) % p] * f(n as f64)));

    // forward differences Δ^j f(m+1), Δg(n) = g(n) - g(n+1)
    let mut table: Vec<f64> = (0..=levels).map(|i| f((m + 1 + i) as f64)).collect();
    let mut diffs = vec![table[0]];
    for _ in 0..levels {
        for i in 0..table.len() - 1 {
            table[i] -= table[i + 1];
        }
        table.pop();
        diffs.push(table[0]);
    }

    let mut c: Vec<f64> = cvals.to_vec();
    let mut correction = 0.0f64;
    for &g_at_m1 in diffs.iter().take(levels) {
        let mut prefix = Vec::with_capacity(p);
        let mut acc = 0.0f64;
        for &ci in &c {
            acc += ci;
            prefix.push(acc);
        }
        let mu = prefix.iter().sum::<f64>() / p as f64;
        let s_m = prefix[(m - 1) % p];
        correction += (mu - s_m) * g_at_m1;
        for i in 0..p {
            c[i] = prefix[i] - mu;
        }
    }
    // final level bound: |Σ_{n>m} c_L(n)·Δ^L f(n)| ≤ 2·max|S_L|·Δ^L f(m+1)
    let mut prefix_max = 0.0f64;
    let mut acc = 0.0f64;
    for &ci in &c {
        acc += ci;
        prefix_max = prefix_max.max(acc.abs());
    }
    let bound = 2.0 * prefix_max * diffs[levels].abs()
        + 1e-15 * (direct.abs() + 1.0)
        + m as f64 * 1e-18;
    (direct + correction, bound)
}

fn character_values(disc: &FundamentalDiscriminant) -> Vec<f64> {
    let p = disc.abs_d();
    (1..=p)
        .map(|n| kronecker(disc.d(), n as i64) as f64)
        .collect()
}

const CHAR_SUM_LEVELS: usize = 3;
const CHAR_SUM_MAX_M: usize = 1 << 23;

fn char_series(
    disc: &FundamentalDiscriminant,
    f: impl Fn(f64) -> f64 + Copy,
    tol: f64,
) -> Result<RealWithError> {
    let cvals = character_values(disc);
    let mut m = 10_000.max(20 * cvals.len());
    loop {
        let (value, bound) = accelerated_periodic_sum(&cvals, f, m, CHAR_SUM_LEVELS);
        if bound <= tol {
            return Ok(RealWithError::new(value, bound, ErrorFlag::Heuristic));
        }
        m *= 2;
        if m > CHAR_SUM_MAX_M {
            return Err(Error::Tolerance(format!(
                "character series for D = {} stuck above tol {tol} (bound {bound:.3e})",
                disc.d()
            )));
        }
    }
}

/// Dirichlet L(s, ε_D) with ε_D(n) = kronecker(D, n), for s > 1/2.
pub fn dirichlet_l(disc: &FundamentalDiscriminant, s: f64, tol: f64) -> Result<RealWithError> {
    if !(s > 0.5) {
        return Err(Error::InvalidInput(format!(
            "dirichlet_l requires s > 1/2, got {s}"
        )));
    }
    char_series(disc, move |n: f64| n.powf(-s), tol)
}

/// L′(1,ε)/L(1,ε), with L′(1) = −Σ ε(n)·log(n)/n summed by the same
/// acceleration.
pub fn l_log_deriv_at_1(disc: &FundamentalDiscriminant, tol: f64) -> Result<RealWithError> {
    let lp = char_series(disc, |n: f64| n.ln() / n, tol / 2.0)?;
    let lp = lp.scale(-1.0);
    let l1 = dirichlet_l(disc, 1.0, tol / 2.0)?;
    let value = lp.value / l1.value;
    let abs_error =
        (lp.abs_error + value.abs() * l1.abs_error) / l1.value.abs();
    Ok(RealWithError::new(value, abs_error, ErrorFlag::Heuristic))
}

// ---------------------------------------------------------------------
// Zeta and Euler's constant

/// ζ(s) for s > 1, Euler–Maclaurin.
pub fn zeta(s: f64) -> Result<RealWithError> {
    if !(s > 1.0) {
        return Err(Error::InvalidInput(format!("zeta requires s > 1, got {s}")));
    }
    let m = 1000usize;
    let head = neumaier_sum((1..m).map(|n| (n as f64).powf(-s)));
    let mf = m as f64;
    let tail = mf.powf(1.0 - s) / (s - 1.0) + mf.powf(-s) / 2.0
        + s * mf.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * mf.powf(-s - 3.0) / 720.0;
    let next = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * mf.powf(-s - 5.0) / 30240.0;
    Ok(RealWithError::new(
        head + tail,
        2.0 * next.abs() + 1e-14,
        ErrorFlag::Rigorous,
    ))
}

/// ζ′(2)/ζ(2) with ζ(2) = π²/6 and ζ′(2) = −Σ log n / n² summed with an
/// Euler–Maclaurin tail correction.
pub fn zeta_log_deriv_at_2() -> Result<RealWithError> {
    let m = 10_000usize;
    let head = neumaier_sum((2..m).map(|n| {
        let x = n as f64;
        x.ln() / (x * x)
    }));
    let x = m as f64;
    let lx = x.ln();
    let g = lx / (x * x);
    let g1 = (1.0 - 2.0 * lx) / (x * x * x);
    let g3 = (26.0 - 24.0 * lx) / x.powi(5);
    let tail = (lx + 1.0) / x + g / 2.0 - g1 / 12.0 + g3 / 720.0;
    let zeta_prime_2 = -(head + tail);
    let zeta_2 = PI * PI / 6.0;
    let err = 200.0 * lx / x.powi(7) + 1e-14;
    Ok(RealWithError::new(
        zeta_prime_2 / zeta_2,
        err / zeta_2,
        ErrorFlag::Rigorous,
    ))
}

/// Euler's constant γ by Euler–Maclaurin on the harmonic sum; the
/// remainder is bounded by the first omitted Bernoulli term.
pub fn euler_gamma() -> RealWithError {
    let m = 10_000usize;
    let h = neumaier_sum((1..=m).map(|n| 1.0 / n as f64));
    let x = m as f64;
    let gamma = h - x.ln() - 1.0 / (2.0 * x) + 1.0 / (12.0 * x * x)
        - 1.0 / (120.0 * x.powi(4))
        + 1.0 / (252.0 * x.powi(6))
        - 1.0 / (240.0 * x.powi(8));
    // next term: B10/(10 M^10) = 1/(132 M^10)
    let err = 1.0 / (132.0 * x.powi(10)) + 1e-15;
    RealWithError::new(gamma, err, ErrorFlag::Rigorous)
}
