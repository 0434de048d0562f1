//! Special functions, quantiles and seeded sampling.
//!
//! Every quantile is obtained by safeguarded Newton iteration inside a
//! bracket on a CDF evaluated here (continued-fraction incomplete beta,
//! series / continued-fraction incomplete gamma), so results do not depend
//! on the platform libm beyond `exp`, `ln` and `sqrt`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 500;

/// A value known to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::Domain(format!("probability {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Descriptor of an independent random stream keyed by `(seed, condition, run)`.
///
/// The descriptor is a plain value; [`RngStream::rng`] materialises a fresh
/// generator positioned at the start of the stream, so the same descriptor
/// always yields the same draws regardless of which thread asks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub condition: u32,
    pub run: u32,
    /// Separates independent consumers of the same cell (ratings, resampling).
    pub lane: u32,
}

impl RngStream {
    pub fn new(seed: u64, condition: u32, run: u32) -> Self {
        RngStream { seed, condition, run, lane: 0 }
    }

    /// Same cell, different consumer.
    pub fn lane(self, lane: u32) -> Self {
        RngStream { lane, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let key = splitmix64(self.seed ^ splitmix64(u64::from(self.lane)));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream((u64::from(self.condition) << 32) | u64::from(self.run));
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_frac(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_frac(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("incomplete beta requires a, b > 0 (got a={a}, b={b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    Ok(inc_beta(x, a, b))
}

fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cont_frac(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cont_frac(1.0 - x, b, a) / b
    }
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cont_frac(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

pub fn normal_cdf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    if z < 0.0 {
        0.5 * regularized_gamma_q(0.5, x * x)
    } else {
        0.5 + 0.5 * regularized_gamma_p(0.5, x * x)
    }
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * inc_beta(x, 0.5 * df, 0.5);
    if t < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

fn student_t_pdf(t: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - 0.5 * (df + 1.0) * (1.0 + t * t / df).ln()).exp()
}

pub fn chi_square_cdf(x: f64, df: f64) -> f64 {
    regularized_gamma_p(0.5 * df, 0.5 * x)
}

fn chi_square_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * df;
    ((k - 1.0) * x.ln() - 0.5 * x - k * 2f64.ln() - ln_gamma(k)).exp()
}

fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)).exp()
}

/// Solves `cdf(x) = q` inside `[lo, hi]` by Newton steps that fall back to
/// bisection whenever a step leaves the current bracket.
fn invert_cdf(
    q: f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
) -> f64 {
    let mut x = start.clamp(lo, hi);
    for _ in 0..MAX_ITER {
        let f = cdf(x) - q;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let newton = if d > 0.0 && d.is_finite() { x - f / d } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let scale = next.abs().max(1.0);
        if (next - x).abs() <= 1e-15 * scale || hi - lo <= 1e-15 * scale {
            return next;
        }
        x = next;
    }
    x
}

fn check_open_unit(q: f64, what: &str) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} quantile order {q} must lie in (0, 1)")))
    }
}

// Acklam's rational approximation; used only as a starting point.
fn normal_quantile_guess(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    let tail = |p: f64| {
        let r = (-2.0 * p.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if q < 0.02425 {
        tail(q)
    } else if q > 1.0 - 0.02425 {
        -tail(1.0 - q)
    } else {
        let s = q - 0.5;
        let r = s * s;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * s
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Standard normal quantile `z` with `Φ(z) = q`.
pub fn normal_quantile(q: f64) -> Result<f64> {
    check_open_unit(q, "normal")?;
    if q == 0.5 {
        return Ok(0.0);
    }
    // Solve on the lower half and mirror so that f(q) = -f(1 - q) holds exactly.
    let (p, sign) = if q > 0.5 { (1.0 - q, -1.0) } else { (q, 1.0) };
    let z = invert_cdf(p, -40.0, 0.0, normal_quantile_guess(p), normal_cdf, normal_pdf);
    Ok(sign * z)
}

/// Student's t quantile with `df` degrees of freedom.
pub fn student_t_quantile(q: f64, df: u32) -> Result<f64> {
    check_open_unit(q, "Student t")?;
    if df == 0 {
        return Err(Error::Domain("Student t requires df >= 1".into()));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    let df = f64::from(df);
    let (p, sign) = if q > 0.5 { (1.0 - q, -1.0) } else { (q, 1.0) };
    // Lower-tail bracket: the t quantile is at least as extreme as the normal one.
    let mut lo = -1.0;
    while student_t_cdf(lo, df) > p {
        lo *= 2.0;
    }
    let start = normal_quantile_guess(p).max(lo);
    let t = invert_cdf(p, lo, 0.0, start, |t| student_t_cdf(t, df), |t| student_t_pdf(t, df));
    Ok(sign * t)
}

/// Chi-square quantile with `df` degrees of freedom.
pub fn chi_square_quantile(q: f64, df: u32) -> Result<f64> {
    check_open_unit(q, "chi-square")?;
    if df == 0 {
        return Err(Error::Domain("chi-square requires df >= 1".into()));
    }
    let dff = f64::from(df);
    if df == 1 {
        // Direct route through the normal quantile is better conditioned in the lower tail.
        let z = normal_quantile(0.5 * (1.0 + q))?;
        return Ok(z * z);
    }
    let mut hi = dff.max(1.0);
    while chi_square_cdf(hi, dff) < q {
        hi *= 2.0;
    }
    Ok(invert_cdf(q, 0.0, hi, dff, |x| chi_square_cdf(x, dff), |x| chi_square_pdf(x, dff)))
}

/// Quantile of the Beta(a, b) distribution. `q = 0` and `q = 1` map to the
/// support endpoints exactly.
pub fn beta_quantile(q: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("beta quantile requires a, b > 0 (got a={a}, b={b})")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("beta quantile order {q} outside [0, 1]")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if q == 1.0 {
        return Ok(1.0);
    }
    let start = a / (a + b);
    Ok(invert_cdf(q, 0.0, 1.0, start, |x| inc_beta(x, a, b), |x| beta_pdf(x, a, b)))
}

/// Quantile of already sorted data with linear interpolation between order
/// statistics at position `q (len - 1)`.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Precomputed inverse-CDF sampler over categories `1..=k`.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cumulative: Vec<f64>,
}

impl CategoricalSampler {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("categorical distribution needs at least one category".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain("categorical probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("categorical probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(CategoricalSampler { cumulative })
    }

    pub fn k(&self) -> usize {
        self.cumulative.len()
    }

    /// Draws a category index in `1..=k`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Rounding can leave the last cumulative value just under 1; fall
        // back to the last category with positive mass.
        let idx = if idx >= self.cumulative.len() { self.last_positive() } else { idx };
        idx as u32 + 1
    }

    fn last_positive(&self) -> usize {
        let mut prev = 0.0;
        let mut last = 0;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > prev {
                last = i;
            }
            prev = c;
        }
        last
    }
}

/// Draws one category index in `1..=k` with probability `probs[i - 1]`.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<u32> {
    Ok(CategoricalSampler::new(probs)?.sample(rng))
}

/// Log of the multinomial probability of observing `counts` under `probs`.
pub fn multinomial_log_pmf(counts: &[u64], probs: &[f64]) -> Result<f64> {
    if counts.len() != probs.len() {
        return Err(Error::Domain(format!("{} counts for {} categories", counts.len(), probs.len())));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
    }
    let n: u64 = counts.iter().sum();
    let mut log_p = ln_gamma(n as f64 + 1.0);
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_p += c as f64 * p.ln() - ln_gamma(c as f64 + 1.0);
    }
    Ok(log_p)
}
