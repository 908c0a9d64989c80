//! Closed-form extraction bounds, evaluated with base-2 exponents so that
//! cryptographic magnitudes (H in the millions of bits, collision bounds
//! like 2^-400) neither overflow nor turn into NaN.
//!
//! Every distance returned here is clamped to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden-section search interval for `log2(eps)`.
const LOG_EPS_RANGE: (f64, f64) = (-64.0, 0.0);
const GOLDEN_TOL: f64 = 1e-9;
/// Floors that land this close to an integer snap to it.
const SNAP: f64 = 1e-9;

/// `log2(2^a + 2^b)`.
fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// `log2(2^a - 2^b)` for `a >= b`; `-inf` when they are equal.
fn log2_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp2()).ln_1p() / std::f64::consts::LN_2
}

fn clamp_distance(d: f64) -> f64 {
    d.clamp(0.0, 1.0)
}

fn snap_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP {
        r
    } else {
        x.floor()
    }
}

/// `0.5 * 2^(x/2)` for a radicand given by its base-2 logarithm.
fn half_sqrt_exp2(log2_radicand: f64) -> f64 {
    (log2_radicand / 2.0 - 1.0).exp2()
}

/// `log2(2/e^2 + 1)` with `e = 2^log2_eps`.
fn log2_smoothing_penalty(log2_eps: f64) -> f64 {
    log2_add(1.0 - 2.0 * log2_eps, 0.0)
}

/// `0.5 * sqrt((2^l * delta - 1) + 2^(l - h + log2(2/e^2 + 1)))`, radicand
/// floored at 0, everything passed as base-2 logarithms.
fn almost_universal_term(l: f64, log2_delta: f64, h: f64, log2_eps_bar: f64) -> f64 {
    let collision = l - h + log2_smoothing_penalty(log2_eps_bar);
    let u = l + log2_delta;
    let log2_radicand = if u >= 0.0 {
        log2_add(log2_sub(u, 0.0), collision)
    } else {
        // 2^u - 1 is negative with magnitude 1 - 2^u
        let deficit = log2_sub(0.0, u);
        if collision <= deficit {
            return 0.0;
        }
        log2_sub(collision, deficit)
    };
    half_sqrt_exp2(log2_radicand)
}

/// Distance from uniform of `l` bits hashed by a two-universal family
/// from a source with min-entropy `h`: `0.5 * sqrt(2^(l - h))`.
pub fn classical_delta(l: f64, h: f64) -> f64 {
    clamp_distance(half_sqrt_exp2(l - h))
}

/// Number of bits that can be extracted at distance `delta` from a source
/// with min-entropy `h`: `floor(h - 2 log2(1 / (2 delta)))`, at least 0.
pub fn extractable_bits(h: f64, delta: f64) -> Result<u64> {
    if !(delta > 0.0) || delta > 0.5 {
        return Err(Error::Parameter(format!("distance must lie in (0, 1/2], got {delta}")));
    }
    if !h.is_finite() || h < 0.0 {
        return Err(Error::Parameter(format!("min-entropy must be finite and >= 0, got {h}")));
    }
    let l = snap_floor(h + 2.0 * (2.0 * delta).log2());
    Ok(l.max(0.0) as u64)
}

/// Optimized general bound: distance and the smoothing parameter at which
/// the infimum is attained (0 on the two-universal branch).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralDelta {
    pub delta: f64,
    pub eps_star: f64,
}

/// Leftover-hash distance for a `delta`-almost two-universal family:
/// `inf_eps 0.5 * sqrt((2^l delta - 1) + 2^(l - h + log2(2/eps^2 + 1))) + eps`,
/// or `0.5 * sqrt(2^(l - h))` when `delta <= 2^-l`.
pub fn general_delta(l: f64, delta: f64, h: f64) -> Result<GeneralDelta> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("collision bound must be positive, got {delta}")));
    }
    general_delta_log2(l, delta.log2(), h)
}

/// [`general_delta`] with the collision bound given as `log2(delta)`.
pub fn general_delta_log2(l: f64, log2_delta: f64, h: f64) -> Result<GeneralDelta> {
    if log2_delta.is_nan() || log2_delta > 0.0 {
        return Err(Error::Parameter(format!("collision bound must lie in (0, 1], got 2^{log2_delta}")));
    }
    if log2_delta <= -l {
        return Ok(GeneralDelta {
            delta: classical_delta(l, h),
            eps_star: 0.0,
        });
    }
    let objective = |t: f64| t.exp2() + almost_universal_term(l, log2_delta, h, t);
    let t = golden_section(objective, LOG_EPS_RANGE.0, LOG_EPS_RANGE.1, GOLDEN_TOL);
    // endpoints guard against a minimum pinned to the interval boundary
    let (t, v) = [t, LOG_EPS_RANGE.0, LOG_EPS_RANGE.1]
        .into_iter()
        .map(|t| (t, objective(t)))
        .fold((0.0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    Ok(GeneralDelta {
        delta: clamp_distance(v),
        eps_star: t.exp2(),
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Bound for a two-universal family given smooth min-entropy `h_eps`:
/// `eps + 0.5 * sqrt(2^(l - h_eps))`.
pub fn thm_two_universal_delta(l: f64, h_eps: f64, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Parameter(format!("eps must be >= 0, got {eps}")));
    }
    Ok(clamp_distance(eps + half_sqrt_exp2(l - h_eps)))
}

/// Bound for a `delta`-almost two-universal family given smooth min-entropy
/// `h_eps`: `eps + eps_bar + 0.5 * sqrt((2^l delta - 1) + 2^(l - h_eps + log2(2/eps_bar^2 + 1)))`.
pub fn thm_almost_delta(l: f64, delta: f64, h_eps: f64, eps: f64, eps_bar: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("collision bound must be positive, got {delta}")));
    }
    thm_almost_delta_log2(l, delta.log2(), h_eps, eps, eps_bar)
}

/// [`thm_almost_delta`] with the collision bound given as `log2(delta)`.
pub fn thm_almost_delta_log2(
    l: f64,
    log2_delta: f64,
    h_eps: f64,
    eps: f64,
    eps_bar: f64,
) -> Result<f64> {
    if !(eps_bar > 0.0) {
        return Err(Error::Parameter(format!("eps_bar must be positive, got {eps_bar}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::Parameter(format!("eps must be >= 0, got {eps}")));
    }
    let term = almost_universal_term(l, log2_delta, h_eps, eps_bar.log2());
    Ok(clamp_distance(eps + eps_bar + term))
}

/// Parameters of the concatenated (polynomial then multiply) construction
/// whose seed length scales with the output length rather than the input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortSeedParams {
    pub n: u64,
    pub l: u64,
    pub eps: f64,
    /// Intermediate field degree.
    pub k: u64,
    /// Seed bits, `2k`.
    pub s: u64,
    /// Collision bound of the polynomial stage, `(ceil(n/k) - 1) / 2^k`.
    pub delta1: f64,
    pub log2_delta1: f64,
    /// Collision bound of the multiply stage, `2^-l`.
    pub delta2: f64,
}

impl ShortSeedParams {
    /// `log2(delta1 + delta2)`.
    pub fn log2_delta(&self) -> f64 {
        log2_add(self.log2_delta1, -(self.l as f64))
    }

    /// `3 eps + 0.5 * sqrt(2^(l - h_eps + log2(2/eps^2 + 1)))`.
    pub fn delta_bound(&self, h_eps: f64) -> f64 {
        let radicand = self.l as f64 - h_eps + log2_smoothing_penalty(self.eps.log2());
        clamp_distance(3.0 * self.eps + half_sqrt_exp2(radicand))
    }
}

/// `k = floor(l + log2(n / l) + log2(1 / eps^2))`, `s = 2k`.
pub fn short_seed_params(n: u64, l: u64, eps: f64) -> Result<ShortSeedParams> {
    if l == 0 {
        return Err(Error::Parameter("l must be at least 1".into()));
    }
    if l >= n {
        return Err(Error::Parameter(format!("need l < n, got l = {l}, n = {n}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    let k = snap_floor(l as f64 + (n as f64 / l as f64).log2() - 2.0 * eps.log2()) as u64;
    let r = n.div_ceil(k);
    let log2_delta1 = if r > 1 {
        ((r - 1) as f64).log2() - k as f64
    } else {
        f64::NEG_INFINITY
    };
    Ok(ShortSeedParams {
        n,
        l,
        eps,
        k,
        s: 2 * k,
        delta1: log2_delta1.exp2(),
        log2_delta1,
        delta2: (-(l as f64)).exp2(),
    })
}

/// JSON report of a parameter computation. Fields that do not apply to the
/// query are `null`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: Option<f64>,
    pub eps_star: Option<f64>,
    pub k: Option<u64>,
    pub s: Option<u64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub l: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Direct evaluation of the general objective on a log-spaced grid.
    fn grid_scan(l: f64, delta: f64, h: f64, points: usize) -> f64 {
        (0..points)
            .map(|i| {
                let t = -64.0 + 64.0 * i as f64 / (points - 1) as f64;
                let eps = t.exp2();
                let radicand = (2f64.powf(l) * delta - 1.0) + 2f64.powf(l - h + (2.0 / (eps * eps) + 1.0).log2());
                0.5 * radicand.max(0.0).sqrt() + eps
            })
            .fold(f64::INFINITY, f64::min)
            .min(1.0)
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_delta(10.0, 10.0), 0.5);
        assert_eq!(classical_delta(80.0, 100.0), 2f64.powi(-11));
        assert_eq!(classical_delta(100.0, 10.0), 1.0);
        assert_eq!(classical_delta(1.0, 1e6), 0.0);
    }

    #[test]
    fn extractable_examples() {
        assert_eq!(extractable_bits(100.0, 2f64.powi(-11)).unwrap(), 80);
        assert_eq!(extractable_bits(37.7, 0.5).unwrap(), 37);
        assert_eq!(extractable_bits(0.0, 0.01).unwrap(), 0);
        assert!(extractable_bits(10.0, 0.0).is_err());
        assert!(extractable_bits(10.0, -1.0).is_err());
        assert!(extractable_bits(10.0, 0.6).is_err());
    }

    #[test]
    fn general_examples() {
        let g = general_delta(8.0, 2f64.powi(-8), 8.0).unwrap();
        assert_eq!(g.delta, 0.5);
        assert_eq!(g.eps_star, 0.0);
        assert_eq!(general_delta(8.0, 2f64.powi(-8), 1e6).unwrap().delta, 0.0);
        assert!(general_delta(8.0, 0.0, 8.0).is_err());
    }

    #[test]
    fn general_matches_classical_on_two_universal_branch() {
        for l in [1.0, 4.0, 64.0, 256.0] {
            for h in [0.0, 3.5, 100.0, 1e6] {
                let g = general_delta(l, (-l).exp2(), h).unwrap();
                assert_eq!(g.delta, classical_delta(l, h));
            }
        }
    }

    #[test]
    fn general_matches_grid_scan() {
        // almost-universal shape of the short-seed construction
        for (l, eps, h) in [(4.0f64, 0.01, 40.0), (8.0, 0.05, 30.0), (16.0, 0.001, 80.0), (2.0, 0.2, 12.0)] {
            let delta = (1.0 + 4.0 * eps * eps) * (-l).exp2();
            let g = general_delta(l, delta, h).unwrap();
            let scan = grid_scan(l, delta, h, 10_000);
            assert!(g.delta <= scan + 1e-12, "{g:?} vs {scan}");
            assert!(scan - g.delta < 1e-6, "{g:?} vs {scan}");
        }
    }

    #[test]
    fn theorem_examples() {
        assert_eq!(thm_two_universal_delta(5.0, 9.0, 0.0).unwrap(), classical_delta(5.0, 9.0));
        assert_relative_eq!(thm_two_universal_delta(7.0, 7.0, 0.1).unwrap(), 0.6, epsilon = 1e-15);
        assert_eq!(thm_two_universal_delta(7.0, 1e6, 0.125).unwrap(), 0.125);
        assert!(thm_two_universal_delta(7.0, 7.0, -0.1).is_err());

        // first radicand term vanishes at delta = 2^-l
        let eb: f64 = 0.05;
        let direct = 0.05 + 0.5 * 2f64.powf(4.0 - 20.0 + (2.0 / (eb * eb) + 1.0).log2()).sqrt();
        assert_relative_eq!(
            thm_almost_delta(4.0, 1.0 / 16.0, 20.0, 0.0, eb).unwrap(),
            direct,
            max_relative = 1e-14
        );
        // (l=4, delta=1/8, H=20, eps=0, eps_bar=0.05), evaluated directly:
        // 0.05 + 0.5*sqrt(1 + 2^-16 * 801)
        let v = thm_almost_delta(4.0, 0.125, 20.0, 0.0, 0.05).unwrap();
        assert_relative_eq!(v, 0.05 + 0.5 * (1.0f64 + 801.0 / 65536.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(v, 0.553_046_292_611_093_3, epsilon = 1e-15);
        assert_relative_eq!(
            thm_almost_delta(4.0, 1.0 / 16.0, 1e6, 0.01, 0.02).unwrap(),
            0.03,
            epsilon = 1e-15
        );
        assert!(thm_almost_delta(4.0, 0.125, 20.0, 0.0, 0.0).is_err());
        // negative first term with a tiny second term floors at 0
        assert_eq!(thm_almost_delta(4.0, 1e-3, 1e6, 0.0, 0.1).unwrap(), 0.1);
    }

    #[test]
    fn short_seed_examples() {
        let p = short_seed_params(1 << 20, 256, 2f64.powi(-32)).unwrap();
        assert_eq!((p.k, p.s), (332, 664));
        assert!(p.log2_delta1 <= 2.0 + 2.0 * (-32.0) - 256.0);
        assert_eq!(p.delta2, 2f64.powi(-256));
        let p = short_seed_params(64, 32, 1.0).unwrap();
        assert_eq!(p.k, 33);
        assert!(short_seed_params(32, 32, 0.1).is_err());
        assert!(short_seed_params(32, 0, 0.1).is_err());
        assert!(short_seed_params(64, 8, 0.0).is_err());
        let eps: f64 = 0.01;
        let p = short_seed_params(4096, 16, eps).unwrap();
        let direct = 3.0 * eps + 0.5 * 2f64.powf(16.0 - 60.0 + (2.0 / (eps * eps) + 1.0).log2()).sqrt();
        assert_relative_eq!(p.delta_bound(60.0), direct, max_relative = 1e-14);
    }

    #[test]
    fn short_seed_delta1_within_proof_bound() {
        for (n, l) in [(1u64 << 20, 256u64), (4096, 16), (1024, 8), (100, 3)] {
            for e in [1.0, 0.5, 0.1, 1e-3, 2f64.powi(-40)] {
                let p = short_seed_params(n, l, e).unwrap();
                assert!(p.log2_delta1 <= (4.0 * e * e).log2() - l as f64 + 1e-12, "{p:?}");
            }
        }
    }

    #[test]
    fn finite_for_huge_entropy() {
        for h in [0.0, 1e3, 1e5, 1e6] {
            for l in [1.0, 256.0, 4096.0] {
                assert!(classical_delta(l, h).is_finite());
                assert!(general_delta_log2(l, 1.5f64.log2() - l, h).unwrap().delta.is_finite());
                assert!(general_delta_log2(l, -400.0_f64.min(l - 1.0), h).unwrap().delta.is_finite());
                assert!(thm_almost_delta_log2(l, -l + 0.5, h, 0.0, 1e-3).unwrap().is_finite());
                let p = short_seed_params(1 << 20, 256, 1e-9).unwrap();
                assert!(p.delta_bound(h).is_finite());
            }
        }
    }

    proptest! {
        #[test]
        fn bounds_are_monotone(
            l in 1.0f64..64.0, h in 0.0f64..200.0, dh in 0.0f64..20.0,
            dl in 0.0f64..8.0, excess in 0.0f64..4.0, dx in 0.0f64..2.0, eb in 0.001f64..0.5,
        ) {
            let d = (excess - l).exp2().min(1.0);
            let d2 = (excess + dx - l).exp2().min(1.0);
            prop_assert!(classical_delta(l, h + dh) <= classical_delta(l, h));
            prop_assert!(classical_delta(l + dl, h) >= classical_delta(l, h));

            let g = |l: f64, d: f64, h: f64| general_delta(l, d, h).unwrap().delta;
            let slack = 1e-9;
            prop_assert!(g(l, d, h + dh) <= g(l, d, h) + slack);
            prop_assert!(g(l + dl, d, h) + slack >= g(l, d, h));
            prop_assert!(g(l, d2, h) + slack >= g(l, d, h));

            let t = |l: f64, d: f64, h: f64| thm_almost_delta(l, d, h, 0.0, eb).unwrap();
            prop_assert!(t(l, d, h + dh) <= t(l, d, h));
            prop_assert!(t(l + dl, d, h) >= t(l, d, h));
            prop_assert!(t(l, d2, h) >= t(l, d, h));
        }

        #[test]
        fn general_never_exceeds_any_fixed_eps(l in 1.0f64..32.0, h in 0.0f64..80.0, excess in 0.01f64..3.0, t in -30.0f64..0.0) {
            let d = (excess - l).exp2().min(1.0);
            let g = general_delta(l, d, h).unwrap().delta;
            let eps = t.exp2();
            let fixed = eps + almost_universal_term(l, d.log2(), h, t);
            prop_assert!(g <= fixed + 1e-9);
        }
    }
}
