//! Closed-form two-class income distribution.
//!
//! Incomes below the crossover `m_l` follow a Boltzmann-Gibbs (exponential)
//! density with scale `T`; incomes above follow a Pareto power law with index
//! `alpha`. The tail amplitude is fixed by normalization rather than fitted,
//! which makes the density a proper three-parameter family:
//!
//! ```text
//! p(m) = (1/T) exp(-m/T)          for m <  m_l
//! p(m) = A m^-(1+alpha)           for m >= m_l,   A = alpha m_l^alpha exp(-m_l/T)
//! ```
//!
//! The survival function is continuous everywhere:
//!
//! ```text
//! P(income >= m) = exp(-m/T)      for m <= m_l
//! P(income >= m) = B m^-alpha     for m >= m_l,   B = A / alpha
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::numeric::KahanAccumulator;

/// Quantile resolution used by [`TwoClassParams::analytic_gini`].
const GINI_QUADRATURE_PANELS: usize = 200_000;

/// Parameters of the two-class distribution.
///
/// `temperature` and `crossover` are in currency units, `pareto_index` is
/// dimensionless. All must be positive and finite. A `pareto_index <= 1` is
/// accepted at construction (the density exists) but operations that need a
/// finite mean return [`Error::DivergentMean`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoClassParams {
    temperature: f64,
    pareto_index: f64,
    crossover: f64,
    /// Survival probability at the crossover, exp(-m_l/T).
    tail_probability: f64,
}

impl TwoClassParams {
    pub fn new(temperature: f64, pareto_index: f64, crossover: f64) -> Result<Self> {
        check_positive("temperature", temperature)?;
        check_positive("pareto_index", pareto_index)?;
        check_positive("crossover", crossover)?;
        Ok(Self {
            temperature,
            pareto_index,
            crossover,
            tail_probability: (-crossover / temperature).exp(),
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn pareto_index(&self) -> f64 {
        self.pareto_index
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    /// Normalization amplitude A = alpha * m_l^alpha * exp(-m_l/T).
    pub fn amplitude(&self) -> f64 {
        self.pareto_index * self.crossover.powf(self.pareto_index) * self.tail_probability
    }

    /// Tail survival coefficient B = A / alpha = m_l^alpha * exp(-m_l/T).
    pub fn tail_coefficient(&self) -> f64 {
        self.crossover.powf(self.pareto_index) * self.tail_probability
    }

    /// Probability that an income is at or above the crossover.
    pub fn tail_probability(&self) -> f64 {
        self.tail_probability
    }

    /// Whether the parameters sit in the intended regime m_l/T > 1.
    ///
    /// Not enforced at construction: the pure-Pareto limit (m_l << T) is a
    /// legitimate degenerate use, e.g. as an oracle for inequality measures.
    pub fn two_class_regime(&self) -> bool {
        self.crossover > self.temperature
    }

    /// Probability density per currency unit.
    ///
    /// At exactly `m = crossover` the Pareto branch applies.
    pub fn pdf(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::NegativeIncome(m));
        }
        if m < self.crossover {
            Ok((-m / self.temperature).exp() / self.temperature)
        } else {
            // A m^-(1+alpha) evaluated in ratio form for stability.
            Ok(self.pareto_index / m
                * (m / self.crossover).powf(-self.pareto_index)
                * self.tail_probability)
        }
    }

    /// Survival function P(income >= m); continuous and non-increasing, 1 at zero.
    pub fn ccdf(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::NegativeIncome(m));
        }
        Ok(self.survival(m))
    }

    fn survival(&self, m: f64) -> f64 {
        if m <= self.crossover {
            (-m / self.temperature).exp()
        } else {
            (m / self.crossover).powf(-self.pareto_index) * self.tail_probability
        }
    }

    /// Analytic mean of the distribution.
    pub fn mean(&self) -> Result<f64> {
        if self.pareto_index <= 1.0 {
            return Err(Error::DivergentMean(self.pareto_index));
        }
        let t = self.temperature;
        let ml = self.crossover;
        let a = self.pareto_index;
        let p = self.tail_probability;
        Ok(t - (ml + t) * p + a / (a - 1.0) * ml * p)
    }

    /// Partial first moment: integral of m' * pdf(m') over [0, m].
    pub fn partial_first_moment(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::NegativeIncome(m));
        }
        let t = self.temperature;
        let ml = self.crossover;
        let a = self.pareto_index;
        let bulk = |x: f64| {
            let e = (-x / t).exp();
            t * (1.0 - e) - x * e
        };
        if m <= ml {
            Ok(bulk(m))
        } else {
            let tail = a * ml * self.tail_probability / (a - 1.0)
                * (1.0 - (m / ml).powf(1.0 - a));
            Ok(bulk(ml) + tail)
        }
    }

    /// Income at survival probability `u` in (0, 1].
    fn inverse_survival(&self, u: f64) -> f64 {
        if u >= self.tail_probability {
            -self.temperature * u.ln()
        } else {
            self.crossover * (self.tail_probability / u).powf(1.0 / self.pareto_index)
        }
    }

    /// Quantile function (inverse CDF) for a population fraction in [0, 1).
    pub fn quantile(&self, fraction: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidParameter {
                name: "fraction",
                reason: format!("must be in [0, 1), got {fraction}"),
            });
        }
        Ok(self.inverse_survival(1.0 - fraction))
    }

    /// Draw `n` i.i.d. incomes by inverting the exact survival function.
    ///
    /// Deterministic for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptySampleRequest);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                // 1 - U maps [0,1) onto (0,1], keeping the inverse finite.
                let u = 1.0 - rng.random::<f64>();
                self.inverse_survival(u)
            })
            .collect())
    }

    /// Gini coefficient of the model, from a trapezoid sum over the model's
    /// Lorenz curve evaluated at 200k quantile points.
    pub fn analytic_gini(&self) -> Result<f64> {
        self.gini_by_quadrature(GINI_QUADRATURE_PANELS)
    }

    /// Same as [`Self::analytic_gini`] with an explicit panel count, so the
    /// discretization can be checked at increasing resolution.
    pub fn gini_by_quadrature(&self, panels: usize) -> Result<f64> {
        if self.pareto_index <= 1.0 {
            return Err(Error::DivergentMean(self.pareto_index));
        }
        assert!(panels >= 2, "quadrature needs at least 2 panels");
        let mean = self.mean()?;
        let k = panels as f64;
        let mut area = KahanAccumulator::new();
        let mut prev_y = 0.0;
        for j in 1..=panels {
            let y = if j == panels {
                1.0
            } else {
                let u = (panels - j) as f64 / k;
                let m = self.inverse_survival(u);
                self.partial_first_moment(m)? / mean
            };
            area.add((y + prev_y) / k);
            prev_y = y;
        }
        Ok(1.0 - area.value())
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Adaptive Simpson quadrature, used only as an independent oracle.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
        }
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            whole: f64,
            m: f64,
            fm: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let (left, lm, flm) = simpson(f, a, fa, m, fm);
            let (right, rm, frm) = simpson(f, m, fm, b, fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                    + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let (whole, m, fm) = simpson(f, a, fa, b, fb);
        recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
    }

    /// Integrates g over [0, upper], splitting at the crossover where the
    /// density has its jump.
    fn integrate_split(p: &TwoClassParams, g: &dyn Fn(f64) -> f64, upper: f64, tol: f64) -> f64 {
        let ml = p.crossover().min(upper);
        let left = adaptive_simpson(g, 0.0, ml, tol / 2.0);
        if upper > ml {
            left + adaptive_simpson(g, ml, upper, tol / 2.0)
        } else {
            left
        }
    }

    fn fig2_params() -> TwoClassParams {
        TwoClassParams::new(1655.0, 2.181, 5000.0).unwrap()
    }

    #[test]
    fn pdf_at_origin_is_inverse_temperature() {
        let p = TwoClassParams::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(p.pdf(0.0).unwrap(), 1.0);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let p = fig2_params();
        let f = |m: f64| p.pdf(m).unwrap();
        let total = integrate_split(&p, &f, 1.0e7, 1e-9);
        assert!((total - 1.0).abs() < 1e-4, "integral {total}");
    }

    #[test]
    fn pdf_jump_at_crossover_is_alpha_t_over_ml() {
        // T=1, alpha=2, m_l=3: left limit e^-3, Pareto value (2/3) e^-3.
        let p = TwoClassParams::new(1.0, 2.0, 3.0).unwrap();
        let left = p.pdf(3.0 - 1e-12).unwrap();
        let right = p.pdf(3.0).unwrap();
        assert_relative_eq!(left, (-3.0f64).exp(), max_relative = 1e-9);
        assert_relative_eq!(right, 2.0 / 3.0 * (-3.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(right / left, 2.0 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn amplitude_matches_normalization() {
        let p = TwoClassParams::new(1.0, 2.0, 3.0).unwrap();
        assert_relative_eq!(
            p.amplitude(),
            2.0 * 9.0 * (-3.0f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p.tail_coefficient(),
            p.amplitude() / p.pareto_index(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn ccdf_at_zero_is_one() {
        for p in [fig2_params(), TwoClassParams::new(1.0, 0.8, 3.0).unwrap()] {
            assert_eq!(p.ccdf(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn ccdf_branches_agree_at_crossover() {
        let p = fig2_params();
        let at = p.ccdf(5000.0).unwrap();
        let above = p.ccdf(5000.0 + 1e-9 * 5000.0).unwrap();
        let below = p.ccdf(5000.0 - 1e-9 * 5000.0).unwrap();
        assert_relative_eq!(at, (-5000.0f64 / 1655.0).exp(), max_relative = 1e-12);
        assert!((above - below).abs() < 1e-9);
    }

    #[test]
    fn ccdf_tail_hand_value() {
        // T=1, alpha=2, m_l=3, m=6: B 6^-2 = 9 e^-3 / 36 = 0.25 e^-3.
        let p = TwoClassParams::new(1.0, 2.0, 3.0).unwrap();
        assert_relative_eq!(
            p.ccdf(6.0).unwrap(),
            0.25 * (-3.0f64).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(p.ccdf(6.0).unwrap(), 0.012446767091965984, max_relative = 1e-12);
    }

    #[test]
    fn negative_income_is_rejected() {
        let p = fig2_params();
        assert!(matches!(p.pdf(-1.0), Err(Error::NegativeIncome(_))));
        assert!(matches!(p.ccdf(-0.5), Err(Error::NegativeIncome(_))));
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(TwoClassParams::new(0.0, 2.0, 3.0).is_err());
        assert!(TwoClassParams::new(1.0, -2.0, 3.0).is_err());
        assert!(TwoClassParams::new(1.0, 2.0, f64::NAN).is_err());
    }

    #[test]
    fn mean_reaches_pure_exponential_limit() {
        let t = 1655.0;
        let p = TwoClassParams::new(t, 2.181, 1.0e6 * t).unwrap();
        assert_relative_eq!(p.mean().unwrap(), t, max_relative = 1e-6);
    }

    #[test]
    fn mean_matches_quadrature() {
        let p = fig2_params();
        let f = |m: f64| m * p.pdf(m).unwrap();
        // The integrand above 10^7 contributes ~B (a-1)^-1 m^(1-a): bound the cut.
        let numeric = integrate_split(&p, &f, 1.0e9, 1e-7);
        assert_relative_eq!(p.mean().unwrap(), numeric, max_relative = 1e-6);
    }

    #[test]
    fn mean_grows_as_pareto_index_falls_to_one() {
        let at = |a: f64| TwoClassParams::new(1.0, a, 2.0).unwrap().mean().unwrap();
        let (m15, m11, m101) = (at(1.5), at(1.1), at(1.01));
        assert!(m15 < m11 && m11 < m101);
        assert!(m101.is_finite());
        assert!(matches!(
            TwoClassParams::new(1.0, 1.0, 2.0).unwrap().mean(),
            Err(Error::DivergentMean(_))
        ));
    }

    #[test]
    fn sampler_is_deterministic_and_rejects_empty() {
        let p = fig2_params();
        assert!(matches!(p.sample(0, 7), Err(Error::EmptySampleRequest)));
        let a = p.sample(1000, 7).unwrap();
        let b = p.sample(1000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn sample_mean_matches_analytic_mean() {
        let p = fig2_params();
        let draws = p.sample(100_000, 11).unwrap();
        let (mean, sd) = crate::numeric::mean_and_sample_sd(&draws);
        let se = sd / (draws.len() as f64).sqrt();
        assert!(
            (mean - p.mean().unwrap()).abs() < 3.0 * se,
            "sample mean {mean} vs analytic {}",
            p.mean().unwrap()
        );
    }

    #[test]
    fn sample_tail_fraction_matches_tail_probability() {
        let p = fig2_params();
        let n = 100_000;
        let draws = p.sample(n, 13).unwrap();
        let frac = draws.iter().filter(|&&m| m >= p.crossover()).count() as f64 / n as f64;
        let q = p.tail_probability();
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((frac - q).abs() < 3.0 * se, "tail fraction {frac} vs {q}");
    }

    #[test]
    fn quantile_inverts_ccdf() {
        let p = fig2_params();
        assert_eq!(p.quantile(0.0).unwrap(), 0.0);
        for frac in [0.1, 0.5, 0.9, 0.95, 0.99, 0.999] {
            let m = p.quantile(frac).unwrap();
            assert_relative_eq!(p.ccdf(m).unwrap(), 1.0 - frac, max_relative = 1e-10);
        }
        assert!(p.quantile(1.0).is_err());
    }

    #[test]
    fn analytic_gini_exponential_limit_is_half() {
        let t = 1655.0;
        let p = TwoClassParams::new(t, 2.181, 1.0e6 * t).unwrap();
        let g = p.analytic_gini().unwrap();
        assert!((g - 0.5).abs() < 1e-3, "gini {g}");
        // Discretization shrinks with resolution.
        let coarse = p.gini_by_quadrature(20_000).unwrap();
        let fine = p.gini_by_quadrature(400_000).unwrap();
        assert!((fine - 0.5).abs() <= (coarse - 0.5).abs() + 1e-12);
    }

    #[test]
    fn analytic_gini_pareto_limit_approaches_closed_form() {
        let t = 1000.0;
        let alpha = 2.181;
        let closed = 1.0 / (2.0 * alpha - 1.0);
        let near = TwoClassParams::new(t, alpha, t / 100.0).unwrap();
        let nearer = TwoClassParams::new(t, alpha, t / 1000.0).unwrap();
        let g_near = near.analytic_gini().unwrap();
        let g_nearer = nearer.analytic_gini().unwrap();
        assert!((g_near - closed).abs() < 5e-3, "gini {g_near} vs {closed}");
        assert!((g_nearer - closed).abs() < (g_near - closed).abs());
        assert!((g_nearer - closed).abs() < 1e-3);
    }

    #[test]
    fn analytic_gini_decreases_in_pareto_index() {
        let at = |a: f64| {
            TwoClassParams::new(1000.0, a, 3000.0)
                .unwrap()
                .analytic_gini()
                .unwrap()
        };
        let (g15, g20, g30) = (at(1.5), at(2.0), at(3.0));
        assert!(g15 > g20 && g20 > g30, "{g15} {g20} {g30}");
    }
}
