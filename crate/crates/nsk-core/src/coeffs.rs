//! Coefficient algebra: exponent bundle with its derived relations, the
//! viscosity/capillarity laws and their density derivatives, the entropy
//! velocity weight and the first-order field used by the blow-up monitor.

use crate::error::{Error, Result};
use crate::grid::PeriodicField;

/// Exponent/coefficient bundle `(alpha, beta, gamma, epsilon)` with the
/// derived `delta = beta - 2 alpha + 2` and `theta = (alpha + beta + 1)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub theta: f64,
}

/// Validates the constitutive constraints and fills the derived exponents.
pub fn derive_exponents(alpha: f64, beta: f64, gamma: f64, epsilon: f64) -> Result<ExponentParams> {
    if !(alpha > 0.5) {
        return Err(Error::Config(format!(
            "requires alpha > 1/2, got alpha = {alpha}"
        )));
    }
    if !(gamma > 1.0) {
        return Err(Error::Config(format!(
            "requires gamma > 1, got gamma = {gamma}"
        )));
    }
    if !(2.0 * gamma > alpha) {
        return Err(Error::Config(format!(
            "requires 2*gamma > alpha, got gamma = {gamma}, alpha = {alpha}"
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!(
            "requires epsilon >= 0, got epsilon = {epsilon}"
        )));
    }
    Ok(ExponentParams {
        alpha,
        beta,
        gamma,
        epsilon,
        delta: beta - 2.0 * alpha + 2.0,
        theta: (alpha + beta + 1.0) / 2.0,
    })
}

impl ExponentParams {
    pub fn is_power_law(&self) -> bool {
        self.epsilon == 0.0
    }

    /// `theta` vanishes up to the floating error of the exponent
    /// arithmetic; the logarithmic branch applies.
    pub fn log_branch(&self) -> bool {
        self.theta.abs() < 1e-9
    }

    /// The `beta`-only Korteweg decomposition degenerates.
    pub fn beta_excluded(&self) -> bool {
        (self.beta + 2.0).abs() < 1e-9
    }
}

/// Pointwise viscosity/capillarity law `mu(rho) = rho^alpha + eps rho^{1/4}`
/// and `k(rho) = rho^delta mu'(rho)^2 / alpha^2`. The `1/4` regularization
/// exponent is fixed, not configurable.
#[derive(Clone, Copy, Debug)]
pub struct CoefficientLaw {
    pub params: ExponentParams,
}

impl CoefficientLaw {
    pub fn new(params: ExponentParams) -> CoefficientLaw {
        CoefficientLaw { params }
    }

    pub fn is_power_law(&self) -> bool {
        self.params.is_power_law()
    }

    /// Fails with the offending minimum when the density is not strictly
    /// positive everywhere. Never clamps.
    pub fn ensure_positive(&self, rho: &PeriodicField) -> Result<()> {
        let min = rho.min();
        if min > 0.0 && min.is_finite() {
            Ok(())
        } else {
            Err(Error::Positivity { min })
        }
    }

    pub fn mu_scalar(&self, r: f64) -> f64 {
        let p = self.params;
        r.powf(p.alpha) + p.epsilon * r.powf(0.25)
    }

    pub fn mu_prime_scalar(&self, r: f64) -> f64 {
        let p = self.params;
        p.alpha * r.powf(p.alpha - 1.0) + 0.25 * p.epsilon * r.powf(-0.75)
    }

    pub fn mu_double_prime_scalar(&self, r: f64) -> f64 {
        let p = self.params;
        p.alpha * (p.alpha - 1.0) * r.powf(p.alpha - 2.0)
            - (3.0 / 16.0) * p.epsilon * r.powf(-1.75)
    }

    pub fn k_scalar(&self, r: f64) -> f64 {
        let p = self.params;
        r.powf(p.delta) * self.mu_prime_scalar(r).powi(2) / (p.alpha * p.alpha)
    }

    pub fn k_prime_scalar(&self, r: f64) -> f64 {
        let p = self.params;
        let mp = self.mu_prime_scalar(r);
        let mpp = self.mu_double_prime_scalar(r);
        (p.delta * r.powf(p.delta - 1.0) * mp * mp + 2.0 * r.powf(p.delta) * mp * mpp)
            / (p.alpha * p.alpha)
    }

    fn lift(&self, rho: &PeriodicField, f: impl Fn(f64) -> f64, what: &str) -> Result<PeriodicField> {
        self.ensure_positive(rho)?;
        let out = rho.map(f);
        out.ensure_finite(what)?;
        Ok(out)
    }

    pub fn mu(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.lift(rho, |r| self.mu_scalar(r), "mu")
    }

    pub fn mu_prime(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.lift(rho, |r| self.mu_prime_scalar(r), "mu'")
    }

    pub fn mu_double_prime(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.lift(rho, |r| self.mu_double_prime_scalar(r), "mu''")
    }

    pub fn k_eps(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.lift(rho, |r| self.k_scalar(r), "k_eps")
    }

    pub fn k_eps_prime(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.lift(rho, |r| self.k_prime_scalar(r), "k_eps'")
    }

    /// Weight of the entropy velocity: `w = u + phi'(rho) dx rho` with
    /// `phi'(rho) = mu(rho) / rho^2`. This is the weight under which the
    /// entropy identity closes exactly; for `eps = 0` it reduces to
    /// `rho^{alpha-2}` and coincides with `dx log rho` at `alpha = 1`.
    pub fn phi_prime_scalar(&self, r: f64) -> f64 {
        self.mu_scalar(r) / (r * r)
    }

    pub fn phi_prime(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.lift(rho, |r| self.phi_prime_scalar(r), "phi'")
    }

    /// `dx phi(rho) = phi'(rho) dx rho` by the chain rule; no closed-form
    /// antiderivative of `phi'` is ever materialized.
    pub fn grad_phi(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        let pp = self.phi_prime(rho)?;
        let dx = rho.deriv(1)?;
        Ok(&pp * &dx)
    }

    /// Potential weight of the transformed continuity equation:
    /// `Phi'(rho) = mu(rho)/rho`, so `rho_t + dx(rho w) = dxx Phi(rho)`.
    pub fn big_phi_prime_scalar(&self, r: f64) -> f64 {
        self.mu_scalar(r) / r
    }

    pub fn big_phi_prime(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.lift(rho, |r| self.big_phi_prime_scalar(r), "Phi'")
    }

    /// `dxx Phi(rho)` evaluated as `dx(Phi'(rho) dx rho)` spectrally.
    pub fn laplacian_big_phi(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        let inner = &self.big_phi_prime(rho)? * &rho.deriv(1)?;
        inner.deriv(1)
    }

    /// First-order field `A(rho) = sqrt(k(rho)/rho) dx rho` from the
    /// symmetrized formulation; feeds the blow-up monitors and the
    /// capillary time-step restriction.
    pub fn a_field(&self, rho: &PeriodicField) -> Result<PeriodicField> {
        self.ensure_positive(rho)?;
        let w = rho.map(|r| (self.k_scalar(r) / r).sqrt());
        let out = &w * &rho.deriv(1)?;
        out.ensure_finite("a_field")?;
        Ok(out)
    }

    /// Effective diffusivities used by the time-step control:
    /// `mu_bar = mu/rho` (viscous) and `mu_tilde = sqrt(rho k)` (capillary).
    pub fn mu_bar_scalar(&self, r: f64) -> f64 {
        self.mu_scalar(r) / r
    }

    pub fn mu_tilde_scalar(&self, r: f64) -> f64 {
        (r * self.k_scalar(r)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn law(alpha: f64, beta: f64, gamma: f64, epsilon: f64) -> CoefficientLaw {
        CoefficientLaw::new(derive_exponents(alpha, beta, gamma, epsilon).unwrap())
    }

    #[test]
    fn derive_exponents_quantum_case() {
        let p = derive_exponents(1.0, -1.0, 2.0, 0.0).unwrap();
        assert_eq!(p.delta, -1.0);
        assert_eq!(p.theta, 0.5);
    }

    #[test]
    fn derive_exponents_general() {
        let p = derive_exponents(2.0, 1.0, 2.0, 0.0).unwrap();
        assert_eq!(p.delta, -1.0);
        assert_eq!(p.theta, 2.0);
    }

    #[test]
    fn derive_exponents_log_branch() {
        let p = derive_exponents(1.0, -2.0, 2.0, 0.0).unwrap();
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn derive_exponents_rejects_bad_ranges() {
        let e = derive_exponents(0.4, -1.0, 2.0, 0.0).unwrap_err();
        assert!(e.to_string().contains("alpha > 1/2"), "{e}");
        let e = derive_exponents(1.0, -1.0, 0.9, 0.0).unwrap_err();
        assert!(e.to_string().contains("gamma > 1"), "{e}");
        let e = derive_exponents(5.0, -1.0, 2.0, 0.0).unwrap_err();
        assert!(e.to_string().contains("2*gamma > alpha"), "{e}");
        let e = derive_exponents(1.0, -1.0, 2.0, -0.1).unwrap_err();
        assert!(e.to_string().contains("epsilon >= 0"), "{e}");
    }

    #[test]
    fn mu_constants() {
        let g = Grid::new(32, 1.0).unwrap();
        let one = PeriodicField::constant(&g, 1.0);
        for (a, e) in [(0.7, 0.0), (1.0, 0.3), (2.5, 0.1)] {
            let l = law(a, 0.0, 2.0, e);
            let m = l.mu(&one).unwrap();
            assert!((m.max() - (1.0 + e)).abs() < 1e-14);
            assert!((m.min() - (1.0 + e)).abs() < 1e-14);
        }
        // linear law at rho = 4
        let l = law(1.0, -1.0, 2.0, 0.0);
        let four = PeriodicField::constant(&g, 4.0);
        assert!((l.mu(&four).unwrap().max() - 4.0).abs() < 1e-14);
        assert!((l.mu_prime(&four).unwrap().max() - 1.0).abs() < 1e-14);
        assert!(l.mu_double_prime(&four).unwrap().linf() < 1e-14);
    }

    #[test]
    fn mu_pointwise_example() {
        let l = law(2.0, 1.0, 2.0, 0.1);
        let expect = 4.0 + 0.1 * 2f64.powf(0.25);
        assert!((l.mu_scalar(2.0) - expect).abs() < 1e-15);
        assert!((l.mu_scalar(2.0) - 4.118920711500272).abs() < 1e-14);
    }

    #[test]
    fn mu_rejects_nonpositive_density() {
        let g = Grid::new(32, 1.0).unwrap();
        let l = law(1.0, -1.0, 2.0, 0.0);
        let bad = PeriodicField::from_fn(&g, |x| (2.0 * PI * x).sin());
        match l.mu(&bad) {
            Err(Error::Positivity { min }) => assert!(min <= 0.0),
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn k_eps_reduces_to_power_law() {
        let g = Grid::new(64, 1.0).unwrap();
        let rho = PeriodicField::from_fn(&g, |x| 2.0 + 0.8 * (2.0 * PI * x).sin());
        for (a, b) in [(0.7, -1.3), (1.0, -1.0), (2.0, 1.0), (3.0, 2.0)] {
            let l = law(a, b, 2.0 * a.max(1.0), 0.0);
            let k = l.k_eps(&rho).unwrap();
            let pw = rho.powf(b);
            let rel = (&k - &pw).linf() / pw.linf();
            assert!(rel < 1e-12, "(a={a},b={b}) rel {rel}");
        }
        let l = law(1.0, -1.0, 2.0, 0.0);
        assert!((l.k_scalar(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn k_eps_regularized_pointwise() {
        // delta = -1 for (alpha, beta) = (1, -1); oracle is the closed formula.
        let l = law(1.0, -1.0, 2.0, 0.1);
        let expect = 0.5 * (1.0 + 0.025 * 2f64.powf(-0.75)).powi(2);
        assert!((l.k_scalar(2.0) - expect).abs() < 1e-15);
        assert!((l.k_scalar(2.0) - 0.5149755743720943).abs() < 1e-14);
    }

    #[test]
    fn grad_phi_power_law_reduction() {
        // eps = 0: phi' = rho^{alpha-2}, so grad_phi = rho^{alpha-2} dx rho.
        let g = Grid::new(128, 1.0).unwrap();
        let rho = PeriodicField::from_fn(&g, |x| 2.0 + 0.6 * (2.0 * PI * x).sin());
        for a in [0.75, 1.0, 1.5, 2.0, 3.0] {
            let l = law(a, 0.0, 2.0 * a.max(1.0), 0.0);
            let gp = l.grad_phi(&rho).unwrap();
            let expect = &rho.powf(a - 2.0) * &rho.deriv(1).unwrap();
            let rel = (&gp - &expect).linf() / expect.linf();
            assert!(rel < 1e-10, "a={a} rel {rel}");
        }
    }

    #[test]
    fn grad_phi_constant_density_vanishes() {
        let g = Grid::new(32, 1.0).unwrap();
        let l = law(1.3, -0.5, 2.0, 0.05);
        let rho = PeriodicField::constant(&g, 1.7);
        assert!(l.grad_phi(&rho).unwrap().linf() < 1e-12);
    }

    #[test]
    fn grad_phi_is_log_derivative_at_alpha_one() {
        let g = Grid::new(256, 1.0).unwrap();
        let rho = PeriodicField::from_fn(&g, |x| 2.0 + (2.0 * PI * x).sin());
        let l = law(1.0, -1.0, 2.0, 0.0);
        let gp = l.grad_phi(&rho).unwrap();
        let logd = rho.map(f64::ln).deriv(1).unwrap();
        let rel = (&gp - &logd).linf() / logd.linf();
        assert!(rel < 1e-10, "rel {rel}");
    }

    #[test]
    fn a_field_examples() {
        let g = Grid::new(256, 1.0).unwrap();
        let l = law(1.0, -1.0, 2.0, 0.0);
        let c = PeriodicField::constant(&g, 2.0);
        assert!(l.a_field(&c).unwrap().linf() < 1e-14);

        // beta = -1: A = dx log rho
        let rho = PeriodicField::from_fn(&g, |x| 2.0 + 0.7 * (2.0 * PI * x).sin());
        let a = l.a_field(&rho).unwrap();
        let logd = rho.map(f64::ln).deriv(1).unwrap();
        assert!((&a - &logd).linf() / logd.linf() < 1e-10);

        // general beta: A = (2/(beta+1)) dx rho^{(beta+1)/2}
        for (alpha, beta) in [(1.0, 0.5), (2.0, 1.0), (1.5, -0.5)] {
            let l = law(alpha, beta, 2.0 * alpha.max(1.0), 0.0);
            let a = l.a_field(&rho).unwrap();
            let expect = rho
                .powf((beta + 1.0) / 2.0)
                .deriv(1)
                .unwrap()
                .scale(2.0 / (beta + 1.0));
            let rel = (&a - &expect).linf() / expect.linf();
            assert!(rel < 1e-10, "(a={alpha},b={beta}) rel {rel}");
        }
    }

    #[test]
    fn mu_prime_positive_on_wide_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for alpha in [0.6, 1.0, 2.0, 5.0] {
            for eps in [0.0, 0.1] {
                let l = law(alpha, 0.0, 2.0 * alpha.max(1.0), eps);
                for _ in 0..10_000 {
                    let r = 10f64.powf(rng.gen_range(-6.0..3.0));
                    assert!(l.mu_prime_scalar(r) > 0.0, "alpha={alpha} eps={eps} r={r}");
                }
            }
        }
    }

    #[test]
    fn regularization_vanishes_linearly() {
        // mu_eps, k_eps, grad_phi converge to the power-law values at O(eps).
        let g = Grid::new(128, 1.0).unwrap();
        let rho = PeriodicField::from_fn(&g, |x| 1.5 + 0.5 * (2.0 * PI * x).cos());
        let (alpha, beta) = (1.5, 0.25);
        let l0 = law(alpha, beta, 2.0, 0.0);
        let mu0 = l0.mu(&rho).unwrap();
        let k0 = l0.k_eps(&rho).unwrap();
        let gp0 = l0.grad_phi(&rho).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025, 0.0125] {
            let le = law(alpha, beta, 2.0, eps);
            let dmu = (&le.mu(&rho).unwrap() - &mu0).linf();
            let dk = (&le.k_eps(&rho).unwrap() - &k0).linf();
            let dgp = (&le.grad_phi(&rho).unwrap() - &gp0).linf();
            let worst = dmu.max(dk).max(dgp);
            assert!(worst < 0.6 * prev, "not O(eps): {worst} vs {prev}");
            prev = worst;
        }
    }

    #[test]
    fn second_derivative_bound() {
        // rho |mu''| <= max(|alpha-1|, 3/4) mu' for all sampled rho > 0.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for alpha in [0.6, 1.0, 2.0, 5.0] {
            for eps in [0.0, 0.1] {
                let c = (alpha - 1.0_f64).abs().max(0.75);
                let l = law(alpha, 0.0, 2.0 * alpha.max(1.0), eps);
                for _ in 0..2_000 {
                    let r = 10f64.powf(rng.gen_range(-6.0..3.0));
                    let lhs = r * l.mu_double_prime_scalar(r).abs();
                    let rhs = c * l.mu_prime_scalar(r);
                    assert!(lhs <= rhs * (1.0 + 1e-12), "alpha={alpha} eps={eps} r={r}");
                }
            }
        }
    }

    #[test]
    fn grad_phi_matches_numerically_integrated_antiderivative() {
        // Path independence: integrate phi' along the density range with
        // Simpson quadrature, then differentiate the composed field.
        let g = Grid::new(256, 1.0).unwrap();
        let rho = PeriodicField::from_fn(&g, |x| 2.0 + 0.6 * (2.0 * PI * x).sin());
        for (alpha, eps) in [(1.4, 0.0), (0.8, 0.1), (2.2, 0.05)] {
            let l = law(alpha, -0.5, 2.0 * alpha.max(1.0), eps);
            let r_lo = rho.min() * 0.999;
            let simpson = |a: f64, b: f64| {
                let m = 2_000usize;
                let h = (b - a) / m as f64;
                let mut s = l.phi_prime_scalar(a) + l.phi_prime_scalar(b);
                for i in 1..m {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * l.phi_prime_scalar(a + i as f64 * h);
                }
                s * h / 3.0
            };
            let phi = rho.map(|r| simpson(r_lo, r));
            let dphi = phi.deriv(1).unwrap();
            let gp = l.grad_phi(&rho).unwrap();
            let rel = (&dphi - &gp).linf() / gp.linf();
            assert!(rel < 1e-8, "alpha={alpha} eps={eps} rel {rel}");
        }
    }

    #[test]
    fn mu_vanishes_at_vacuum_limit() {
        let l = law(0.8, -1.0, 2.0, 0.1);
        assert!(l.mu_scalar(1e-12) < 1e-3);
        assert!(l.mu_scalar(1e-12) > 0.0);
    }
}
