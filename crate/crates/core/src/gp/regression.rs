use super::cholesky::Cholesky;
use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::model::{dot, Belief, BELIEF_EPSILON};

/// First jitter tried, relative to the signal variance.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before giving up, relative to the signal variance.
pub const JITTER_MAX: f64 = 1e-4;

/// Zero-mean Gaussian process over support beliefs.
///
/// Two factorizations are kept: `K + (noise + jitter) I` for prediction and
/// the noise-free `K + jitter I` for the linear-dependence test.
#[derive(Debug, Clone)]
pub struct GprState {
    kernel: Kernel,
    supports: Vec<Belief>,
    targets: Vec<f64>,
    noise_variance: f64,
    jitter: f64,
    factor: Cholesky,
    ald_jitter: f64,
    ald_factor: Cholesky,
    weights: Vec<f64>,
    pub stage: usize,
}

fn factor_with_jitter(kernel: &Kernel, supports: &[Belief], diag_add: f64, start: f64) -> Result<(Cholesky, f64)> {
    let sv = kernel.signal_variance;
    let mut jitter = start.max(JITTER_START * sv);
    loop {
        let chol = Cholesky::factor(supports.len(), |i, j| {
            let k = kernel.eval(&supports[i], &supports[j]);
            if i == j {
                k + diag_add + jitter
            } else {
                k
            }
        });
        if let Some(chol) = chol {
            return Ok((chol, jitter));
        }
        if jitter * 10.0 > JITTER_MAX * sv * (1.0 + 1e-9) {
            return Err(Error::FactorizationFailure { jitter });
        }
        jitter *= 10.0;
    }
}

fn find_duplicate(supports: &[Belief], b: &Belief) -> Option<usize> {
    supports.iter().position(|s| s.linf_distance(b) <= BELIEF_EPSILON)
}

/// Fits a GP to `(supports, targets)` with observation noise `noise_variance`.
pub fn gpr_fit(kernel: Kernel, supports: Vec<Belief>, targets: Vec<f64>, noise_variance: f64) -> Result<GprState> {
    assert_eq!(supports.len(), targets.len(), "one target per support");
    assert!(!supports.is_empty(), "at least one support belief");
    assert!(noise_variance >= 0.0);
    for i in 1..supports.len() {
        if let Some(j) = find_duplicate(&supports[..i], &supports[i]) {
            return Err(Error::DuplicateSupport(j));
        }
    }
    let (factor, jitter) = factor_with_jitter(&kernel, &supports, noise_variance, 0.0)?;
    let (ald_factor, ald_jitter) = if noise_variance == 0.0 {
        (factor.clone(), jitter)
    } else {
        factor_with_jitter(&kernel, &supports, 0.0, 0.0)?
    };
    let weights = factor.solve(&targets);
    Ok(GprState {
        kernel,
        supports,
        targets,
        noise_variance,
        jitter,
        factor,
        ald_jitter,
        ald_factor,
        weights,
        stage: 0,
    })
}

impl GprState {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn supports(&self) -> &[Belief] {
        &self.supports
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    fn cross_covariance(&self, b: &Belief) -> Vec<f64> {
        self.supports.iter().map(|s| self.kernel.eval(s, b)).collect()
    }

    /// Posterior mean and standard deviation at `b`.
    pub fn predict(&self, b: &Belief) -> (f64, f64) {
        let k = self.cross_covariance(b);
        let mean = dot(&k, &self.weights);
        let v = self.factor.forward(&k);
        let var = self.kernel.signal_variance - dot(&v, &v);
        (mean, var.max(0.0).sqrt())
    }

    /// Upper confidence bound `mean + eta * std`.
    pub fn ucb(&self, b: &Belief, eta: f64) -> f64 {
        let (mean, std) = self.predict(b);
        mean + eta * std
    }

    /// Residual of projecting the feature of `b` onto the span of the support
    /// features, computed with the noise-free kernel matrix. Clamped at zero.
    pub fn ald_delta(&self, b: &Belief) -> f64 {
        let k = self.cross_covariance(b);
        let w = self.ald_factor.forward(&k);
        (self.kernel.signal_variance - dot(&w, &w)).max(0.0)
    }

    /// Adds a support belief, extending both factors by one row.
    pub fn expand_support(&mut self, b: Belief, target: f64) -> Result<()> {
        if let Some(i) = find_duplicate(&self.supports, &b) {
            return Err(Error::DuplicateSupport(i));
        }
        let k = self.cross_covariance(&b);
        let sv = self.kernel.signal_variance;
        let grew = self.factor.append(&k, sv + self.noise_variance + self.jitter);
        let ald_grew = self.noise_variance == 0.0 || self.ald_factor.append(&k, sv + self.ald_jitter);
        self.supports.push(b);
        self.targets.push(target);
        if !grew {
            let (f, j) = factor_with_jitter(&self.kernel, &self.supports, self.noise_variance, self.jitter * 10.0)?;
            self.factor = f;
            self.jitter = j;
        }
        if self.noise_variance == 0.0 {
            self.ald_factor = self.factor.clone();
            self.ald_jitter = self.jitter;
        } else if !ald_grew {
            let (f, j) = factor_with_jitter(&self.kernel, &self.supports, 0.0, self.ald_jitter * 10.0)?;
            self.ald_factor = f;
            self.ald_jitter = j;
        }
        self.weights = self.factor.solve(&self.targets);
        Ok(())
    }

    /// Replaces one target and recomputes the prediction weights; the kernel
    /// factorization is untouched.
    pub fn refresh_target(&mut self, index: usize, target: f64) {
        self.targets[index] = target;
        self.weights = self.factor.solve(&self.targets);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelFamily;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_belief(rng: &mut ChaCha8Rng, n: usize) -> Belief {
        Belief::from_weights((0..n).map(|_| rng.random::<f64>() + 1e-3).collect())
    }

    /// Closed-form 2x2 posterior used as an independent oracle.
    fn two_point_oracle(k: &Kernel, b1: &Belief, b2: &Belief, y: [f64; 2], q: &Belief) -> (f64, f64) {
        let (a, c, d) = (k.eval(b1, b1), k.eval(b1, b2), k.eval(b2, b2));
        let det = a * d - c * c;
        let inv = [[d / det, -c / det], [-c / det, a / det]];
        let kq = [k.eval(b1, q), k.eval(b2, q)];
        let beta = [inv[0][0] * y[0] + inv[0][1] * y[1], inv[1][0] * y[0] + inv[1][1] * y[1]];
        let mean = kq[0] * beta[0] + kq[1] * beta[1];
        let quad = kq[0] * (inv[0][0] * kq[0] + inv[0][1] * kq[1]) + kq[1] * (inv[1][0] * kq[0] + inv[1][1] * kq[1]);
        (mean, (k.eval(q, q) - quad).sqrt())
    }

    #[test]
    fn single_support_interpolates() {
        let b = Belief::new(vec![0.3, 0.7]).unwrap();
        let gp = gpr_fit(Kernel::default(), vec![b.clone()], vec![4.0], 0.0).unwrap();
        let (mean, std) = gp.predict(&b);
        assert!((mean - 4.0).abs() < 1e-8);
        assert!(std < 1e-4);
    }

    #[test]
    fn two_support_prediction_matches_closed_form() {
        let k = Kernel::default();
        let (w1, w2) = (Belief::corner(2, 0), Belief::corner(2, 1));
        let gp = gpr_fit(k, vec![w1.clone(), w2.clone()], vec![10.0, 0.0], 0.0).unwrap();
        let q = Belief::uniform(2);
        let (mean, std) = gp.predict(&q);
        let (em, es) = two_point_oracle(&k, &w1, &w2, [10.0, 0.0], &q);
        assert!((mean - em).abs() < 1e-8, "{mean} vs {em}");
        assert!((std - es).abs() < 1e-6, "{std} vs {es}");
        assert!((gp.ucb(&q, 1.0) - (em + es)).abs() < 1e-6);
        assert_eq!(gp.ucb(&q, 0.0), mean);
    }

    #[test]
    fn reverts_to_the_prior_far_from_supports() {
        let k = Kernel::new(KernelFamily::Exponential, 1e-3, 2.0);
        let gp = gpr_fit(k, vec![Belief::corner(2, 0)], vec![50.0], 0.0).unwrap();
        let (mean, std) = gp.predict(&Belief::corner(2, 1));
        assert!(mean.abs() < 1e-10);
        assert!((std - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn permuting_supports_does_not_change_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let supports: Vec<Belief> = (0..6).map(|_| random_belief(&mut rng, 3)).collect();
        let targets: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
        let k = Kernel::new(KernelFamily::Exponential, 1.0, 4.0);
        let gp = gpr_fit(k, supports.clone(), targets.clone(), 1e-4).unwrap();
        let order = [3, 0, 5, 1, 4, 2];
        let gp2 = gpr_fit(
            k,
            order.iter().map(|&i| supports[i].clone()).collect(),
            order.iter().map(|&i| targets[i]).collect(),
            1e-4,
        )
        .unwrap();
        for _ in 0..100 {
            let q = random_belief(&mut rng, 3);
            let (a, b) = (gp.predict(&q), gp2.predict(&q));
            assert!((a.0 - b.0).abs() < 1e-9);
            assert!((a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicate_supports_are_rejected() {
        let b = Belief::uniform(2);
        let err = gpr_fit(Kernel::default(), vec![b.clone(), b.clone()], vec![1.0, 1.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::DuplicateSupport(0)));
        let mut gp = gpr_fit(Kernel::default(), vec![b.clone()], vec![1.0], 0.0).unwrap();
        assert!(matches!(gp.expand_support(b, 2.0), Err(Error::DuplicateSupport(0))));
    }

    #[test]
    fn ald_examples() {
        let k = Kernel::new(KernelFamily::Exponential, 1.0, 3.0);
        let b1 = Belief::new(vec![0.2, 0.8]).unwrap();
        let gp = gpr_fit(k, vec![b1.clone()], vec![1.0], 0.0).unwrap();
        assert!(gp.ald_delta(&b1) < 1e-8);
        let q = Belief::new(vec![0.6, 0.4]).unwrap();
        let c = k.eval(&b1, &q);
        // The fit adds 1e-10 * sigma^2 of jitter to the diagonal.
        let expected = 3.0 - c * c / (3.0 + 3e-10);
        assert!((gp.ald_delta(&q) - expected).abs() < 1e-12);
    }

    #[test]
    fn ald_uses_the_noise_free_matrix() {
        let k = Kernel::default();
        let b1 = Belief::new(vec![0.2, 0.8]).unwrap();
        let gp = gpr_fit(k, vec![b1.clone()], vec![1.0], 0.5).unwrap();
        assert!(gp.ald_delta(&b1) < 1e-8);
        // the noisy posterior variance at the support is not zero
        assert!(gp.predict(&b1).1 > 0.1);
    }

    #[test]
    fn expansion_matches_refit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = Kernel::new(KernelFamily::Matern52, 0.5, 2.0);
        let supports: Vec<Belief> = (0..5).map(|_| random_belief(&mut rng, 4)).collect();
        let targets: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut gp = gpr_fit(k, supports[..3].to_vec(), targets[..3].to_vec(), 1e-3).unwrap();
        for i in 3..5 {
            gp.expand_support(supports[i].clone(), targets[i]).unwrap();
        }
        let refit = gpr_fit(k, supports, targets, 1e-3).unwrap();
        for _ in 0..100 {
            let q = random_belief(&mut rng, 4);
            let (a, b) = (gp.predict(&q), refit.predict(&q));
            assert!((a.0 - b.0).abs() < 1e-8);
            assert!((a.1 - b.1).abs() < 1e-8);
        }
    }

    #[test]
    fn expanded_point_is_interpolated_and_dependent() {
        let k = Kernel::default();
        let mut gp = gpr_fit(k, vec![Belief::corner(2, 0)], vec![2.0], 0.0).unwrap();
        let b = Belief::new(vec![0.4, 0.6]).unwrap();
        gp.expand_support(b.clone(), -3.0).unwrap();
        let (mean, std) = gp.predict(&b);
        assert!((mean + 3.0).abs() < 1e-6);
        assert!(std < 1e-4);
        assert!(gp.ald_delta(&b) < 1e-8);
    }

    #[test]
    fn refresh_target_matches_refit() {
        let k = Kernel::default();
        let supports = vec![Belief::corner(2, 0), Belief::new(vec![0.3, 0.7]).unwrap()];
        let mut gp = gpr_fit(k, supports.clone(), vec![1.0, 2.0], 1e-4).unwrap();
        let before = gp.predict(&Belief::uniform(2));
        gp.refresh_target(1, 2.0);
        assert_eq!(gp.predict(&Belief::uniform(2)), before);
        gp.refresh_target(1, -4.0);
        let refit = gpr_fit(k, supports, vec![1.0, -4.0], 1e-4).unwrap();
        let q = Belief::new(vec![0.8, 0.2]).unwrap();
        assert!((gp.predict(&q).0 - refit.predict(&q).0).abs() < 1e-10);
        gp.refresh_target(0, 0.0);
        gp.refresh_target(1, 0.0);
        assert_eq!(gp.predict(&q).0, 0.0);
    }
}
