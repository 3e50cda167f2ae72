use crate::model::Belief;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Exponential,
    SquaredExponential,
    Matern52,
}

impl std::str::FromStr for KernelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exponential" => Ok(KernelFamily::Exponential),
            "squared-exponential" => Ok(KernelFamily::SquaredExponential),
            "matern-5/2" | "matern52" => Ok(KernelFamily::Matern52),
            other => Err(format!("unknown kernel family `{other}`")),
        }
    }
}

/// Stationary covariance over beliefs, a function of the Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub family: KernelFamily,
    pub length_scale: f64,
    pub signal_variance: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel {
            family: KernelFamily::Exponential,
            length_scale: 1.0,
            signal_variance: 1.0,
        }
    }
}

impl Kernel {
    pub fn new(family: KernelFamily, length_scale: f64, signal_variance: f64) -> Self {
        assert!(length_scale > 0.0, "length scale must be positive");
        assert!(signal_variance > 0.0, "signal variance must be positive");
        Kernel {
            family,
            length_scale,
            signal_variance,
        }
    }

    pub fn with_signal_variance(self, signal_variance: f64) -> Self {
        Kernel::new(self.family, self.length_scale, signal_variance)
    }

    pub fn from_distance(&self, d: f64) -> f64 {
        let r = d / self.length_scale;
        let shape = match self.family {
            KernelFamily::Exponential => (-r).exp(),
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        };
        self.signal_variance * shape
    }

    pub fn eval(&self, b1: &Belief, b2: &Belief) -> f64 {
        let d2: f64 = b1
            .probs()
            .iter()
            .zip(b2.probs())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        self.from_distance(d2.sqrt())
    }
}

/// Evaluates `k` at beliefs, for use outside a fitted model.
pub fn kernel_eval(k: &Kernel, b1: &Belief, b2: &Belief) -> f64 {
    k.eval(b1, b2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_distance_is_signal_variance() {
        let b = Belief::new(vec![0.3, 0.7]).unwrap();
        for family in [KernelFamily::Exponential, KernelFamily::SquaredExponential, KernelFamily::Matern52] {
            assert_eq!(Kernel::new(family, 0.7, 1.0).eval(&b, &b), 1.0);
        }
    }

    #[test]
    fn exponential_between_corners() {
        let k = Kernel::default();
        let v = k.eval(&Belief::corner(2, 0), &Belief::corner(2, 1));
        assert!((v - (-(2f64.sqrt())).exp()).abs() < 1e-15);
        assert!((v - 0.2431).abs() < 1e-4);
    }

    #[test]
    fn matern_closed_form() {
        let k = Kernel::new(KernelFamily::Matern52, 2.0, 3.0);
        let d: f64 = 0.5;
        let s = 5f64.sqrt() * d / 2.0;
        let expected = 3.0 * (1.0 + s + 5.0 * d * d / (3.0 * 4.0)) * (-s).exp();
        assert!((k.from_distance(d) - expected).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn symmetric(
            w1 in prop::collection::vec(0.01f64..1.0, 4),
            w2 in prop::collection::vec(0.01f64..1.0, 4),
        ) {
            let (b1, b2) = (Belief::from_weights(w1), Belief::from_weights(w2));
            for family in [KernelFamily::Exponential, KernelFamily::SquaredExponential, KernelFamily::Matern52] {
                let k = Kernel::new(family, 0.8, 2.0);
                prop_assert_eq!(k.eval(&b1, &b2), k.eval(&b2, &b1));
            }
        }
    }
}
