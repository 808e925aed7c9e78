//! Gauss-Legendre quadrature, used for the Steklov double integral.

/// Nodes and weights on [-1, 1] for a fixed degree, computed by Newton
/// iteration on the Legendre recurrence.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 2, "need at least two quadrature points");
        let n = degree;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Tricomi-style initial guess, then Newton
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        nodes.reverse();
        weights.reverse();
        GaussLegendre { nodes, weights }
    }

    /// Integral of f over [a, b].
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// Tensor-product double integral of f over [a1,b1] x [a2,b2].
    pub fn integrate2(
        &self,
        a1: f64,
        b1: f64,
        a2: f64,
        b2: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> f64 {
        let h1 = 0.5 * (b1 - a1);
        let m1 = 0.5 * (a1 + b1);
        let h2 = 0.5 * (b2 - a2);
        let m2 = 0.5 * (a2 + b2);
        let mut s = 0.0;
        for (&xs, &ws) in self.nodes.iter().zip(&self.weights) {
            let u = m1 + h1 * xs;
            let mut inner = 0.0;
            for (&xt, &wt) in self.nodes.iter().zip(&self.weights) {
                inner += wt * f(u, m2 + h2 * xt);
            }
            s += ws * inner;
        }
        s * h1 * h2
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exactness() {
        let rule = GaussLegendre::new(8);
        // degree-15 polynomials are exact for an 8-point rule
        let got = rule.integrate(0.0, 1.0, |x| x.powi(15));
        assert_relative_eq!(got, 1.0 / 16.0, max_relative = 1e-13);
        let got = rule.integrate(-2.0, 3.0, |x| 3.0 * x * x);
        assert_relative_eq!(got, 27.0 + 8.0, max_relative = 1e-13);
    }

    #[test]
    fn weights_sum_to_interval() {
        for deg in [2usize, 5, 16, 64] {
            let rule = GaussLegendre::new(deg);
            let s: f64 = rule.weights.iter().sum();
            assert_relative_eq!(s, 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn smooth_integrand() {
        let rule = GaussLegendre::new(64);
        let got = rule.integrate(0.0, 1.0, f64::exp);
        assert_relative_eq!(got, std::f64::consts::E - 1.0, max_relative = 1e-14);
    }

    #[test]
    fn double_integral() {
        let rule = GaussLegendre::new(16);
        let got = rule.integrate2(0.0, 1.0, 0.0, 2.0, |s, t| s * t);
        assert_relative_eq!(got, 1.0, max_relative = 1e-13);
        let got = rule.integrate2(0.0, 0.5, 0.0, 0.5, |s, t| (s + t).exp());
        let want = (0.5f64.exp() - 1.0).powi(2);
        assert_relative_eq!(got, want, max_relative = 1e-13);
    }
}
