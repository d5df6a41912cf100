//! Monotone piecewise cubic Hermite interpolation (Fritsch-Carlson slopes).

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

impl Pchip {
    /// `x` strictly increasing, at least two nodes.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Pchip {
        assert!(x.len() >= 2 && x.len() == y.len());
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = m[0];
            d[1] = m[0];
            return Pchip { x, y, d };
        }
        for k in 1..n - 1 {
            if m[k - 1] == 0.0 || m[k] == 0.0 || m[k - 1].signum() != m[k].signum() {
                d[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
            }
        }
        d[0] = end_slope(h[0], h[1], m[0], m[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
        Pchip { x, y, d }
    }

    /// Index k with x[k] <= t <= x[k+1], clamped to the table.
    pub fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.locate(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_monotone() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 0.7).tanh()).collect();
        let p = Pchip::new(x.clone(), y.clone());
        for (a, b) in x.iter().zip(&y) {
            assert!((p.eval(*a) - b).abs() < 1e-15);
        }
        let mut prev = p.eval(0.0);
        for i in 1..2000 {
            let v = p.eval(i as f64 * 5.7 / 2000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn linear_data_is_exact() {
        let p = Pchip::new(vec![0.0, 1.0, 3.0], vec![1.0, 3.0, 7.0]);
        assert!((p.eval(2.2) - 5.4).abs() < 1e-14);
    }
}
