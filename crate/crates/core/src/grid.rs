//! Uniform radial grids and sampled radial functions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RadialGrid {
    r_min: f64,
    dr: f64,
    len: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, dr: f64) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite() && dr.is_finite()) {
            return Err(Error::Domain("grid bounds must be finite".into()));
        }
        if r_min < 0.0 || dr <= 0.0 || r_max <= r_min {
            return Err(Error::Domain(format!(
                "invalid radial grid [{r_min}, {r_max}] step {dr}"
            )));
        }
        let len = ((r_max - r_min) / dr + 1e-9).floor() as usize + 1;
        if len < 8 {
            return Err(Error::Domain("radial grid needs at least 8 points".into()));
        }
        Ok(RadialGrid { r_min, dr, len })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r(self.len - 1)
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.dr
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.r(i))
    }

    /// Same span with half the step.
    pub fn refined(&self) -> Self {
        RadialGrid {
            r_min: self.r_min,
            dr: self.dr / 2.0,
            len: 2 * self.len - 1,
        }
    }

    /// Index of the last grid point not exceeding `r`.
    pub fn index_below(&self, r: f64) -> usize {
        if r <= self.r_min {
            return 0;
        }
        (((r - self.r_min) / self.dr).floor() as usize).min(self.len - 1)
    }
}

/// Composite Simpson rule on uniformly spaced samples.
///
/// An even number of samples closes with a 3/8 panel.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let simpson_len = if n % 2 == 1 { n } else { n - 3 };
            let mut total = 0.0;
            if simpson_len >= 3 {
                let mut acc = values[0] + values[simpson_len - 1];
                for (i, v) in values[1..simpson_len - 1].iter().enumerate() {
                    acc += if i % 2 == 0 { 4.0 * v } else { 2.0 * v };
                }
                total = acc * h / 3.0;
            }
            if n.is_multiple_of(2) {
                let k = n - 4;
                total += 3.0 * h / 8.0
                    * (values[k] + 3.0 * values[k + 1] + 3.0 * values[k + 2] + values[k + 3]);
            }
            total
        }
    }
}

/// Weights w such that Σ w_i v_i equals [`simpson`] on `n` samples.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n < 4 {
        let mut unit = vec![0.0; n];
        for i in 0..n {
            unit[i] = 1.0;
            w[i] = simpson(&unit, h);
            unit[i] = 0.0;
        }
        return w;
    }
    let simpson_len = if n % 2 == 1 { n } else { n - 3 };
    if simpson_len >= 3 {
        for (i, wi) in w.iter_mut().enumerate().take(simpson_len) {
            *wi = if i == 0 || i == simpson_len - 1 {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
    }
    if n.is_multiple_of(2) {
        let k = n - 4;
        for (j, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[k + j] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// Trapezoid rule on an arbitrary increasing abscissa.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Normalization {
    /// ∫|χ|² dR = 1
    Unit,
    /// ⟨χ_E'|χ_E⟩ = δ(E − E')
    Energy,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub energy: f64,
    pub l: usize,
    pub normalization: Normalization,
}

impl RadialFunction {
    pub fn norm_squared(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        simpson(&sq, self.grid.dr())
    }

    pub fn overlap(&self, other: &RadialFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Domain("overlap requires a shared grid".into()));
        }
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(simpson(&prod, self.grid.dr()))
    }

    /// Index range outside which |χ| stays below `rel_cut` times its peak.
    pub fn support(&self, rel_cut: f64) -> std::ops::Range<usize> {
        let peak = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cut = peak * rel_cut;
        let first = self.values.iter().position(|v| v.abs() > cut).unwrap_or(0);
        let last = self
            .values
            .iter()
            .rposition(|v| v.abs() > cut)
            .unwrap_or(self.values.len() - 1);
        first.saturating_sub(2)..(last + 3).min(self.values.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = RadialGrid::new(0.2, 40.0, 0.01).unwrap();
        assert_eq!(g.len(), 3981);
        assert!((g.r_max() - 40.0).abs() < 1e-9);
        let f = g.refined();
        assert_eq!(f.len(), 7961);
        assert!((f.r_max() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn bad_grids_rejected() {
        assert!(RadialGrid::new(1.0, 0.5, 0.01).is_err());
        assert!(RadialGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(RadialGrid::new(-1.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn simpson_exact_for_cubics() {
        for n in [4usize, 5, 6, 7, 10] {
            let h = 1.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson(&v, h) - 0.25).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn weights_agree_with_rule() {
        for n in 1..12 {
            let v: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
            let w = simpson_weights(n, 0.3);
            let dot: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((dot - simpson(&v, 0.3)).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn trapezoid_linear() {
        let x = [0.0, 0.5, 2.0];
        let y = [0.0, 1.0, 4.0];
        assert!((trapezoid(&x, &y) - 4.0).abs() < 1e-15);
    }
}
