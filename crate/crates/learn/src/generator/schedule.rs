use crate::{Error, Result};

/// Linear variance schedule over timesteps `1..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    beta_start: f64,
    beta_end: f64,
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// `β_l = start + l·(end − start)/L` for `l = 1..=L`, and
    /// `ᾱ_l = ∏_{m≤l} (1 − β_m)`.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument(
                "the schedule needs at least one timestep".into(),
            ));
        }
        if !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < beta_start < beta_end < 1, got {beta_start} and {beta_end}"
            )));
        }
        let betas: Vec<f64> = (1..=steps)
            .map(|l| beta_start + l as f64 * (beta_end - beta_start) / steps as f64)
            .collect();
        let mut alpha_bars = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        let schedule = Self {
            beta_start,
            beta_end,
            betas,
            alpha_bars,
        };
        debug_assert!(schedule.betas.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(schedule.alpha_bars.windows(2).all(|w| w[1] < w[0]));
        Ok(schedule)
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta_start(&self) -> f64 {
        self.beta_start
    }

    pub fn beta_end(&self) -> f64 {
        self.beta_end
    }

    fn index(&self, l: usize) -> Result<usize> {
        if l == 0 || l > self.steps() {
            return Err(Error::InvalidArgument(format!(
                "timestep {l} outside 1..={}",
                self.steps()
            )));
        }
        Ok(l - 1)
    }

    pub fn beta(&self, l: usize) -> Result<f64> {
        Ok(self.betas[self.index(l)?])
    }

    pub fn alpha_bar(&self, l: usize) -> Result<f64> {
        Ok(self.alpha_bars[self.index(l)?])
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(1000, 1e-4, 0.02).expect("valid default schedule")
    }
}

/// `x_l = √ᾱ_l·x0 + √(1 − ᾱ_l)·ε`
pub fn forward_diffuse(schedule: &NoiseSchedule, x0: &[f64], l: usize, eps: &[f64]) -> Result<Vec<f64>> {
    if x0.len() != eps.len() {
        return Err(Error::InvalidArgument(format!(
            "{} noise values for {} data values",
            eps.len(),
            x0.len()
        )));
    }
    if x0.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("diffused data must lie in [-1, 1]".into()));
    }
    let ab = schedule.alpha_bar(l)?;
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// Transformer-style timestep embedding: entry `2i` is
/// `sin(l / 10000^(2i/dim))` and entry `2i+1` the matching cosine.
pub fn timestep_embedding(l: f64, dim: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), dim);
    for i in 0..dim.div_ceil(2) {
        let angle = l / 10000f64.powf(2.0 * i as f64 / dim as f64);
        out[2 * i] = angle.sin();
        if 2 * i + 1 < dim {
            out[2 * i + 1] = angle.cos();
        }
    }
}
