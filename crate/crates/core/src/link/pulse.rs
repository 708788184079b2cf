//! Transmit and matched-filter pulses.

use std::f64::consts::PI;

use crate::config::{LinkConfig, PulseShape};

/// A real, even pulse truncated to |t| ≤ span·T and scaled to ∫p² dt = T.
#[derive(Clone, Copy, Debug)]
pub struct Pulse {
    pub shape: PulseShape,
    pub period: f64,
    pub span: usize,
    pub rolloff: f64,
    scale: f64,
}

impl Pulse {
    pub fn new(shape: PulseShape, period: f64, span: usize, rolloff: f64) -> Self {
        let mut p = Self {
            shape,
            period,
            span,
            rolloff,
            scale: 1.0,
        };
        // Simpson's rule in symbol units, 256 panels per symbol.
        let n = 512 * span;
        let h = 2.0 * span as f64 / n as f64;
        let e: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * p.unit(-(span as f64) + k as f64 * h).powi(2)
            })
            .sum::<f64>()
            * h
            / 3.0;
        p.scale = 1.0 / e.sqrt();
        p
    }

    pub fn from_config(cfg: &LinkConfig) -> Self {
        Self::new(cfg.pulse, cfg.symbol_period_s, cfg.pulse_span_symbols, cfg.rrc_rolloff)
    }

    pub fn half_width(&self) -> f64 {
        self.span as f64 * self.period
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.scale * self.unit(t / self.period)
    }

    fn unit(&self, u: f64) -> f64 {
        let s = self.span as f64;
        if u.abs() > s {
            return 0.0;
        }
        match self.shape {
            PulseShape::Sinc => sinc(u) * 0.5 * (1.0 + (PI * u / s).cos()),
            PulseShape::Rrc => rrc(u, self.rolloff),
        }
    }
}

pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-12 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

/// Root-raised-cosine with unit symbol period.
pub fn rrc(u: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return sinc(u);
    }
    if u.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let edge = 1.0 / (4.0 * beta);
    if (u.abs() - edge).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * u * (1.0 - beta)).sin() + 4.0 * beta * u * (PI * u * (1.0 + beta)).cos();
    num / (PI * u * (1.0 - (4.0 * beta * u).powi(2)))
}
