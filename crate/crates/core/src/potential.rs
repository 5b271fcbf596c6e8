//! Piecewise-constant potentials, evaluated exactly on nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;

/// How a segment treats its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// `[left, right]`
    #[default]
    Closed,
    /// `[left, right[`
    LeftClosed,
    /// `]left, right]`
    RightClosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub height: f64,
    pub closure: Closure,
}

impl Segment {
    pub fn new(left: f64, right: f64, height: f64) -> Self {
        Self { left, right, height, closure: Closure::Closed }
    }

    fn contains(&self, x: f64) -> bool {
        match self.closure {
            Closure::Closed => x >= self.left && x <= self.right,
            Closure::LeftClosed => x >= self.left && x < self.right,
            Closure::RightClosed => x > self.left && x <= self.right,
        }
    }
}

/// Sum of indicator functions with heights (units of V0), zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PiecewisePotential {
    segments: Vec<Segment>,
}

impl PiecewisePotential {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.left.is_finite() && s.right.is_finite() && s.height.is_finite()) {
                return Err(Error::InvalidPotential("non-finite segment".into()));
            }
            if s.left >= s.right {
                return Err(Error::InvalidPotential(format!("segment [{}, {}] has left >= right", s.left, s.right)));
            }
        }
        segments.sort_by(|a, b| a.left.total_cmp(&b.left));
        for w in segments.windows(2) {
            let (l, r) = (&w[0], &w[1]);
            let touching_ok = l.right == r.left
                && !(matches!(l.closure, Closure::Closed | Closure::RightClosed)
                    && matches!(r.closure, Closure::Closed | Closure::LeftClosed));
            if l.right > r.left || (l.right == r.left && !touching_ok) {
                return Err(Error::InvalidPotential(format!(
                    "segments [{}, {}] and [{}, {}] overlap",
                    l.left, l.right, r.left, r.right
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.segments.iter().find(|s| s.contains(x)).map_or(0.0, |s| s.height)
    }

    pub fn sample(&self, grid: &SimulationGrid) -> Vec<f64> {
        grid.positions().map(|x| self.eval(x)).collect()
    }

    pub fn max_height(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(0.0, f64::max)
    }

    pub fn shifted(&self, shift: f64) -> Self {
        let segments =
            self.segments.iter().map(|s| Segment { left: s.left + shift, right: s.right + shift, ..*s }).collect();
        Self { segments }
    }
}

/// `V0 = 1` on `[a, b]`, `v1` on `[a', a[` and `]b, b']`.
pub fn double_barrier(a_prime: f64, a: f64, b: f64, b_prime: f64, v1: f64) -> Result<PiecewisePotential> {
    if !(a_prime < a && a < b && b < b_prime) {
        return Err(Error::InvalidPotential(format!("need a' < a < b < b', got {a_prime}, {a}, {b}, {b_prime}")));
    }
    PiecewisePotential::new(vec![
        Segment { left: a_prime, right: a, height: v1, closure: Closure::LeftClosed },
        Segment { left: a, right: b, height: 1.0, closure: Closure::Closed },
        Segment { left: b, right: b_prime, height: v1, closure: Closure::RightClosed },
    ])
}
