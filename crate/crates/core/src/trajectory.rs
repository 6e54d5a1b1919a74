use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{CavityParams, Error, Result, C64};

/// Amplitudes of the central atom and of the mirrors' bright mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayState {
    pub c0: C64,
    /// Not every method reconstructs the mirror mode.
    pub cm: Option<C64>,
}

impl DelayState {
    #[inline]
    pub fn p0(&self) -> f64 {
        self.c0.norm_sqr()
    }
}

/// Which solver produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dde,
    FullChain,
    Series,
    Spectral,
    SpectralMain,
    Approx,
    Detuned,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Dde => "dde",
            Method::FullChain => "full-chain",
            Method::Series => "series",
            Method::Spectral => "spectral",
            Method::SpectralMain => "spectral-main",
            Method::Approx => "approx",
            Method::Detuned => "detuned",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dde" => Method::Dde,
            "full-chain" => Method::FullChain,
            "series" => Method::Series,
            "spectral" => Method::Spectral,
            "spectral-main" => Method::SpectralMain,
            "approx" => Method::Approx,
            "detuned" => Method::Detuned,
            other => return Err(Error::Config(alloc::format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub method: Method,
    pub dt: Option<f64>,
    pub params: CavityParams,
    /// Estimated absolute error of c0, where the method can provide one.
    pub error_bound: Option<f64>,
    pub warnings: Vec<String>,
}

impl TrajectoryMeta {
    pub fn new(method: Method, params: CavityParams) -> Self {
        TrajectoryMeta {
            method,
            dt: None,
            params,
            error_bound: None,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t_grid: Vec<f64>,
    pub samples: Vec<DelayState>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Builds a trajectory with only c0 known.
    pub fn from_c0(
        t_grid: Vec<f64>,
        c0: impl IntoIterator<Item = C64>,
        meta: TrajectoryMeta,
    ) -> Self {
        let samples = c0
            .into_iter()
            .map(|c0| DelayState { c0, cm: None })
            .collect();
        Trajectory {
            t_grid,
            samples,
            meta,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn c0(&self) -> Vec<C64> {
        self.samples.iter().map(|s| s.c0).collect()
    }

    pub fn p0(&self) -> Vec<f64> {
        self.samples.iter().map(DelayState::p0).collect()
    }

    /// Keeps at most `max_rows` evenly strided rows, always including both ends.
    pub fn decimate(&mut self, max_rows: usize) {
        let n = self.len();
        if max_rows < 2 || n <= max_rows {
            return;
        }
        let stride = (n - 1).div_ceil(max_rows - 1);
        let mut keep: Vec<usize> = (0..n).step_by(stride).collect();
        if *keep.last().unwrap() != n - 1 {
            if keep.len() == max_rows {
                keep.pop();
            }
            keep.push(n - 1);
        }
        self.t_grid = keep.iter().map(|&i| self.t_grid[i]).collect();
        self.samples = keep.iter().map(|&i| self.samples[i]).collect();
    }
}

/// `n_points` evenly spaced times on [0, t_max].
pub fn uniform_grid(t_max: f64, n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        n => {
            let h = t_max / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { t_max } else { i as f64 * h })
                .collect()
        }
    }
}
