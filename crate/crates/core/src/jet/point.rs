use std::fmt;

use serde::{Deserialize, Serialize};

use super::JetError;

/// Values of (x, t, z_0..z_K, w_1..w_M, v_1..v_N) at one space-time point,
/// with z_i = ∂x^i u, w_j = ∂t^j u and v_k = ∂t^k u_x. Once prolonged (or
/// when sampled from a field), `zt[k]` holds the mixed derivative z_{k,t}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetPoint {
    pub x: f64,
    pub t: f64,
    pub z: Vec<f64>,
    #[serde(default)]
    pub w: Vec<f64>,
    #[serde(default)]
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zt: Vec<f64>,
}

impl JetPoint {
    pub fn new(x: f64, t: f64, z: Vec<f64>, w: Vec<f64>, v: Vec<f64>) -> Self {
        assert!(!z.is_empty(), "a jet carries at least z0");
        JetPoint { x, t, z, w, v, zt: Vec::new() }
    }

    /// Highest z-order carried.
    pub fn order(&self) -> usize {
        self.z.len() - 1
    }

    pub fn z(&self, i: usize) -> Result<f64, JetError> {
        self.z.get(i).copied().ok_or(JetError::Missing(Coord::Z(i)))
    }

    /// w_j for j ≥ 1.
    pub fn w(&self, j: usize) -> Result<f64, JetError> {
        j.checked_sub(1)
            .and_then(|k| self.w.get(k).copied())
            .ok_or(JetError::Missing(Coord::W(j)))
    }

    /// v_k for k ≥ 1.
    pub fn v(&self, k: usize) -> Result<f64, JetError> {
        k.checked_sub(1)
            .and_then(|i| self.v.get(i).copied())
            .ok_or(JetError::Missing(Coord::V(k)))
    }

    /// z_{k,t}, available after prolongation.
    pub fn zt(&self, k: usize) -> Result<f64, JetError> {
        self.zt.get(k).copied().ok_or(JetError::MissingMixed(k))
    }

    pub fn get(&self, c: Coord) -> Result<f64, JetError> {
        match c {
            Coord::X => Ok(self.x),
            Coord::T => Ok(self.t),
            Coord::Z(i) => self.z(i),
            Coord::W(j) => self.w(j),
            Coord::V(k) => self.v(k),
        }
    }
}

/// A jet-space coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    X,
    T,
    Z(usize),
    W(usize),
    V(usize),
}

impl Coord {
    /// Maps a variable name (`x`, `t`, `z3`, `w1`, `v2`) to its coordinate.
    pub fn from_name(name: &str) -> Option<Coord> {
        match name {
            "x" => return Some(Coord::X),
            "t" => return Some(Coord::T),
            _ => {}
        }
        let (head, digits) = name.split_at(1);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if digits.len() > 1 && digits.starts_with('0') {
            return None;
        }
        let n: usize = digits.parse().ok()?;
        match head {
            "z" => Some(Coord::Z(n)),
            "w" if n >= 1 => Some(Coord::W(n)),
            "v" if n >= 1 => Some(Coord::V(n)),
            _ => None,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::X => write!(f, "x"),
            Coord::T => write!(f, "t"),
            Coord::Z(i) => write!(f, "z{i}"),
            Coord::W(j) => write!(f, "w{j}"),
            Coord::V(k) => write!(f, "v{k}"),
        }
    }
}
