use super::RelaxError;

const OMEGA_DEDUP: f64 = 1e-10;
const GAMMA_DEDUP: f64 = 1e-12;

/// A finite set of unit directions `Omega` in `S^{d-1}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OmegaPool {
    dim: usize,
    dirs: Vec<Vec<f64>>,
}

impl OmegaPool {
    pub fn new(dim: usize) -> Self {
        Self { dim, dirs: Vec::new() }
    }

    /// `{+e_j, -e_j}` for every axis.
    pub fn axes(dim: usize) -> Self {
        let mut p = Self::new(dim);
        for j in 0..dim {
            for s in [1.0, -1.0] {
                let mut w = vec![0.0; dim];
                w[j] = s;
                p.dirs.push(w);
            }
        }
        p
    }

    /// The four diagonal directions `(+-1, +-1)/sqrt(2)` in the plane.
    pub fn diagonals() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut p = Self::new(2);
        for (a, b) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
            p.dirs.push(vec![a, b]);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.dirs.iter()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.dirs[i]
    }

    /// Normalizes and stores `w`; returns false for a near-duplicate.
    pub fn insert(&mut self, w: &[f64]) -> Result<bool, RelaxError> {
        if w.len() != self.dim {
            return Err(RelaxError::Dimension(format!(
                "direction of length {} for pool of dimension {}",
                w.len(),
                self.dim
            )));
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(RelaxError::Domain("zero or non-finite direction".into()));
        }
        let unit: Vec<f64> = w.iter().map(|v| v / norm).collect();
        if self.dirs.iter().any(|d| d.iter().zip(&unit).all(|(a, b)| (a - b).abs() <= OMEGA_DEDUP)) {
            return Ok(false);
        }
        self.dirs.push(unit);
        Ok(true)
    }
}

/// Per-coordinate breakpoint sets `Gamma_j`, each sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GammaPool {
    sets: Vec<Vec<f64>>,
}

impl GammaPool {
    pub fn new(dim: usize) -> Self {
        Self { sets: vec![Vec::new(); dim] }
    }

    /// The same breakpoints for every coordinate.
    pub fn uniform(dim: usize, values: &[f64]) -> Self {
        let mut p = Self::new(dim);
        for j in 0..dim {
            for &g in values {
                p.insert(j, g);
            }
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.sets.len()
    }

    pub fn get(&self, j: usize) -> &[f64] {
        &self.sets[j]
    }

    /// `sum_j |Gamma_j|`.
    pub fn total(&self) -> usize {
        self.sets.iter().map(|s| s.len()).sum()
    }

    pub fn contains(&self, j: usize, gamma: f64) -> bool {
        let s = &self.sets[j];
        let at = s.partition_point(|&g| g < gamma);
        (at < s.len() && (s[at] - gamma).abs() <= GAMMA_DEDUP)
            || (at > 0 && (s[at - 1] - gamma).abs() <= GAMMA_DEDUP)
    }

    /// Adds `gamma` to `Gamma_j`; returns false for a near-duplicate.
    pub fn insert(&mut self, j: usize, gamma: f64) -> bool {
        if self.contains(j, gamma) {
            return false;
        }
        let s = &mut self.sets[j];
        let at = s.partition_point(|&g| g < gamma);
        s.insert(at, gamma);
        true
    }
}
