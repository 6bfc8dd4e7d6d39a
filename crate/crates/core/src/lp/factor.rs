//! Basis factorization for the simplex engine.
//!
//! The basis matrix has the shape `[A_S | -I_L]`: structural columns `S` and
//! logical (slack) columns for the rows in `L`. Only the kernel `A_{T,S}`
//! (rows without a basic logical, structural columns) needs a real LU
//! factorization; the logical part is eliminated explicitly. Pivots between
//! refactorizations are kept as product-form eta columns.

const SINGULAR_TOL: f64 = 1e-11;

pub(crate) struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// A structural column of the basis: its position and sparse entries.
struct BasicColumn {
    pos: usize,
    entries: Vec<(usize, f64)>,
}

pub(crate) struct Factor {
    m: usize,
    /// Basis position of the logical of row `i`, or `usize::MAX` for kernel rows.
    logical_pos: Vec<usize>,
    /// Kernel index of row `i`, or `usize::MAX`.
    kernel_index: Vec<usize>,
    kernel_rows: Vec<usize>,
    structurals: Vec<BasicColumn>,
    k: usize,
    /// Row-major LU of the row-permuted kernel; `perm[i]` is the kernel row at position `i`.
    lu: Vec<f64>,
    /// Column-major copy of `lu`.
    luc: Vec<f64>,
    perm: Vec<usize>,
    etas: Vec<Eta>,
}

/// A kernel column that turned out (numerically) dependent, paired with a
/// kernel row that can take a logical in its place.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Singular {
    pub pos: usize,
    pub row: usize,
}

impl Factor {
    /// Factorizes the basis whose position `p` holds variable `basic[p]`.
    /// Variables `>= n` are logicals (`n + row`); `column(j)` yields structural entries.
    pub fn build<'c, F>(m: usize, n: usize, basic: &[usize], column: F) -> Result<Factor, Singular>
    where
        F: Fn(usize) -> &'c [(usize, f64)],
    {
        let none = usize::MAX;
        let mut logical_pos = vec![none; m];
        let mut structurals = Vec::new();
        for (p, &var) in basic.iter().enumerate() {
            if var >= n {
                logical_pos[var - n] = p;
            } else {
                structurals.push(BasicColumn {
                    pos: p,
                    entries: column(var).to_vec(),
                });
            }
        }
        let mut kernel_index = vec![none; m];
        let mut kernel_rows = Vec::new();
        for i in 0..m {
            if logical_pos[i] == none {
                kernel_index[i] = kernel_rows.len();
                kernel_rows.push(i);
            }
        }
        let k = kernel_rows.len();
        debug_assert_eq!(k, structurals.len());
        let mut lu = vec![0.0; k * k];
        for (c, col) in structurals.iter().enumerate() {
            for &(i, v) in &col.entries {
                let ki = kernel_index[i];
                if ki != none {
                    lu[ki * k + c] += v;
                }
            }
        }
        let mut perm: Vec<usize> = (0..k).collect();
        for c in 0..k {
            let mut best = c;
            let mut best_abs = lu[c * k + c].abs();
            for r in c + 1..k {
                let v = lu[r * k + c].abs();
                if v > best_abs {
                    best = r;
                    best_abs = v;
                }
            }
            if best_abs < SINGULAR_TOL {
                return Err(Singular {
                    pos: structurals[c].pos,
                    row: kernel_rows[perm[c]],
                });
            }
            if best != c {
                for j in 0..k {
                    lu.swap(c * k + j, best * k + j);
                }
                perm.swap(c, best);
            }
            let piv = lu[c * k + c];
            for r in c + 1..k {
                let l = lu[r * k + c] / piv;
                if l != 0.0 {
                    lu[r * k + c] = l;
                    let (upper, lower) = lu.split_at_mut(r * k);
                    let src = &upper[c * k + c + 1..c * k + k];
                    let dst = &mut lower[c + 1..k];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= l * s;
                    }
                } else {
                    lu[r * k + c] = 0.0;
                }
            }
        }
        let mut luc = vec![0.0; k * k];
        for r in 0..k {
            for c in 0..k {
                luc[c * k + r] = lu[r * k + c];
            }
        }
        Ok(Factor {
            m,
            logical_pos,
            kernel_index,
            kernel_rows,
            structurals,
            k,
            lu,
            luc,
            perm,
            etas: Vec::new(),
        })
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B z = a` in place; on entry `a` is indexed by row, on exit by basis position.
    pub fn ftran(&self, a: &mut [f64]) {
        let k = self.k;
        let none = usize::MAX;
        // kernel solve: K z_S = a_T
        let mut zk = vec![0.0; k];
        for i in 0..k {
            zk[i] = a[self.kernel_rows[self.perm[i]]];
        }
        // L z = a_T, then U z = z, sweeping columns
        for c in 0..k {
            let zc = zk[c];
            if zc == 0.0 {
                continue;
            }
            let col = &self.luc[c * k + c + 1..(c + 1) * k];
            for (z, l) in zk[c + 1..].iter_mut().zip(col) {
                *z -= l * zc;
            }
        }
        for c in (0..k).rev() {
            if zk[c] == 0.0 {
                continue;
            }
            let zc = zk[c] / self.luc[c * k + c];
            zk[c] = zc;
            let col = &self.luc[c * k..c * k + c];
            for (z, u) in zk[..c].iter_mut().zip(col) {
                *z -= u * zc;
            }
        }
        // logical rows: z_{p_i} = (A_S z_S)_i - a_i
        let mut acc = vec![0.0; self.m];
        for (c, col) in self.structurals.iter().enumerate() {
            let zc = zk[c];
            if zc != 0.0 {
                for &(i, v) in &col.entries {
                    acc[i] += v * zc;
                }
            }
        }
        let mut z = vec![0.0; self.m];
        for i in 0..self.m {
            let p = self.logical_pos[i];
            if p != none {
                z[p] = acc[i] - a[i];
            }
        }
        for (c, col) in self.structurals.iter().enumerate() {
            z[col.pos] = zk[c];
        }
        for eta in &self.etas {
            let zp = z[eta.pos] / eta.pivot;
            z[eta.pos] = zp;
            if zp != 0.0 {
                for &(i, d) in &eta.entries {
                    z[i] -= d * zp;
                }
            }
        }
        a.copy_from_slice(&z);
    }

    /// Solves `y^T B = c^T` in place; on entry `c` is indexed by basis position, on exit by row.
    pub fn btran(&self, c: &mut [f64]) {
        let k = self.k;
        let none = usize::MAX;
        for eta in self.etas.iter().rev() {
            let mut s = 0.0;
            for &(i, d) in &eta.entries {
                s += c[i] * d;
            }
            c[eta.pos] = (c[eta.pos] - s) / eta.pivot;
        }
        let mut y = vec![0.0; self.m];
        for i in 0..self.m {
            let p = self.logical_pos[i];
            if p != none {
                y[i] = -c[p];
            }
        }
        // K^T w_T = c_S - A_{L,S}^T y_L
        let mut rhs = vec![0.0; k];
        for (col_idx, col) in self.structurals.iter().enumerate() {
            let mut s = c[col.pos];
            for &(i, v) in &col.entries {
                if self.kernel_index[i] == none {
                    s -= v * y[i];
                }
            }
            rhs[col_idx] = s;
        }
        // U^T u = rhs, sweeping rows of U
        for i in 0..k {
            if rhs[i] == 0.0 {
                continue;
            }
            let ui = rhs[i] / self.lu[i * k + i];
            rhs[i] = ui;
            let row = &self.lu[i * k + i + 1..(i + 1) * k];
            for (r, l) in rhs[i + 1..].iter_mut().zip(row) {
                *r -= l * ui;
            }
        }
        // L^T v = u, sweeping rows of L
        for i in (0..k).rev() {
            let vi = rhs[i];
            if vi == 0.0 {
                continue;
            }
            let row = &self.lu[i * k..i * k + i];
            for (r, l) in rhs[..i].iter_mut().zip(row) {
                *r -= l * vi;
            }
        }
        for i in 0..k {
            y[self.kernel_rows[self.perm[i]]] = rhs[i];
        }
        c.copy_from_slice(&y);
    }

    /// Records the replacement of the basic column at `pos` by a column whose
    /// `ftran` image is `alpha`.
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != pos && *v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}
