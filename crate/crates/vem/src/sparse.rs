//! Global sparse assembly on a fixed sparsity pattern. The pattern and the
//! per-element scatter maps are built once; each time step only refreshes the
//! value array. Factorizations reuse a cached symbolic analysis.

use crate::space::DofLayout;
use crate::{Result, VemError};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, SparseColMatRef, SymbolicSparseColMat, Triplet};
use faer::Side;

pub struct Pattern {
    pub n: usize,
    pub nnz: usize,
    sym: SymbolicSparseColMat<usize>,
    /// Per element: row-major nd x nd indices into the value array.
    scatter: Vec<Vec<u32>>,
    diag: Vec<u32>,
}

impl Pattern {
    pub fn build(layout: &DofLayout) -> Result<Pattern> {
        let n = layout.n_dofs;
        let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::new();
        for dofs in &layout.elem_dofs {
            for &i in dofs {
                for &j in dofs {
                    trips.push(Triplet::new(i, j, 0.0));
                }
            }
        }
        for d in 0..n {
            trips.push(Triplet::new(d, d, 0.0));
        }
        let proto = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| VemError::Solver(format!("pattern creation: {e:?}")))?;
        let sym = proto
            .symbolic()
            .to_owned()
            .map_err(|e| VemError::Solver(format!("pattern symbolic: {e:?}")))?;

        let find = |row: usize, col: usize| -> u32 {
            let lo = sym.col_ptr()[col];
            let hi = sym.col_ptr()[col + 1];
            let idx = sym.row_idx()[lo..hi]
                .binary_search(&row)
                .expect("entry in pattern");
            (lo + idx) as u32
        };
        let scatter = layout
            .elem_dofs
            .iter()
            .map(|dofs| {
                let mut map = Vec::with_capacity(dofs.len() * dofs.len());
                for &i in dofs {
                    for &j in dofs {
                        map.push(find(i, j));
                    }
                }
                map
            })
            .collect();
        let diag = (0..n).map(|d| find(d, d)).collect();
        let nnz = sym.col_ptr()[n];
        Ok(Pattern {
            n,
            nnz,
            sym,
            scatter,
            diag,
        })
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.nnz]
    }

    /// Adds an element matrix (row-major over the element's local DoFs).
    /// Rows flagged in `skip_row` (by global id) are left untouched.
    pub fn scatter_add(
        &self,
        vals: &mut [f64],
        ei: usize,
        elem_mat: &[f64],
        dofs: &[usize],
        skip_row: &[bool],
    ) {
        let nd = dofs.len();
        debug_assert_eq!(elem_mat.len(), nd * nd);
        let map = &self.scatter[ei];
        for (li, &gi) in dofs.iter().enumerate() {
            if skip_row[gi] {
                continue;
            }
            let row = &elem_mat[li * nd..(li + 1) * nd];
            let idx = &map[li * nd..(li + 1) * nd];
            for (v, &ix) in row.iter().zip(idx) {
                vals[ix as usize] += v;
            }
        }
    }

    pub fn set_diag(&self, vals: &mut [f64], d: usize, v: f64) {
        vals[self.diag[d] as usize] = v;
    }

    /// Value-array range backing one column.
    pub fn col_positions(&self, col: usize) -> std::ops::Range<usize> {
        self.sym.col_ptr()[col]..self.sym.col_ptr()[col + 1]
    }

    /// All value-array indices living in rows flagged by `mask`.
    pub fn positions_in_rows(&self, mask: &[bool]) -> Vec<u32> {
        let cp = self.sym.col_ptr();
        let ri = self.sym.row_idx();
        let mut out = Vec::new();
        for col in 0..self.n {
            for idx in cp[col]..cp[col + 1] {
                if mask[ri[idx]] {
                    out.push(idx as u32);
                }
            }
        }
        out
    }

    /// y = A x for the value array `vals`.
    pub fn matvec(&self, vals: &[f64], x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let cp = self.sym.col_ptr();
        let ri = self.sym.row_idx();
        for col in 0..self.n {
            let xc = x[col];
            if xc == 0.0 {
                continue;
            }
            for idx in cp[col]..cp[col + 1] {
                y[ri[idx]] += vals[idx] * xc;
            }
        }
    }

    pub fn view<'a>(&'a self, vals: &'a [f64]) -> SparseColMatRef<'a, usize, f64> {
        SparseColMatRef::new(self.sym.as_ref(), vals)
    }
}

/// Sparse LU with the symbolic analysis done once per pattern.
pub struct LuSolver {
    symbolic: SymbolicLu<usize>,
    factor: Option<Lu<usize, f64>>,
}

impl LuSolver {
    pub fn new(pattern: &Pattern, vals: &[f64]) -> Result<LuSolver> {
        let symbolic = SymbolicLu::try_new(pattern.view(vals).symbolic())
            .map_err(|e| VemError::Solver(format!("symbolic lu: {e:?}")))?;
        Ok(LuSolver {
            symbolic,
            factor: None,
        })
    }

    pub fn factor(&mut self, pattern: &Pattern, vals: &[f64]) -> Result<()> {
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), pattern.view(vals))
            .map_err(|e| VemError::Solver(format!("numeric lu: {e:?}")))?;
        self.factor = Some(lu);
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let lu = self
            .factor
            .as_ref()
            .ok_or_else(|| VemError::Solver("solve before factor".into()))?;
        let b = faer::Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..rhs.len()).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(VemError::NonFinite("linear solve produced NaN/inf".into()));
        }
        Ok(out)
    }
}

/// Sparse Cholesky for symmetric positive definite systems, with the
/// symbolic analysis done once per pattern. Much less fill-in than LU on
/// the mass and stiffness matrices here.
pub struct CholSolver {
    symbolic: SymbolicLlt<usize>,
    factor: Option<Llt<usize, f64>>,
}

impl CholSolver {
    pub fn new(pattern: &Pattern, vals: &[f64]) -> Result<CholSolver> {
        let symbolic = SymbolicLlt::try_new(pattern.view(vals).symbolic(), Side::Lower)
            .map_err(|e| VemError::Solver(format!("symbolic llt: {e:?}")))?;
        Ok(CholSolver {
            symbolic,
            factor: None,
        })
    }

    pub fn factor(&mut self, pattern: &Pattern, vals: &[f64]) -> Result<()> {
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), pattern.view(vals), Side::Lower)
            .map_err(|e| VemError::Solver(format!("numeric llt: {e:?}")))?;
        self.factor = Some(llt);
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let llt = self
            .factor
            .as_ref()
            .ok_or_else(|| VemError::Solver("solve before factor".into()))?;
        let b = faer::Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = llt.solve(&b);
        let out: Vec<f64> = (0..rhs.len()).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(VemError::NonFinite("linear solve produced NaN/inf".into()));
        }
        Ok(out)
    }
}
