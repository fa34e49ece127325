use alloc::vec::Vec;

use super::{CsrMatrix, LinearOperator};

/// The six nonzero blocks of the Newton system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockName {
    /// velocity–velocity
    F,
    /// velocity rows, magnetic columns
    Z,
    /// magnetic rows, velocity columns
    Y,
    /// magnetic–magnetic
    D,
    /// pressure rows, velocity columns
    BDiv,
    /// multiplier rows, magnetic columns
    CGrad,
}

impl BlockName {
    /// (row field, column field) indices into the offset table.
    pub fn fields(self) -> (usize, usize) {
        match self {
            BlockName::F => (0, 0),
            BlockName::Z => (0, 1),
            BlockName::Y => (1, 0),
            BlockName::D => (1, 1),
            BlockName::BDiv => (2, 0),
            BlockName::CGrad => (3, 1),
        }
    }
}

/// Block form of the system. The `(u,p)` and `(B,r)` blocks are applied as
/// transposes of `BDiv` and `CGrad`. Constrained pressure and multiplier DoFs
/// carry a diagonal entry (1 after elimination, 0 otherwise).
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub f: CsrMatrix,
    pub z: CsrMatrix,
    pub y: CsrMatrix,
    pub d: CsrMatrix,
    pub b_div: CsrMatrix,
    pub c_grad: CsrMatrix,
    pub constraint_diag: Vec<f64>,
    offsets: [usize; 5],
}

impl BlockOperator {
    /// Splits a monolithic matrix with block offsets `(u, B, p, r)`.
    pub fn from_monolithic(a: &CsrMatrix, offsets: [usize; 5]) -> Self {
        let r = |k: usize| offsets[k]..offsets[k + 1];
        let blk = |name: BlockName| {
            let (i, j) = name.fields();
            a.submatrix(r(i), r(j))
        };
        let constraint_diag = (offsets[2]..offsets[4]).map(|i| a.get(i, i)).collect();
        BlockOperator {
            f: blk(BlockName::F),
            z: blk(BlockName::Z),
            y: blk(BlockName::Y),
            d: blk(BlockName::D),
            b_div: blk(BlockName::BDiv),
            c_grad: blk(BlockName::CGrad),
            constraint_diag,
            offsets,
        }
    }

    pub fn block(&self, name: BlockName) -> &CsrMatrix {
        match name {
            BlockName::F => &self.f,
            BlockName::Z => &self.z,
            BlockName::Y => &self.y,
            BlockName::D => &self.d,
            BlockName::BDiv => &self.b_div,
            BlockName::CGrad => &self.c_grad,
        }
    }

    pub fn offsets(&self) -> [usize; 5] {
        self.offsets
    }
}

impl LinearOperator for BlockOperator {
    fn dim(&self) -> usize {
        self.offsets[4]
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let o = self.offsets;
        let (xu, xb, xp, xr) = (&x[o[0]..o[1]], &x[o[1]..o[2]], &x[o[2]..o[3]], &x[o[3]..o[4]]);
        let (yu, rest) = y.split_at_mut(o[1]);
        let (yb, rest) = rest.split_at_mut(o[2] - o[1]);
        let (yp, yr) = rest.split_at_mut(o[3] - o[2]);
        self.f.matvec(xu, yu);
        self.z.matvec_add(xb, yu);
        self.b_div.matvec_transpose_add(xp, yu);
        self.y.matvec(xu, yb);
        self.d.matvec_add(xb, yb);
        self.c_grad.matvec_transpose_add(xr, yb);
        self.b_div.matvec(xu, yp);
        self.c_grad.matvec(xb, yr);
        let np = o[3] - o[2];
        for (i, v) in yp.iter_mut().enumerate() {
            *v += self.constraint_diag[i] * xp[i];
        }
        for (i, v) in yr.iter_mut().enumerate() {
            *v += self.constraint_diag[np + i] * xr[i];
        }
    }
}
