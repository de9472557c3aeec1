//! Exact symplectic linear algebra.
//!
//! Phase-space vectors are laid out as `z = (x₁..xₙ, p₁..pₙ)` and matrices as
//! `S = (A, B; C, D)` acting on that layout. The symplectic form is
//! `σ(z, z′) = Jz·z′ = p·x′ − x·p′` with `J = (0, I; −I, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::tolerances::Tolerances;

/// The standard symplectic matrix `J = (0, I; −I, 0)` as a plain matrix.
pub fn j_matrix(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

pub fn standard_j(n: usize) -> Result<SymplecticMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    Ok(SymplecticMatrix {
        n,
        m: j_matrix(n),
    })
}

/// `σ(z, z2) = Jz·z2`.
pub fn symplectic_form(z: &[f64], z2: &[f64]) -> Result<f64> {
    if z.len() != z2.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: z2.len(),
        });
    }
    if z.len() % 2 != 0 {
        return Err(Error::OddDimension(z.len()));
    }
    Ok(sigma(z, z2))
}

/// Unchecked `σ`; both slices have length 2n.
#[inline]
pub(crate) fn sigma(z: &[f64], z2: &[f64]) -> f64 {
    let n = z.len() / 2;
    let mut s = 0.0;
    for i in 0..n {
        s += z[n + i] * z2[i] - z[i] * z2[n + i];
    }
    s
}

/// Maximum entry of `SᵀJS − J`.
pub fn symplectic_defect(s: &Mat) -> Result<f64> {
    let dim = linalg::require_square(s)?;
    if dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    let j = j_matrix(dim / 2);
    Ok(linalg::max_abs(&(s.transpose() * &j * s - &j)))
}

pub fn is_symplectic(s: &Mat, tol: f64) -> Result<bool> {
    Ok(symplectic_defect(s)? <= tol)
}

/// A real 2n×2n matrix with `SᵀJS = J`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    m: Mat,
}

impl SymplecticMatrix {
    pub fn new(m: Mat, tol: &Tolerances) -> Result<Self> {
        let defect = symplectic_defect(&m)?;
        if defect > tol.symp {
            return Err(Error::NotSymplectic { defect });
        }
        let d = linalg::det(&m);
        if (d - 1.0).abs() > tol.symp.max(1e-8) {
            return Err(Error::NotSymplectic {
                defect: (d - 1.0).abs(),
            });
        }
        Ok(Self { n: m.nrows() / 2, m })
    }

    /// Wraps a matrix that is symplectic by construction.
    pub(crate) fn from_exact(m: Mat) -> Self {
        Self { n: m.nrows() / 2, m }
    }

    pub fn from_blocks(a: &Mat, b: &Mat, c: &Mat, d: &Mat, tol: &Tolerances) -> Result<Self> {
        let n = a.nrows();
        for blk in [a, b, c, d] {
            if blk.nrows() != n || blk.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: blk.nrows().max(blk.ncols()),
                });
            }
        }
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        m.view_mut((0, n), (n, n)).copy_from(b);
        m.view_mut((n, 0), (n, n)).copy_from(c);
        m.view_mut((n, n), (n, n)).copy_from(d);
        Self::new(m, tol)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_exact(Mat::identity(2 * n, 2 * n))
    }

    /// Clockwise phase-plane rotation `(cos α, sin α; −sin α, cos α)`, n = 1.
    pub fn rotation(alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Self::from_exact(Mat::from_row_slice(2, 2, &[c, s, -s, c]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn a(&self) -> Mat {
        self.m.view((0, 0), (self.n, self.n)).into_owned()
    }
    pub fn b(&self) -> Mat {
        self.m.view((0, self.n), (self.n, self.n)).into_owned()
    }
    pub fn c(&self) -> Mat {
        self.m.view((self.n, 0), (self.n, self.n)).into_owned()
    }
    pub fn d(&self) -> Mat {
        self.m.view((self.n, self.n), (self.n, self.n)).into_owned()
    }

    /// `S⁻¹ = −J Sᵀ J`, exact for symplectic S.
    pub fn inverse(&self) -> Self {
        let j = j_matrix(self.n);
        Self::from_exact(-(&j * self.m.transpose() * &j))
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(Self::from_exact(&self.m * &other.m))
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.m, z)
    }

    /// `det(S − I)` by direct LU.
    pub fn det_minus_identity(&self) -> f64 {
        linalg::det(&(&self.m - Mat::identity(2 * self.n, 2 * self.n)))
    }

    pub fn det_plus_identity(&self) -> f64 {
        linalg::det(&(&self.m + Mat::identity(2 * self.n, 2 * self.n)))
    }

    pub fn is_free(&self, tol: &Tolerances) -> bool {
        linalg::det(&self.b()).abs() > tol.sing
    }
}

/// The quadratic form `W(x, x′) = ½Px·x − Lx·x′ + ½Qx′·x′`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    p: Mat,
    l: Mat,
    q: Mat,
}

impl GeneratingFunction {
    /// P and Q must be symmetric to `tol.symp`; they are then symmetrized
    /// exactly. `|det L|` must exceed `tol.sing`.
    pub fn new(p: Mat, l: Mat, q: Mat, tol: &Tolerances) -> Result<Self> {
        let n = linalg::require_square(&l)?;
        for m in [&p, &q] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
            linalg::require_symmetric(m, tol.symp)?;
        }
        let det_l = linalg::det(&l);
        if det_l.abs() <= tol.sing {
            return Err(Error::SingularL { det: det_l });
        }
        Ok(Self {
            p: linalg::symmetrize(&p),
            l,
            q: linalg::symmetrize(&q),
        })
    }

    /// `W_α = (cot α, 1/sin α, cot α)`, generating the rotation by α.
    pub fn rotation(alpha: f64) -> Result<Self> {
        let s = alpha.sin();
        if s.abs() < 1e-12 {
            return Err(Error::SingularAngle(alpha));
        }
        let cot = alpha.cos() / s;
        Self::new(
            linalg::scalar(cot),
            linalg::scalar(1.0 / s),
            linalg::scalar(cot),
            &Tolerances::default(),
        )
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }
    pub fn p(&self) -> &Mat {
        &self.p
    }
    pub fn l(&self) -> &Mat {
        &self.l
    }
    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn det_l(&self) -> f64 {
        linalg::det(&self.l)
    }

    pub fn eval(&self, x: &[f64], xp: &[f64]) -> f64 {
        0.5 * linalg::quad_form(&self.p, x) - linalg::dot(&linalg::mat_vec(&self.l, x), xp)
            + 0.5 * linalg::quad_form(&self.q, xp)
    }

    /// Hessian of `x ↦ W(x, x)`: `P + Q − L − Lᵀ`.
    pub fn w_xx(&self) -> Mat {
        &self.p + &self.q - &self.l - self.l.transpose()
    }

    /// Generating function of the inverse operator, `W′(x, x′) = −W(x′, x)`,
    /// i.e. `(−Q, −Lᵀ, −P)`.
    pub fn inverse(&self) -> Self {
        Self {
            p: -&self.q,
            l: -self.l.transpose(),
            q: -&self.p,
        }
    }
}

/// `S_W = (L⁻¹Q, L⁻¹; PL⁻¹Q − Lᵀ, PL⁻¹)`.
pub fn free_from_generating(w: &GeneratingFunction) -> SymplecticMatrix {
    let li = linalg::inverse(&w.l).expect("L invertible by construction");
    let a = &li * &w.q;
    let c = &w.p * &li * &w.q - w.l.transpose();
    let d = &w.p * &li;
    let n = w.n();
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&a);
    m.view_mut((0, n), (n, n)).copy_from(&li);
    m.view_mut((n, 0), (n, n)).copy_from(&c);
    m.view_mut((n, n), (n, n)).copy_from(&d);
    SymplecticMatrix::from_exact(m)
}

/// Inverts [`free_from_generating`]: `P = DB⁻¹`, `L = B⁻¹`, `Q = B⁻¹A`.
pub fn generating_from_free(s: &SymplecticMatrix, tol: &Tolerances) -> Result<GeneratingFunction> {
    let b = s.b();
    let det_b = linalg::det(&b);
    if det_b.abs() <= tol.sing {
        return Err(Error::NotFree { det_b });
    }
    let bi = linalg::inverse(&b).ok_or(Error::NotFree { det_b })?;
    let p = s.d() * &bi;
    let q = &bi * s.a();
    // DB⁻¹ and B⁻¹A are symmetric for symplectic S; round-off is averaged out.
    let loose = Tolerances {
        symp: 1e-6 * (1.0 + linalg::max_abs(&p).max(linalg::max_abs(&q))),
        ..*tol
    };
    GeneratingFunction::new(p, bi, q, &loose)
}

/// The symplectic Cayley transform `M_S = ½J(S + I)(S − I)⁻¹`, symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyMatrix {
    n: usize,
    m: Mat,
}

impl CayleyMatrix {
    pub fn new(m: Mat, tol: &Tolerances) -> Result<Self> {
        let dim = linalg::require_square(&m)?;
        if dim % 2 != 0 {
            return Err(Error::OddDimension(dim));
        }
        linalg::require_symmetric(&m, tol.symp)?;
        Ok(Self { n: dim / 2, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }
}

pub fn cayley(s: &SymplecticMatrix, tol: &Tolerances) -> Result<CayleyMatrix> {
    let n = s.n();
    let id = Mat::identity(2 * n, 2 * n);
    let sm = s.matrix() - &id;
    let det = linalg::det(&sm);
    if det.abs() <= tol.sing {
        return Err(Error::SingularSminusI { det });
    }
    let inv = linalg::inverse(&sm).ok_or(Error::SingularSminusI { det })?;
    let j = j_matrix(n);
    let m = &j * 0.5 + &j * inv;
    // The two algebraic forms agree exactly; the remaining asymmetry is round-off.
    Ok(CayleyMatrix {
        n,
        m: linalg::symmetrize(&m),
    })
}

/// `½J(S + I)(S − I)⁻¹`, the first of the two equivalent Cayley expressions.
pub fn cayley_product_form(s: &SymplecticMatrix, tol: &Tolerances) -> Result<Mat> {
    let n = s.n();
    let id = Mat::identity(2 * n, 2 * n);
    let sm = s.matrix() - &id;
    let det = linalg::det(&sm);
    if det.abs() <= tol.sing {
        return Err(Error::SingularSminusI { det });
    }
    let inv = linalg::inverse(&sm).ok_or(Error::SingularSminusI { det })?;
    Ok(j_matrix(n) * 0.5 * (s.matrix() + &id) * inv)
}

/// `S = (M − ½J)⁻¹(M + ½J)`.
pub fn cayley_inverse(m: &CayleyMatrix, tol: &Tolerances) -> Result<SymplecticMatrix> {
    let half_j = j_matrix(m.n) * 0.5;
    let lhs = &m.m - &half_j;
    let det = linalg::det(&lhs);
    if det.abs() <= tol.sing {
        return Err(Error::SingularMminusHalfJ { det });
    }
    let inv = linalg::inverse(&lhs).ok_or(Error::SingularMminusHalfJ { det })?;
    Ok(SymplecticMatrix::from_exact(inv * (&m.m + &half_j)))
}

/// Closed form `det(S_W − I) = (−1)ⁿ det(L⁻¹) det(P + Q − L − Lᵀ)`.
pub fn det_s_minus_i(w: &GeneratingFunction) -> f64 {
    let sign = if w.n() % 2 == 0 { 1.0 } else { -1.0 };
    sign * linalg::det(&w.w_xx()) / w.det_l()
}

/// Elementary generators of Sp(n) and their matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `V₋P = (I, 0; P, I)`, the projection of multiplication by `e^{iPx·x/2ħ}`.
    Chirp(Mat),
    /// `M_L = (L⁻¹, 0; 0, Lᵀ)`, the projection of `f ↦ f(Lx)`.
    Scale(Mat),
    /// `J`, the projection of the ħ-Fourier transform.
    J(usize),
}

pub fn generator_projection(g: &Generator, tol: &Tolerances) -> Result<SymplecticMatrix> {
    match g {
        Generator::Chirp(p) => {
            let n = linalg::require_square(p)?;
            linalg::require_symmetric(p, tol.symp)?;
            let mut m = Mat::identity(2 * n, 2 * n);
            m.view_mut((n, 0), (n, n)).copy_from(&linalg::symmetrize(p));
            Ok(SymplecticMatrix::from_exact(m))
        }
        Generator::Scale(l) => {
            let n = linalg::require_square(l)?;
            let det_l = linalg::det(l);
            if det_l.abs() <= tol.sing {
                return Err(Error::SingularL { det: det_l });
            }
            let li = linalg::inverse(l).ok_or(Error::SingularL { det: det_l })?;
            let mut m = Mat::zeros(2 * n, 2 * n);
            m.view_mut((0, 0), (n, n)).copy_from(&li);
            m.view_mut((n, n), (n, n)).copy_from(&l.transpose());
            Ok(SymplecticMatrix::from_exact(m))
        }
        Generator::J(n) => standard_j(*n),
    }
}

/// JSON form `{"n": n, "entries": [row-major 2n·2n reals]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(n: usize, m: &Mat) -> Self {
        Self {
            n,
            entries: linalg::to_row_major(m),
        }
    }

    pub fn to_matrix(&self) -> Result<Mat> {
        linalg::from_row_major(2 * self.n, 2 * self.n, &self.entries)
    }
}

/// JSON form `{"n": n, "P": [...], "L": [...], "Q": [...]}`, each row-major n×n.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeneratingJson {
    pub n: usize,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
}

impl GeneratingJson {
    pub fn from_generating(w: &GeneratingFunction) -> Self {
        Self {
            n: w.n(),
            p: linalg::to_row_major(&w.p),
            l: linalg::to_row_major(&w.l),
            q: linalg::to_row_major(&w.q),
        }
    }

    pub fn to_generating(&self, tol: &Tolerances) -> Result<GeneratingFunction> {
        let n = self.n;
        GeneratingFunction::new(
            linalg::from_row_major(n, n, &self.p)?,
            linalg::from_row_major(n, n, &self.l)?,
            linalg::from_row_major(n, n, &self.q)?,
            tol,
        )
    }
}
