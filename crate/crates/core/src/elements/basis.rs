use num_traits::{One, Zero};

use super::poly::{full_monomial_forms, minor, CompiledPoly, PolyForm, Q};
use super::quadrature::QuadratureRule;
use super::rational::{independent_forms, RationalMatrix};
use crate::combinatorics::{binomial, merge_sign, subsets};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    /// Complete polynomial forms `P_r Λ^k`.
    Full,
    /// Trimmed forms `P_r^- Λ^k`.
    Trimmed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementFamily {
    pub kind: FamilyKind,
    pub r: usize,
    pub k: usize,
}

impl ElementFamily {
    pub fn full(r: usize, k: usize) -> Self {
        Self {
            kind: FamilyKind::Full,
            r,
            k,
        }
    }

    pub fn trimmed(r: usize, k: usize) -> Self {
        Self {
            kind: FamilyKind::Trimmed,
            r,
            k,
        }
    }

    /// Dimension of the space on a `dim`-simplex.
    pub fn dimension(&self, dim: usize) -> usize {
        let (r, k, n) = (self.r, self.k, dim);
        if k > n {
            return 0;
        }
        match self.kind {
            FamilyKind::Full => binomial(r + n, r + k) * binomial(r + k, k),
            FamilyKind::Trimmed => {
                if r == 0 {
                    0
                } else {
                    binomial(r + n, r + k) * binomial(r + k - 1, k)
                }
            }
        }
    }

    /// Highest polynomial degree of the basis forms.
    pub fn polynomial_degree(&self) -> usize {
        self.r
    }
}

impl std::fmt::Display for ElementFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            FamilyKind::Full => write!(f, "P{}Λ{}", self.r, self.k),
            FamilyKind::Trimmed => write!(f, "P{}-Λ{}", self.r, self.k),
        }
    }
}

impl std::str::FromStr for ElementFamily {
    type Err = Error;

    /// Accepts the display form (`P2-Λ1`, `P3Λ0`) with `L` allowed for `Λ`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace('Λ', "L");
        let bad = || Error::invalid(format!("cannot parse element family '{}'", s.trim()));
        let rest = t.strip_prefix('P').ok_or_else(bad)?;
        let (r, rest) = rest.split_once('L').ok_or_else(bad)?;
        let (r, trimmed) = match r.strip_suffix('-') {
            Some(r) => (r, true),
            None => (r, false),
        };
        let r: usize = r.parse().map_err(|_| bad())?;
        let k: usize = rest.parse().map_err(|_| bad())?;
        Ok(if trimmed { Self::trimmed(r, k) } else { Self::full(r, k) })
    }
}

/// Which degrees of freedom a basis function belongs to: a moment against the
/// `moment`-th test form on local sub-simplex `sub_index` of dimension `sub_dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofDescriptor {
    pub sub_dim: usize,
    pub sub_index: usize,
    pub moment: usize,
}

/// Spanning family of `P_r Λ^k` in `n` variables (a basis).
pub fn full_space(n: usize, r: usize, k: usize) -> Vec<PolyForm> {
    full_monomial_forms(n, r, k)
}

/// Basis of `P_r^- Λ^k = P_{r-1} Λ^k + κ P_{r-1} Λ^{k+1}` in `n` variables.
pub fn trimmed_space(n: usize, r: usize, k: usize) -> Vec<PolyForm> {
    if r == 0 || k > n {
        return Vec::new();
    }
    let mut forms = full_monomial_forms(n, r - 1, k);
    if k < n {
        forms.extend(full_monomial_forms(n, r - 1, k + 1).iter().map(PolyForm::koszul));
    }
    independent_forms(forms)
}

/// Test forms for the moments of `family` on one `m`-dimensional face.
fn test_space(family: ElementFamily, m: usize) -> Vec<PolyForm> {
    let ElementFamily { kind, r, k } = family;
    if m < k {
        return Vec::new();
    }
    let j = m - k;
    match kind {
        FamilyKind::Trimmed => {
            let s = r as isize + k as isize - m as isize - 1;
            if s < 0 {
                Vec::new()
            } else {
                full_space(m, s as usize, j)
            }
        }
        FamilyKind::Full => {
            let s = r as isize + k as isize - m as isize;
            if j == 0 {
                if s < 0 {
                    Vec::new()
                } else {
                    full_space(m, s as usize, 0)
                }
            } else if s <= 0 {
                Vec::new()
            } else {
                trimmed_space(m, s as usize, j)
            }
        }
    }
}

/// Affine parametrization `t -> offset + mat t` of local face `verts` of the
/// reference `n`-simplex (vertex 0 at the origin, vertex `i` at `e_{i-1}`).
fn reference_face_map(n: usize, verts: &[usize]) -> (Vec<Q>, Vec<Vec<Q>>) {
    let vertex = |v: usize| -> Vec<Q> {
        let mut p = vec![Q::zero(); n];
        if v > 0 {
            p[v - 1] = Q::one();
        }
        p
    };
    let p0 = vertex(verts[0]);
    let m = verts.len() - 1;
    let mut mat = vec![vec![Q::zero(); m]; n];
    for j in 0..m {
        let pj = vertex(verts[j + 1]);
        for i in 0..n {
            mat[i][j] = &pj[i] - &p0[i];
        }
    }
    (p0, mat)
}

/// Reference basis of one element family on the reference simplex, dual to
/// its canonical moment degrees of freedom.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub family: ElementFamily,
    pub dim: usize,
    basis: Vec<PolyForm>,
    dbasis: Vec<PolyForm>,
    compiled: Vec<Vec<CompiledPoly>>,
    dcompiled: Vec<Vec<CompiledPoly>>,
    dofs: Vec<DofDescriptor>,
    /// Test forms per face dimension `m`, in `m` variables.
    tests: Vec<Vec<PolyForm>>,
    tests_compiled: Vec<Vec<Vec<CompiledPoly>>>,
}

pub fn is_supported(family: ElementFamily, dim: usize) -> bool {
    let ElementFamily { kind, r, k } = family;
    if k > dim {
        return false;
    }
    match (dim, kind) {
        (2, FamilyKind::Trimmed) => (1..=3).contains(&r),
        (2, FamilyKind::Full) => r <= 3 && (r >= 1 || k == dim),
        (3, FamilyKind::Trimmed) => (1..=2).contains(&r),
        _ => false,
    }
}

/// Build the nodal basis of `family` on the reference `dim`-simplex.
pub fn make_basis(family: ElementFamily, dim: usize) -> Result<ReferenceBasis> {
    if !is_supported(family, dim) {
        return Err(Error::UnsupportedElement(format!("{family} in dimension {dim}")));
    }
    let span = match family.kind {
        FamilyKind::Full => full_space(dim, family.r, family.k),
        FamilyKind::Trimmed => trimmed_space(dim, family.r, family.k),
    };
    let tests: Vec<Vec<PolyForm>> = (0..=dim).map(|m| test_space(family, m)).collect();
    let mut dofs = Vec::new();
    for m in 0..=dim {
        for sub_index in 0..binomial(dim + 1, m + 1) {
            for moment in 0..tests[m].len() {
                dofs.push(DofDescriptor {
                    sub_dim: m,
                    sub_index,
                    moment,
                });
            }
        }
    }
    if dofs.len() != span.len() {
        return Err(Error::UnsupportedElement(format!(
            "{family}: {} moments for a space of dimension {}",
            dofs.len(),
            span.len()
        )));
    }
    let mut b = ReferenceBasis {
        family,
        dim,
        basis: Vec::new(),
        dbasis: Vec::new(),
        compiled: Vec::new(),
        dcompiled: Vec::new(),
        dofs,
        tests_compiled: tests
            .iter()
            .map(|ts| ts.iter().map(PolyForm::compile).collect())
            .collect(),
        tests,
    };
    let n = span.len();
    let mut dmat = RationalMatrix::zeros(n, n);
    for (j, phi) in span.iter().enumerate() {
        for (i, v) in b.apply_dofs(phi).into_iter().enumerate() {
            dmat.data[i][j] = v;
        }
    }
    let inv = dmat
        .inverse()
        .ok_or_else(|| Error::UnsupportedElement(format!("{family}: moments not unisolvent")))?;
    let basis: Vec<PolyForm> = (0..n)
        .map(|l| {
            let mut f = PolyForm::zero(dim, family.k);
            for (j, phi) in span.iter().enumerate() {
                f.add_scaled(&inv.data[j][l], phi);
            }
            f
        })
        .collect();
    b.dbasis = basis.iter().map(PolyForm::d).collect();
    b.compiled = basis.iter().map(PolyForm::compile).collect();
    b.dcompiled = b.dbasis.iter().map(PolyForm::compile).collect();
    b.basis = basis;
    Ok(b)
}

impl ReferenceBasis {
    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    /// Number of form components `C(dim, k)`.
    pub fn n_comps(&self) -> usize {
        binomial(self.dim, self.family.k)
    }

    pub fn n_dcomps(&self) -> usize {
        binomial(self.dim, self.family.k + 1)
    }

    pub fn dof_descriptors(&self) -> &[DofDescriptor] {
        &self.dofs
    }

    /// Moments carried by each face of dimension `m`.
    pub fn moments_per_face(&self, m: usize) -> usize {
        self.tests.get(m).map_or(0, Vec::len)
    }

    pub fn forms(&self) -> &[PolyForm] {
        &self.basis
    }

    pub fn d_forms(&self) -> &[PolyForm] {
        &self.dbasis
    }

    /// Apply every degree of freedom to an exact form on the reference cell.
    pub fn apply_dofs(&self, u: &PolyForm) -> Vec<Q> {
        assert_eq!((u.n, u.k), (self.dim, self.family.k));
        let mut out = Vec::with_capacity(self.dofs.len());
        for m in 0..=self.dim {
            if self.tests[m].is_empty() {
                continue;
            }
            for verts in subsets(self.dim + 1, m + 1) {
                let (offset, mat) = reference_face_map(self.dim, &verts);
                let pulled = u.pullback_affine(&offset, &mat, m);
                for eta in &self.tests[m] {
                    out.push(pulled.wedge(eta).integrate());
                }
            }
        }
        out
    }

    /// Values of all basis forms at a reference point: `out[i][c]`.
    pub fn eval(&self, xi: &[f64; 3]) -> Vec<Vec<f64>> {
        self.compiled
            .iter()
            .map(|f| f.iter().map(|p| p.eval(xi)).collect())
            .collect()
    }

    /// Values of the exterior derivatives of all basis forms.
    pub fn eval_d(&self, xi: &[f64; 3]) -> Vec<Vec<f64>> {
        self.dcompiled
            .iter()
            .map(|f| f.iter().map(|p| p.eval(xi)).collect())
            .collect()
    }

    /// Tabulate basis values at all points of a rule, flattened as
    /// `[point][basis][component]`.
    pub fn tabulate(&self, rule: &QuadratureRule) -> Vec<f64> {
        tabulate(&self.compiled, rule)
    }

    pub fn tabulate_d(&self, rule: &QuadratureRule) -> Vec<f64> {
        tabulate(&self.dcompiled, rule)
    }

    /// Moments of a physical field over one face of dimension `m`.
    ///
    /// `face` holds the `m + 1` face vertices in increasing global order, and
    /// `field` returns the `C(dim, k)` physical components at a point. The
    /// result does not depend on the cell the face is seen from.
    pub fn face_moments(
        &self,
        face: &[[f64; 3]],
        field: &dyn Fn(&[f64; 3]) -> Vec<f64>,
        rule: &QuadratureRule,
    ) -> Vec<f64> {
        let m = face.len() - 1;
        let k = self.family.k;
        let tests = &self.tests_compiled[m];
        let mut out = vec![0.0; tests.len()];
        if tests.is_empty() {
            return out;
        }
        debug_assert_eq!(rule.dim, m);
        let mut e = [[0.0; 3]; 3];
        for j in 0..m {
            for i in 0..3 {
                e[i][j] = face[j + 1][i] - face[0][i];
            }
        }
        let phys_sets = subsets(self.dim, k);
        let face_sets = subsets(m, k);
        let comp_sets = subsets(m, m - k);
        let signs: Vec<f64> = face_sets
            .iter()
            .map(|s| {
                let c: Vec<usize> = (0..m).filter(|i| !s.contains(i)).collect();
                merge_sign(s, &c).unwrap() as f64
            })
            .collect();
        let comp_index: Vec<usize> = face_sets
            .iter()
            .map(|s| {
                let c: Vec<usize> = (0..m).filter(|i| !s.contains(i)).collect();
                comp_sets.iter().position(|x| *x == c).unwrap()
            })
            .collect();
        let minors: Vec<Vec<f64>> = phys_sets
            .iter()
            .map(|ks| face_sets.iter().map(|is| minor(&e, ks, is)).collect())
            .collect();
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let mut x = face[0];
            for j in 0..m {
                for i in 0..3 {
                    x[i] += e[i][j] * t[j];
                }
            }
            let u = field(&x);
            let pulled: Vec<f64> = (0..face_sets.len())
                .map(|ii| (0..phys_sets.len()).map(|kk| u[kk] * minors[kk][ii]).sum())
                .collect();
            for (o, eta) in out.iter_mut().zip(tests) {
                let mut v = 0.0;
                for ii in 0..face_sets.len() {
                    v += signs[ii] * pulled[ii] * eta[comp_index[ii]].eval(t);
                }
                *o += w * v;
            }
        }
        out
    }
}

fn tabulate(forms: &[Vec<CompiledPoly>], rule: &QuadratureRule) -> Vec<f64> {
    let nc = forms.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(rule.len() * forms.len() * nc);
    for p in &rule.points {
        for f in forms {
            for c in f {
                out.push(c.eval(p));
            }
        }
    }
    out
}

/// Check the degree rule for consecutive spaces: the next space keeps the
/// degree if trimmed and drops it by one if full.
pub fn check_sequence_step(src: ElementFamily, dst: ElementFamily) -> Result<()> {
    if dst.k != src.k + 1 {
        return Err(Error::InvalidSequence(format!(
            "{dst} does not follow {src}: form degrees must increase by one"
        )));
    }
    let want = match dst.kind {
        FamilyKind::Trimmed => Some(src.r),
        FamilyKind::Full => src.r.checked_sub(1),
    };
    if want != Some(dst.r) {
        return Err(Error::InvalidSequence(format!(
            "{dst} does not follow {src}: degree rule violated"
        )));
    }
    Ok(())
}

/// Exact matrix `G` with `d(src_j) = sum_i G_ij dst_i`.
pub fn local_derivative_inclusion(src: &ReferenceBasis, dst: &ReferenceBasis) -> Result<RationalMatrix> {
    if src.dim != dst.dim {
        return Err(Error::InvalidSequence("bases on different dimensions".into()));
    }
    check_sequence_step(src.family, dst.family)?;
    let mut g = RationalMatrix::zeros(dst.n_dofs(), src.n_dofs());
    for (j, dpsi) in src.dbasis.iter().enumerate() {
        let coeffs = dst.apply_dofs(dpsi);
        let mut resid = dpsi.clone();
        for (i, c) in coeffs.iter().enumerate() {
            resid.add_scaled(&(-c), &dst.basis[i]);
        }
        if !resid.is_zero() {
            return Err(Error::InvalidSequence(format!(
                "d({}) is not contained in {}",
                src.family, dst.family
            )));
        }
        for (i, c) in coeffs.into_iter().enumerate() {
            g.data[i][j] = c;
        }
    }
    Ok(g)
}
