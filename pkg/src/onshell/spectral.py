"""Exact linear algebra for restrictions of operators to delta spaces.

Restriction matrices are dense and small (dimensions C(n+r, n) at desk
scale), with Gaussian-rational entries in the graded-lex basis order of
`enumerate_multi_indices`.  Everything here is exact: Gaussian elimination
with first-nonzero pivoting, Krylov minimal polynomials, and the projection
polynomial p_r(z) = prod(1 - z/lambda) over the nonzero spectrum, realized
as the z-free part of the minimal polynomial of (Q|_r)* (Q|_r) normalized
to value 1 at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .scalar import GaussianRational, ZERO, ONE
from .deltaspace import (
    DeltaVector,
    DimensionMismatch,
    enumerate_multi_indices,
    inner,
    mi_factorial,
    smap,
    tmap,
)
from .opalg import OperatorExpr


class NonSquareMatrixError(ValueError):
    pass


class NonNormalMatrixError(ValueError):
    """Raised by the pseudoinverse solve; fall back to range_membership."""


# ---------------------------------------------------------------------------
# univariate exact polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactPolynomial:
    """Univariate polynomial over Gaussian rationals, constant term first."""

    coeffs: tuple

    def __post_init__(self):
        cs = [GaussianRational.of(c) for c in self.coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @staticmethod
    def zero() -> "ExactPolynomial":
        return ExactPolynomial(())

    @staticmethod
    def one() -> "ExactPolynomial":
        return ExactPolynomial((ONE,))

    @staticmethod
    def variable() -> "ExactPolynomial":
        return ExactPolynomial((ZERO, ONE))

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        """-1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __call__(self, z) -> GaussianRational:
        out = ZERO
        for c in reversed(self.coeffs):
            out = out * GaussianRational.of(z) + c
        return out

    def __add__(self, other: "ExactPolynomial") -> "ExactPolynomial":
        m = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [ZERO] * (m - len(self.coeffs))
        b = list(other.coeffs) + [ZERO] * (m - len(other.coeffs))
        return ExactPolynomial(tuple(x + y for x, y in zip(a, b)))

    def __sub__(self, other: "ExactPolynomial") -> "ExactPolynomial":
        return self + other.scale(GaussianRational.of(-1))

    def scale(self, c) -> "ExactPolynomial":
        c = GaussianRational.of(c)
        return ExactPolynomial(tuple(x * c for x in self.coeffs))

    def __mul__(self, other: "ExactPolynomial") -> "ExactPolynomial":
        if self.is_zero() or other.is_zero():
            return ExactPolynomial.zero()
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return ExactPolynomial(tuple(out))

    def divmod(self, other: "ExactPolynomial"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dv = other.coeffs
        dd = len(dv) - 1
        lead_inv = dv[-1].inverse()
        quo = [ZERO] * max(0, len(rem) - dd)
        for i in range(len(rem) - 1, dd - 1, -1):
            f = rem[i] * lead_inv
            if f.is_zero():
                continue
            quo[i - dd] = f
            for j, c in enumerate(dv):
                rem[i - dd + j] = rem[i - dd + j] - f * c
        return ExactPolynomial(tuple(quo)), ExactPolynomial(tuple(rem))

    def monic(self) -> "ExactPolynomial":
        if self.is_zero():
            return self
        return self.scale(self.coeffs[-1].inverse())

    def gcd(self, other: "ExactPolynomial") -> "ExactPolynomial":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        return a.monic()

    def lcm(self, other: "ExactPolynomial") -> "ExactPolynomial":
        if self.is_zero() or other.is_zero():
            return ExactPolynomial.zero()
        g = self.gcd(other)
        return (self * other).divmod(g)[0].monic()

    def deflate_root_zero(self) -> "ExactPolynomial":
        """Divide by z, which must be an exact factor."""
        if self.is_zero() or not self.coeffs[0].is_zero():
            raise ValueError("z is not a factor")
        return ExactPolynomial(self.coeffs[1:])

    def derivative(self) -> "ExactPolynomial":
        return ExactPolynomial(tuple(c * k for k, c in enumerate(self.coeffs) if k > 0))

    def is_squarefree(self) -> bool:
        if self.degree() <= 1:
            return True
        return self.gcd(self.derivative()).degree() == 0

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        bits = []
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            if k == 0:
                bits.append(f"{c}")
            elif k == 1:
                bits.append(f"({c})*z")
            else:
                bits.append(f"({c})*z^{k}")
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# restriction matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RestrictionMatrix:
    """Matrix of an operator between delta spaces in graded-lex basis order.

    Rows index the codomain basis (degree <= r_codomain), columns the domain
    basis (degree <= r_domain); column j is the image of the j-th domain
    basis vector.
    """

    n: int
    r_domain: int
    r_codomain: int
    entries: tuple  # row tuples of GaussianRational
    provenance: str = ""

    @property
    def domain_basis(self) -> tuple:
        return enumerate_multi_indices(self.n, self.r_domain)

    @property
    def codomain_basis(self) -> tuple:
        return enumerate_multi_indices(self.n, self.r_codomain)

    @property
    def nrows(self) -> int:
        return len(self.entries)

    @property
    def ncols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def entry(self, i: int, j: int) -> GaussianRational:
        return self.entries[i][j]

    def to_vector(self, column) -> DeltaVector:
        basis = self.codomain_basis
        return DeltaVector(self.n, {basis[i]: c for i, c in enumerate(column)})

    def from_vector(self, v: DeltaVector) -> list:
        if v.n != self.n:
            raise DimensionMismatch("vector dimension does not match the matrix")
        if v.degree() > self.r_domain:
            raise DimensionMismatch(
                f"vector degree {v.degree()} exceeds the domain order {self.r_domain}")
        return [v.get(alpha) for alpha in self.domain_basis]

    def matvec(self, v: DeltaVector) -> DeltaVector:
        col = self.from_vector(v)
        out = []
        for row in self.entries:
            s = ZERO
            for a, x in zip(row, col):
                if not x.is_zero() and not a.is_zero():
                    s = s + a * x
            out.append(s)
        return self.to_vector(out)

    def matmul(self, other: "RestrictionMatrix", provenance: str = "") -> "RestrictionMatrix":
        if self.ncols != other.nrows:
            raise DimensionMismatch("matrix product shape mismatch")
        rows = []
        for i in range(self.nrows):
            row = []
            for j in range(other.ncols):
                s = ZERO
                for k in range(self.ncols):
                    a = self.entries[i][k]
                    b = other.entries[k][j]
                    if not a.is_zero() and not b.is_zero():
                        s = s + a * b
                row.append(s)
            rows.append(tuple(row))
        return RestrictionMatrix(self.n, other.r_domain, self.r_codomain, tuple(rows),
                                 provenance or f"({self.provenance})*({other.provenance})")

    def add(self, other: "RestrictionMatrix") -> "RestrictionMatrix":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise DimensionMismatch("matrix sum shape mismatch")
        rows = tuple(tuple(a + b for a, b in zip(ra, rb))
                     for ra, rb in zip(self.entries, other.entries))
        return RestrictionMatrix(self.n, self.r_domain, self.r_codomain, rows, self.provenance)

    def scale(self, c) -> "RestrictionMatrix":
        c = GaussianRational.of(c)
        rows = tuple(tuple(a * c for a in row) for row in self.entries)
        return RestrictionMatrix(self.n, self.r_domain, self.r_codomain, rows, self.provenance)

    @staticmethod
    def identity(n: int, r: int, provenance: str = "id") -> "RestrictionMatrix":
        d = len(enumerate_multi_indices(n, r))
        rows = tuple(tuple(ONE if i == j else ZERO for j in range(d)) for i in range(d))
        return RestrictionMatrix(n, r, r, rows, provenance)

    def gram_adjoint(self) -> "RestrictionMatrix":
        """Adjoint with respect to the weighted scalar products on both sides:
        (M* v | w)_(r_dom) = (v | M w)_(r_cod)."""
        dom, cod = self.domain_basis, self.codomain_basis
        rows = []
        for i, alpha in enumerate(dom):
            wa = mi_factorial(alpha)
            row = []
            for j, beta in enumerate(cod):
                wb = mi_factorial(beta)
                row.append(self.entries[j][i].conj() * GaussianRational(Fraction(wb, wa)))
            rows.append(tuple(row))
        return RestrictionMatrix(self.n, self.r_codomain, self.r_domain, tuple(rows),
                                 f"adj({self.provenance})")

    def is_normal(self) -> bool:
        if not self.is_square() or self.r_domain != self.r_codomain:
            return False
        adj = self.gram_adjoint()
        return self.matmul(adj).entries == adj.matmul(self).entries

    def is_self_adjoint(self) -> bool:
        return self.is_square() and self.entries == self.gram_adjoint().entries

    def __eq__(self, other) -> bool:
        return (isinstance(other, RestrictionMatrix)
                and (self.n, self.r_domain, self.r_codomain) ==
                    (other.n, other.r_domain, other.r_codomain)
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.n, self.r_domain, self.r_codomain, self.entries))


def restrict(q: OperatorExpr, r: int, provenance: str = "") -> RestrictionMatrix:
    """Q|_r as an exact matrix from degree <= r to degree <= r + q."""
    ess = q.essential_order().q
    n = q.n
    dom = enumerate_multi_indices(n, r)
    cod = enumerate_multi_indices(n, r + ess)
    index = {alpha: i for i, alpha in enumerate(cod)}
    cols = []
    for alpha in dom:
        img = q.apply_delta(DeltaVector.basis(n, alpha))
        if img.degree() > r + ess:
            raise AssertionError("essential-order bound violated by apply_delta")
        col = [ZERO] * len(cod)
        for beta, c in img.coeffs.items():
            col[index[beta]] = c
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(len(dom))) for i in range(len(cod)))
    return RestrictionMatrix(n, r, r + ess, rows, provenance or f"restrict(r={r})")


def adjoint_restriction(q: OperatorExpr, r: int, provenance: str = "") -> RestrictionMatrix:
    """(Q|_r)* = T_r conj(Q)^t S_(r+q), from degree <= r+q to degree <= r."""
    ess = q.essential_order().q
    n = q.n
    qt = q.conj().transpose()
    dom = enumerate_multi_indices(n, r + ess)
    cod = enumerate_multi_indices(n, r)
    index = {alpha: i for i, alpha in enumerate(cod)}
    cols = []
    for alpha in dom:
        f = smap(r + ess, DeltaVector.basis(n, alpha))
        img = tmap(r, qt.apply_poly(f))
        col = [ZERO] * len(cod)
        for beta, c in img.coeffs.items():
            col[index[beta]] = c
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(len(dom))) for i in range(len(cod)))
    return RestrictionMatrix(n, r + ess, r, rows, provenance or f"adjoint(r={r})")


# ---------------------------------------------------------------------------
# elimination, kernels, solving
# ---------------------------------------------------------------------------

def _rref(rows):
    """Reduced row echelon form with first-nonzero pivoting.

    Returns (rref rows, pivot column list).  Deterministic: pivots are the
    first nonzero entry scanning columns left to right, rows top down.
    """
    m = [list(r) for r in rows]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    pivots = []
    row = 0
    for col in range(nc):
        piv = next((r for r in range(row, nr) if not m[r][col].is_zero()), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = m[row][col].inverse()
        m[row] = [x * inv for x in m[row]]
        for r in range(nr):
            if r != row and not m[r][col].is_zero():
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == nr:
            break
    return m, pivots


def _kernel_columns(rows, ncols):
    """Basis of the null space of the matrix given by `rows` (list of columns)."""
    if not rows:
        return [[ONE if i == j else ZERO for i in range(ncols)] for j in range(ncols)]
    rr, pivots = _rref(rows)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [ZERO] * ncols
        vec[fc] = ONE
        for prow, pcol in enumerate(pivots):
            vec[pcol] = -GaussianRational.of(1) * rr[prow][fc]
        basis.append(vec)
    return basis


def kernel_basis(m: RestrictionMatrix) -> list:
    """Exact kernel basis as delta vectors in the domain space."""
    cols = _kernel_columns(list(m.entries), m.ncols)
    dom = enumerate_multi_indices(m.n, m.r_domain)
    return [DeltaVector(m.n, {dom[i]: c for i, c in enumerate(v)}) for v in cols]


def _solve(rows, rhs):
    """One exact solution of M x = rhs, or None when inconsistent.

    Free variables are set to zero; pivoting is first-nonzero, so the
    returned certificate is deterministic.
    """
    nr = len(rows)
    nc = len(rows[0]) if nr else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    rr, pivots = _rref(aug)
    x = [ZERO] * nc
    for prow, pcol in enumerate(pivots):
        if pcol == nc:
            return None  # pivot in the augmented column: inconsistent
        x[pcol] = rr[prow][nc]
    return x


@dataclass(frozen=True)
class RangeDecision:
    """Outcome of a range-membership question."""

    member: bool
    preimage: DeltaVector | None
    witness: DeltaVector | None  # adjoint-kernel vector not orthogonal to w


def range_membership(m: RestrictionMatrix, w: DeltaVector) -> RangeDecision:
    """Decide w in Ran(M); on success give a preimage, otherwise a kernel
    vector of the adjoint that has nonzero scalar product with w."""
    rhs = [w.get(alpha) for alpha in m.codomain_basis]
    if w.degree() > m.r_codomain:
        raise DimensionMismatch("target degree exceeds the codomain order")
    if w.n != m.n:
        raise DimensionMismatch("target dimension does not match the matrix")
    x = _solve(list(m.entries), rhs)
    if x is not None:
        dom = m.domain_basis
        pre = DeltaVector(m.n, {dom[i]: c for i, c in enumerate(x)})
        return RangeDecision(True, pre, None)
    for y in kernel_basis(m.gram_adjoint()):
        val = inner(m.r_codomain, y, w)
        if not val.is_zero():
            return RangeDecision(False, None, y)
    raise AssertionError("inconsistent system without an adjoint-kernel witness")


# ---------------------------------------------------------------------------
# minimal polynomials and projections
# ---------------------------------------------------------------------------

def _matrix_poly_apply(m: RestrictionMatrix, p: ExactPolynomial, vec: list) -> list:
    """p(M) vec by Horner iteration on vectors."""
    out = [ZERO] * len(vec)
    for c in reversed(p.coeffs):
        # out = M*out + c*vec
        nxt = []
        for row in m.entries:
            s = ZERO
            for a, x in zip(row, out):
                if not a.is_zero() and not x.is_zero():
                    s = s + a * x
            nxt.append(s)
        out = [s + c * v for s, v in zip(nxt, vec)]
    return out


def minimal_polynomial(m: RestrictionMatrix) -> ExactPolynomial:
    """Monic minimal polynomial over the Gaussian rationals.

    Krylov span per basis vector; the least common multiple of the per-vector
    annihilators is the minimal polynomial.
    """
    if not m.is_square():
        raise NonSquareMatrixError("minimal polynomial requires a square matrix")
    d = m.nrows
    if d == 0:
        return ExactPolynomial.one()
    result = ExactPolynomial.one()
    for seed in range(d):
        e = [ONE if i == seed else ZERO for i in range(d)]
        if all(c.is_zero() for c in _matrix_poly_apply(m, result, e)):
            continue
        # Krylov sequence e, Me, M^2 e, ... until linear dependence
        krylov = [e]
        vec = e
        while True:
            nxt = []
            for row in m.entries:
                s = ZERO
                for a, x in zip(row, vec):
                    if not a.is_zero() and not x.is_zero():
                        s = s + a * x
                nxt.append(s)
            # try to express nxt in terms of the krylov vectors
            cols = [[krylov[j][i] for j in range(len(krylov))] for i in range(d)]
            sol = _solve(cols, nxt)
            if sol is not None:
                ann = ExactPolynomial(tuple(-c for c in sol) + (ONE,))
                result = result.lcm(ann)
                break
            krylov.append(nxt)
            vec = nxt
    return result


def projection_polynomial(q: OperatorExpr, r: int) -> ExactPolynomial:
    """p_r(z) = prod(1 - z/lambda) over the nonzero spectrum of (Q|_r)(Q|_r)*.

    Computed exactly as the z-free part of the minimal polynomial of
    B = (Q|_r)*(Q|_r), normalized so p_r(0) = 1.  p_r(B) is then the
    orthogonal projection onto ker B = ker(Q|_r).
    """
    mat = restrict(q, r)
    b = mat.gram_adjoint().matmul(mat, provenance=f"B(r={r})")
    return projection_polynomial_of_gram(b)


def projection_polynomial_of_gram(b: RestrictionMatrix) -> ExactPolynomial:
    m = minimal_polynomial(b)
    if m.degree() >= 1 and m.coeffs[0].is_zero():
        g = m.deflate_root_zero()
    else:
        g = m
    g0 = g(0)
    if g0.is_zero():
        raise AssertionError("gram matrix minimal polynomial is not squarefree")
    return g.scale(g0.inverse())


def projector_onto_kernel(q: OperatorExpr, r: int) -> RestrictionMatrix:
    """p_r(B): the orthogonal projection onto ker(Q|_r) inside degree <= r."""
    mat = restrict(q, r)
    b = mat.gram_adjoint().matmul(mat, provenance=f"B(r={r})")
    p = projection_polynomial_of_gram(b)
    d = b.nrows
    cols = []
    for j in range(d):
        e = [ONE if i == j else ZERO for i in range(d)]
        cols.append(_matrix_poly_apply(b, p, e))
    rows = tuple(tuple(cols[j][i] for j in range(d)) for i in range(d))
    return RestrictionMatrix(q.n, r, r, rows, f"proj-ker(r={r})")


def pseudoinverse_correction(m: RestrictionMatrix, w: DeltaVector) -> DeltaVector:
    """Exact Moore-Penrose style solve for normal M.

    Returns the v with M v = (orthogonal projection of w onto Ran M) and
    v orthogonal to ker M; equals the vanishing-regulator limit of the
    resolvent construction.  Raises NonNormalMatrixError when M is not
    normal with respect to the weighted scalar product (use range_membership
    in that case).
    """
    if not m.is_square() or m.r_domain != m.r_codomain:
        raise NonSquareMatrixError("pseudoinverse solve requires a square restriction")
    if not m.is_normal():
        raise NonNormalMatrixError(
            "matrix is not normal for the weighted scalar product; "
            "fall back to range_membership")
    mp = minimal_polynomial(m)
    if not mp.is_squarefree():
        raise AssertionError("normal matrix has non-squarefree minimal polynomial")
    if mp.degree() >= 1 and mp.coeffs[0].is_zero():
        g = mp.deflate_root_zero()
        proj = g.scale(g(0).inverse())  # orthogonal projector onto ker M
    else:
        g = mp
        proj = None
    rhs = [w.get(alpha) for alpha in m.codomain_basis]
    if proj is not None:
        kernel_part = _matrix_poly_apply(m, proj, rhs)
        rhs = [a - b for a, b in zip(rhs, kernel_part)]
    # q(z) = (1 - g(z)/g(0)) / z is a polynomial with q(lambda) = 1/lambda on
    # every nonzero eigenvalue; for the zero matrix there is nothing to solve
    num = ExactPolynomial.one() - g.scale(g(0).inverse())
    if num.is_zero():
        return DeltaVector.zero(m.n)
    out = _matrix_poly_apply(m, num.deflate_root_zero(), rhs)
    return m.to_vector(out)
