"""The on-shell extension solver.

An extension u' of a solution on the punctured space is carried abstractly
by its residues: the delta-supported distributions Q u' for the registered
operators Q, together with the degree of divergence r.  Everything the
existence theory needs depends on u' only through these data.

Existence of an on-shell extension is equivalent to the residue lying in
Ran(Q|_r); the candidate counterterm comes from the projection polynomial,
and the corrected residue is exactly the orthogonal projection of the
residue onto the complement of the range (asserted at runtime, never
assumed).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .scalar import GaussianRational
from .deltaspace import (
    DegreeOverflow,
    DeltaVector,
    DimensionMismatch,
    Polynomial,
    enumerate_multi_indices,
)
from .opalg import (
    OperatorExpr,
    casimir,
    check_signature,
    commutator,
    euler,
    lorentz_generator,
    operator_equal,
)
from .spectral import (
    ExactPolynomial,
    RestrictionMatrix,
    _matrix_poly_apply,
    _rref,
    adjoint_restriction,
    kernel_basis,
    minimal_polynomial,
    projection_polynomial_of_gram,
    range_membership,
    restrict,
)


class MissingResidue(KeyError):
    pass


class NonCommutingOperators(ValueError):
    def __init__(self, i, j, comm):
        super().__init__(f"operators {i} and {j} do not commute")
        self.pair = (i, j)
        self.commutator = comm


class NonNormalRestriction(ValueError):
    pass


class CasimirHypothesisError(ValueError):
    def __init__(self, report):
        super().__init__("casimir hypotheses fail: " + "; ".join(report.failures))
        self.report = report


@dataclass(frozen=True)
class ExtensionRecord:
    """Abstract extension: dimension, degree of divergence, residue map.

    residues[Q] is Q u' as an element of D'({0}); keys are operators in
    normal form, so algebraically equal operators share one entry.
    """

    n: int
    r: int
    residues: dict

    def __post_init__(self):
        fixed = {}
        for q, w in self.residues.items():
            qn = q.normal_form()
            if qn.n != self.n or w.n != self.n:
                raise DimensionMismatch("residue entry dimension mismatch")
            bound = self.r + qn.essential_order().q
            if w.degree() > bound:
                raise DegreeOverflow(
                    f"residue degree {w.degree()} exceeds r + essential order = {bound}")
            fixed[qn] = w
        object.__setattr__(self, "residues", fixed)

    @staticmethod
    def from_ambiguity(n: int, r: int, ops, w0: DeltaVector) -> "ExtensionRecord":
        """Record of u' = (on-shell extension) + w0: residues[Q] = Q w0.

        Models the generic situation where some extension differs from an
        on-shell one by a counterterm w0 of degree <= r.
        """
        if w0.degree() > r:
            raise DegreeOverflow("ambiguity degree exceeds the record degree")
        return ExtensionRecord(n, r, {q: q.apply_delta(w0) for q in ops})

    def residue(self, q: OperatorExpr) -> DeltaVector:
        key = q.normal_form()
        if key not in self.residues:
            raise MissingResidue(f"no residue registered for {key}")
        return self.residues[key]

    def operators(self):
        return list(self.residues.keys())

    def is_onshell_for(self, q: OperatorExpr) -> bool:
        return self.residue(q).is_zero()


@dataclass(frozen=True)
class ExistenceReport:
    exists: bool
    certificate: DeltaVector  # preimage when exists, adjoint-kernel witness otherwise
    criterion: str


def existence_check(rec: ExtensionRecord, q: OperatorExpr) -> ExistenceReport:
    """Decide whether the residue lies in Ran(Q|_r), which is equivalent to
    the existence of an on-shell extension with unchanged degree."""
    w = rec.residue(q)
    mat = restrict(q, rec.r)
    dec = range_membership(mat, w)
    if dec.member:
        return ExistenceReport(True, dec.preimage,
                               "residue in Ran(Q|_r): exact solve produced a preimage")
    return ExistenceReport(False, dec.witness,
                           "residue not in Ran(Q|_r): adjoint-kernel witness "
                           "has nonzero scalar product with the residue")


def _correction_from_gram(a: RestrictionMatrix, astar: RestrictionMatrix,
                          w: DeltaVector) -> DeltaVector:
    """sum_(k>=1) c_k B^(k-1) A* w for p(z) = 1 + sum c_k z^k, B = A* A."""
    b = astar.matmul(a)
    p = projection_polynomial_of_gram(b)
    h = p - ExactPolynomial.one()
    if h.is_zero():
        return DeltaVector.zero(a.n)
    h = ExactPolynomial(h.coeffs[1:])
    w0 = astar.matvec(w)
    vec = [w0.get(alpha) for alpha in b.domain_basis]
    return b.to_vector(_matrix_poly_apply(b, h, vec))


def onshell_correction(rec: ExtensionRecord, q: OperatorExpr) -> DeltaVector:
    """Counterterm v making u' + v the canonical on-shell candidate.

    If the residue is in range, the corrected residue vanishes; otherwise it
    equals the orthogonal projection of the residue onto the orthogonal
    complement of Ran(Q|_r).  Both statements are asserted exactly.
    """
    w = rec.residue(q)
    a = restrict(q, rec.r)
    astar = adjoint_restriction(q, rec.r)
    v = _correction_from_gram(a, astar, w)
    corrected = w + a.matvec(v)
    # exact self-check: corrected residue is the complement projection of w
    aastar = a.matmul(astar)
    p = projection_polynomial_of_gram(astar.matmul(a))
    vec = [w.get(alpha) for alpha in aastar.domain_basis]
    proj = aastar.to_vector(_matrix_poly_apply(aastar, p, vec))
    if corrected != proj:
        raise AssertionError("projection contract violated in onshell_correction")
    return v


def apply_counterterm(rec: ExtensionRecord, v: DeltaVector) -> ExtensionRecord:
    """u' -> u' + v: every registered residue moves by the image of v."""
    if v.degree() > rec.r:
        raise DegreeOverflow("counterterm degree exceeds the record degree")
    return ExtensionRecord(rec.n, rec.r,
                           {q: w + q.apply_delta(v) for q, w in rec.residues.items()})


def order_raising_correction(rec: ExtensionRecord, r_op: OperatorExpr, k: int) -> DeltaVector:
    """Normal-case counterterm: with R^k u = 0 off the origin and R|_r normal,
    the corrected extension satisfies R^(k+1) (u' + v) = 0."""
    if k == 0:
        return onshell_correction(rec, r_op)
    ess = r_op.essential_order()
    if ess.q != 0:
        raise ValueError(f"order raising requires essential order 0, got {ess.q}")
    mat = restrict(r_op, rec.r)
    if not mat.is_normal():
        raise NonNormalRestriction("R|_r is not normal for the weighted scalar product")
    rk = r_op ** k
    w = rec.residue(rk)
    a = restrict(rk, rec.r)
    astar = adjoint_restriction(rk, rec.r)
    v = _correction_from_gram(a, astar, w)
    if not r_op.apply_delta(w + a.matvec(v)).is_zero():
        raise AssertionError("order-raising contract violated: R^(k+1) residue nonzero")
    return v


def multi_commuting_correction(rec: ExtensionRecord, qs) -> DeltaVector:
    """Sequential counterterm for a family of mutually commuting operators.

    Each factor's correction is computed against the residues updated by the
    previous factors; the total counterterm is returned."""
    qs = [q.normal_form() for q in qs]
    for i in range(len(qs)):
        for j in range(i + 1, len(qs)):
            comm = commutator(qs[i], qs[j])
            if not comm.is_zero():
                raise NonCommutingOperators(i, j, comm)
    total = DeltaVector.zero(rec.n)
    cur = rec
    for q in qs:
        v = onshell_correction(cur, q)
        cur = apply_counterterm(cur, v)
        total = total + v
    return total


# ---------------------------------------------------------------------------
# Casimir route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CasimirReport:
    shape_ok: bool
    self_adjoint_ok: bool
    commute_ok: bool
    kernel_ok: bool
    level: int
    failures: tuple

    @property
    def passed(self) -> bool:
        return self.shape_ok and self.self_adjoint_ok and self.commute_ok and self.kernel_ok


def _expand_expression(n: int, rs, expression) -> OperatorExpr:
    total = OperatorExpr.zero(n)
    for coeff, word in expression:
        term = OperatorExpr.identity(n)
        for idx in word:
            term = term @ rs[idx]
        total = total + term.scale(GaussianRational.of(coeff))
    return total


def _span_rows(vectors, basis):
    index = {alpha: i for i, alpha in enumerate(basis)}
    rows = []
    for v in vectors:
        row = [GaussianRational.of(0)] * len(basis)
        for alpha, c in v.coeffs.items():
            row[index[alpha]] = c
        rows.append(row)
    return rows


def _rank(rows) -> int:
    if not rows:
        return 0
    return len(_rref(rows)[1])


def _same_span(vs, ws, basis) -> bool:
    ra = _rank(_span_rows(vs, basis))
    rb = _rank(_span_rows(ws, basis))
    rab = _rank(_span_rows(list(vs) + list(ws), basis))
    return ra == rb == rab


def verify_casimir_hypotheses(c_op: OperatorExpr, rs, r: int,
                              expression=None) -> CasimirReport:
    """Exact checks of the hypotheses behind the Casimir route, at level r.

    expression is the caller-supplied certificate that C is a polynomial in
    the generators with no degree-0/1 terms: a list of (coefficient, word)
    pairs, each word a tuple of generator indices of length >= 2.
    """
    failures = []
    n = c_op.n
    rs = [x.normal_form() for x in rs]

    shape_ok = False
    if expression is None:
        failures.append("no polynomial expression in the generators was supplied")
    elif any(len(word) < 2 for _, word in expression):
        failures.append("expression contains a term of degree 0 or 1 in the generators")
    elif not operator_equal(_expand_expression(n, rs, expression), c_op):
        failures.append("expression does not expand to the given operator")
    else:
        shape_ok = True

    self_adjoint_ok = False
    if c_op.essential_order().q != 0:
        failures.append("operator does not have essential order 0")
    else:
        mat = restrict(c_op, r)
        adj = adjoint_restriction(c_op, r)
        if mat.entries == adj.entries:
            self_adjoint_ok = True
        else:
            failures.append(f"(C|_{r})* != C|_{r}")

    commute_ok = True
    for i, rop in enumerate(rs):
        comm = commutator(c_op, rop)
        if not comm.is_zero():
            commute_ok = False
            failures.append(f"C does not commute with generator {i}")

    kernel_ok = False
    if self_adjoint_ok:
        ker_c = kernel_basis(restrict(c_op, r))
        stacked = []
        width = len(enumerate_multi_indices(n, r))
        for rop in rs:
            m = restrict(rop, r)
            stacked.extend([list(row) for row in m.entries])
        joint = _kernel_of_rows(stacked, width)
        basis = enumerate_multi_indices(n, r)
        joint_vecs = [DeltaVector(n, {basis[i]: x for i, x in enumerate(col)}) for col in joint]
        if _same_span(ker_c, joint_vecs, basis):
            kernel_ok = True
        else:
            failures.append(f"ker(C|_{r}) differs from the joint kernel of the generators")

    return CasimirReport(shape_ok, self_adjoint_ok, commute_ok, kernel_ok, r, tuple(failures))


def _kernel_of_rows(rows, ncols):
    from .spectral import _kernel_columns
    return _kernel_columns(rows, ncols)


def casimir_correction(rec: ExtensionRecord, c_op: OperatorExpr, rs,
                       expression=None) -> DeltaVector:
    """Counterterm b_r(C) u' - u' from the self-adjoint polynomial b_r with
    b_r(C|_r) the orthogonal projection onto ker(C|_r)."""
    report = verify_casimir_hypotheses(c_op, rs, rec.r, expression)
    if not report.passed:
        raise CasimirHypothesisError(report)
    w = rec.residue(c_op)
    mat = restrict(c_op, rec.r)
    m = minimal_polynomial(mat)
    if m.degree() >= 1 and m.coeffs[0].is_zero():
        g = m.deflate_root_zero()
    else:
        g = m
    b = g.scale(g(0).inverse())
    h = b - ExactPolynomial.one()
    if h.is_zero():
        return DeltaVector.zero(rec.n)
    h = ExactPolynomial(h.coeffs[1:])
    vec = [w.get(alpha) for alpha in mat.domain_basis]
    return mat.to_vector(_matrix_poly_apply(mat, h, vec))


def lorentz_casimir_setup(n: int, signature=None):
    """Canonical Lorentz data: (C, generators, polynomial expression).

    C = sum over ordered pairs of g^(mu mu) g^(nu nu) M_(mu nu)^2 with the
    generators M_(mu nu), mu < nu; the expression certificate lists each
    square with multiplicity two.
    """
    sig = check_signature(n, signature) if signature is not None else None
    from .opalg import default_signature
    sig = sig or default_signature(n)
    gens = []
    expr = []
    pos = {}
    for mu in range(n):
        for nu in range(mu + 1, n):
            pos[(mu, nu)] = len(gens)
            gens.append(lorentz_generator(n, mu, nu, sig))
    for (mu, nu), i in pos.items():
        expr.append((Fraction(2) * sig[mu] * sig[nu], (i, i)))
    return casimir(n, sig), gens, expr


# ---------------------------------------------------------------------------
# renormalisation map and homogeneity
# ---------------------------------------------------------------------------

def renorm_map(rec: ExtensionRecord, degrees, lorentz: bool = False,
               signature=None) -> DeltaVector:
    """Composite counterterm: optional Casimir step, then the projection for
    the squared product of the homogeneity operators.

    degrees is a list of (a_j, N_j) with integer degrees a_j and
    multiplicities N_j; the almost-homogeneous step uses
    T = prod_j (Euler(a_j))^(N_j) and requires residues[T]; the Lorentz step
    requires residues[C] for the quadratic Casimir.
    """
    n = rec.n
    total = DeltaVector.zero(n)
    cur = rec
    if lorentz:
        c_op, gens, expr = lorentz_casimir_setup(n, signature)
        v = casimir_correction(cur, c_op, gens, expr)
        cur = apply_counterterm(cur, v)
        total = total + v
    t_op = OperatorExpr.identity(n)
    nontrivial = False
    for a_j, n_j in degrees:
        if n_j <= 0:
            continue
        nontrivial = True
        t_op = t_op @ (euler(n, Fraction(a_j)) ** n_j)
    if nontrivial:
        total = total + onshell_correction(cur, t_op)
    return total


@dataclass(frozen=True)
class UniquenessReport:
    unique: bool
    kernel_levels: tuple  # the |alpha| with vanishing Euler eigenvalue


def homogeneous_extension_unique(n: int, a, r: int) -> UniquenessReport:
    """Unique homogeneous extension iff Euler(n, a)|_r has trivial kernel,
    i.e. no level |alpha| <= r with |alpha| + n + a = 0."""
    a = GaussianRational.of(a)
    levels = []
    for k in range(r + 1):
        if (a + (k + n)).is_zero():
            levels.append(k)
    return UniquenessReport(not levels, tuple(levels))


def linearity_precondition(q: OperatorExpr, r: int) -> bool:
    """True when Q^t maps every monomial of degree <= r+q to a polynomial
    with no monomial of degree above r; this is what makes the counterterm
    map level-stable and hence additive across records."""
    ess = q.essential_order().q
    qt = q.transpose()
    for beta in enumerate_multi_indices(q.n, r + ess):
        img = qt.apply_poly(Polynomial.monomial(q.n, beta))
        if img.total_degree() > r:
            return False
    return True
