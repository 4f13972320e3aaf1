"""Symbolic algebra of operators on distributions.

Operators are finite sums of primitive terms

    a(x) * d^gamma * (pullback by an invertible rational matrix L),

read right to left: first the pullback, then the derivative, then
multiplication by the polynomial coefficient.  The normal form keeps
coefficients left, derivatives middle and at most one pullback per term;
composition rewrites products into this shape using the commutation rule
d_i x_j = x_j d_i + [i == j] and the chain rule for linear pullbacks.

Pullbacks use the weak convention <P_L u, phi> = |det L|^(-1) <u, phi o L^(-1)>,
so that the pullback of an ordinary function is plain composition with L.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .scalar import GaussianRational, ZERO, ONE
from .deltaspace import (
    DeltaVector,
    DimensionMismatch,
    Polynomial,
    enumerate_multi_indices,
    mi_add,
    mi_binomial,
    mi_factorial,
    mi_order,
    mi_sub,
    pair,
)

Matrix = tuple  # tuple of row tuples of Fractions


class SingularMatrixError(ValueError):
    pass


class InvalidSignature(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact rational matrices (pullback maps)
# ---------------------------------------------------------------------------

def mat_from(rows) -> Matrix:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def mat_identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n))


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n))
        for i in range(n)
    )


def mat_inv(m: Matrix) -> Matrix:
    n = len(m)
    aug = [list(m[i]) + [Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise SingularMatrixError("pullback matrix is not invertible")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def mat_det(m: Matrix) -> Fraction:
    n = len(m)
    rows = [list(r) for r in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        det *= rows[col][col]
        inv = 1 / rows[col][col]
        for r in range(col + 1, n):
            if rows[r][col] != 0:
                f = rows[r][col] * inv
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return det


def _is_identity(m: Matrix) -> bool:
    return all(m[i][j] == (1 if i == j else 0) for i in range(len(m)) for j in range(len(m)))


# ---------------------------------------------------------------------------
# operator expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EssentialOrder:
    """Least q with deg(Qu) <= deg u + q; `exact` is False when q is only a
    certified upper bound (compositions involving pullbacks)."""

    q: int
    exact: bool = True


@dataclass(frozen=True, eq=False)
class OperatorExpr:
    n: int
    # terms: tuple of (coeff Polynomial, deriv MultiIndex, pullback Matrix|None)
    terms: tuple

    # -- construction --------------------------------------------------------

    @staticmethod
    def _normalized(n: int, raw_terms) -> "OperatorExpr":
        acc = {}
        for coeff, gamma, pb in raw_terms:
            if pb is not None and _is_identity(pb):
                pb = None
            key = (tuple(gamma), pb)
            prev = acc.get(key)
            acc[key] = coeff if prev is None else prev + coeff
        terms = []
        for (gamma, pb), coeff in acc.items():
            if not coeff.is_zero():
                terms.append((coeff, gamma, pb))
        terms.sort(key=lambda t: (mi_order(t[1]), tuple(-g for g in t[1]),
                                  t[2] if t[2] is not None else ()))
        return OperatorExpr(n, tuple(terms))

    @staticmethod
    def zero(n: int) -> "OperatorExpr":
        return OperatorExpr(n, ())

    @staticmethod
    def from_scalar(n: int, c) -> "OperatorExpr":
        c = GaussianRational.of(c)
        if c.is_zero():
            return OperatorExpr.zero(n)
        return OperatorExpr(n, ((Polynomial.constant(n, c), (0,) * n, None),))

    @staticmethod
    def identity(n: int) -> "OperatorExpr":
        return OperatorExpr.from_scalar(n, ONE)

    @staticmethod
    def multiplication(p: Polynomial) -> "OperatorExpr":
        """Multiplication operator u -> p(x) u."""
        if p.is_zero():
            return OperatorExpr.zero(p.n)
        return OperatorExpr(p.n, ((p, (0,) * p.n, None),))

    @staticmethod
    def derivative(n: int, gamma) -> "OperatorExpr":
        return OperatorExpr(n, ((Polynomial.constant(n, ONE), tuple(gamma), None),))

    @staticmethod
    def pullback(matrix) -> "OperatorExpr":
        m = mat_from(matrix)
        n = len(m)
        if any(len(row) != n for row in m):
            raise DimensionMismatch("pullback matrix must be square")
        if mat_det(m) == 0:
            raise SingularMatrixError("pullback matrix is not invertible")
        if _is_identity(m):
            return OperatorExpr.identity(n)
        return OperatorExpr(n, ((Polynomial.constant(n, ONE), (0,) * n, m),))

    # -- canonical key / equality ---------------------------------------------

    def key(self):
        return (self.n, tuple(
            (gamma, pb, tuple(sorted(coeff.coeffs.items(), key=lambda kv: kv[0])))
            for coeff, gamma, pb in self.terms
        ))

    def __eq__(self, other) -> bool:
        return isinstance(other, OperatorExpr) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def is_zero(self) -> bool:
        return not self.terms

    # -- linear structure -----------------------------------------------------

    def __add__(self, other: "OperatorExpr") -> "OperatorExpr":
        if self.n != other.n:
            raise DimensionMismatch("adding operators of different dimensions")
        return OperatorExpr._normalized(self.n, self.terms + other.terms)

    def __sub__(self, other: "OperatorExpr") -> "OperatorExpr":
        return self + other.scale(-1)

    def scale(self, c) -> "OperatorExpr":
        c = GaussianRational.of(c)
        return OperatorExpr._normalized(
            self.n, tuple((coeff.scale(c), g, pb) for coeff, g, pb in self.terms))

    def __neg__(self) -> "OperatorExpr":
        return self.scale(-1)

    # -- composition ------------------------------------------------------------

    def _compose_terms(self, t1, t2):
        """Primitive-term product t1 o t2 as a list of primitive terms."""
        n = self.n
        a, gamma, pbl = t1
        b, delta, pbm = t2
        # move the pullback of t1 (if any) right, past b and d^delta
        if pbl is not None:
            b = b.substitute_linear(pbl)
            inv = mat_inv(pbl)
            dpoly = Polynomial.constant(n, ONE)
            for j, dj in enumerate(delta):
                if dj == 0:
                    continue
                lin = Polynomial(n, {
                    tuple(1 if k == i else 0 for k in range(n)): GaussianRational.of(inv[i][j])
                    for i in range(n) if inv[i][j] != 0
                })
                for _ in range(dj):
                    dpoly = dpoly * lin
            pb = pbl if pbm is None else mat_mul(pbm, pbl)
        else:
            dpoly = Polynomial.monomial(n, delta)
            pb = pbm
        # Leibniz: d^gamma (b .) = sum binom(gamma,kappa) (d^kappa b) d^(gamma-kappa)
        out = []
        for kappa in enumerate_multi_indices(n, mi_order(gamma)):
            if mi_sub(gamma, kappa) is None:
                continue
            db = b.differentiate(kappa)
            if db.is_zero():
                continue
            coeff = a * db.scale(mi_binomial(gamma, kappa))
            rest = mi_sub(gamma, kappa)
            for eps, d_c in dpoly.coeffs.items():
                out.append((coeff.scale(d_c), mi_add(rest, eps), pb))
        return out

    def __matmul__(self, other: "OperatorExpr") -> "OperatorExpr":
        """Operator composition: (Q1 @ Q2) u = Q1(Q2 u)."""
        if self.n != other.n:
            raise DimensionMismatch("composing operators of different dimensions")
        raw = []
        for t1 in self.terms:
            for t2 in other.terms:
                raw.extend(self._compose_terms(t1, t2))
        return OperatorExpr._normalized(self.n, raw)

    def __pow__(self, k: int) -> "OperatorExpr":
        if k < 0:
            raise ValueError("negative operator powers are not defined")
        out = OperatorExpr.identity(self.n)
        for _ in range(k):
            out = out @ self
        return out

    # -- involutions -------------------------------------------------------------

    def conj(self) -> "OperatorExpr":
        return OperatorExpr._normalized(
            self.n, tuple((coeff.conj(), g, pb) for coeff, g, pb in self.terms))

    def transpose(self) -> "OperatorExpr":
        """Q^t with <Qu, phi> = <u, Q^t phi>.

        Termwise (a d^gamma P_L)^t = |det L|^(-1) P_(L^-1) o (-1)^|gamma| d^gamma o (a .),
        renormalized into coefficients-left shape.
        """
        n = self.n
        out = OperatorExpr.zero(n)
        for coeff, gamma, pb in self.terms:
            sign = -1 if mi_order(gamma) % 2 else 1
            piece = OperatorExpr.derivative(n, gamma).scale(sign) @ OperatorExpr.multiplication(coeff)
            if pb is not None:
                det = abs(mat_det(pb))
                front = OperatorExpr.pullback(mat_inv(pb)).scale(GaussianRational(1 / det))
                piece = front @ piece
            out = out + piece
        return out

    # -- structural data -----------------------------------------------------------

    def essential_order(self) -> EssentialOrder:
        """Least q with deg(Qu) <= deg u + q.

        Exact via the coefficient-vanishing criterion for purely differential
        operators; terms carrying a pullback contribute their differential
        part's bound (the pullback factor adds nothing), and the result is
        then only certified as an upper bound.
        """
        q = 0
        has_pullback = False
        for coeff, gamma, pb in self.terms:
            if pb is not None:
                has_pullback = True
            q = max(q, mi_order(gamma) - coeff.vanishing_order())
        return EssentialOrder(q, exact=(not has_pullback) or q == 0)

    def order(self) -> int:
        """Maximal derivative order appearing (0 for the zero operator)."""
        return max((mi_order(g) for _, g, _ in self.terms), default=0)

    def normal_form(self) -> "OperatorExpr":
        """Idempotent canonicalization (construction already normalizes)."""
        return OperatorExpr._normalized(self.n, self.terms)

    # -- actions ----------------------------------------------------------------

    def _pullback_delta(self, v: DeltaVector, pb: Matrix) -> DeltaVector:
        """P_L v reconstructed from the pairings <P_L v, x^a>.

        Linear pullbacks preserve the degree filtration, so pairings up to
        deg v determine the image.
        """
        if v.is_zero():
            return v
        n = self.n
        inv = mat_inv(pb)
        det = abs(mat_det(pb))
        out = {}
        for alpha in enumerate_multi_indices(n, int(v.degree())):
            xa = Polynomial.monomial(n, alpha).substitute_linear(inv)
            val = pair(v, xa) * GaussianRational(1 / det)
            if val.is_zero():
                continue
            sign = -1 if mi_order(alpha) % 2 else 1
            out[alpha] = val * GaussianRational(Fraction(sign, mi_factorial(alpha)))
        return DeltaVector(n, out)

    def apply_delta(self, v: DeltaVector) -> DeltaVector:
        """Exact image of a delta vector.

        Rules: d^gamma delta^(a) = delta^(a+gamma);
        x^b delta^(a) = (-1)^|b| a!/(a-b)! delta^(a-b) when b <= a, else 0;
        pullbacks act through the chain rule.
        """
        if self.n != v.n:
            raise DimensionMismatch("operator and delta vector dimensions differ")
        total = DeltaVector.zero(self.n)
        for coeff, gamma, pb in self.terms:
            w = v if pb is None else self._pullback_delta(v, pb)
            shifted = {mi_add(alpha, gamma): c for alpha, c in w.coeffs.items()}
            acc = {}
            for beta, cb in coeff.coeffs.items():
                sign = -1 if mi_order(beta) % 2 else 1
                for alpha, c in shifted.items():
                    tgt = mi_sub(alpha, beta)
                    if tgt is None:
                        continue
                    fac = Fraction(sign * mi_factorial(alpha), mi_factorial(tgt))
                    acc[tgt] = acc.get(tgt, ZERO) + c * cb * GaussianRational(fac)
            total = total + DeltaVector(self.n, acc)
        return total

    def apply_poly(self, f: Polynomial) -> Polynomial:
        """Exact image of a polynomial (pullbacks act by composition)."""
        if self.n != f.n:
            raise DimensionMismatch("operator and polynomial dimensions differ")
        total = Polynomial.zero(self.n)
        for coeff, gamma, pb in self.terms:
            g = f if pb is None else f.substitute_linear(pb)
            g = g.differentiate(gamma)
            total = total + coeff * g
        return total

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for coeff, gamma, pb in self.terms:
            s = f"[{coeff}]*d^{gamma}"
            if pb is not None:
                s += f"*pullback{pb}"
            bits.append(s)
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# free functions mirroring the operator surface
# ---------------------------------------------------------------------------

def normal_form(q: OperatorExpr) -> OperatorExpr:
    return q.normal_form()


def transpose(q: OperatorExpr) -> OperatorExpr:
    return q.transpose()


def essential_order(q: OperatorExpr) -> EssentialOrder:
    return q.essential_order()


def apply_delta(q: OperatorExpr, v: DeltaVector) -> DeltaVector:
    return q.apply_delta(v)


def apply_poly(qt: OperatorExpr, f: Polynomial) -> Polynomial:
    return qt.apply_poly(f)


def operator_equal(q1: OperatorExpr, q2: OperatorExpr) -> bool:
    return q1.normal_form() == q2.normal_form()


def commutator(q1: OperatorExpr, q2: OperatorExpr) -> OperatorExpr:
    return (q1 @ q2) - (q2 @ q1)


# ---------------------------------------------------------------------------
# named constructors
# ---------------------------------------------------------------------------

def check_signature(n: int, signature) -> tuple:
    sig = tuple(signature)
    if len(sig) != n or any(s not in (1, -1) for s in sig):
        raise InvalidSignature(f"signature {signature!r} is not a diagonal +-1 metric of size {n}")
    return sig


def default_signature(n: int) -> tuple:
    """diag(+1, -1, ..., -1)."""
    return (1,) + (-1,) * (n - 1)


def euler(n: int, a) -> OperatorExpr:
    """sum_i x_i d_i - a; acts on delta^(alpha) as -(|alpha| + n + a)."""
    terms = []
    for i in range(n):
        e = tuple(1 if j == i else 0 for j in range(n))
        terms.append((Polynomial.monomial(n, e), e, None))
    op = OperatorExpr._normalized(n, terms)
    return op - OperatorExpr.from_scalar(n, GaussianRational.of(a))


def dalembert(n: int, m2, signature=None) -> OperatorExpr:
    """Wave operator plus mass: sum_mu g^(mu mu) d_mu^2 + m^2."""
    sig = check_signature(n, signature if signature is not None else default_signature(n))
    op = OperatorExpr.from_scalar(n, GaussianRational.of(Fraction(m2)))
    for mu in range(n):
        e2 = tuple(2 if j == mu else 0 for j in range(n))
        op = op + OperatorExpr.derivative(n, e2).scale(sig[mu])
    return op


def lorentz_generator(n: int, mu: int, nu: int, signature=None) -> OperatorExpr:
    """x_mu d_nu - x_nu d_mu with the first index lowered by the metric."""
    sig = check_signature(n, signature if signature is not None else default_signature(n))
    if not (0 <= mu < n and 0 <= nu < n):
        raise ValueError("generator indices out of range")
    xmu = Polynomial.coordinate(n, mu).scale(sig[mu])
    xnu = Polynomial.coordinate(n, nu).scale(sig[nu])
    dmu = tuple(1 if j == mu else 0 for j in range(n))
    dnu = tuple(1 if j == nu else 0 for j in range(n))
    return OperatorExpr._normalized(n, ((xmu, dnu, None), (xnu.scale(-1), dmu, None)))


def casimir(n: int, signature=None) -> OperatorExpr:
    """Quadratic Casimir (x_mu d_nu - x_nu d_mu)(x^mu d^nu - x^nu d^mu),
    implicit sum over both indices raised by the metric."""
    sig = check_signature(n, signature if signature is not None else default_signature(n))
    total = OperatorExpr.zero(n)
    for mu in range(n):
        for nu in range(n):
            if mu == nu:
                continue
            m = lorentz_generator(n, mu, nu, sig)
            total = total + (m @ m).scale(sig[mu] * sig[nu])
    return total


def reflection(matrix) -> OperatorExpr:
    return OperatorExpr.pullback(matrix)


def parity(n: int) -> OperatorExpr:
    return reflection(tuple(tuple(-1 if i == j else 0 for j in range(n)) for i in range(n)))


def monomial_derivative(n: int, gamma) -> OperatorExpr:
    return OperatorExpr.derivative(n, gamma)


def squared_interval(n: int, signature=None) -> OperatorExpr:
    """Multiplication by x_mu x^mu = sum_mu g_(mu mu) x_mu^2."""
    sig = check_signature(n, signature if signature is not None else default_signature(n))
    p = Polynomial.zero(n)
    for mu in range(n):
        e2 = tuple(2 if j == mu else 0 for j in range(n))
        p = p + Polynomial.monomial(n, e2, GaussianRational.of(sig[mu]))
    return OperatorExpr.multiplication(p)
