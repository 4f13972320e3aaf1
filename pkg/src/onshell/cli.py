"""Command-line front end.

Subcommands expose every solver with deterministic JSON (or text) output.
Operators are written in a small expression language over the tokens
x1..xn (coordinates), d1..dn (partials), rational literals p/q, the
imaginary unit i, the builtins euler(a), box(m2), casimir, L(mu,nu),
parity, reflect(matrix), and the operators + - * ^ with parentheses.
Juxtaposition is not multiplication; '*' is mandatory.

Exit codes: 0 success, 1 usage or syntax errors, 2 mathematical "no"
(non-existence or hypothesis failure) with a machine-readable certificate.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .scalar import GaussianRational, ONE, I
from .deltaspace import DeltaVector, Polynomial
from .opalg import (
    OperatorExpr,
    casimir,
    check_signature,
    dalembert,
    euler,
    lorentz_generator,
    parity,
    reflection,
)
from . import degree as degree_mod
from .chi import (
    ConstCoeffOperator,
    FeynmanConfig,
    chi_crosscheck,
    chi_explicit,
    chi_projection,
    theta_counterterm,
)
from .extension import (
    CasimirHypothesisError,
    ExtensionRecord,
    NonNormalRestriction,
    apply_counterterm,
    casimir_correction,
    existence_check,
    homogeneous_extension_unique,
    linearity_precondition,
    lorentz_casimir_setup,
    multi_commuting_correction,
    onshell_correction,
    order_raising_correction,
    renorm_map,
    verify_casimir_hypotheses,
)
from .spectral import (
    NonNormalMatrixError,
    RestrictionMatrix,
    adjoint_restriction,
    kernel_basis,
    minimal_polynomial,
    projection_polynomial,
    projector_onto_kernel,
    pseudoinverse_correction,
    range_membership,
    restrict,
)

SUBCOMMANDS = (
    "restrict", "adjoint", "essord", "minpoly", "projpoly", "kernel",
    "extend-check", "counterterm", "order-raise", "casimir-check", "renorm",
    "homog-unique", "chi", "chi-verify", "degree",
)

# Every library operation is reachable from exactly one subcommand.
OPERATION_TO_SUBCOMMAND = {
    # opalg
    "constructors": "restrict",
    "apply_delta": "restrict",
    "normal_form": "essord",
    "essential_order": "essord",
    "transpose": "adjoint",
    "apply_poly": "adjoint",
    "operator_equal": "casimir-check",
    "commutator": "casimir-check",
    # spectral
    "restrict": "restrict",
    "adjoint_restriction": "adjoint",
    "minimal_polynomial": "minpoly",
    "projection_polynomial": "projpoly",
    "projector_onto_kernel": "projpoly",
    "kernel_basis": "kernel",
    "range_membership": "kernel",
    "pseudoinverse_correction": "kernel",
    # extension
    "existence_check": "extend-check",
    "onshell_correction": "counterterm",
    "apply_counterterm": "counterterm",
    "multi_commuting_correction": "counterterm",
    "linearity_precondition": "counterterm",
    "order_raising_correction": "order-raise",
    "casimir_correction": "casimir-check",
    "verify_casimir_hypotheses": "casimir-check",
    "renorm_map": "renorm",
    "homogeneous_extension_unique": "homog-unique",
    # chi
    "theta_counterterm": "chi",
    "chi_projection": "chi",
    "lambda_contraction": "chi",
    "alpha_coefficient": "chi",
    "chi_explicit": "chi",
    "chi_crosscheck": "chi-verify",
    # degree
    "deg_delta": "degree",
    "bound_derivative": "degree",
    "bound_monomial": "degree",
    "bound_vanishing_factor": "degree",
    "bound_tensor": "degree",
    "bound_operator": "degree",
}


# ---------------------------------------------------------------------------
# operator expression language
# ---------------------------------------------------------------------------

class OperatorSyntaxError(ValueError):
    def __init__(self, message: str, start: int, end: int):
        super().__init__(f"at {start}-{end}: {message}")
        self.start = start
        self.end = end


_SYMBOLS = set("+-*^()[],")


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _SYMBOLS:
            tokens.append((ch, ch, i, i + 1))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            num, den = text[i:j], None
            if j < len(text) and text[j] == "/":
                k = j + 1
                while k < len(text) and text[k].isdigit():
                    k += 1
                if k == j + 1:
                    raise OperatorSyntaxError("expected digits after '/'", j, j + 1)
                den = text[j + 1:k]
                j = k
            tokens.append(("NUM", Fraction(int(num), int(den) if den else 1), i, j))
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("IDENT", text[i:j], i, j))
            i = j
            continue
        raise OperatorSyntaxError(f"unexpected character {ch!r}", i, i + 1)
    tokens.append(("EOF", None, len(text), len(text)))
    return tokens


class _OperatorParser:
    """Recursive descent for
    expr := ['-'] term (('+'|'-') term)*
    term := factor ('*' factor)*
    factor := atom ('^' nat)?
    """

    def __init__(self, text: str, n: int, signature):
        self.text = text
        self.n = n
        self.signature = signature
        self.tokens = _tokenize(text)
        self.pos = 0

    def _peek(self):
        return self.tokens[self.pos]

    def _next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, kind):
        tok = self._next()
        if tok[0] != kind:
            raise OperatorSyntaxError(f"expected {kind!r}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def parse(self) -> OperatorExpr:
        out = self.expr()
        tok = self._peek()
        if tok[0] != "EOF":
            raise OperatorSyntaxError(f"unexpected trailing input {tok[1]!r}", tok[2], tok[3])
        return out

    def expr(self) -> OperatorExpr:
        negate = False
        if self._peek()[0] == "-":
            self._next()
            negate = True
        out = self.term()
        if negate:
            out = -out
        while self._peek()[0] in ("+", "-"):
            op = self._next()[0]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> OperatorExpr:
        out = self.factor()
        while self._peek()[0] == "*":
            self._next()
            out = out @ self.factor()
        return out

    def factor(self) -> OperatorExpr:
        out = self.atom()
        if self._peek()[0] == "^":
            self._next()
            tok = self._expect("NUM")
            k = tok[1]
            if k.denominator != 1 or k < 0:
                raise OperatorSyntaxError("exponent must be a non-negative integer",
                                          tok[2], tok[3])
            out = out ** int(k)
        return out

    def _signed_rational(self) -> Fraction:
        sign = 1
        if self._peek()[0] == "-":
            self._next()
            sign = -1
        tok = self._expect("NUM")
        return sign * tok[1]

    def _matrix(self):
        self._expect("[")
        rows = []
        while True:
            self._expect("[")
            row = [self._signed_rational()]
            while self._peek()[0] == ",":
                self._next()
                row.append(self._signed_rational())
            self._expect("]")
            rows.append(row)
            if self._peek()[0] == ",":
                self._next()
                continue
            break
        self._expect("]")
        return rows

    def atom(self) -> OperatorExpr:
        tok = self._next()
        kind, val, start, end = tok
        if kind == "NUM":
            return OperatorExpr.from_scalar(self.n, GaussianRational.of(val))
        if kind == "(":
            out = self.expr()
            self._expect(")")
            return out
        if kind != "IDENT":
            raise OperatorSyntaxError(f"unexpected token {val!r}", start, end)
        name = val
        if name == "i":
            return OperatorExpr.from_scalar(self.n, I)
        if name[0] in "xd" and name[1:].isdigit():
            k = int(name[1:])
            if not 1 <= k <= self.n:
                raise OperatorSyntaxError(
                    f"{name!r} out of range for dimension {self.n}", start, end)
            if name[0] == "x":
                return OperatorExpr.multiplication(Polynomial.coordinate(self.n, k - 1))
            e = tuple(1 if j == k - 1 else 0 for j in range(self.n))
            return OperatorExpr.derivative(self.n, e)
        if name == "euler":
            self._expect("(")
            a = self._signed_rational()
            self._expect(")")
            return euler(self.n, a)
        if name == "box":
            self._expect("(")
            m2 = self._signed_rational()
            self._expect(")")
            return dalembert(self.n, m2, self.signature)
        if name == "casimir":
            return casimir(self.n, self.signature)
        if name == "parity":
            return parity(self.n)
        if name == "L":
            self._expect("(")
            mu = self._expect("NUM")[1]
            self._expect(",")
            nu = self._expect("NUM")[1]
            self._expect(")")
            if mu.denominator != 1 or nu.denominator != 1:
                raise OperatorSyntaxError("generator indices must be integers", start, end)
            return lorentz_generator(self.n, int(mu), int(nu), self.signature)
        if name == "reflect":
            self._expect("(")
            rows = self._matrix()
            self._expect(")")
            if len(rows) != self.n or any(len(r) != self.n for r in rows):
                raise OperatorSyntaxError(
                    f"reflect matrix must be {self.n}x{self.n}", start, end)
            return reflection(rows)
        raise OperatorSyntaxError(f"unknown identifier {name!r}", start, end)


def parse_operator(text: str, n: int, signature=None) -> OperatorExpr:
    from .opalg import default_signature
    sig = tuple(signature) if signature is not None else default_signature(n)
    return _OperatorParser(text, n, sig).parse()


# ---------------------------------------------------------------------------
# printing operators back into the expression language
# ---------------------------------------------------------------------------

def _is_negative(c: GaussianRational) -> bool:
    if c.im == 0:
        return c.re < 0
    if c.re == 0:
        return c.im < 0
    return False


def _scalar_factor(c: GaussianRational):
    """Factor string for a 'positive' scalar, or None when c == 1."""
    if c == ONE:
        return None
    if c.im == 0:
        return str(c.re)
    if c.re == 0:
        return "i" if c.im == 1 else f"{c.im}*i"
    im = f"i" if abs(c.im) == 1 else f"{abs(c.im)}*i"
    sign = "+" if c.im > 0 else "-"
    return f"({c.re} {sign} {im})"


def operator_to_text(q: OperatorExpr) -> str:
    if q.is_zero():
        return "0"
    pieces = []
    for coeff, gamma, pb in q.terms:
        for beta, c in coeff.items_sorted():
            neg = _is_negative(c)
            if neg:
                c = -c
            factors = []
            s = _scalar_factor(c)
            if s is not None:
                factors.append(s)
            for idx, e in enumerate(beta):
                if e:
                    factors.append(f"x{idx + 1}" + (f"^{e}" if e > 1 else ""))
            for idx, e in enumerate(gamma):
                if e:
                    factors.append(f"d{idx + 1}" + (f"^{e}" if e > 1 else ""))
            if pb is not None:
                rows = ",".join("[" + ",".join(str(x) for x in row) + "]" for row in pb)
                factors.append(f"reflect([{rows}])")
            if not factors:
                factors.append("1")
            pieces.append(("-" if neg else "+", "*".join(factors)))
    sign0, body0 = pieces[0]
    out = ("-" if sign0 == "-" else "") + body0
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


# ---------------------------------------------------------------------------
# JSON encoding (byte-stable for fixed input)
# ---------------------------------------------------------------------------

def scalar_to_json(c: GaussianRational) -> dict:
    return {"re": str(c.re), "im": str(c.im)}


def scalar_from_json(obj) -> GaussianRational:
    if isinstance(obj, str):
        return GaussianRational(Fraction(obj))
    return GaussianRational(Fraction(obj["re"]), Fraction(obj.get("im", "0")))


def delta_to_json(v: DeltaVector) -> dict:
    return {
        "n": v.n,
        "terms": [{"alpha": list(alpha), "coeff": scalar_to_json(c)}
                  for alpha, c in v.items_sorted()],
    }


def delta_from_json(obj, n: int) -> DeltaVector:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if isinstance(obj, dict) and "alpha" in obj:
        terms = [obj]
        dim = n
    else:
        terms = obj["terms"]
        dim = obj.get("n", n)
    coeffs = {}
    for t in terms:
        alpha = tuple(t["alpha"])
        c = scalar_from_json(t["coeff"])
        coeffs[alpha] = coeffs.get(alpha, GaussianRational.of(0)) + c
    return DeltaVector(dim, coeffs)


def matrix_to_json(m: RestrictionMatrix) -> dict:
    return {
        "n": m.n,
        "r_domain": m.r_domain,
        "r_codomain": m.r_codomain,
        "domain_basis": [list(a) for a in m.domain_basis],
        "codomain_basis": [list(a) for a in m.codomain_basis],
        "entries": [[scalar_to_json(c) for c in row] for row in m.entries],
        "provenance": m.provenance,
    }


def poly_to_json(p) -> list:
    return [scalar_to_json(c) for c in p.coeffs]


JSON_SCHEMA = {
    "$id": "onshell-output",
    "definitions": {
        "rational": {"type": "string", "pattern": r"^-?\d+(/\d+)?$"},
        "scalar": {
            "type": "object",
            "properties": {"re": {"$ref": "#/definitions/rational"},
                           "im": {"$ref": "#/definitions/rational"}},
            "required": ["re", "im"],
            "additionalProperties": False,
        },
        "multi_index": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "delta_vector": {
            "type": "object",
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {"alpha": {"$ref": "#/definitions/multi_index"},
                                       "coeff": {"$ref": "#/definitions/scalar"}},
                        "required": ["alpha", "coeff"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["n", "terms"],
            "additionalProperties": False,
        },
        "matrix": {
            "type": "object",
            "properties": {
                "n": {"type": "integer"},
                "r_domain": {"type": "integer"},
                "r_codomain": {"type": "integer"},
                "domain_basis": {"type": "array", "items": {"$ref": "#/definitions/multi_index"}},
                "codomain_basis": {"type": "array", "items": {"$ref": "#/definitions/multi_index"}},
                "entries": {"type": "array",
                            "items": {"type": "array", "items": {"$ref": "#/definitions/scalar"}}},
                "provenance": {"type": "string"},
            },
            "required": ["n", "r_domain", "r_codomain", "entries"],
        },
    },
    "type": "object",
    "properties": {
        "command": {"type": "string"},
        "status": {"enum": ["ok", "no"]},
    },
    "required": ["command", "status"],
}


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_metric(text: str, n: int):
    if text is None:
        from .opalg import default_signature
        return default_signature(n)
    sig = tuple(1 if ch == "+" else -1 for ch in text)
    if len(text) != n or any(ch not in "+-" for ch in text):
        raise ValueError(f"metric {text!r} does not match dimension {n}")
    return check_signature(n, sig)


def _metric_text(sig) -> str:
    return "".join("+" if s == 1 else "-" for s in sig)


def _parse_scalar_pair(text: str) -> GaussianRational:
    parts = text.split(",")
    if len(parts) == 1:
        return GaussianRational(Fraction(parts[0]))
    if len(parts) == 2:
        return GaussianRational(Fraction(parts[0]), Fraction(parts[1]))
    raise ValueError(f"cannot parse scalar {text!r}; expected re,im")


def _read_residue_arg(text: str, n: int) -> DeltaVector:
    if text == "-":
        text = sys.stdin.read()
    return delta_from_json(json.loads(text), n)


def _emit(payload: dict, as_text: bool) -> None:
    if as_text:
        for key, value in payload.items():
            print(f"{key}: {json.dumps(value, sort_keys=True)}")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _status_exit(payload: dict) -> int:
    return 0 if payload.get("status") == "ok" else 2


def _add_common(p, dim=True, degree=False, op=False, metric=False, residue=False):
    if dim:
        p.add_argument("--dim", type=int, required=True, help="space dimension n")
    if degree:
        p.add_argument("--degree", type=int, required=True, help="restriction degree r")
    if op:
        p.add_argument("--op", action="append", default=[], help="operator expression (repeatable)")
    if metric:
        p.add_argument("--metric", default=None, help="diagonal metric, e.g. +---")
    if residue:
        p.add_argument("--residue", action="append", default=[],
                       help="delta vector JSON, one per --op ('-' reads stdin)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--json", dest="as_text", action="store_false", default=False)
    group.add_argument("--text", dest="as_text", action="store_true")


def _single_op(args) -> OperatorExpr:
    if len(args.op) != 1:
        raise ValueError("exactly one --op is required")
    sig = _parse_metric(args.metric, args.dim) if hasattr(args, "metric") else None
    return parse_operator(args.op[0], args.dim, sig)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_restrict(args):
    q = _single_op(args)
    m = restrict(q, args.degree, provenance=args.op[0])
    return {"command": "restrict", "status": "ok", "matrix": matrix_to_json(m),
            "essential_order": q.essential_order().q}


def _cmd_adjoint(args):
    q = _single_op(args)
    m = adjoint_restriction(q, args.degree, provenance=args.op[0])
    return {"command": "adjoint", "status": "ok", "matrix": matrix_to_json(m)}


def _cmd_essord(args):
    q = _single_op(args)
    e = q.essential_order()
    return {"command": "essord", "status": "ok", "q": e.q, "exact": e.exact,
            "normal_form": operator_to_text(q.normal_form())}


def _cmd_minpoly(args):
    q = _single_op(args)
    m = restrict(q, args.degree)
    if args.gram or not m.is_square():
        m = m.gram_adjoint().matmul(m)
        which = "gram"
    else:
        which = "restriction"
    p = minimal_polynomial(m)
    return {"command": "minpoly", "status": "ok", "matrix": which,
            "coefficients": poly_to_json(p)}


def _cmd_projpoly(args):
    q = _single_op(args)
    p = projection_polynomial(q, args.degree)
    out = {"command": "projpoly", "status": "ok", "coefficients": poly_to_json(p)}
    if args.projector:
        out["projector"] = matrix_to_json(projector_onto_kernel(q, args.degree))
    return out


def _cmd_kernel(args):
    q = _single_op(args)
    m = restrict(q, args.degree)
    out = {"command": "kernel", "status": "ok",
           "kernel_basis": [delta_to_json(v) for v in kernel_basis(m)]}
    if args.residue:
        w = _read_residue_arg(args.residue[0], args.dim)
        if args.pseudo:
            try:
                v = pseudoinverse_correction(m, w)
                out["pseudoinverse_solution"] = delta_to_json(v)
            except NonNormalMatrixError as exc:
                out["status"] = "no"
                out["error"] = str(exc)
            return out
        dec = range_membership(m, w)
        out["in_range"] = dec.member
        if dec.member:
            out["preimage"] = delta_to_json(dec.preimage)
        else:
            out["status"] = "no"
            out["witness"] = delta_to_json(dec.witness)
    return out


def _cmd_extend_check(args):
    q = _single_op(args)
    w = _read_residue_arg(args.residue[0], args.dim)
    rec = ExtensionRecord(args.dim, args.degree, {q: w})
    rep = existence_check(rec, q)
    return {"command": "extend-check", "status": "ok" if rep.exists else "no",
            "exists": rep.exists, "criterion": rep.criterion,
            "certificate": delta_to_json(rep.certificate)}


def _cmd_counterterm(args):
    sig = _parse_metric(args.metric, args.dim)
    ops = [parse_operator(t, args.dim, sig) for t in args.op]
    if len(args.residue) != len(ops):
        raise ValueError("need exactly one --residue per --op")
    residues = {}
    for q, rtext in zip(ops, args.residue):
        residues[q] = _read_residue_arg(rtext, args.dim)
    rec = ExtensionRecord(args.dim, args.degree, residues)
    if len(ops) == 1:
        v = onshell_correction(rec, ops[0])
    else:
        v = multi_commuting_correction(rec, ops)
    corrected = apply_counterterm(rec, v)
    residue_report = []
    all_zero = True
    for i, q in enumerate(ops):
        res = corrected.residue(q)
        all_zero = all_zero and res.is_zero()
        residue_report.append({"op": args.op[i], "corrected_residue": delta_to_json(res),
                               "onshell": res.is_zero()})
    return {"command": "counterterm", "status": "ok" if all_zero else "no",
            "counterterm": delta_to_json(v), "residues": residue_report,
            "linearity_precondition": [
                {"op": args.op[i], "holds": linearity_precondition(q, args.degree)}
                for i, q in enumerate(ops)]}


def _cmd_order_raise(args):
    q = _single_op(args)
    w = _read_residue_arg(args.residue[0], args.dim)
    rk = q ** args.k if args.k >= 1 else q
    rec = ExtensionRecord(args.dim, args.degree, {rk: w})
    try:
        v = order_raising_correction(rec, q, args.k)
    except NonNormalRestriction as exc:
        return {"command": "order-raise", "status": "no", "error": str(exc)}
    corrected = apply_counterterm(rec, v)
    res = q.apply_delta(corrected.residue(rk))
    return {"command": "order-raise", "status": "ok",
            "counterterm": delta_to_json(v),
            "raised_residue": delta_to_json(res),
            "raised_onshell": res.is_zero()}


def _cmd_casimir_check(args):
    sig = _parse_metric(args.metric, args.dim)
    c_op, gens, expr = lorentz_casimir_setup(args.dim, sig)
    rep = verify_casimir_hypotheses(c_op, gens, args.degree, expr)
    out = {"command": "casimir-check",
           "status": "ok" if rep.passed else "no",
           "level": rep.level,
           "shape_ok": rep.shape_ok, "self_adjoint_ok": rep.self_adjoint_ok,
           "commute_ok": rep.commute_ok, "kernel_ok": rep.kernel_ok,
           "failures": list(rep.failures),
           "generators": [operator_to_text(g) for g in gens]}
    if rep.passed and args.residue:
        if len(args.residue) != 1 + len(gens):
            raise ValueError(f"need 1 + {len(gens)} residues: the Casimir's, then "
                             "one per generator in (mu < nu) order")
        residues = {c_op: _read_residue_arg(args.residue[0], args.dim)}
        for g, rtext in zip(gens, args.residue[1:]):
            residues[g] = _read_residue_arg(rtext, args.dim)
        rec = ExtensionRecord(args.dim, args.degree, residues)
        v = casimir_correction(rec, c_op, gens, expr)
        corrected = apply_counterterm(rec, v)
        out["counterterm"] = delta_to_json(v)
        out["corrected_residues"] = [
            {"op": operator_to_text(g), "residue": delta_to_json(corrected.residue(g))}
            for g in gens]
        if any(not corrected.residue(g).is_zero() for g in gens):
            out["status"] = "no"
            out["failures"] = ["a corrected generator residue is nonzero "
                               "(residues inconsistent or not in range)"]
    return out


def _cmd_renorm(args):
    sig = _parse_metric(args.metric, args.dim)
    degrees = []
    for pair_text in args.aj or []:
        a_text, n_text = pair_text.split(":")
        degrees.append((int(a_text), int(n_text)))
    ops = []
    if args.lorentz:
        c_op, gens, _ = lorentz_casimir_setup(args.dim, sig)
        ops.append(c_op)
    t_op = OperatorExpr.identity(args.dim)
    nontrivial = False
    for a_j, n_j in degrees:
        if n_j > 0:
            nontrivial = True
            t_op = t_op @ (euler(args.dim, Fraction(a_j)) ** n_j)
    if nontrivial:
        ops.append(t_op)
    if len(args.residue) != len(ops):
        raise ValueError(f"need {len(ops)} residues "
                         "(Casimir first when --lorentz, then the degree product)")
    residues = {q: _read_residue_arg(t, args.dim) for q, t in zip(ops, args.residue)}
    rec = ExtensionRecord(args.dim, args.degree, residues)
    try:
        v = renorm_map(rec, degrees, lorentz=args.lorentz, signature=sig)
    except CasimirHypothesisError as exc:
        return {"command": "renorm", "status": "no",
                "failures": list(exc.report.failures)}
    return {"command": "renorm", "status": "ok", "counterterm": delta_to_json(v)}


def _cmd_homog_unique(args):
    rep = homogeneous_extension_unique(args.dim, Fraction(args.a), args.degree)
    return {"command": "homog-unique", "status": "ok" if rep.unique else "no",
            "exists": rep.unique, "kernel_levels": list(rep.kernel_levels)}


def _cmd_chi(args):
    sig = _parse_metric(args.metric, args.dim)
    indices = tuple(int(t) for t in args.indices.split(",")) if args.indices else ()
    config = FeynmanConfig(args.dim, sig, Fraction(args.m2))
    c = _parse_scalar_pair(args.c) if args.c else GaussianRational(0, -1)
    s_op = ConstCoeffOperator.monomial(config, indices)
    res = chi_projection(s_op, c, config)
    expl = chi_explicit(indices, args.dim, Fraction(args.m2), sig)
    return {"command": "chi", "status": "ok",
            "chi": str(res.chi), "chi1": str(res.chi1),
            "chi_explicit": str(expl),
            "routes_agree": res.chi.coeffs == expl.coeffs,
            "counterterm": delta_to_json(theta_counterterm(s_op, c, config)),
            "s": res.s}


def _cmd_chi_verify(args):
    m2_list = [Fraction(t) for t in args.m2.split(",")]
    sigs = None
    if args.metric:
        sigs = (_parse_metric(args.metric, args.dim),)
    rep = chi_crosscheck(args.k_max, args.dim, m2_list, sigs)
    if sigs is None:
        base = _parse_metric(None, args.dim)
        metric = [_metric_text(base), _metric_text(tuple(-s for s in base))]
    else:
        metric = [_metric_text(s) for s in sigs]
    return {"command": "chi-verify", "status": "ok" if rep.ok else "no",
            "metric": metric, "checked": rep.checked,
            "mismatches": [{"signature": list(m.signature), "m2": str(m.m2),
                            "indices": list(m.indices),
                            "projection": m.projection, "explicit": m.explicit}
                           for m in rep.mismatches]}


def _cmd_degree(args):
    rule = args.rule
    if rule == "delta":
        w = _read_residue_arg(args.residue[0], args.dim)
        b = degree_mod.deg_delta(w)
    else:
        if args.value is None:
            raise ValueError(f"--value is required for rule {rule!r}")
        d = degree_mod.DegreeBound(int(args.value), degree_mod.EXACT if args.exact
                                   else degree_mod.UPPER_BOUND)
        if rule == "derivative":
            b = degree_mod.bound_derivative(d, tuple(int(t) for t in args.index.split(",")))
        elif rule == "monomial":
            b = degree_mod.bound_monomial(d, tuple(int(t) for t in args.index.split(",")))
        elif rule == "vanishing":
            b = degree_mod.bound_vanishing_factor(d, args.k)
        elif rule == "tensor":
            d2 = degree_mod.DegreeBound(int(args.value2), degree_mod.UPPER_BOUND)
            b = degree_mod.bound_tensor(d, args.n1, d2, args.n2)
        elif rule == "operator":
            q = _single_op(args)
            b = degree_mod.bound_operator(d, q)
        else:
            raise ValueError(f"unknown rule {rule!r}")
    value = "-inf" if b.value == degree_mod.NEG_INF else b.value
    return {"command": "degree", "status": "ok", "value": value,
            "exactness": b.exactness}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> _ArgumentParser:
    root = _ArgumentParser(prog="onshell",
                           description="exact on-shell extension engine")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restrict", help="matrix of Q restricted to degree <= r")
    _add_common(p, degree=True, op=True, metric=True)
    p.set_defaults(func=_cmd_restrict)

    p = sub.add_parser("adjoint", help="matrix of the adjoint restriction")
    _add_common(p, degree=True, op=True, metric=True)
    p.set_defaults(func=_cmd_adjoint)

    p = sub.add_parser("essord", help="essential order and normal form")
    _add_common(p, op=True, metric=True)
    p.set_defaults(func=_cmd_essord)

    p = sub.add_parser("minpoly", help="minimal polynomial of the restriction")
    _add_common(p, degree=True, op=True, metric=True)
    p.add_argument("--gram", action="store_true",
                   help="use B = (Q|_r)* (Q|_r) even when Q|_r is square")
    p.set_defaults(func=_cmd_minpoly)

    p = sub.add_parser("projpoly", help="projection polynomial p_r")
    _add_common(p, degree=True, op=True, metric=True)
    p.add_argument("--projector", action="store_true", help="also emit p_r(B)")
    p.set_defaults(func=_cmd_projpoly)

    p = sub.add_parser("kernel", help="kernel basis / range membership / pseudoinverse")
    _add_common(p, degree=True, op=True, metric=True, residue=True)
    p.add_argument("--pseudo", action="store_true",
                   help="pseudoinverse solve for the residue (normal restrictions)")
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("extend-check", help="does an on-shell extension exist?")
    _add_common(p, degree=True, op=True, metric=True, residue=True)
    p.set_defaults(func=_cmd_extend_check)

    p = sub.add_parser("counterterm", help="projection counterterm(s)")
    _add_common(p, degree=True, op=True, metric=True, residue=True)
    p.set_defaults(func=_cmd_counterterm)

    p = sub.add_parser("order-raise", help="almost-homogeneous order raising")
    _add_common(p, degree=True, op=True, metric=True, residue=True)
    p.add_argument("--k", type=int, required=True, help="power with R^k u = 0 off the origin")
    p.set_defaults(func=_cmd_order_raise)

    p = sub.add_parser("casimir-check", help="Casimir hypotheses and correction")
    _add_common(p, degree=True, metric=True, residue=True)
    p.set_defaults(func=_cmd_casimir_check)

    p = sub.add_parser("renorm", help="composite renormalisation counterterm")
    _add_common(p, degree=True, metric=True, residue=True)
    p.add_argument("--aj", action="append", default=[],
                   help="homogeneity degree as a:N (repeatable)")
    p.add_argument("--lorentz", action="store_true", help="include the Casimir step")
    p.set_defaults(func=_cmd_renorm)

    p = sub.add_parser("homog-unique", help="unique homogeneous extension test")
    _add_common(p, degree=True)
    p.add_argument("--a", required=True, help="homogeneity degree (rational)")
    p.set_defaults(func=_cmd_homog_unique)

    p = sub.add_parser("chi", help="on-shell/off-shell map on a derivative monomial")
    _add_common(p, metric=True)
    p.add_argument("--m2", default="0", help="mass squared (rational)")
    p.add_argument("--indices", default="", help="Lorentz indices, e.g. 0,0")
    p.add_argument("--c", default=None, help="normalization Qv = c delta as re,im (default -i)")
    p.set_defaults(func=_cmd_chi)

    p = sub.add_parser("chi-verify", help="cross-validate the two chi routes")
    _add_common(p, metric=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--m2", default="0", help="comma-separated mass-squared list")
    p.set_defaults(func=_cmd_chi_verify)

    p = sub.add_parser("degree", help="degree-of-divergence bookkeeping")
    _add_common(p, residue=True)
    p.add_argument("--rule", required=True,
                   choices=["delta", "derivative", "monomial", "vanishing", "tensor", "operator"])
    p.add_argument("--value", default=None, help="input degree value")
    p.add_argument("--value2", default=None, help="second degree (tensor rule)")
    p.add_argument("--exact", action="store_true", help="input degree is exact")
    p.add_argument("--index", default="", help="multi-index, e.g. 2,0")
    p.add_argument("--k", type=int, default=0, help="vanishing order")
    p.add_argument("--n1", type=int, default=0)
    p.add_argument("--n2", type=int, default=0)
    p.add_argument("--op", action="append", default=[], help="operator (operator rule)")
    p.add_argument("--metric", default=None)
    p.set_defaults(func=_cmd_degree)

    return root


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
        # the metric convention is recorded in every output that resolved one
        if getattr(args, "metric", None) is not None or (
                hasattr(args, "metric") and hasattr(args, "dim")):
            payload.setdefault("metric",
                               _metric_text(_parse_metric(args.metric, args.dim)))
    except (OperatorSyntaxError, ValueError, KeyError) as exc:
        print(f"onshell: error: {exc}", file=sys.stderr)
        return 1
    _emit(payload, args.as_text)
    return _status_exit(payload)


if __name__ == "__main__":
    sys.exit(main())
