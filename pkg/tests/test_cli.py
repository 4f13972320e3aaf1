import io
import json
import random
from fractions import Fraction

import jsonschema
import pytest

from onshell.scalar import GaussianRational, I, ONE
from onshell.deltaspace import DeltaVector, Polynomial
from onshell.opalg import (
    OperatorExpr,
    casimir,
    dalembert,
    euler,
    lorentz_generator,
    operator_equal,
    parity,
    reflection,
)
from onshell.cli import (
    JSON_SCHEMA,
    OPERATION_TO_SUBCOMMAND,
    SUBCOMMANDS,
    OperatorSyntaxError,
    delta_from_json,
    delta_to_json,
    main,
    operator_to_text,
    parse_operator,
)

from conftest import random_poly_coeff_operator


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestParser:
    def test_euler_expression(self):
        got = parse_operator("x1*d1 + x2*d2 + 3/2", 2)
        assert operator_equal(got, euler(2, Fraction(-3, 2)))

    def test_wave_expression(self):
        got = parse_operator("d1^2 - d2^2 + 1", 2)
        assert operator_equal(got, dalembert(2, 1, (1, -1)))

    def test_juxtaposition_rejected(self):
        with pytest.raises(OperatorSyntaxError):
            parse_operator("x1 d1", 2)

    def test_error_spans(self):
        with pytest.raises(OperatorSyntaxError) as exc:
            parse_operator("x1*d9", 2)
        assert exc.value.start == 3 and exc.value.end == 5

    def test_builtins(self):
        assert operator_equal(parse_operator("euler(-2)", 3), euler(3, Fraction(-2)))
        assert operator_equal(parse_operator("box(1/2)", 2, (1, -1)),
                              dalembert(2, Fraction(1, 2), (1, -1)))
        assert operator_equal(parse_operator("casimir", 2, (1, -1)), casimir(2, (1, -1)))
        assert operator_equal(parse_operator("L(0,1)", 2, (1, -1)),
                              lorentz_generator(2, 0, 1, (1, -1)))
        assert operator_equal(parse_operator("parity", 2), parity(2))
        assert operator_equal(parse_operator("reflect([[0,1],[1,0]])", 2),
                              reflection([[0, 1], [1, 0]]))

    def test_imaginary_unit_and_powers(self):
        got = parse_operator("i*d1^2", 1)
        assert operator_equal(got, OperatorExpr.derivative(1, (2,)).scale(I))
        with pytest.raises(OperatorSyntaxError):
            parse_operator("d1^(1)", 1)
        with pytest.raises(OperatorSyntaxError):
            parse_operator("d1^1/2", 1)

    def test_unknown_identifier(self):
        with pytest.raises(OperatorSyntaxError):
            parse_operator("foo(2)", 1)

    def test_leading_minus(self):
        got = parse_operator("-x1*d1", 1)
        assert operator_equal(got, -(OperatorExpr.multiplication(
            Polynomial.coordinate(1, 0)) @ OperatorExpr.derivative(1, (1,))))


class TestPrinterRoundTrip:
    def test_round_trip_corpus(self):
        rng = random.Random(42)
        for trial in range(100):
            n = rng.choice([1, 2, 3])
            q = random_poly_coeff_operator(rng, n, allow_pullback=(trial % 3 == 0))
            if rng.random() < 0.2:
                q = q.scale(I) + OperatorExpr.from_scalar(n, GaussianRational(1, -1))
            text = operator_to_text(q)
            reparsed = parse_operator(text, n)
            assert operator_equal(reparsed, q), text
            assert operator_to_text(reparsed) == text

    def test_zero(self):
        assert operator_to_text(OperatorExpr.zero(2)) == "0"
        assert parse_operator("0", 2).is_zero()


class TestCoverageTable:
    OPERATIONS = [
        # opalg
        "normal_form", "transpose", "essential_order", "apply_delta", "apply_poly",
        "operator_equal", "commutator", "constructors",
        # spectral
        "restrict", "adjoint_restriction", "minimal_polynomial",
        "projection_polynomial", "kernel_basis", "range_membership",
        "projector_onto_kernel", "pseudoinverse_correction",
        # extension
        "existence_check", "onshell_correction", "apply_counterterm",
        "order_raising_correction", "multi_commuting_correction",
        "casimir_correction", "verify_casimir_hypotheses", "renorm_map",
        "homogeneous_extension_unique", "linearity_precondition",
        # chi
        "theta_counterterm", "chi_projection", "lambda_contraction",
        "alpha_coefficient", "chi_explicit", "chi_crosscheck",
        # degree
        "deg_delta", "bound_derivative", "bound_monomial",
        "bound_vanishing_factor", "bound_tensor", "bound_operator",
    ]

    def test_every_operation_has_exactly_one_subcommand(self):
        assert sorted(OPERATION_TO_SUBCOMMAND) == sorted(self.OPERATIONS)
        assert set(OPERATION_TO_SUBCOMMAND.values()) <= set(SUBCOMMANDS)

    def test_every_subcommand_reaches_an_operation(self):
        assert set(OPERATION_TO_SUBCOMMAND.values()) == set(SUBCOMMANDS)


class TestJsonEncoding:
    def test_delta_round_trip(self):
        v = DeltaVector(2, {(0, 0): GaussianRational(Fraction(1, 2), Fraction(-3)),
                            (2, 1): I})
        assert delta_from_json(delta_to_json(v), 2) == v

    def test_single_term_form(self):
        v = delta_from_json({"alpha": [0], "coeff": {"re": "1", "im": "0"}}, 1)
        assert v == DeltaVector.basis(1, (0,))

    def test_terms_sorted_graded_lex(self):
        v = DeltaVector(2, {(0, 1): ONE, (2, 0): ONE, (0, 0): ONE})
        alphas = [t["alpha"] for t in delta_to_json(v)["terms"]]
        assert alphas == [[0, 0], [0, 1], [2, 0]]


class TestCommands:
    def test_homog_unique_no(self, capsys):
        code, out = run_cli(capsys, "homog-unique", "--dim", "4", "--a", "-6",
                            "--degree", "2")
        payload = json.loads(out)
        assert code == 2
        assert payload["exists"] is False and payload["kernel_levels"] == [2]

    def test_homog_unique_yes(self, capsys):
        code, out = run_cli(capsys, "homog-unique", "--dim", "4", "--a", "-3",
                            "--degree", "4")
        assert code == 0 and json.loads(out)["exists"] is True

    def test_extend_check_no_with_witness(self, capsys):
        code, out = run_cli(capsys, "extend-check", "--dim", "1",
                            "--op", "x1*d1 + 1", "--degree", "0",
                            "--residue", '{"alpha":[0],"coeff":{"re":"1","im":"0"}}')
        payload = json.loads(out)
        assert code == 2
        assert payload["exists"] is False
        assert payload["certificate"]["terms"][0]["alpha"] == [0]

    def test_chi_known_second_derivative_value(self, capsys):
        code, out = run_cli(capsys, "chi", "--dim", "4", "--metric", "+---",
                            "--m2", "0", "--indices", "0,0")
        payload = json.loads(out)
        assert code == 0
        assert payload["routes_agree"] is True
        # chi(d0^2) = d0^2 - box/4 expanded over the metric
        assert payload["chi"] == "(1/4)*d3^2 + (1/4)*d2^2 + (1/4)*d1^2 + (3/4)*d0^2"

    def test_deterministic_output(self, capsys):
        args = ("restrict", "--dim", "2", "--op", "euler(-2)", "--degree", "2")
        _, out1 = run_cli(capsys, *args)
        _, out2 = run_cli(capsys, *args)
        assert out1 == out2

    def test_usage_error_exit_code(self, capsys):
        assert main(["restrict", "--dim", "1", "--degree", "0"]) == 1  # no --op
        capsys.readouterr()

    def test_syntax_error_exit_code(self, capsys):
        code = main(["restrict", "--dim", "2", "--op", "x1 d1", "--degree", "1"])
        assert code == 1
        capsys.readouterr()

    def test_stdin_residue(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin",
                            io.StringIO('{"alpha":[0],"coeff":{"re":"2","im":"0"}}'))
        code, out = run_cli(capsys, "extend-check", "--dim", "1",
                            "--op", "euler(-1/2)", "--degree", "0", "--residue", "-")
        assert code == 0 and json.loads(out)["exists"] is True

    def test_casimir_check_with_correction(self, capsys):
        # consistent residues: u' = onshell - 2 delta^(0,1), so the Casimir
        # residue is 4 delta^(0,1) and the boost residue 2 delta^(1,0)
        code, out = run_cli(capsys, "casimir-check", "--dim", "2", "--metric", "+-",
                            "--degree", "1",
                            "--residue", '{"alpha":[0,1],"coeff":{"re":"4","im":"0"}}',
                            "--residue",
                            '{"alpha":[1,0],"coeff":{"re":"2","im":"0"}}')
        payload = json.loads(out)
        assert code == 0 and payload["status"] == "ok"
        assert "counterterm" in payload
        assert all(entry["residue"]["terms"] == []
                   for entry in payload["corrected_residues"])

    def test_casimir_check_inconsistent_residues(self, capsys):
        # a zero Casimir residue cannot coexist with a nonzero boost residue
        code, out = run_cli(capsys, "casimir-check", "--dim", "2", "--metric", "+-",
                            "--degree", "1",
                            "--residue", '{"n":2,"terms":[]}',
                            "--residue",
                            '{"alpha":[1,0],"coeff":{"re":"1","im":"0"}}')
        payload = json.loads(out)
        assert code == 2 and payload["status"] == "no"

    def test_order_raise(self, capsys):
        code, out = run_cli(capsys, "order-raise", "--dim", "1", "--op", "x1*d1 + 1",
                            "--degree", "0", "--k", "1",
                            "--residue", '{"alpha":[0],"coeff":{"re":"1","im":"0"}}')
        payload = json.loads(out)
        assert code == 0 and payload["raised_onshell"] is True

    def test_counterterm_multi_op(self, capsys):
        code, out = run_cli(capsys, "counterterm", "--dim", "1",
                            "--op", "euler(-1/2)", "--op", "euler(1/3)",
                            "--degree", "0",
                            "--residue", '{"alpha":[0],"coeff":{"re":"1","im":"0"}}',
                            "--residue", '{"alpha":[0],"coeff":{"re":"8/3","im":"0"}}')
        payload = json.loads(out)
        # residues consistent with w0 = -2 delta: E(-1/2) w0 = delta,
        # E(1/3) w0 = (8/3) delta; both clear simultaneously
        assert code == 0
        assert all(entry["onshell"] for entry in payload["residues"])

    def test_degree_rules(self, capsys):
        code, out = run_cli(capsys, "degree", "--dim", "4", "--rule", "derivative",
                            "--value", "-2", "--index", "2,0,0,0")
        payload = json.loads(out)
        assert code == 0 and payload["value"] == 0
        code, out = run_cli(capsys, "degree", "--dim", "2", "--rule", "tensor",
                            "--value", "-2", "--n1", "2", "--value2", "-3", "--n2", "3")
        assert json.loads(out)["value"] == -5

    def test_chi_verify(self, capsys):
        code, out = run_cli(capsys, "chi-verify", "--dim", "4", "--k-max", "1",
                            "--m2", "0,1")
        payload = json.loads(out)
        assert code == 0 and payload["mismatches"] == []


class TestSchema:
    @pytest.mark.parametrize("argv", [
        ("homog-unique", "--dim", "2", "--a", "-3", "--degree", "1"),
        ("restrict", "--dim", "1", "--op", "euler(-2)", "--degree", "1"),
        ("projpoly", "--dim", "1", "--op", "euler(-1/2)", "--degree", "0",
         "--projector"),
        ("chi", "--dim", "4", "--m2", "1", "--indices", "0,1"),
        ("degree", "--dim", "1", "--rule", "delta", "--residue",
         '{"alpha":[2],"coeff":{"re":"1","im":"0"}}'),
    ])
    def test_outputs_validate(self, capsys, argv):
        code, out = run_cli(capsys, *argv)
        payload = json.loads(out)
        jsonschema.validate(payload, JSON_SCHEMA)

        # spot-validate embedded structures against their definitions
        def sub(name):
            return {"definitions": JSON_SCHEMA["definitions"],
                    "$ref": f"#/definitions/{name}"}

        if "matrix" in payload:
            jsonschema.validate(payload["matrix"], sub("matrix"))
        for key in ("counterterm", "certificate"):
            if key in payload:
                jsonschema.validate(payload[key], sub("delta_vector"))
